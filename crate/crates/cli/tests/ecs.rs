use std::fs;
use std::process::Command;

use polepath::config::RunConfig;
use polepath::rows::PlaneMap;
use polepath_core::ecs::isolated;
use polepath_core::scattering::{newton_refine, NewtonOptions};
use polepath_core::{ParamVector, Sheet, C64};

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/paper_fig6.json");

#[derive(serde::Deserialize)]
struct EcsLine {
    re_u: f64,
    im_u: f64,
    lambda: f64,
    #[serde(rename = "re_E")]
    re_e: f64,
    #[serde(rename = "im_E")]
    im_e: f64,
    sheet: String,
    method: String,
}

#[test]
fn feshbach_resonance_matches_the_pole_of_f() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(CONFIG).unwrap()).unwrap();
    cfg["ecs"]["lambdas"] = serde_json::json!([1.0]);
    let path = dir.path().join("ecs.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_polepath"))
        .args(["ecs", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let header = fs::read_to_string(out.join("ecs.csv")).unwrap();
    assert!(header.lines().next().unwrap().ends_with(",sheet,method"));
    let lines: Vec<EcsLine> =
        csv::Reader::from_path(out.join("ecs.csv")).unwrap().deserialize().map(|r| r.unwrap()).collect();
    assert!(lines.iter().all(|l| l.method == "ecs" && l.lambda == 1.0));

    let run = RunConfig::load(&path).unwrap();
    let theta = run.ecs.as_ref().unwrap().grid.angle;
    let eigs: Vec<C64> = lines.iter().map(|l| C64::new(l.re_e, l.im_e)).collect();
    let between: Vec<C64> = isolated(&eigs, &[0.0, 0.5], theta, 0.1)
        .into_iter()
        .filter(|e| e.re > 0.0 && e.re < 0.5 && e.im < 0.0)
        .collect();
    let ecs = *between.iter().min_by(|a, b| (a.im / a.re).abs().total_cmp(&(b.im / b.re).abs())).unwrap();
    let line = lines.iter().find(|l| l.re_e == ecs.re && l.im_e == ecs.im).unwrap();

    let eval = run.evaluator().unwrap();
    let map = PlaneMap::from_config(&run).unwrap();
    let guess = C64::new(line.re_u, line.im_u);
    assert_eq!(guess, map.from_ecs_energy(ecs, theta));
    let u = newton_refine(&eval, guess, &ParamVector::new(1.0, 1.0, 0.5), &NewtonOptions::default()).unwrap();
    let p = eval.uniformizer().unwrap().point(u).unwrap();
    assert_eq!(p.sheet, Sheet::parse(&line.sheet).unwrap());
    assert!(p.energy.im < 0.0 && p.energy.re > 0.0 && p.energy.re < 0.5);
    assert!((p.energy - ecs).norm() < 1e-2, "ECS {ecs} vs pole {}", p.energy);
}
