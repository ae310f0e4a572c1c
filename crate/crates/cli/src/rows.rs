//! CSV rows shared by branch, scan, ECS and energy-plane files.

use std::path::Path;

use polepath_core::uniform::{Sheet, Uniformizer};
use polepath_core::C64;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, RunConfig};
use crate::error::{CliError, Result};

pub const COLUMNS: [&str; 12] =
    ["s", "re_u", "im_u", "lambda", "re_E", "im_E", "re_k1", "im_k1", "re_k2", "im_k2", "residual", "sheet"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub s: f64,
    pub re_u: f64,
    pub im_u: f64,
    pub lambda: f64,
    #[serde(rename = "re_E")]
    pub re_e: f64,
    #[serde(rename = "im_E")]
    pub im_e: f64,
    pub re_k1: f64,
    pub im_k1: f64,
    pub re_k2: f64,
    pub im_k2: f64,
    /// Empty for rows that do not come from a root of `F`.
    pub residual: Option<f64>,
    pub sheet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcsRow {
    pub s: f64,
    pub re_u: f64,
    pub im_u: f64,
    pub lambda: f64,
    #[serde(rename = "re_E")]
    pub re_e: f64,
    #[serde(rename = "im_E")]
    pub im_e: f64,
    pub re_k1: f64,
    pub im_k1: f64,
    pub re_k2: f64,
    pub im_k2: f64,
    pub residual: Option<f64>,
    pub sheet: String,
    pub method: String,
}

impl Row {
    pub fn u(&self) -> C64 {
        C64::new(self.re_u, self.im_u)
    }

    pub fn energy(&self) -> C64 {
        C64::new(self.re_e, self.im_e)
    }

    pub fn into_ecs(self) -> EcsRow {
        EcsRow {
            s: self.s,
            re_u: self.re_u,
            im_u: self.im_u,
            lambda: self.lambda,
            re_e: self.re_e,
            im_e: self.im_e,
            re_k1: self.re_k1,
            im_k1: self.im_k1,
            re_k2: self.re_k2,
            im_k2: self.im_k2,
            residual: self.residual,
            sheet: self.sheet,
            method: "ecs".into(),
        }
    }
}

/// Energy, momenta and sheet for a point of the tracing plane.
#[derive(Debug, Clone, Copy)]
pub enum PlaneMap {
    Uniformized(Uniformizer),
    /// `E = ξ + k²/2μ` with the same `k` in every channel.
    EqualThresholds {
        threshold: f64,
        mass: f64,
    },
}

impl PlaneMap {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let m = &cfg.model;
        Ok(match cfg.mode {
            Mode::UniformizedTwoChannel => {
                PlaneMap::Uniformized(Uniformizer::new(m.thresholds[0], m.thresholds[1], m.mass)?)
            }
            Mode::EqualThresholds => PlaneMap::EqualThresholds { threshold: m.thresholds[0], mass: m.mass },
        })
    }

    pub fn row(&self, s: f64, z: C64, lambda: f64, residual: Option<f64>) -> Result<Row> {
        let (e, k1, k2, sheet) = match self {
            PlaneMap::Uniformized(uz) => {
                let p = uz.point(z)?;
                (p.energy, p.k1, p.k2, p.sheet)
            }
            PlaneMap::EqualThresholds { threshold, mass } => {
                (z * z / (2.0 * mass) + threshold, z, z, Sheet::from_momenta(z, z))
            }
        };
        Ok(Row {
            s,
            re_u: z.re,
            im_u: z.im,
            lambda,
            re_e: e.re,
            im_e: e.im,
            re_k1: k1.re,
            im_k1: k1.im,
            re_k2: k2.re,
            im_k2: k2.im,
            residual,
            sheet: sheet.as_str().into(),
        })
    }

    /// The plane point an ECS eigenvalue corresponds to: each momentum is the
    /// square root whose cut lies along the rotated continuum `arg(E − ξ) = −2θ`.
    pub fn from_ecs_energy(&self, e: C64, angle: f64) -> C64 {
        let root = |xi: f64, mass: f64| {
            let d = (e - xi) * (2.0 * mass);
            let mut arg = d.arg();
            if arg <= -2.0 * angle {
                arg += 2.0 * std::f64::consts::PI;
            }
            C64::from_polar(d.norm().sqrt(), 0.5 * arg)
        };
        match self {
            PlaneMap::Uniformized(uz) => {
                let (xi1, xi2) = uz.thresholds();
                uz.u_from_momenta(root(xi1, uz.mass()), root(xi2, uz.mass()))
            }
            PlaneMap::EqualThresholds { threshold, mass } => root(*threshold, *mass),
        }
    }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    r.deserialize().collect::<Result<Vec<Row>, _>>().map_err(|e| CliError::csv(path, e))
}

/// Recomputes the energy-plane columns of any CSV with `re_u` and `im_u`.
/// `s`, `lambda` and `residual` are kept when present.
pub fn export_energy(map: &PlaneMap, input: &Path, output: &Path) -> Result<usize> {
    let mut r = csv::Reader::from_path(input).map_err(|e| CliError::csv(input, e))?;
    let headers = r.headers().map_err(|e| CliError::csv(input, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(iu), Some(ju)) = (col("re_u"), col("im_u")) else {
        return Err(CliError::Invalid(format!("{}: needs re_u and im_u columns", input.display())));
    };
    let (is, il, ir) = (col("s"), col("lambda"), col("residual"));
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(input, e))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Invalid(format!("{} row {}: {e}", input.display(), n + 1)))
        };
        let opt = |i: Option<usize>| -> Result<Option<f64>> {
            match i {
                Some(i) if !rec.get(i).unwrap_or("").trim().is_empty() => num(i).map(Some),
                _ => Ok(None),
            }
        };
        let z = C64::new(num(iu)?, num(ju)?);
        let s = opt(is)?.unwrap_or(n as f64);
        let lambda = opt(il)?.unwrap_or(f64::NAN);
        rows.push(map.row(s, z, lambda, opt(ir)?)?);
    }
    write_rows(output, &rows)?;
    Ok(rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> PlaneMap {
        PlaneMap::Uniformized(Uniformizer::new(0.0, 0.5, 1.0).unwrap())
    }

    #[test]
    fn header_matches_the_documented_columns() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(map().row(0.0, C64::new(2.0, 0.0), 1.0, Some(0.0)).unwrap()).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
    }

    #[test]
    fn threshold_image_has_zero_second_momentum() {
        let r = map().row(0.0, C64::new(0.0, 1.0), 0.0, None).unwrap();
        assert!((r.re_e - 0.5).abs() < 1e-15 && r.im_e.abs() < 1e-15);
        assert!(r.re_k2.abs() < 1e-15 && r.im_k2.abs() < 1e-15);
    }

    #[test]
    fn ecs_energy_maps_back_to_the_bound_state_sheet() {
        let m = map();
        let PlaneMap::Uniformized(uz) = m else { unreachable!() };
        let u = C64::new(4.3508575, 0.0);
        let e = uz.energy(u).unwrap();
        let back = m.from_ecs_energy(e, std::f64::consts::FRAC_PI_8);
        assert!((back - u).norm() < 1e-9, "{back}");
        // A resonance below the rotated cut of the open channel lands on (−,+).
        let res = C64::new(0.3, -0.05);
        let z = m.from_ecs_energy(res, std::f64::consts::FRAC_PI_8);
        assert_eq!(uz.point(z).unwrap().sheet, Sheet::MinusPlus);
        assert!((uz.energy(z).unwrap() - res).norm() < 1e-12);
    }
}
