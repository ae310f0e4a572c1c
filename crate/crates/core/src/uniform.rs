//! Two-channel uniformization of the energy Riemann surface.
//!
//! With `c = sqrt(μ(ξ₂ − ξ₁)/2)`:
//!
//! ```text
//! E(u)  = (ξ₁ + ξ₂)/2 − (ξ₂ − ξ₁)/2 · (1 + u⁴)/(2u²)
//! k₁(u) = i c (u − 1/u)
//! k₂(u) = i c (u + 1/u)
//! ```
//!
//! so every `u ≠ 0` is a single point of the four-sheeted surface.

use core::fmt;

use crate::linalg::C64;
use crate::math;
use crate::{Error, Result};

/// Sign pair `(sign Im k₁, sign Im k₂)`. Zero counts as negative, so the
/// physical sheet `(+,+)` is exactly `|u| > 1, Re u > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sheet {
    PlusPlus,
    PlusMinus,
    MinusPlus,
    MinusMinus,
}

impl Sheet {
    pub fn from_momenta(k1: C64, k2: C64) -> Self {
        match (k1.im > 0.0, k2.im > 0.0) {
            (true, true) => Sheet::PlusPlus,
            (true, false) => Sheet::PlusMinus,
            (false, true) => Sheet::MinusPlus,
            (false, false) => Sheet::MinusMinus,
        }
    }

    pub fn is_physical(self) -> bool {
        self == Sheet::PlusPlus
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sheet::PlusPlus => "(+,+)",
            Sheet::PlusMinus => "(+,-)",
            Sheet::MinusPlus => "(-,+)",
            Sheet::MinusMinus => "(-,-)",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "(+,+)" => Some(Sheet::PlusPlus),
            "(+,-)" => Some(Sheet::PlusMinus),
            "(-,+)" => Some(Sheet::MinusPlus),
            "(-,-)" => Some(Sheet::MinusMinus),
            _ => None,
        }
    }
}

impl fmt::Display for Sheet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A point of the uniformized plane with its energy, momenta and sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformPoint {
    pub u: C64,
    pub energy: C64,
    pub k1: C64,
    pub k2: C64,
    pub sheet: Sheet,
}

/// The map `u ↦ (E, k₁, k₂)` for fixed thresholds and mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniformizer {
    xi1: f64,
    xi2: f64,
    mass: f64,
    c: f64,
}

impl Uniformizer {
    pub fn new(xi1: f64, xi2: f64, mass: f64) -> Result<Self> {
        if !(xi1 < xi2) || !xi1.is_finite() || !xi2.is_finite() {
            return Err(Error::InvalidArgument("uniformization requires finite xi1 < xi2".into()));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidArgument("mass must be positive".into()));
        }
        let c = math::sqrt(mass * (xi2 - xi1) / 2.0);
        Ok(Self { xi1, xi2, mass, c })
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.xi1, self.xi2)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `sqrt(μ(ξ₂ − ξ₁)/2)`.
    pub fn scale(&self) -> f64 {
        self.c
    }

    pub fn energy(&self, u: C64) -> Result<C64> {
        if u == C64::new(0.0, 0.0) {
            return Err(Error::Domain("E(u) has a pole at u = 0"));
        }
        let u2 = u * u;
        let sym = (u2 + u2.inv()) * 0.5;
        let mid = 0.5 * (self.xi1 + self.xi2);
        let half_gap = 0.5 * (self.xi2 - self.xi1);
        Ok(C64::new(mid, 0.0) - sym * half_gap)
    }

    pub fn momenta(&self, u: C64) -> Result<(C64, C64)> {
        if u == C64::new(0.0, 0.0) {
            return Err(Error::Domain("momenta have a pole at u = 0"));
        }
        let ic = C64::new(0.0, self.c);
        let inv = u.inv();
        Ok((ic * (u - inv), ic * (u + inv)))
    }

    pub fn point(&self, u: C64) -> Result<UniformPoint> {
        let energy = self.energy(u)?;
        let (k1, k2) = self.momenta(u)?;
        Ok(UniformPoint { u, energy, k1, k2, sheet: Sheet::from_momenta(k1, k2) })
    }

    /// Inverse map: `u = −i(k₁ + k₂)/(2c)`.
    pub fn u_from_momenta(&self, k1: C64, k2: C64) -> C64 {
        (k1 + k2) * C64::new(0.0, -0.5 / self.c)
    }

    /// The `u` whose momenta are the roots of `kᵢ² = 2μ(E − ξᵢ)` with the
    /// requested imaginary-part signs (`true` = positive).
    pub fn u_from_energy(&self, energy: C64, sheet: Sheet) -> C64 {
        let root = |xi: f64, positive: bool| {
            let k = ((energy - xi) * (2.0 * self.mass)).sqrt();
            let k = if k.im < 0.0 || (k.im == 0.0 && k.re < 0.0) { -k } else { k };
            if positive {
                k
            } else {
                -k
            }
        };
        let (s1, s2) = match sheet {
            Sheet::PlusPlus => (true, true),
            Sheet::PlusMinus => (true, false),
            Sheet::MinusPlus => (false, true),
            Sheet::MinusMinus => (false, false),
        };
        self.u_from_momenta(root(self.xi1, s1), root(self.xi2, s2))
    }
}

/// Free-function form of [`Uniformizer::point`].
pub fn uniformize(xi1: f64, xi2: f64, mass: f64, u: C64) -> Result<UniformPoint> {
    Uniformizer::new(xi1, xi2, mass)?.point(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> Uniformizer {
        Uniformizer::new(0.0, 0.5, 1.0).unwrap()
    }

    #[test]
    fn threshold_images() {
        let p = uniformize(0.0, 0.5, 1.0, C64::new(1.0, 0.0)).unwrap();
        assert_eq!(p.k1, C64::new(0.0, 0.0));
        assert!(p.energy.norm() < 1e-16);
        let p = uniformize(0.0, 0.5, 1.0, C64::new(0.0, -1.0)).unwrap();
        assert!(p.k2.norm() < 1e-16);
        assert!((p.energy - 0.5).norm() < 1e-16);
        let p = uniformize(0.0, 0.5, 1.0, C64::new(0.0, 1.0)).unwrap();
        assert!(p.k2.norm() < 1e-16);
    }

    #[test]
    fn tabulated_bound_state_energy() {
        let p = reference().point(C64::new(4.3508575, 0.0)).unwrap();
        assert!((p.energy.re + 2.1228484).abs() < 1e-6);
        assert_eq!(p.energy.im, 0.0);
        assert_eq!(p.sheet, Sheet::PlusPlus);
        let p = reference().point(C64::new(0.88019950, -0.47460388)).unwrap();
        assert!((p.energy - C64::new(0.11262442, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn origin_is_a_domain_error() {
        assert!(matches!(reference().point(C64::new(0.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn sheet_quadrants() {
        let s = |re, im| reference().point(C64::new(re, im)).unwrap().sheet;
        assert_eq!(s(2.0, 0.3), Sheet::PlusPlus);
        assert_eq!(s(0.5, 0.3), Sheet::MinusPlus);
        assert_eq!(s(-2.0, 0.3), Sheet::MinusMinus);
        assert_eq!(s(-0.5, 0.3), Sheet::PlusMinus);
        // Boundaries are not physical.
        assert_eq!(s(1.0, 0.0), Sheet::MinusPlus);
        assert_eq!(s(0.0, 2.0), Sheet::MinusMinus);
        for sh in [Sheet::PlusPlus, Sheet::PlusMinus, Sheet::MinusPlus, Sheet::MinusMinus] {
            assert_eq!(Sheet::parse(sh.as_str()), Some(sh));
        }
    }

    #[test]
    fn energy_round_trip_through_sheets() {
        let uz = reference();
        for u in [C64::new(2.0, 0.3), C64::new(0.5, 0.3), C64::new(-2.0, 0.3), C64::new(-0.5, 0.3)] {
            let p = uz.point(u).unwrap();
            let back = uz.u_from_energy(p.energy, p.sheet);
            assert!((back - u).norm() < 1e-12, "{u} -> {back}");
        }
    }

    fn annulus() -> impl Strategy<Value = C64> {
        (0.1f64..10.0, 0.0f64..core::f64::consts::TAU).prop_map(|(r, t)| C64::from_polar(r, t))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn momenta_square_to_channel_energies(u in annulus()) {
            let uz = reference();
            let p = uz.point(u).unwrap();
            let two_mu = 2.0 * uz.mass();
            let (xi1, xi2) = uz.thresholds();
            let lhs1 = p.k1 * p.k1;
            let rhs1 = (p.energy - xi1) * two_mu;
            let lhs2 = p.k2 * p.k2;
            let rhs2 = (p.energy - xi2) * two_mu;
            // Relative to the size of the terms that cancel.
            let scale = 1.0 + (u * u).norm() + (u * u).inv().norm();
            prop_assert!((lhs1 - rhs1).norm() <= 1e-13 * scale);
            prop_assert!((lhs2 - rhs2).norm() <= 1e-13 * scale);
            let gap = lhs1 - lhs2 - two_mu * (xi2 - xi1);
            prop_assert!(gap.norm() <= 1e-13 * scale);
        }

        #[test]
        fn inverse_map_recovers_u(u in annulus()) {
            let uz = reference();
            let p = uz.point(u).unwrap();
            prop_assert!((uz.u_from_momenta(p.k1, p.k2) - u).norm() <= 1e-13 * u.norm());
        }
    }
}
