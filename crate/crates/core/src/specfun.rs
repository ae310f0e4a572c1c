//! Riccati-Hankel functions of complex argument.
//!
//! Convention: `ĥ_l^±(z) → exp(±i(z − lπ/2))` as `|z| → ∞`, so
//! `ĥ_0^± = e^{±iz}` and `ĥ_1^± = e^{±iz}(1/z ∓ i)`.
//!
//! The scaled forms [`outgoing_scaled`] and [`regular_scaled`] are entire in
//! `z` and are what the regularized pole function is assembled from.

use crate::linalg::C64;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HankelSign {
    /// `ĥ⁺`, outgoing.
    Plus,
    /// `ĥ⁻`, incoming.
    Minus,
}

/// A function value and its `z`-derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiPair {
    pub value: C64,
    pub derivative: C64,
}

const I: C64 = C64::new(0.0, 1.0);

/// `ĥ_l^±(z)` and `d/dz ĥ_l^±(z)`.
///
/// Closed forms for `l ≤ 1`, upward recurrence
/// `ĥ_{l+1} = (2l+1)/z·ĥ_l − ĥ_{l−1}` above, and
/// `ĥ_l′ = ĥ_{l−1} − (l/z)ĥ_l`.
pub fn riccati_hankel(l: u32, sign: HankelSign, z: C64) -> Result<RiccatiPair> {
    if z == C64::new(0.0, 0.0) {
        return Err(Error::Domain("Riccati-Hankel function is singular at z = 0"));
    }
    let s = match sign {
        HankelSign::Plus => 1.0,
        HankelSign::Minus => -1.0,
    };
    let e = (I * s * z).exp();
    let zi = z.inv();
    let h0 = e;
    if l == 0 {
        return Ok(RiccatiPair { value: h0, derivative: I * s * e });
    }
    let h1 = e * (zi - I * s);
    let (mut prev, mut cur) = (h0, h1);
    for n in 1..l {
        let next = cur * zi * f64::from(2 * n + 1) - prev;
        prev = cur;
        cur = next;
    }
    Ok(RiccatiPair { value: cur, derivative: prev - cur * zi * f64::from(l) })
}

/// `q_l(z) = z^l ĥ_l⁺(z)` and its derivative.
///
/// `q_l = (−i)^l e^{iz} Σ_{m=0}^{l} (l+m)!/(m!(l−m)!) (i/2)^m z^{l−m}` is a
/// polynomial times `e^{iz}`, finite at `z = 0`.
pub fn outgoing_scaled(l: u32, z: C64) -> RiccatiPair {
    let lu = l as usize;
    let lf = f64::from(l);
    let half_i = C64::new(0.0, 0.5);
    // Horner over c_m z^{l−m}, m = 0..=l, with c_{m+1}/c_m = (i/2)(l+m+1)(l−m)/(m+1).
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    let mut coef = C64::new(1.0, 0.0);
    for m in 0..=lu {
        dp = dp * z + p;
        p = p * z + coef;
        let mf = m as f64;
        coef = coef * half_i * ((lf + mf + 1.0) * (lf - mf) / (mf + 1.0));
    }
    let phase = neg_i_pow(l);
    let e = (I * z).exp();
    RiccatiPair { value: phase * e * p, derivative: phase * e * (I * p + dp) }
}

/// `g_l(z) = ĵ_l(z) / z^{l+1}` and its derivative, where
/// `ĵ_l = (ĥ_l⁺ − ĥ_l⁻)/(2i)` is the Riccati-Bessel function.
///
/// Power series `Σ_k (−z²/2)^k / (k!(2l+2k+1)!!)` for small `|z|`.
pub fn regular_scaled(l: u32, z: C64) -> RiccatiPair {
    let lf = f64::from(l);
    if z.norm() <= (lf + 1.0).max(2.0) {
        let w = z * z * -0.5;
        let mut term = C64::new(1.0 / double_factorial(2 * l + 1), 0.0);
        let mut value = term;
        let mut deriv = C64::new(0.0, 0.0);
        // d/dz of w^k = k w^{k−1} (−z)
        for k in 1..80 {
            let kf = f64::from(k);
            let prev = term;
            term = term * w / (kf * (2.0 * lf + 2.0 * kf + 1.0));
            value += term;
            deriv += prev * (-z) / (2.0 * lf + 2.0 * kf + 1.0);
            if term.norm() < 1e-18 * value.norm() && k > 2 {
                break;
            }
        }
        return RiccatiPair { value, derivative: deriv };
    }
    // Large |z|: no cancellation in the Hankel difference.
    let hp = riccati_hankel(l, HankelSign::Plus, z).expect("z != 0");
    let hm = riccati_hankel(l, HankelSign::Minus, z).expect("z != 0");
    let inv2i = C64::new(0.0, -0.5);
    let j = (hp.value - hm.value) * inv2i;
    let dj = (hp.derivative - hm.derivative) * inv2i;
    let zp = z.powu(l + 1);
    let value = j / zp;
    RiccatiPair { value, derivative: dj / zp - value * (lf + 1.0) / z }
}

fn neg_i_pow(l: u32) -> C64 {
    match l % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

fn double_factorial(n: u32) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= f64::from(k);
        k -= 2;
    }
    acc
}
