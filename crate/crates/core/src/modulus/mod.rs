//! Conformal modulus: closed forms for spherical annuli, two-sided
//! bounds for the Grötzsch and Teichmüller capacities, the associated
//! comparison constants, and a finite-difference capacity solver for
//! plane ring domains.
//!
//! The Grötzsch and Teichmüller capacities have no elementary closed
//! form for n >= 3, so they are exposed only as bound intervals; every
//! consumer is written against intervals.

mod capacity;

pub use capacity::{capacity_2d, InnerPlate, OuterPlate, RingDomain};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gamma function by the Lanczos approximation (g = 7, 9 coefficients),
/// relative accuracy around 1e-13 on the positive axis.
pub fn gamma_fn(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let z = x - 1.0;
        let mut a = COEF[0];
        for (i, c) in COEF.iter().enumerate().skip(1) {
            a += c / (z + i as f64);
        }
        let t = z + G + 0.5;
        (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * a
    }
}

/// Volume of the unit ball and surface area of the unit sphere:
/// Ω_n = π^{n/2} / Γ(1 + n/2), ω_{n-1} = n Ω_n.
pub fn sphere_constants(n: usize) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("dimension {n} must be >= 2")));
    }
    let omega_n = PI.powf(n as f64 / 2.0) / gamma_fn(1.0 + n as f64 / 2.0);
    Ok((omega_n, n as f64 * omega_n))
}

/// Modulus of the family joining the inner ball to the outer sphere of a
/// spherical annulus: ω_{n-1} (log b/a)^{1-n}.
pub fn annulus_modulus(a: f64, b: f64, n: usize) -> Result<f64> {
    if !(a > 0.0 && b > a) {
        return Err(Error::OutOfRange(format!(
            "annulus radii need 0 < a < b, got a = {a}, b = {b}"
        )));
    }
    let (_, surface) = sphere_constants(n)?;
    Ok(surface * (b / a).ln().powi(1 - n as i32))
}

/// Bracketing values of the Grötzsch ring constant: exactly 4 in the
/// plane, (2 e^{0.76(n-1)}, 2 e^{n-1}] for n >= 3.
pub fn lambda_bounds(n: usize) -> Result<(f64, f64)> {
    match n {
        0 | 1 => Err(Error::OutOfRange(format!("dimension {n} must be >= 2"))),
        2 => Ok((4.0, 4.0)),
        _ => {
            let m = (n - 1) as f64;
            Ok((2.0 * (0.76 * m).exp(), 2.0 * m.exp()))
        }
    }
}

/// A two-sided capacity bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityBounds {
    pub lower: f64,
    pub upper: f64,
}

impl CapacityBounds {
    fn new(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper * (1.0 + 1e-12));
        CapacityBounds { lower, upper }
    }

    pub fn scaled(&self, s: f64) -> Self {
        CapacityBounds {
            lower: self.lower * s,
            upper: self.upper * s,
        }
    }
}

/// Two-sided bounds for the Grötzsch capacity γ_n(s), s > 1:
/// ω_{n-1} (log λ_n s)^{1-n} <= γ(s) <= ω_{n-1} (log s)^{1-n}.
/// Where λ_n is only bracketed, its upper end is used, which keeps the
/// lower bound valid.
pub fn grotzsch_bounds(s: f64, n: usize) -> Result<CapacityBounds> {
    if !(s > 1.0) {
        return Err(Error::OutOfRange(format!("grotzsch argument {s} must be > 1")));
    }
    let (_, surface) = sphere_constants(n)?;
    let (_, lambda_hi) = lambda_bounds(n)?;
    let e = 1 - n as i32;
    Ok(CapacityBounds::new(
        surface * (lambda_hi * s).ln().powi(e),
        surface * s.ln().powi(e),
    ))
}

/// Two-sided bounds for the Teichmüller capacity τ_n(t), t > 0, via
/// γ_n(s) = 2^{n-1} τ_n(s² - 1).
pub fn teichmuller_bounds(t: f64, n: usize) -> Result<CapacityBounds> {
    if !(t > 0.0) {
        return Err(Error::OutOfRange(format!(
            "teichmuller argument {t} must be > 0"
        )));
    }
    let g = grotzsch_bounds((t + 1.0).sqrt(), n)?;
    Ok(g.scaled(0.5_f64.powi(n as i32 - 1)))
}

/// Lower bound for the modulus joining a continuum through 0 and x to
/// the boundary of an enclosing set inside the unit ball: the bound is
/// γ(1/|x|), returned as the Grötzsch interval. Only the position of x
/// is validated; connectivity of the continuum and containment of the
/// enclosing set are the caller's obligations.
pub fn gehring_lower_bound(x: &[f64]) -> Result<CapacityBounds> {
    let r = crate::linalg::norm(x);
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange(format!(
            "point norm {r} must lie in (0, 1)"
        )));
    }
    grotzsch_bounds(1.0 / r, x.len())
}

/// Comparison constant between the capacity of a small ball-to-sphere
/// ring and the Grötzsch capacity:
/// C(n, r0) = (1 - log λ_n / log r0)^{1-n}, 0 < r0 < 1.
/// Uses the conservative (upper) end of the λ_n bracket, which minimizes
/// the constant.
pub fn comparison_constant(n: usize, r0: f64) -> Result<f64> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(Error::OutOfRange(format!("radius {r0} must lie in (0, 1)")));
    }
    let (_, lambda_hi) = lambda_bounds(n)?;
    Ok((1.0 - lambda_hi.ln() / r0.ln()).powi(1 - n as i32))
}
