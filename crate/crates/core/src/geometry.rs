//! Points of extended n-space, round balls, cylindrical coordinates,
//! wedges, and the chordal metric. All types are immutable values.
//!
//! Dimension is data, not a compile-time parameter: the same binary
//! serves n = 2..=8. Angles are stored in [0, 2π) and compared with a
//! wrap-aware epsilon.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Wrap-aware epsilon for angle comparisons.
pub const ANGLE_EPS: f64 = 1e-10;

/// Normalize an angle to [0, 2π).
pub fn normalize_angle(phi: f64) -> f64 {
    let mut x = phi % TAU;
    if x < 0.0 {
        x += TAU;
    }
    // The remainder can round up to exactly 2π for inputs just below 0.
    if x >= TAU {
        x -= TAU;
    }
    x
}

/// Distance between two angles on the circle, in [0, π].
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    d.min(TAU - d)
}

/// A point of extended n-space: finite coordinates or the point at
/// infinity. Infinity is a tagged alternative rather than an IEEE
/// infinity vector, so arithmetic cannot silently produce NaN.
///
/// Serialized as an array of numbers, or the string `"inf"`.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtPoint {
    Finite(Vec<f64>),
    Infinity,
}

impl ExtPoint {
    pub fn finite(coords: Vec<f64>) -> Self {
        ExtPoint::Finite(coords)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtPoint::Infinity)
    }

    /// Dimension when finite; `None` for the point at infinity, which is
    /// compatible with every dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ExtPoint::Finite(v) => Some(v.len()),
            ExtPoint::Infinity => None,
        }
    }

    pub fn as_finite(&self) -> Option<&[f64]> {
        match self {
            ExtPoint::Finite(v) => Some(v),
            ExtPoint::Infinity => None,
        }
    }

    /// Unwrap finite coordinates, erroring on the point at infinity.
    pub fn expect_finite(&self) -> Result<&[f64]> {
        self.as_finite()
            .ok_or_else(|| Error::Numeric("unexpected point at infinity".into()))
    }
}

impl From<Vec<f64>> for ExtPoint {
    fn from(v: Vec<f64>) -> Self {
        ExtPoint::Finite(v)
    }
}

impl Serialize for ExtPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtPoint::Finite(v) => v.serialize(s),
            ExtPoint::Infinity => "inf".serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ExtPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Coords(Vec<f64>),
            Tag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Coords(v) => Ok(ExtPoint::Finite(v)),
            Repr::Tag(t) if t == "inf" => Ok(ExtPoint::Infinity),
            Repr::Tag(t) => Err(D::Error::custom(format!("unknown point tag {t:?}"))),
        }
    }
}

/// Round open ball with finite center and positive radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::OutOfRange(format!("ball radius {radius} must be > 0")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numeric("ball center must be finite".into()));
        }
        Ok(Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        linalg::dist(&self.center, x) < self.radius
    }

    pub fn contains_closure(&self, x: &[f64]) -> bool {
        linalg::dist(&self.center, x) <= self.radius
    }
}

/// Cylindrical coordinates: radius in the distinguished 2-plane, angle
/// in [0, 2π), and the remaining n-2 coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CylCoords {
    pub r: f64,
    pub phi: f64,
    pub z: Vec<f64>,
}

/// Decompose a vector (n >= 2) into cylindrical coordinates. The angle
/// uses the two-argument arctangent, normalized to [0, 2π); r = 0 maps
/// to phi = 0 by convention.
pub fn to_cylindrical(x: &[f64]) -> CylCoords {
    assert!(x.len() >= 2, "cylindrical coordinates need dimension >= 2");
    let r = x[0].hypot(x[1]);
    let phi = if r == 0.0 {
        0.0
    } else {
        normalize_angle(x[1].atan2(x[0]))
    };
    CylCoords {
        r,
        phi,
        z: x[2..].to_vec(),
    }
}

/// Inverse of [`to_cylindrical`]; the dimension is 2 + z.len().
pub fn from_cylindrical(c: &CylCoords) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 + c.z.len());
    out.push(c.r * c.phi.cos());
    out.push(c.r * c.phi.sin());
    out.extend_from_slice(&c.z);
    out
}

/// Chordal (spherical) distance on extended space:
/// q(x, y) = |x - y| / (sqrt(1+|x|^2) sqrt(1+|y|^2)), q(x, inf) = 1/sqrt(1+|x|^2).
///
/// Symmetric, zero iff the points coincide, and always <= 1.
pub fn chordal_distance(x: &ExtPoint, y: &ExtPoint) -> Result<f64> {
    match (x, y) {
        (ExtPoint::Infinity, ExtPoint::Infinity) => Ok(0.0),
        (ExtPoint::Finite(v), ExtPoint::Infinity) | (ExtPoint::Infinity, ExtPoint::Finite(v)) => {
            Ok(1.0 / (1.0 + linalg::dot(v, v)).sqrt())
        }
        (ExtPoint::Finite(a), ExtPoint::Finite(b)) => {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch {
                    expected: a.len(),
                    got: b.len(),
                });
            }
            let num = linalg::dist(a, b);
            let den = (1.0 + linalg::dot(a, a)).sqrt() * (1.0 + linalg::dot(b, b)).sqrt();
            Ok(num / den)
        }
    }
}

/// Maximum pairwise chordal distance of a nonempty point set.
pub fn chordal_diameter(points: &[ExtPoint]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut best = 0.0_f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.max(chordal_distance(&points[i], &points[j])?);
        }
    }
    Ok(best)
}

/// Angular wedge: points whose cylindrical angle, taken in the frame's
/// local coordinates, lies in (gamma, gamma + alpha). The frame is an
/// orthogonal change of basis fixing which 2-plane carries the angle and
/// which (n-2)-subspace is the axis; rows map world to local coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wedge {
    pub gamma: f64,
    pub alpha: f64,
    pub frame: Matrix,
}

impl Wedge {
    pub fn new(gamma: f64, alpha: f64, frame: Matrix) -> Result<Self> {
        if !(alpha > 0.0 && alpha < TAU) {
            return Err(Error::OutOfRange(format!(
                "wedge opening {alpha} must lie in (0, 2*pi)"
            )));
        }
        if !frame.is_orthogonal(1e-12) {
            return Err(Error::InvalidMap("wedge frame is not orthogonal".into()));
        }
        Ok(Wedge {
            gamma: normalize_angle(gamma),
            alpha,
            frame,
        })
    }

    /// Standard-frame wedge in R^n.
    pub fn standard(gamma: f64, alpha: f64, n: usize) -> Result<Self> {
        Self::new(gamma, alpha, Matrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn to_local(&self, x: &[f64]) -> Vec<f64> {
        self.frame.apply(x)
    }

    pub fn to_world(&self, local: &[f64]) -> Vec<f64> {
        self.frame.transpose().apply(local)
    }

    /// Angular offset of `x` from the wedge's start edge, in [0, 2π).
    /// Returns `None` on the axis, where the angle is undefined.
    pub fn angular_offset(&self, x: &[f64]) -> Option<f64> {
        let local = self.to_local(x);
        let c = to_cylindrical(&local);
        if c.r == 0.0 {
            return None;
        }
        Some(normalize_angle(c.phi - self.gamma))
    }

    /// Whether `x` lies in the open wedge, up to `tol` in angle.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self.angular_offset(x) {
            None => false,
            Some(d) => d > tol && d < self.alpha - tol,
        }
    }

    /// Whether `x` lies in the closed wedge, up to `tol` in angle.
    pub fn contains_closure(&self, x: &[f64], tol: f64) -> bool {
        match self.angular_offset(x) {
            None => true,
            Some(d) => d <= self.alpha + tol || d >= TAU - tol,
        }
    }
}
