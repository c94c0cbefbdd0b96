//! Möbius transformations of extended n-space as ordered lists of
//! primitive generators (translation, scaling, orthogonal map, inversion
//! in the unit sphere). The representation is exactly invertible:
//! reverse the list and invert each primitive.
//!
//! Besides the group operations this module builds the two canonical
//! normalizations used elsewhere: the self-map `T_a` of the unit ball
//! sending an interior point to the origin, and the map taking the union
//! of two properly intersecting balls onto a wedge.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Ball, ExtPoint, Wedge};
use crate::linalg::{self, Matrix};

/// Primitive Möbius generators. Applied left to right in a [`MobiusMap`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MobiusGen {
    Translation { offset: Vec<f64> },
    Scaling { factor: f64 },
    Orthogonal { matrix: Matrix },
    Inversion,
}

impl MobiusGen {
    fn inverse(&self) -> MobiusGen {
        match self {
            MobiusGen::Translation { offset } => MobiusGen::Translation {
                offset: linalg::scaled(offset, -1.0),
            },
            MobiusGen::Scaling { factor } => MobiusGen::Scaling { factor: 1.0 / factor },
            MobiusGen::Orthogonal { matrix } => MobiusGen::Orthogonal {
                matrix: matrix.transpose(),
            },
            MobiusGen::Inversion => MobiusGen::Inversion,
        }
    }

    /// Sign of the Jacobian determinant (+1 or -1).
    fn parity(&self) -> f64 {
        match self {
            MobiusGen::Inversion => -1.0,
            MobiusGen::Orthogonal { matrix } => matrix.det().signum(),
            _ => 1.0,
        }
    }
}

/// A Möbius transformation of extended n-space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub n: usize,
    pub generators: Vec<MobiusGen>,
}

impl MobiusMap {
    pub fn identity(n: usize) -> Self {
        MobiusMap {
            n,
            generators: Vec::new(),
        }
    }

    pub fn new(n: usize, generators: Vec<MobiusGen>) -> Result<Self> {
        let map = MobiusMap { n, generators };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.generators {
            match g {
                MobiusGen::Translation { offset } => {
                    if offset.len() != self.n {
                        return Err(Error::DimensionMismatch {
                            expected: self.n,
                            got: offset.len(),
                        });
                    }
                }
                MobiusGen::Scaling { factor } => {
                    if !(*factor > 0.0) {
                        return Err(Error::InvalidMap(format!(
                            "scaling factor {factor} must be > 0"
                        )));
                    }
                }
                MobiusGen::Orthogonal { matrix } => {
                    if matrix.dim() != self.n {
                        return Err(Error::DimensionMismatch {
                            expected: self.n,
                            got: matrix.dim(),
                        });
                    }
                    if !matrix.is_orthogonal(1e-12) {
                        return Err(Error::InvalidMap("matrix is not orthogonal".into()));
                    }
                }
                MobiusGen::Inversion => {}
            }
        }
        Ok(())
    }

    /// Apply the transformation. Every primitive handles the point at
    /// infinity; inversion swaps 0 and infinity.
    pub fn evaluate(&self, x: &ExtPoint) -> Result<ExtPoint> {
        if let Some(d) = x.dim() {
            if d != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: d,
                });
            }
        }
        let mut p = x.clone();
        for g in &self.generators {
            p = self.apply_gen(g, p);
        }
        Ok(p)
    }

    /// Like [`evaluate`](Self::evaluate), also returning the smallest
    /// distance from any intermediate point to an inversion pole. Used to
    /// flag points where finite differencing is unreliable.
    pub fn evaluate_with_pole_distance(&self, x: &ExtPoint) -> Result<(ExtPoint, f64)> {
        if let Some(d) = x.dim() {
            if d != self.n {
                return Err(Error::DimensionMismatch {
                    expected: self.n,
                    got: d,
                });
            }
        }
        let mut p = x.clone();
        let mut hazard = f64::INFINITY;
        for g in &self.generators {
            if matches!(g, MobiusGen::Inversion) {
                if let ExtPoint::Finite(v) = &p {
                    hazard = hazard.min(linalg::norm(v));
                }
            }
            p = self.apply_gen(g, p);
        }
        Ok((p, hazard))
    }

    fn apply_gen(&self, g: &MobiusGen, p: ExtPoint) -> ExtPoint {
        match (g, p) {
            (MobiusGen::Translation { offset }, ExtPoint::Finite(v)) => {
                ExtPoint::Finite(linalg::add(&v, offset))
            }
            (MobiusGen::Scaling { factor }, ExtPoint::Finite(v)) => {
                ExtPoint::Finite(linalg::scaled(&v, *factor))
            }
            (MobiusGen::Orthogonal { matrix }, ExtPoint::Finite(v)) => {
                ExtPoint::Finite(matrix.apply(&v))
            }
            (MobiusGen::Inversion, ExtPoint::Finite(v)) => {
                let n2 = linalg::dot(&v, &v);
                if n2 == 0.0 {
                    ExtPoint::Infinity
                } else {
                    ExtPoint::Finite(linalg::scaled(&v, 1.0 / n2))
                }
            }
            (MobiusGen::Inversion, ExtPoint::Infinity) => ExtPoint::Finite(vec![0.0; self.n]),
            (_, ExtPoint::Infinity) => ExtPoint::Infinity,
        }
    }

    /// Apply `self` first, then `next`.
    pub fn then(&self, next: &MobiusMap) -> MobiusMap {
        assert_eq!(self.n, next.n);
        let mut generators = self.generators.clone();
        generators.extend(next.generators.iter().cloned());
        MobiusMap {
            n: self.n,
            generators,
        }
    }

    /// Function composition: `compose(outer, inner)` evaluates as
    /// `outer(inner(x))`.
    pub fn compose(outer: &MobiusMap, inner: &MobiusMap) -> MobiusMap {
        inner.then(outer)
    }

    /// Exact inverse: reversed generator list with each primitive inverted.
    pub fn inverse(&self) -> MobiusMap {
        MobiusMap {
            n: self.n,
            generators: self.generators.iter().rev().map(|g| g.inverse()).collect(),
        }
    }

    /// Sign of the Jacobian determinant (+1 sense-preserving, -1 reversing).
    pub fn parity(&self) -> f64 {
        self.generators.iter().map(|g| g.parity()).product()
    }

    fn push(&mut self, g: MobiusGen) {
        self.generators.push(g);
    }
}

/// Angle of intersection of two properly intersecting balls, in (π, 2π):
/// the opening of the wedge their union maps onto.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionAngle(f64);

impl IntersectionAngle {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > PI && alpha < TAU {
            Ok(IntersectionAngle(alpha))
        } else {
            Err(Error::OutOfRange(format!(
                "intersection angle {alpha} must lie in (pi, 2*pi)"
            )))
        }
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

struct IntersectionGeometry {
    d: f64,
    axis: Vec<f64>,
    center: Vec<f64>,
    rho: f64,
}

fn intersection_geometry(b1: &Ball, b2: &Ball) -> Result<IntersectionGeometry> {
    if b1.dim() != b2.dim() {
        return Err(Error::DimensionMismatch {
            expected: b1.dim(),
            got: b2.dim(),
        });
    }
    let d = linalg::dist(&b1.center, &b2.center);
    let (r1, r2) = (b1.radius, b2.radius);
    if d <= (r2 - r1).abs() {
        return Err(Error::ImproperIntersection(format!(
            "|x1-x2| = {d} <= |r2-r1| = {} (nested or concentric)",
            (r2 - r1).abs()
        )));
    }
    if d >= r1 + r2 {
        return Err(Error::ImproperIntersection(format!(
            "|x1-x2| = {d} >= r1+r2 = {} (disjoint or tangent)",
            r1 + r2
        )));
    }
    let axis = linalg::scaled(&linalg::sub(&b2.center, &b1.center), 1.0 / d);
    let t = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let rho2 = r1 * r1 - t * t;
    if rho2 <= 0.0 {
        return Err(Error::ImproperIntersection(
            "intersection sphere has nonpositive radius".into(),
        ));
    }
    let center = linalg::add(&b1.center, &linalg::scaled(&axis, t));
    Ok(IntersectionGeometry {
        d,
        axis,
        center,
        rho: rho2.sqrt(),
    })
}

/// Angle of intersection of two properly intersecting balls:
/// α = π + θ where cos θ = (r1² + r2² - d²) / (2 r1 r2).
pub fn intersection_angle(b1: &Ball, b2: &Ball) -> Result<IntersectionAngle> {
    let geom = intersection_geometry(b1, b2)?;
    let (r1, r2, d) = (b1.radius, b2.radius, geom.d);
    let cos_theta = ((r1 * r1 + r2 * r2 - d * d) / (2.0 * r1 * r2)).clamp(-1.0, 1.0);
    IntersectionAngle::new(PI + cos_theta.acos())
}

/// The canonical Möbius self-map of the unit ball with T_a(a) = 0 that
/// fixes ±a/|a|. For a = 0 this is the identity.
pub fn canonical_t(a: &[f64]) -> Result<MobiusMap> {
    let n = a.len();
    let t = linalg::norm(a);
    if t >= 1.0 {
        return Err(Error::PointNotInUnitBall { norm: t });
    }
    if t < 1e-14 {
        return Ok(MobiusMap::identity(n));
    }
    // Inversion in the sphere centered at a/|a|² orthogonal to the unit
    // sphere swaps a and 0; a reflection across the hyperplane normal to
    // a restores the fixed points ±a/|a| and the orientation.
    let a_star = linalg::scaled(a, 1.0 / (t * t));
    let r2 = (1.0 - t * t) / (t * t);
    let e_a = linalg::scaled(a, 1.0 / t);
    let mut refl = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            refl.set(i, j, refl.get(i, j) - 2.0 * e_a[i] * e_a[j]);
        }
    }
    let mut map = MobiusMap::identity(n);
    map.push(MobiusGen::Translation {
        offset: linalg::scaled(&a_star, -1.0),
    });
    map.push(MobiusGen::Inversion);
    map.push(MobiusGen::Scaling { factor: r2 });
    map.push(MobiusGen::Translation { offset: a_star });
    map.push(MobiusGen::Orthogonal { matrix: refl });
    Ok(map)
}

/// Internal output of the two-ball normalization.
pub(crate) struct WedgePlacement {
    pub map: MobiusMap,
    /// Local angles of the image half-space normals of b1, b2.
    pub psi1: f64,
    pub psi2: f64,
    pub alpha: f64,
}

/// Shared construction: send a point of the boundary-intersection sphere
/// to infinity, another to the origin, and align coordinates so both
/// image half-spaces contain the cylindrical axis in their boundary.
///
/// `rows12` picks the first two rows of the aligning orthogonal map from
/// the image half-space normals m1, m2.
fn wedge_normalization(
    b1: &Ball,
    b2: &Ball,
    rows12: impl Fn(&[f64], &[f64]) -> (Vec<f64>, Vec<f64>),
    fix_parity: bool,
) -> Result<WedgePlacement> {
    let n = b1.dim();
    let geom = intersection_geometry(b1, b2)?;
    let basis = linalg::gram_schmidt_complete(&[geom.axis.clone()], n);
    let w1 = &basis[1];
    let y1 = linalg::add(&geom.center, &linalg::scaled(w1, geom.rho));
    let y3 = linalg::sub(&geom.center, &linalg::scaled(w1, geom.rho));

    // After inversion at y3, the sphere through y3 with center x becomes a
    // hyperplane with normal (x - y3); translating the image of y1 to the
    // origin puts both hyperplanes through 0 with the open half-spaces
    // {y · m > 0} as the ball images.
    let m1 = linalg::normalized(&linalg::sub(&b1.center, &y3));
    let m2 = linalg::normalized(&linalg::sub(&b2.center, &y3));
    let diff = linalg::sub(&y1, &y3);
    let p1 = linalg::scaled(&diff, 1.0 / linalg::dot(&diff, &diff));

    let (row0, row1) = rows12(&m1, &m2);
    let mut seeds = vec![row0, row1];
    // For n >= 3, a third intersection-sphere point pins the axis: its
    // image is sent to the unit point of the last coordinate.
    let v_img = if n >= 3 {
        let w2 = &basis[2];
        let y2 = linalg::add(&geom.center, &linalg::scaled(w2, geom.rho));
        let diff2 = linalg::sub(&y2, &y3);
        Some(linalg::sub(
            &linalg::scaled(&diff2, 1.0 / linalg::dot(&diff2, &diff2)),
            &p1,
        ))
    } else {
        None
    };
    if let Some(v) = &v_img {
        seeds.push(linalg::normalized(v));
    }
    let mut rows = linalg::gram_schmidt_complete(&seeds, n);
    if n >= 3 {
        // Move the axis-pinning vector to the last row.
        let v = rows.remove(2);
        rows.push(v);
    }
    let mut q = Matrix::from_rows(rows)?;
    if fix_parity && q.det() > 0.0 {
        // One inversion makes the map sense-reversing; flip an axis row
        // (or, in the plane, the second row) to compensate. Angle
        // bookkeeping below reads the normals from the final matrix.
        let flip_row = if n >= 4 { 2 } else if n == 3 { n - 1 } else { 1 };
        for j in 0..n {
            q.set(flip_row, j, -q.get(flip_row, j));
        }
    }

    let psi1 = normalize_angle(linalg::dot(q.row(1), &m1).atan2(linalg::dot(q.row(0), &m1)));
    let psi2 = normalize_angle(linalg::dot(q.row(1), &m2).atan2(linalg::dot(q.row(0), &m2)));

    let mut map = MobiusMap::identity(n);
    map.push(MobiusGen::Translation {
        offset: linalg::scaled(&y3, -1.0),
    });
    map.push(MobiusGen::Inversion);
    map.push(MobiusGen::Translation {
        offset: linalg::scaled(&p1, -1.0),
    });
    map.push(MobiusGen::Orthogonal { matrix: q });
    if let Some(v) = &v_img {
        map.push(MobiusGen::Scaling {
            factor: 1.0 / linalg::norm(v),
        });
    }

    // Opening of the union of the two image half-spaces.
    let delta = normalize_angle(psi2 - psi1);
    let alpha = if delta < PI { PI + delta } else { PI + (TAU - delta) };
    Ok(WedgePlacement {
        map,
        psi1,
        psi2,
        alpha,
    })
}

/// Map the union of two properly intersecting balls onto a wedge by a
/// Möbius transformation. Returns the (sense-preserving) map and the
/// wedge, whose opening equals [`intersection_angle`] of the balls; the
/// wedge frame is the identity, the alignment being applied inside the
/// map itself.
pub fn balls_to_wedge(b1: &Ball, b2: &Ball) -> Result<(MobiusMap, Wedge)> {
    let n = b1.dim();
    let placement = wedge_normalization(
        b1,
        b2,
        |m1, m2| {
            // Row 0 along m1 puts the first image half-space at angles
            // (-π/2, π/2); row 1 completes the angular 2-plane.
            let row0 = m1.to_vec();
            let mut row1 = linalg::sub(m2, &linalg::scaled(m1, linalg::dot(m2, m1)));
            row1 = linalg::normalized(&row1);
            (row0, row1)
        },
        true,
    )?;
    let delta = normalize_angle(placement.psi2 - placement.psi1);
    let gamma = if delta < PI {
        placement.psi1 - FRAC_PI_2
    } else {
        placement.psi2 - FRAC_PI_2
    };
    let wedge = Wedge::standard(gamma, placement.alpha, n)?;
    Ok((placement.map, wedge))
}

/// Position the two-ball normalization for chain reduction: the union
/// maps onto the wedge W_(π-α, π) and the second ball onto the upper
/// half-space W_(0, π). Sense-preserving for n >= 3; in the plane the
/// parity depends on the configuration's chirality and is reported back.
pub(crate) fn balls_to_positioned_wedge(b1: &Ball, b2: &Ball) -> Result<(MobiusMap, f64)> {
    let n = b1.dim();
    let placement = wedge_normalization(
        b1,
        b2,
        |m1, m2| {
            // Row 1 along m2 puts the second ball's half-space at (0, π);
            // row 0 is the perpendicular component of m1, which lands the
            // union at W_(π-α, π).
            let row1 = m2.to_vec();
            let mut row0 = linalg::sub(m1, &linalg::scaled(m2, linalg::dot(m1, m2)));
            row0 = linalg::normalized(&row0);
            (row0, row1)
        },
        n >= 3,
    )?;
    debug_assert!((normalize_angle(placement.psi2 - FRAC_PI_2)).abs() < 1e-9
        || (normalize_angle(placement.psi2 - FRAC_PI_2) - TAU).abs() < 1e-9);
    Ok((placement.map, placement.alpha))
}

/// Exact image of a round ball under a Möbius map, pushed through the
/// generator list. Errors if the ball meets an inversion pole (its image
/// would be unbounded).
pub fn map_ball_exact(m: &MobiusMap, b: &Ball) -> Result<Ball> {
    let mut center = b.center.clone();
    let mut radius = b.radius;
    for g in &m.generators {
        match g {
            MobiusGen::Translation { offset } => center = linalg::add(&center, offset),
            MobiusGen::Scaling { factor } => {
                center = linalg::scaled(&center, *factor);
                radius *= factor;
            }
            MobiusGen::Orthogonal { matrix } => center = matrix.apply(&center),
            MobiusGen::Inversion => {
                let d2 = linalg::dot(&center, &center) - radius * radius;
                if d2 <= 0.0 {
                    return Err(Error::Numeric(
                        "ball contains an inversion pole; image is not a ball".into(),
                    ));
                }
                center = linalg::scaled(&center, 1.0 / d2);
                radius /= d2;
            }
        }
    }
    Ball::new(center, radius)
}

/// The standard Möbius map from the half-space {x_2 > 0} onto the unit
/// ball: swap x_2 with x_n, then apply the inversion-based half-space to
/// ball map sending e_n to the origin.
pub fn halfspace_x2_to_unit_ball(n: usize) -> MobiusMap {
    let mut map = MobiusMap::identity(n);
    if n >= 3 {
        map.push(MobiusGen::Orthogonal {
            matrix: Matrix::swap(n, 1, n - 1),
        });
    }
    let mut e_n = vec![0.0; n];
    e_n[n - 1] = 1.0;
    map.push(MobiusGen::Translation { offset: e_n.clone() });
    map.push(MobiusGen::Inversion);
    map.push(MobiusGen::Scaling { factor: 2.0 });
    map.push(MobiusGen::Translation {
        offset: linalg::scaled(&e_n, -1.0),
    });
    map
}
