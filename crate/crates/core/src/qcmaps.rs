//! Explicit quasiconformal/quasiregular building blocks — foldings
//! between wedges, winding maps around an (n-2)-axis, the three-branch
//! piecewise straightening map used in chain reduction — plus a
//! composition-tree evaluator and closed-form dilatations.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{from_cylindrical, normalize_angle, to_cylindrical, ExtPoint};
use crate::linalg::{self, Matrix};
use crate::mobius::{self, MobiusGen, MobiusMap};

/// Angle tolerance for accepting points on the closure of a source wedge.
const WEDGE_EDGE_TOL: f64 = 1e-9;

/// Angular-affine map of the wedge W_(gamma_src, gamma_src+alpha_src)
/// onto W_(gamma_dst, gamma_dst+alpha_dst), in the frame's local
/// cylindrical coordinates:
/// phi ↦ gamma_dst + alpha_dst * (phi - gamma_src) / alpha_src.
///
/// Openings up to and including 2π are allowed; a 2π "wedge" is the
/// complement of a half-plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Folding {
    pub alpha_src: f64,
    pub gamma_src: f64,
    pub alpha_dst: f64,
    pub gamma_dst: f64,
    pub frame: Matrix,
}

impl Folding {
    pub fn new(
        alpha_src: f64,
        gamma_src: f64,
        alpha_dst: f64,
        gamma_dst: f64,
        frame: Matrix,
    ) -> Result<Self> {
        for (name, a) in [("alpha_src", alpha_src), ("alpha_dst", alpha_dst)] {
            if !(a > 0.0 && a <= TAU) {
                return Err(Error::InvalidMap(format!(
                    "folding {name} = {a} must lie in (0, 2*pi]"
                )));
            }
        }
        if !frame.is_orthogonal(1e-12) {
            return Err(Error::InvalidMap("folding frame is not orthogonal".into()));
        }
        Ok(Folding {
            alpha_src,
            gamma_src: normalize_angle(gamma_src),
            alpha_dst,
            gamma_dst: normalize_angle(gamma_dst),
            frame,
        })
    }

    /// Standard-frame folding in R^n.
    pub fn standard(alpha_src: f64, gamma_src: f64, alpha_dst: f64, gamma_dst: f64, n: usize) -> Result<Self> {
        Self::new(alpha_src, gamma_src, alpha_dst, gamma_dst, Matrix::identity(n))
    }

    /// The exact inverse folding (swap source and target wedges).
    pub fn inverse(&self) -> Folding {
        Folding {
            alpha_src: self.alpha_dst,
            gamma_src: self.gamma_dst,
            alpha_dst: self.alpha_src,
            gamma_dst: self.gamma_src,
            frame: self.frame.clone(),
        }
    }

    pub fn angle_ratio(&self) -> f64 {
        self.alpha_dst / self.alpha_src
    }

    fn apply_local(&self, c: &crate::geometry::CylCoords) -> Result<crate::geometry::CylCoords> {
        if c.r == 0.0 {
            return Ok(c.clone());
        }
        let mut d = normalize_angle(c.phi - self.gamma_src);
        if d > self.alpha_src {
            if d >= TAU - WEDGE_EDGE_TOL {
                d = 0.0;
            } else if d <= self.alpha_src + WEDGE_EDGE_TOL {
                d = self.alpha_src;
            } else {
                return Err(Error::OutsideSourceWedge { stage: String::new() });
            }
        }
        Ok(crate::geometry::CylCoords {
            r: c.r,
            phi: normalize_angle(self.gamma_dst + self.alpha_dst * d / self.alpha_src),
            z: c.z.clone(),
        })
    }
}

/// k-fold winding around the (n-2)-axis complementary to the given
/// coordinate 2-plane: the angle in that plane is multiplied by k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Winding {
    pub k: u32,
    pub plane: (usize, usize),
}

impl Winding {
    pub fn new(k: u32, plane: (usize, usize)) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidMap(format!("winding degree {k} must be >= 2")));
        }
        if plane.0 == plane.1 {
            return Err(Error::InvalidMap("winding plane indices must be distinct".into()));
        }
        Ok(Winding { k, plane })
    }
}

/// The three-branch straightening map used in chain reduction: folds the
/// wedge W_(π-α1, π) onto the upper half-space, is the identity on
/// W_(π, π+φ0], and expands the remaining sector back to close up the
/// circle. φ0 = 0 degenerates to the two-branch wedge-to-half-space map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseFold {
    pub alpha1: f64,
    pub phi0: f64,
    pub frame: Matrix,
}

impl PiecewiseFold {
    pub fn new(alpha1: f64, phi0: f64, frame: Matrix) -> Result<Self> {
        if !(alpha1 > PI && alpha1 < TAU) {
            return Err(Error::InvalidMap(format!(
                "piecewise fold alpha1 = {alpha1} must lie in (pi, 2*pi)"
            )));
        }
        if !(phi0 >= 0.0 && phi0 < TAU - alpha1) {
            return Err(Error::InvalidMap(format!(
                "piecewise fold phi0 = {phi0} must lie in [0, 2*pi - alpha1)"
            )));
        }
        if !frame.is_orthogonal(1e-12) {
            return Err(Error::InvalidMap("piecewise fold frame is not orthogonal".into()));
        }
        let pf = PiecewiseFold { alpha1, phi0, frame };
        pf.assert_continuity()?;
        Ok(pf)
    }

    pub fn standard(alpha1: f64, phi0: f64, n: usize) -> Result<Self> {
        Self::new(alpha1, phi0, Matrix::identity(n))
    }

    /// Branch angular scale factors: compressing, identity, expanding.
    pub fn branch_ratios(&self) -> [f64; 3] {
        [
            PI / self.alpha1,
            1.0,
            (PI - self.phi0) / (TAU - self.alpha1 - self.phi0),
        ]
    }

    /// Map an angle in (π-α1, 3π-α1] through the three branches.
    fn map_angle(&self, psi: f64) -> f64 {
        let (a1, p0) = (self.alpha1, self.phi0);
        if psi <= PI {
            (PI / a1) * (psi + (a1 - PI))
        } else if psi <= PI + p0 {
            psi
        } else {
            ((PI - p0) * psi + (PI + p0) * (PI - a1)) / ((PI - a1) + (PI - p0))
        }
    }

    /// Branch index for an angle already shifted into (π-α1, 3π-α1].
    fn branch_of(&self, psi: f64) -> u8 {
        if psi <= PI {
            0
        } else if psi <= PI + self.phi0 {
            1
        } else {
            2
        }
    }

    /// Shift a normalized angle into the fundamental interval (π-α1, 3π-α1].
    fn shift(&self, phi: f64) -> f64 {
        if phi > 3.0 * PI - self.alpha1 {
            phi - TAU
        } else {
            phi
        }
    }

    /// The printed branch formulas must agree at the interior seams and
    /// wrap consistently at the fundamental-interval ends; checked once at
    /// construction so a misbehaving parameter pair fails loudly.
    fn assert_continuity(&self) -> Result<()> {
        let tol = 1e-10;
        let checks = [
            ((PI / self.alpha1) * (PI + (self.alpha1 - PI)), PI),
            (self.map_angle(PI + self.phi0 + 1e-300), PI + self.phi0),
            (self.map_angle(3.0 * PI - self.alpha1), TAU),
        ];
        for (got, want) in checks {
            if (got - want).abs() > tol {
                return Err(Error::Numeric(format!(
                    "piecewise fold seam mismatch: {got} vs {want}"
                )));
            }
        }
        Ok(())
    }

    fn apply_local(&self, c: &crate::geometry::CylCoords) -> crate::geometry::CylCoords {
        if c.r == 0.0 {
            return c.clone();
        }
        let psi = self.shift(c.phi);
        crate::geometry::CylCoords {
            r: c.r,
            phi: normalize_angle(self.map_angle(psi)),
            z: c.z.clone(),
        }
    }
}

/// Similarity x ↦ scale·x + offset with positive scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub scale: f64,
    pub offset: Vec<f64>,
}

impl Affine {
    pub fn new(scale: f64, offset: Vec<f64>) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidMap(format!("affine scale {scale} must be > 0")));
        }
        Ok(Affine { scale, offset })
    }
}

/// Validity of a closed-form dilatation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Validity {
    /// The values are the dilatations of the map.
    Exact,
    /// The values only bound the dilatations from above (composition).
    BoundOnly,
    /// No closed form is available.
    Unavailable,
}

/// Closed-form inner/outer dilatations of a map expression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticDilatation {
    pub k_i: f64,
    pub k_o: f64,
    pub validity: Validity,
}

impl AnalyticDilatation {
    fn conformal() -> Self {
        AnalyticDilatation {
            k_i: 1.0,
            k_o: 1.0,
            validity: Validity::Exact,
        }
    }

    /// Dilatations of an angular stretch by ratio rho: the singular
    /// values are (1, rho, 1, ...), so for rho >= 1, (K_I, K_O) =
    /// (rho, rho^{n-1}); for rho < 1 the roles swap.
    fn angular_stretch(rho: f64, n: usize) -> Self {
        let (k_i, k_o) = if rho >= 1.0 {
            (rho, rho.powi(n as i32 - 1))
        } else {
            ((1.0 / rho).powi(n as i32 - 1), 1.0 / rho)
        };
        AnalyticDilatation {
            k_i,
            k_o,
            validity: Validity::Exact,
        }
    }

    pub fn k_max(&self) -> f64 {
        self.k_i.max(self.k_o)
    }
}

/// A composition tree of primitive maps with exact forward evaluation.
/// Composition stages apply in listed order (first stage first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MapExpr {
    Mobius(MobiusMap),
    Folding(Folding),
    Winding(Winding),
    PiecewiseFold(PiecewiseFold),
    Affine(Affine),
    Compose { stages: Vec<MapExpr> },
}

/// Evaluation trace used for seam detection: branch choices made at each
/// piecewise stage plus the smallest distance, in stage-local
/// coordinates, to any derivative discontinuity (wedge edges, winding
/// axes, inversion poles).
#[derive(Clone, Debug, PartialEq)]
pub struct EvalTrace {
    pub branches: Vec<u8>,
    pub hazard: f64,
}

impl MapExpr {
    pub fn identity(n: usize) -> Self {
        MapExpr::Affine(Affine {
            scale: 1.0,
            offset: vec![0.0; n],
        })
    }

    pub fn compose(stages: Vec<MapExpr>) -> Self {
        MapExpr::Compose { stages }
    }

    /// Validate parameter invariants (used after deserializing).
    pub fn validate(&self) -> Result<()> {
        match self {
            MapExpr::Mobius(m) => m.validate(),
            MapExpr::Folding(f) => {
                Folding::new(f.alpha_src, f.gamma_src, f.alpha_dst, f.gamma_dst, f.frame.clone())
                    .map(|_| ())
            }
            MapExpr::Winding(w) => Winding::new(w.k, w.plane).map(|_| ()),
            MapExpr::PiecewiseFold(p) => {
                PiecewiseFold::new(p.alpha1, p.phi0, p.frame.clone()).map(|_| ())
            }
            MapExpr::Affine(a) => Affine::new(a.scale, a.offset.clone()).map(|_| ()),
            MapExpr::Compose { stages } => {
                if stages.is_empty() {
                    return Err(Error::InvalidMap("empty composition".into()));
                }
                stages.iter().try_for_each(|s| s.validate())
            }
        }
    }

    /// Evaluate the tree bottom-up. Inputs outside a folding's source
    /// wedge produce an error naming the failing stage.
    pub fn eval(&self, x: &ExtPoint) -> Result<ExtPoint> {
        let mut stage = 0usize;
        self.eval_inner(x, &mut stage, None)
    }

    /// Evaluate and record the branch/hazard trace.
    pub fn eval_traced(&self, x: &ExtPoint) -> Result<(ExtPoint, EvalTrace)> {
        let mut stage = 0usize;
        let mut trace = EvalTrace {
            branches: Vec::new(),
            hazard: f64::INFINITY,
        };
        let out = self.eval_inner(x, &mut stage, Some(&mut trace))?;
        Ok((out, trace))
    }

    fn eval_inner(
        &self,
        x: &ExtPoint,
        stage: &mut usize,
        mut trace: Option<&mut EvalTrace>,
    ) -> Result<ExtPoint> {
        match self {
            MapExpr::Compose { stages } => {
                let mut p = x.clone();
                for s in stages {
                    p = s.eval_inner(&p, stage, trace.as_deref_mut())?;
                }
                Ok(p)
            }
            MapExpr::Mobius(m) => {
                let this = *stage;
                *stage += 1;
                if let Some(t) = trace {
                    let (out, pole_dist) = m.evaluate_with_pole_distance(x)?;
                    t.hazard = t.hazard.min(pole_dist);
                    Ok(out)
                } else {
                    m.evaluate(x).map_err(|e| stage_err(e, this, "mobius"))
                }
            }
            MapExpr::Affine(a) => {
                *stage += 1;
                match x {
                    ExtPoint::Infinity => Ok(ExtPoint::Infinity),
                    ExtPoint::Finite(v) => Ok(ExtPoint::Finite(linalg::add(
                        &linalg::scaled(v, a.scale),
                        &a.offset,
                    ))),
                }
            }
            MapExpr::Winding(w) => {
                *stage += 1;
                match x {
                    ExtPoint::Infinity => Ok(ExtPoint::Infinity),
                    ExtPoint::Finite(v) => {
                        let (i, j) = w.plane;
                        if i >= v.len() || j >= v.len() {
                            return Err(Error::DimensionMismatch {
                                expected: i.max(j) + 1,
                                got: v.len(),
                            });
                        }
                        let r = v[i].hypot(v[j]);
                        if let Some(t) = trace {
                            t.hazard = t.hazard.min(r);
                        }
                        let mut out = v.clone();
                        if r > 0.0 {
                            let phi = v[j].atan2(v[i]);
                            let kphi = w.k as f64 * phi;
                            out[i] = r * kphi.cos();
                            out[j] = r * kphi.sin();
                        }
                        Ok(ExtPoint::Finite(out))
                    }
                }
            }
            MapExpr::Folding(f) => {
                let this = *stage;
                *stage += 1;
                match x {
                    ExtPoint::Infinity => Ok(ExtPoint::Infinity),
                    ExtPoint::Finite(v) => {
                        let local = f.frame.apply(v);
                        let c = to_cylindrical(&local);
                        if let Some(t) = trace.as_deref_mut() {
                            t.hazard = t.hazard.min(edge_hazard(
                                &c,
                                &[f.gamma_src, normalize_angle(f.gamma_src + f.alpha_src)],
                            ));
                        }
                        let mapped = f.apply_local(&c).map_err(|e| stage_err(e, this, "folding"))?;
                        let out = from_cylindrical(&mapped);
                        Ok(ExtPoint::Finite(f.frame.transpose().apply(&out)))
                    }
                }
            }
            MapExpr::PiecewiseFold(p) => {
                *stage += 1;
                match x {
                    ExtPoint::Infinity => Ok(ExtPoint::Infinity),
                    ExtPoint::Finite(v) => {
                        let local = p.frame.apply(v);
                        let c = to_cylindrical(&local);
                        if let Some(t) = trace.as_deref_mut() {
                            if c.r > 0.0 {
                                t.branches.push(p.branch_of(p.shift(c.phi)));
                            }
                            let seams = [
                                normalize_angle(PI - p.alpha1),
                                PI,
                                normalize_angle(PI + p.phi0),
                            ];
                            t.hazard = t.hazard.min(edge_hazard(&c, &seams));
                        }
                        let mapped = p.apply_local(&c);
                        let out = from_cylindrical(&mapped);
                        Ok(ExtPoint::Finite(p.frame.transpose().apply(&out)))
                    }
                }
            }
        }
    }

    /// Closed-form dilatations. Single primitives are exact; a
    /// composition yields the product of its factors as an upper bound,
    /// flagged bound-only unless at most one factor is non-conformal.
    pub fn analytic_dilatation(&self, n: usize) -> AnalyticDilatation {
        match self {
            MapExpr::Mobius(_) | MapExpr::Affine(_) => AnalyticDilatation::conformal(),
            MapExpr::Folding(f) => AnalyticDilatation::angular_stretch(f.angle_ratio(), n),
            MapExpr::Winding(w) => AnalyticDilatation::angular_stretch(w.k as f64, n),
            MapExpr::PiecewiseFold(p) => {
                let mut k_i = 1.0_f64;
                let mut k_o = 1.0_f64;
                for rho in p.branch_ratios() {
                    let b = AnalyticDilatation::angular_stretch(rho, n);
                    k_i = k_i.max(b.k_i);
                    k_o = k_o.max(b.k_o);
                }
                AnalyticDilatation {
                    k_i,
                    k_o,
                    validity: Validity::Exact,
                }
            }
            MapExpr::Compose { stages } => {
                let mut k_i = 1.0_f64;
                let mut k_o = 1.0_f64;
                let mut nontrivial = 0usize;
                let mut all_exact = true;
                for s in stages {
                    let d = s.analytic_dilatation(n);
                    if d.k_i * d.k_o > 1.0 + 1e-12 {
                        nontrivial += 1;
                    }
                    all_exact &= d.validity == Validity::Exact;
                    k_i *= d.k_i;
                    k_o *= d.k_o;
                }
                let validity = if all_exact && nontrivial <= 1 {
                    Validity::Exact
                } else {
                    Validity::BoundOnly
                };
                AnalyticDilatation { k_i, k_o, validity }
            }
        }
    }

    /// Sign of the Jacobian determinant where defined (+1 or -1). All
    /// angular maps here are sense-preserving; only Möbius factors can
    /// flip orientation.
    pub fn parity(&self) -> f64 {
        match self {
            MapExpr::Mobius(m) => m.parity(),
            MapExpr::Compose { stages } => stages.iter().map(|s| s.parity()).product(),
            _ => 1.0,
        }
    }
}

fn stage_err(e: Error, stage: usize, kind: &str) -> Error {
    match e {
        Error::OutsideSourceWedge { .. } => Error::OutsideSourceWedge {
            stage: format!("{stage} ({kind})"),
        },
        other => other,
    }
}

/// Distance, in local coordinates, from a point to the nearest of the
/// given angular seams (half-planes through the axis) and to the axis
/// itself.
fn edge_hazard(c: &crate::geometry::CylCoords, seams: &[f64]) -> f64 {
    let mut h = c.r;
    if c.r > 0.0 {
        for &s in seams {
            let d = normalize_angle(c.phi - s);
            let d = d.min(TAU - d);
            h = h.min(c.r * d.min(std::f64::consts::FRAC_PI_2).sin());
        }
    }
    h
}

/// The degree-2 composition mapping the unit ball onto the unit ball
/// minus the slit {x1 <= 0, x2 = x3 = 0}: a quasiconformal ball to
/// half-ball map (Möbius normalization conjugating a π → π/2 folding)
/// followed by two perpendicular angle-doubling windings.
pub fn winding_counterexample(n: usize) -> Result<MapExpr> {
    if n < 3 {
        return Err(Error::OutOfRange(format!(
            "winding counterexample needs dimension >= 3, got {n}"
        )));
    }
    let f1 = ball_to_half_ball(n);
    let f2 = MapExpr::Winding(Winding::new(2, (0, 1))?);
    let f3 = MapExpr::Winding(Winding::new(2, (0, 2))?);
    Ok(MapExpr::compose(vec![f1, f2, f3]))
}

/// Quasiconformal map of the unit ball onto the half-ball
/// {x : |x| < 1, x1 > 0}: conjugate the folding of the upper half-space
/// onto the quarter-wedge by the Möbius map sending the ball to the
/// upper half-space and the half-ball to that quarter-wedge.
pub fn ball_to_half_ball(n: usize) -> MapExpr {
    let mu = half_ball_normalization(n);
    let fold = Folding::standard(PI, 0.0, PI / 2.0, 0.0, n).expect("valid folding");
    MapExpr::compose(vec![
        MapExpr::Mobius(mu.clone()),
        MapExpr::Folding(fold),
        MapExpr::Mobius(mu.inverse()),
    ])
}

/// Inverse of [`ball_to_half_ball`] as an exact expression.
pub fn half_ball_to_ball(n: usize) -> MapExpr {
    let mu = half_ball_normalization(n);
    let fold = Folding::standard(PI, 0.0, PI / 2.0, 0.0, n).expect("valid folding");
    MapExpr::compose(vec![
        MapExpr::Mobius(mu.clone()),
        MapExpr::Folding(fold.inverse()),
        MapExpr::Mobius(mu.inverse()),
    ])
}

/// Möbius map sending the unit ball to the upper half-space {x2 > 0} and
/// the half-ball {x in B : x1 > 0} to the quarter-wedge W_(0, π/2):
/// inversion centered at -e2 on the sphere-plane intersection.
fn half_ball_normalization(n: usize) -> MobiusMap {
    let mut e2 = vec![0.0; n];
    e2[1] = 1.0;
    let half_e2 = linalg::scaled(&e2, 0.5);
    MobiusMap::new(
        n,
        vec![
            MobiusGen::Translation { offset: e2 },
            MobiusGen::Inversion,
            MobiusGen::Translation {
                offset: linalg::scaled(&half_e2, -1.0),
            },
        ],
    )
    .expect("valid normalization")
}

/// Enumerate the exact preimages under [`winding_counterexample`] of a
/// finite target with x2 != 0, by inverting each stage (two angular
/// branches of the outer winding, the in-domain branch of the inner one,
/// and the exact inverse of the ball-to-half-ball composition).
pub fn winding_counterexample_preimages(n: usize, target: &[f64]) -> Result<Vec<Vec<f64>>> {
    if n < 3 {
        return Err(Error::OutOfRange("dimension must be >= 3".into()));
    }
    if target.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: target.len(),
        });
    }
    if target[1] == 0.0 {
        return Err(Error::NonGenericTarget(
            "target on the x2 = 0 plane has degenerate preimage structure".into(),
        ));
    }
    let f1_inv = half_ball_to_ball(n);
    let mut out = Vec::new();
    // Invert the (x1, x3)-plane winding: two half-angle branches.
    let r3 = target[0].hypot(target[2]);
    let phi3 = target[2].atan2(target[0]);
    for branch in 0..2 {
        let half = phi3 / 2.0 + branch as f64 * PI;
        let mut v = target.to_vec();
        v[0] = r3 * half.cos();
        v[2] = r3 * half.sin();
        // Invert the (x1, x2)-plane winding into the half-space x1 > 0.
        let r2 = v[0].hypot(v[1]);
        let phi2 = v[1].atan2(v[0]);
        let mut u = v.clone();
        u[0] = r2 * (phi2 / 2.0).cos();
        u[1] = r2 * (phi2 / 2.0).sin();
        let pre = f1_inv.eval(&ExtPoint::finite(u))?;
        out.push(pre.expect_finite()?.to_vec());
    }
    Ok(out)
}

/// Distance from a point to the slit {x1 <= 0, x2 = x3 = 0} removed by
/// the winding counterexample's image.
pub fn slit_distance(x: &[f64]) -> f64 {
    let along = x[0].max(0.0);
    (along * along + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Angular preimages of a generic target under a winding of degree k:
/// the k half-angle rotations. Used as the enumeration oracle for
/// multiplicity checks.
pub fn winding_preimages(w: &Winding, target: &[f64]) -> Vec<Vec<f64>> {
    let (i, j) = w.plane;
    let r = target[i].hypot(target[j]);
    let phi = target[j].atan2(target[i]);
    (0..w.k)
        .map(|m| {
            let ang = (phi + TAU * m as f64) / w.k as f64;
            let mut v = target.to_vec();
            v[i] = r * ang.cos();
            v[j] = r * ang.sin();
            v
        })
        .collect()
}

/// Conjugate a map expression by a Möbius transformation: g⁻¹ ∘ e ∘ g.
pub fn conjugate(e: MapExpr, g: &MobiusMap) -> MapExpr {
    MapExpr::compose(vec![
        MapExpr::Mobius(g.clone()),
        e,
        MapExpr::Mobius(g.inverse()),
    ])
}

pub use mobius::halfspace_x2_to_unit_ball;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CylCoords;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn fin(v: &[f64]) -> ExtPoint {
        ExtPoint::finite(v.to_vec())
    }

    fn eval_vec(e: &MapExpr, v: &[f64]) -> Vec<f64> {
        e.eval(&fin(v)).unwrap().expect_finite().unwrap().to_vec()
    }

    #[test]
    fn folding_doubles_angle() {
        // π → 2π folding sends (0,1,0) to (-1,0,0).
        let f = MapExpr::Folding(Folding::standard(PI, 0.0, TAU, 0.0, 3).unwrap());
        let img = eval_vec(&f, &[0.0, 1.0, 0.0]);
        assert!(linalg::dist(&img, &[-1.0, 0.0, 0.0]) < 1e-12);
    }

    #[test]
    fn winding_doubles_angle() {
        let w = MapExpr::Winding(Winding::new(2, (0, 1)).unwrap());
        let img = eval_vec(&w, &[0.0, 1.0, 0.0]);
        assert!(linalg::dist(&img, &[-1.0, 0.0, 0.0]) < 1e-12);
    }

    #[test]
    fn identity_folding_fixes_wedge_points() {
        let f = MapExpr::Folding(Folding::standard(2.5, 0.3, 2.5, 0.3, 3).unwrap());
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..100 {
            let c = CylCoords {
                r: rng.gen_range(0.1..3.0),
                phi: normalize_angle(0.3 + rng.gen_range(0.0..2.5)),
                z: vec![rng.gen_range(-2.0..2.0)],
            };
            let v = from_cylindrical(&c);
            let img = eval_vec(&f, &v);
            assert!(linalg::dist(&img, &v) < 1e-12);
        }
    }

    #[test]
    fn folding_outside_wedge_errors_with_stage() {
        let f = MapExpr::compose(vec![
            MapExpr::identity(2),
            MapExpr::Folding(Folding::standard(PI, 0.0, PI / 2.0, 0.0, 2).unwrap()),
        ]);
        let err = f.eval(&fin(&[1.0, -1.0])).unwrap_err();
        match err {
            Error::OutsideSourceWedge { stage } => assert!(stage.contains("1")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn folding_round_trip_is_identity() {
        let fold = Folding::standard(3.0 * PI / 2.0, 0.7, 0.9 * PI, 2.0, 3).unwrap();
        let expr = MapExpr::compose(vec![
            MapExpr::Folding(fold.clone()),
            MapExpr::Folding(fold.inverse()),
        ]);
        let mut rng = StdRng::seed_from_u64(2);
        for _ in 0..200 {
            let c = CylCoords {
                r: rng.gen_range(0.1..2.0),
                phi: normalize_angle(0.7 + rng.gen_range(1e-6..3.0 * PI / 2.0 - 1e-6)),
                z: vec![rng.gen_range(-1.0..1.0)],
            };
            let v = from_cylindrical(&c);
            let img = eval_vec(&expr, &v);
            assert!(linalg::dist(&img, &v) < 1e-12);
        }
    }

    #[test]
    fn piecewise_fold_is_continuous_and_surjective() {
        let pf = PiecewiseFold::standard(4.4, 0.9, 2).unwrap();
        let expr = MapExpr::PiecewiseFold(pf.clone());
        // Continuity across each seam.
        for seam in [PI - pf.alpha1, PI, PI + pf.phi0, 3.0 * PI - pf.alpha1] {
            let eps = 1e-9;
            let a = eval_vec(&expr, &from_cylindrical(&CylCoords { r: 1.0, phi: normalize_angle(seam - eps), z: vec![] }));
            let b = eval_vec(&expr, &from_cylindrical(&CylCoords { r: 1.0, phi: normalize_angle(seam + eps), z: vec![] }));
            assert!(linalg::dist(&a, &b) < 1e-6, "discontinuity at seam {seam}");
        }
        // Monotone bijection of the circle: image angles of a fine grid
        // cover [0, 2π) without folds.
        let m = 10_000;
        let mut prev = None;
        let mut wraps = 0;
        for i in 0..m {
            let phi = TAU * i as f64 / m as f64;
            let img = eval_vec(&expr, &[phi.cos(), phi.sin()]);
            let out = to_cylindrical(&img).phi;
            if let Some(p) = prev {
                if out < p {
                    wraps += 1;
                }
            }
            prev = Some(out);
        }
        assert_eq!(wraps, 1, "angle map should wrap exactly once");
    }

    #[test]
    fn piecewise_fold_rejects_bad_parameters() {
        assert!(PiecewiseFold::standard(PI, 0.5, 2).is_err());
        assert!(PiecewiseFold::standard(4.4, TAU - 4.4, 2).is_err());
        // φ0 = 0 is the degenerate two-branch map and is allowed.
        assert!(PiecewiseFold::standard(4.4, 0.0, 2).is_ok());
    }

    #[test]
    fn analytic_dilatation_closed_forms() {
        let fold = MapExpr::Folding(Folding::standard(PI, 0.0, TAU, 0.0, 3).unwrap());
        let d = fold.analytic_dilatation(3);
        assert_eq!(d.validity, Validity::Exact);
        assert!((d.k_i - 2.0).abs() < 1e-15);
        assert!((d.k_o - 4.0).abs() < 1e-15);

        let mob = MapExpr::Mobius(MobiusMap::identity(3));
        let d = mob.analytic_dilatation(3);
        assert_eq!((d.k_i, d.k_o), (1.0, 1.0));

        let wind = MapExpr::Winding(Winding::new(2, (0, 1)).unwrap());
        let d = wind.analytic_dilatation(2);
        assert_eq!((d.k_i, d.k_o), (2.0, 2.0));

        // Compression swaps the roles.
        let fold = MapExpr::Folding(Folding::standard(TAU, 0.0, PI, 0.0, 3).unwrap());
        let d = fold.analytic_dilatation(3);
        assert!((d.k_i - 4.0).abs() < 1e-15);
        assert!((d.k_o - 2.0).abs() < 1e-15);

        // A composition of two nontrivial factors is bound-only.
        let comp = MapExpr::compose(vec![
            MapExpr::Winding(Winding::new(2, (0, 1)).unwrap()),
            MapExpr::Winding(Winding::new(3, (0, 1)).unwrap()),
        ]);
        let d = comp.analytic_dilatation(2);
        assert_eq!(d.validity, Validity::BoundOnly);
        assert!((d.k_i - 6.0).abs() < 1e-12);

        // Möbius conjugation does not downgrade exactness.
        let conj = conjugate(
            MapExpr::Winding(Winding::new(2, (0, 1)).unwrap()),
            &MobiusMap::identity(2),
        );
        assert_eq!(conj.analytic_dilatation(2).validity, Validity::Exact);
    }

    #[test]
    fn winding_preimage_enumeration() {
        let w = Winding::new(3, (0, 1)).unwrap();
        let target = [0.3, 0.4];
        let pres = winding_preimages(&w, &target);
        assert_eq!(pres.len(), 3);
        let expr = MapExpr::Winding(w);
        for p in &pres {
            let img = eval_vec(&expr, p);
            assert!(linalg::dist(&img, &target) < 1e-12);
        }
        // Distinct preimages.
        assert!(linalg::dist(&pres[0], &pres[1]) > 0.1);
        assert!(linalg::dist(&pres[1], &pres[2]) > 0.1);
    }

    #[test]
    fn ball_to_half_ball_maps_correctly() {
        let n = 3;
        let f1 = ball_to_half_ball(n);
        let inv = half_ball_to_ball(n);
        let mut rng = StdRng::seed_from_u64(8);
        for _ in 0..2000 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if linalg::norm(&v) >= 0.999 {
                continue;
            }
            let img = eval_vec(&f1, &v);
            assert!(linalg::norm(&img) < 1.0 + 1e-9, "image escapes ball");
            assert!(img[0] > -1e-9, "image not in half-ball");
            let back = eval_vec(&inv, &img);
            assert!(linalg::dist(&back, &v) < 1e-8);
        }
    }

    #[test]
    fn counterexample_image_avoids_slit_and_fills_ball() {
        let n = 3;
        let f = winding_counterexample(n).unwrap();
        assert!(winding_counterexample(2).is_err());
        let mut rng = StdRng::seed_from_u64(11);
        let mut min_slit = f64::INFINITY;
        let mut count = 0;
        while count < 20_000 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if linalg::norm(&v) >= 0.9999 {
                continue;
            }
            count += 1;
            let img = eval_vec(&f, &v);
            assert!(linalg::norm(&img) < 1.0 + 1e-9);
            min_slit = min_slit.min(slit_distance(&img));
        }
        assert!(min_slit > 0.0, "an image point landed on the slit");
    }

    #[test]
    fn counterexample_restriction_agrees_with_outer_windings() {
        // On the half-ball, the full map equals the two windings alone.
        let n = 3;
        let f = winding_counterexample(n).unwrap();
        let f1_inv = half_ball_to_ball(n);
        let windings = MapExpr::compose(vec![
            MapExpr::Winding(Winding::new(2, (0, 1)).unwrap()),
            MapExpr::Winding(Winding::new(2, (0, 2)).unwrap()),
        ]);
        let mut rng = StdRng::seed_from_u64(12);
        let mut checked = 0;
        while checked < 500 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            v[0] = rng.gen_range(0.01..1.0);
            if linalg::norm(&v) >= 0.999 {
                continue;
            }
            checked += 1;
            let x = eval_vec(&f1_inv, &v);
            let via_full = eval_vec(&f, &x);
            let via_windings = eval_vec(&windings, &v);
            assert!(linalg::dist(&via_full, &via_windings) < 1e-10);
        }
    }

    #[test]
    fn cluster_set_demonstration() {
        // Approaching the removed-disk interior from either side, one
        // preimage escapes to the unit sphere while another stays interior.
        let n = 3;
        let f = winding_counterexample(n).unwrap();
        for side in [1.0, -1.0] {
            let mut prev_max = 0.0;
            for &eps in &[1e-2, 1e-3, 1e-4] {
                // A target near the disk {sqrt(x1²+x3²) <= 1, x2 = 0},
                // with negative first coordinate so both branches matter.
                let target = vec![-0.4, side * eps, 0.3];
                let pres = winding_counterexample_preimages(n, &target).unwrap();
                assert_eq!(pres.len(), 2);
                for p in &pres {
                    let img = eval_vec(&f, p);
                    assert!(linalg::dist(&img, &target) < 1e-9);
                }
                let norms: Vec<f64> = pres.iter().map(|p| linalg::norm(p)).collect();
                let max = norms.iter().cloned().fold(0.0, f64::max);
                let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(max > prev_max, "boundary preimage should creep outward");
                assert!(min < 0.95, "one preimage stays interior");
                prev_max = max;
            }
            assert!(prev_max > 0.99, "preimages approach the unit sphere");
        }
    }

    #[test]
    fn map_expr_json_round_trip() {
        let expr = MapExpr::compose(vec![
            MapExpr::Mobius(MobiusMap::identity(2)),
            MapExpr::Folding(Folding::standard(PI, 0.0, TAU, 0.0, 2).unwrap()),
            MapExpr::Winding(Winding::new(2, (0, 1)).unwrap()),
            MapExpr::PiecewiseFold(PiecewiseFold::standard(4.0, 0.5, 2).unwrap()),
            MapExpr::Affine(Affine::new(2.0, vec![1.0, 0.0]).unwrap()),
        ]);
        let json = serde_json::to_string(&expr).unwrap();
        let back: MapExpr = serde_json::from_str(&json).unwrap();
        back.validate().unwrap();
        assert_eq!(expr, back);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let c = CylCoords {
                r: rng.gen_range(0.1..1.0),
                phi: rng.gen_range(0.01..PI - 0.01),
                z: vec![],
            };
            let v = from_cylindrical(&c);
            assert_eq!(eval_vec(&expr, &v), eval_vec(&back, &v));
        }
    }
}
