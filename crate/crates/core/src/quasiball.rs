//! Mapping a chain of overlapping balls onto the unit ball: each step
//! normalizes the two leading balls to a wedge, straightens the wedge
//! onto a half-space while fixing the sector sheltering the rest of the
//! chain, and conjugates back. The dilatation bound is the product of
//! the per-step piecewise-fold dilatations.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::dilatation::{run_dilatation, DilatationReport};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, to_cylindrical, Ball, ExtPoint};
use crate::linalg::{self, Matrix};
use crate::mobius::{self, MobiusGen, MobiusMap};
use crate::qcmaps::{Affine, MapExpr, PiecewiseFold};
use crate::sample::{sphere_grid, Sampler};

/// Number of boundary samples per remaining ball when cross-checking the
/// sheltering angle.
const PHI0_BOUNDARY_SAMPLES: usize = 10_000;
/// Relative safety margin applied to the sheltering angle.
const PHI0_MARGIN: f64 = 1e-6;
/// Closure-disjointness slack for non-adjacent balls.
const DISJOINT_EPS: f64 = 1e-12;

/// An ordered chain of balls; adjacent balls must intersect properly and
/// non-adjacent closures must be disjoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallChain {
    pub balls: Vec<Ball>,
}

impl BallChain {
    pub fn new(balls: Vec<Ball>) -> Result<Self> {
        if balls.is_empty() {
            return Err(Error::EmptySet);
        }
        let n = balls[0].dim();
        for b in &balls {
            if b.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.dim(),
                });
            }
        }
        Ok(BallChain { balls })
    }

    pub fn dim(&self) -> usize {
        self.balls[0].dim()
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn reversed(&self) -> BallChain {
        BallChain {
            balls: self.balls.iter().rev().cloned().collect(),
        }
    }
}

/// First violated chain hypothesis, as data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainViolation {
    /// Adjacent balls j, j+1 are disjoint or tangent.
    AdjacentTooFar { j: usize, distance: f64, radius_sum: f64 },
    /// Adjacent balls j, j+1 are nested (or concentric).
    AdjacentNested { j: usize, distance: f64, radius_gap: f64 },
    /// Non-adjacent closures meet.
    ClosuresMeet { j: usize, k: usize, distance: f64, radius_sum: f64 },
}

impl std::fmt::Display for ChainViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChainViolation::AdjacentTooFar { j, distance, radius_sum } => write!(
                f,
                "balls {j} and {} do not overlap: |x{}-x{j}| = {distance} >= r{j}+r{} = {radius_sum}",
                j + 1,
                j + 1,
                j + 1
            ),
            ChainViolation::AdjacentNested { j, distance, radius_gap } => write!(
                f,
                "balls {j} and {} are nested: |x{}-x{j}| = {distance} <= |r{}-r{j}| = {radius_gap}",
                j + 1,
                j + 1,
                j + 1
            ),
            ChainViolation::ClosuresMeet { j, k, distance, radius_sum } => write!(
                f,
                "closures of balls {j} and {k} meet: |x{k}-x{j}| = {distance} <= r{j}+r{k} = {radius_sum}"
            ),
        }
    }
}

/// Check the chain hypotheses, reporting the first violation (violations
/// are data, not errors).
pub fn validate_chain(chain: &BallChain) -> Option<ChainViolation> {
    let balls = &chain.balls;
    for j in 0..balls.len().saturating_sub(1) {
        let d = linalg::dist(&balls[j].center, &balls[j + 1].center);
        let gap = (balls[j + 1].radius - balls[j].radius).abs();
        let sum = balls[j].radius + balls[j + 1].radius;
        if d <= gap {
            return Some(ChainViolation::AdjacentNested {
                j,
                distance: d,
                radius_gap: gap,
            });
        }
        if d >= sum {
            return Some(ChainViolation::AdjacentTooFar {
                j,
                distance: d,
                radius_sum: sum,
            });
        }
    }
    for j in 0..balls.len() {
        for k in (j + 2)..balls.len() {
            let d = linalg::dist(&balls[j].center, &balls[k].center);
            let sum = balls[j].radius + balls[k].radius;
            if d <= sum + DISJOINT_EPS {
                return Some(ChainViolation::ClosuresMeet {
                    j,
                    k,
                    distance: d,
                    radius_sum: sum,
                });
            }
        }
    }
    None
}

/// Per-step record of the reduction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepData {
    pub alpha: f64,
    pub phi0: f64,
    pub k: f64,
}

/// The composed map together with its dilatation accounting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuasiballConstruction {
    pub n: usize,
    pub map: MapExpr,
    pub k_bound: f64,
    pub per_step: Vec<StepData>,
}

/// One reduction step: the positioned two-ball wedge map, the sheltering
/// angle for the remaining balls, and the straightening fold.
struct ReduceStep {
    g: MobiusMap,
    fold: PiecewiseFold,
    data: StepData,
}

fn reduce_step(b1: &Ball, b2: &Ball, remaining: &[Ball], n: usize) -> Result<ReduceStep> {
    let (g, alpha) = mobius::balls_to_positioned_wedge(b1, b2)?;
    let phi0 = if remaining.is_empty() {
        0.0
    } else {
        sheltering_angle(&g, alpha, remaining)?
    };
    let fold = PiecewiseFold::standard(alpha, phi0, n)?;
    let k = MapExpr::PiecewiseFold(fold.clone())
        .analytic_dilatation(n)
        .k_max();
    Ok(ReduceStep {
        g,
        fold,
        data: StepData { alpha, phi0, k },
    })
}

/// Smallest angle φ (with safety margin) such that the images of the
/// remaining balls, outside the closed union wedge W_(π-α, π), lie in
/// W_(π, π+φ). The supremum over each mapped ball is computed from its
/// exact Möbius image (the angular extent of a ball depends only on its
/// projection onto the angular 2-plane) and cross-checked against a
/// sampled supremum over the mapped boundary.
fn sheltering_angle(g: &MobiusMap, alpha: f64, remaining: &[Ball]) -> Result<f64> {
    let mut sup = 0.0_f64;
    for b in remaining {
        let img = mobius::map_ball_exact(g, b).map_err(|_| {
            Error::ChainGeometry("a remaining ball wraps around the wedge apex".into())
        })?;
        let d = img.center[0].hypot(img.center[1]);
        if d <= img.radius {
            return Err(Error::ChainGeometry(
                "a remaining ball's image meets the wedge axis".into(),
            ));
        }
        let theta_c = normalize_angle(img.center[1].atan2(img.center[0]));
        let half_width = (img.radius / d).asin();
        let hi = theta_c + half_width;
        // Angles below π stay inside the union wedge; beyond 3π-α the
        // ball would collide with the consumed half-space.
        let s = hi - PI;
        if s >= TAU - alpha {
            return Err(Error::ChainGeometry(format!(
                "sheltering angle {s} exceeds the available sector {}",
                TAU - alpha
            )));
        }
        if s > sup {
            sup = s;
        }

        // Sampled supremum over the mapped boundary as an independent
        // check of the projected-extent formula.
        let mut sampled = 0.0_f64;
        for p in sphere_grid(&b.center, b.radius, PHI0_BOUNDARY_SAMPLES) {
            let y = g.evaluate(&ExtPoint::finite(p))?;
            let y = y.expect_finite()?;
            let c = to_cylindrical(y);
            if c.r == 0.0 {
                continue;
            }
            let from_start = normalize_angle(c.phi - (PI - alpha));
            if from_start <= alpha + 1e-9 || from_start >= TAU - 1e-9 {
                continue;
            }
            sampled = sampled.max(normalize_angle(c.phi - PI));
        }
        if sampled > s + 1e-9 {
            return Err(Error::Numeric(format!(
                "sampled boundary angle {sampled} exceeds projected extent {s}"
            )));
        }
    }
    if sup <= 0.0 {
        return Err(Error::ChainGeometry(
            "remaining balls subtend no sector beyond the wedge".into(),
        ));
    }
    Ok(sup * (1.0 + PHI0_MARGIN))
}

/// Run the full reduction: normalize the leading pair, straighten, and
/// repeat; the final step takes the last wedge to a half-space and a
/// Möbius map finishes onto the unit ball.
pub fn construct(chain: &BallChain) -> Result<QuasiballConstruction> {
    if let Some(v) = validate_chain(chain) {
        return Err(Error::ChainGeometry(v.to_string()));
    }
    let n = chain.dim();
    let m = chain.len();
    let balls = &chain.balls;

    if m == 1 {
        let b = &balls[0];
        let map = MapExpr::Affine(Affine::new(
            1.0 / b.radius,
            linalg::scaled(&b.center, -1.0 / b.radius),
        )?);
        return Ok(QuasiballConstruction {
            n,
            map,
            k_bound: 1.0,
            per_step: Vec::new(),
        });
    }

    let mut stages: Vec<MapExpr> = Vec::new();
    let mut per_step = Vec::new();
    let mut k_bound = 1.0;
    for j in 0..m - 1 {
        let step = reduce_step(&balls[j], &balls[j + 1], &balls[j + 2..], n)?;
        k_bound *= step.data.k;
        per_step.push(step.data);
        let terminal = j == m - 2;
        stages.push(MapExpr::Mobius(step.g.clone()));
        stages.push(MapExpr::PiecewiseFold(step.fold));
        if terminal {
            stages.push(MapExpr::Mobius(mobius::halfspace_x2_to_unit_ball(n)));
        } else {
            stages.push(MapExpr::Mobius(step.g.inverse()));
        }
    }
    let mut map = MapExpr::Compose { stages };
    if map.parity() < 0.0 {
        // Restore orientation with a reflection fixing the unit ball.
        if let MapExpr::Compose { stages } = &mut map {
            stages.push(MapExpr::Mobius(
                MobiusMap::new(
                    n,
                    vec![MobiusGen::Orthogonal {
                        matrix: Matrix::reflection(n, 0),
                    }],
                )
                .expect("reflection is orthogonal"),
            ));
        }
    }
    Ok(QuasiballConstruction {
        n,
        map,
        k_bound,
        per_step,
    })
}

/// Sampled verification of a construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstructionCheck {
    pub interior_samples: usize,
    /// Fraction of union samples mapping into B^n(1 + 1e-6).
    pub interior_contained: f64,
    pub exterior_samples: usize,
    /// Fraction of near-exterior samples mapping outside B^n(1 - 1e-6).
    pub exterior_outside: f64,
    pub dilatation: DilatationReport,
    pub k_bound: f64,
}

impl ConstructionCheck {
    /// The acceptance thresholds: 99.9% containment both ways and the
    /// sampled dilatation within 2% of the product bound.
    pub fn passes(&self) -> bool {
        self.interior_contained >= 0.999
            && self.exterior_outside >= 0.999
            && self.dilatation.k_max <= self.k_bound * 1.02
    }
}

/// Sample the union and its 1-neighborhood through the constructed map.
pub fn verify_construction(
    chain: &BallChain,
    qc: &QuasiballConstruction,
    image_samples: usize,
    dilatation_samples: usize,
    seed: u64,
) -> Result<ConstructionCheck> {
    let union = Sampler::BallUnion {
        balls: chain.balls.clone(),
    };
    let mut contained = 0usize;
    for i in 0..image_samples as u64 {
        let x = union.point(seed, i);
        let img = qc.map.eval(&ExtPoint::finite(x))?;
        if let Some(p) = img.as_finite() {
            if linalg::norm(p) < 1.0 + 1e-6 {
                contained += 1;
            }
        }
    }

    // Exterior points within distance 1 of the union, by rejection.
    let m = chain.balls.len();
    let mut outside = 0usize;
    let mut exterior_total = 0usize;
    for i in 0..image_samples as u64 {
        let b = &chain.balls[(i as usize) % m];
        let enlarged = Sampler::Ball {
            center: b.center.clone(),
            radius: b.radius + 1.0,
        };
        let mut found = None;
        for attempt in 0..64u64 {
            let x = enlarged.point(seed ^ 0xE47E_A10E, i * 64 + attempt);
            if chain.balls.iter().all(|bb| !bb.contains_closure(&x)) {
                found = Some(x);
                break;
            }
        }
        let Some(x) = found else { continue };
        exterior_total += 1;
        let img = qc.map.eval(&ExtPoint::finite(x))?;
        match img.as_finite() {
            Some(p) => {
                if linalg::norm(p) > 1.0 - 1e-6 {
                    outside += 1;
                }
            }
            None => outside += 1,
        }
    }

    let dil = run_dilatation(
        &qc.map,
        &union,
        dilatation_samples,
        crate::dilatation::DEFAULT_STEP,
        seed ^ 0xD11A,
        false,
    )?;

    Ok(ConstructionCheck {
        interior_samples: image_samples,
        interior_contained: contained as f64 / image_samples as f64,
        exterior_samples: exterior_total,
        exterior_outside: if exterior_total == 0 {
            0.0
        } else {
            outside as f64 / exterior_total as f64
        },
        dilatation: dil.report,
        k_bound: qc.k_bound,
    })
}

/// Points on the boundary of the union of the chain's balls (samples of
/// each sphere that lie outside every other ball).
pub fn union_boundary_points(chain: &BallChain, per_ball: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for (i, b) in chain.balls.iter().enumerate() {
        for p in sphere_grid(&b.center, b.radius, per_ball) {
            let interior = chain
                .balls
                .iter()
                .enumerate()
                .any(|(j, other)| j != i && other.contains(&p));
            if !interior {
                out.push(p);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(center: &[f64], r: f64) -> Ball {
        Ball::new(center.to_vec(), r).unwrap()
    }

    fn chain2d(balls: &[(f64, f64, f64)]) -> BallChain {
        BallChain::new(balls.iter().map(|&(x, y, r)| ball(&[x, y], r)).collect()).unwrap()
    }

    #[test]
    fn validate_chain_examples() {
        assert!(validate_chain(&chain2d(&[(0.0, 0.0, 1.0)])).is_none());

        let v = validate_chain(&chain2d(&[(0.0, 0.0, 1.0), (3.0, 0.0, 1.0)])).unwrap();
        assert!(matches!(v, ChainViolation::AdjacentTooFar { j: 0, .. }));

        // Tangent non-adjacent closures are rejected; strictly disjoint
        // ones are fine.
        let v = validate_chain(&chain2d(&[
            (0.0, 0.0, 1.5),
            (1.5, 0.0, 1.0),
            (3.0, 0.0, 1.5),
        ]))
        .unwrap();
        assert!(matches!(v, ChainViolation::ClosuresMeet { j: 0, k: 2, .. }));
        assert!(validate_chain(&chain2d(&[
            (0.0, 0.0, 1.0),
            (1.5, 0.0, 1.0),
            (3.0, 0.0, 1.0),
        ]))
        .is_none());

        let v = validate_chain(&chain2d(&[(0.0, 0.0, 1.0), (0.1, 0.0, 0.5)])).unwrap();
        assert!(matches!(v, ChainViolation::AdjacentNested { j: 0, .. }));

        // The regression chain is admissible.
        assert!(validate_chain(&chain2d(&[
            (0.0, 0.0, 1.0),
            (1.2, 0.0, 1.0),
            (2.45, 0.0, 0.6),
        ]))
        .is_none());
    }

    #[test]
    fn single_ball_is_a_similarity() {
        let chain = chain2d(&[(2.0, -1.0, 0.5)]);
        let qc = construct(&chain).unwrap();
        assert_eq!(qc.k_bound, 1.0);
        assert!(qc.per_step.is_empty());
        let img = qc
            .map
            .eval(&ExtPoint::finite(vec![2.0, -1.0]))
            .unwrap()
            .expect_finite()
            .unwrap()
            .to_vec();
        assert!(linalg::norm(&img) < 1e-12);
        let img = qc
            .map
            .eval(&ExtPoint::finite(vec![2.5, -1.0]))
            .unwrap()
            .expect_finite()
            .unwrap()
            .to_vec();
        assert!((linalg::norm(&img) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_ball_construction_degenerates_to_single_fold() {
        // Unit balls at distance √2: wedge opening 3π/2, plane dilatation 2.
        let chain = chain2d(&[(0.0, 0.0, 1.0), (2.0_f64.sqrt(), 0.0, 1.0)]);
        let qc = construct(&chain).unwrap();
        assert_eq!(qc.per_step.len(), 1);
        assert!((qc.per_step[0].alpha - 3.0 * PI / 2.0).abs() < 1e-9);
        assert_eq!(qc.per_step[0].phi0, 0.0);
        assert!((qc.k_bound - 2.0).abs() < 1e-9);
        assert!(qc.map.parity() > 0.0);

        // Image boundary lies on the unit circle.
        let boundary = union_boundary_points(&chain, 1000);
        assert!(boundary.len() >= 1000);
        let mut worst = 0.0_f64;
        for p in boundary {
            let img = qc.map.eval(&ExtPoint::finite(p)).unwrap();
            let img = img.expect_finite().unwrap();
            worst = worst.max((linalg::norm(img) - 1.0).abs());
        }
        assert!(worst < 1e-3, "boundary deviation {worst}");
    }

    #[test]
    fn two_ball_step_dilatation_attained_globally() {
        // The per-step bound K = 2 is the whole-space dilatation of the
        // straightening fold; sampling across all branches reaches it.
        let chain = chain2d(&[(0.0, 0.0, 1.0), (2.0_f64.sqrt(), 0.0, 1.0)]);
        let qc = construct(&chain).unwrap();
        let everywhere = Sampler::Shell {
            center: vec![0.7, 0.0],
            r_min: 0.1,
            r_max: 3.0,
        };
        let rep = crate::dilatation::sample_dilatation(
            &qc.map,
            &everywhere,
            10_000,
            crate::dilatation::DEFAULT_STEP,
            21,
        )
        .unwrap();
        assert!((rep.k_max - qc.k_bound).abs() / qc.k_bound < 0.02, "{rep:?}");
    }

    #[test]
    fn two_ball_check_passes() {
        let chain = chain2d(&[(0.0, 0.0, 1.0), (2.0_f64.sqrt(), 0.0, 1.0)]);
        let qc = construct(&chain).unwrap();
        let check = verify_construction(&chain, &qc, 20_000, 4000, 99).unwrap();
        assert!(check.interior_contained >= 0.999, "{check:?}");
        assert!(check.exterior_outside >= 0.999, "{check:?}");
        assert!(check.dilatation.k_max <= qc.k_bound * 1.02, "{check:?}");
        assert!(check.passes());
    }

    #[test]
    fn three_ball_regression_chain() {
        let chain = chain2d(&[(0.0, 0.0, 1.0), (1.2, 0.0, 1.0), (2.45, 0.0, 0.6)]);
        let qc = construct(&chain).unwrap();
        assert_eq!(qc.per_step.len(), 2);
        let step = &qc.per_step[0];
        assert!(step.phi0 > 0.0 && step.phi0 < TAU - step.alpha);
        let product: f64 = qc.per_step.iter().map(|s| s.k).product();
        assert!((qc.k_bound - product).abs() < 1e-9);

        let check = verify_construction(&chain, &qc, 20_000, 4000, 7).unwrap();
        assert!(check.passes(), "{check:?}");

        // Step data is a regression surface: alpha of the leading pair is
        // π + arccos(0.28) and the terminal opening is π + arccos(-0.16875);
        // the sheltering angle and the product bound are frozen values.
        assert!((qc.per_step[0].alpha - (PI + 0.28_f64.acos())).abs() < 1e-9);
        assert!((qc.per_step[1].alpha - (PI + (-0.16875_f64).acos())).abs() < 1e-9);
        assert!((qc.per_step[0].phi0 - 0.2960641899879733).abs() < 1e-9);
        assert!((qc.k_bound - 4.093433272267762).abs() < 1e-9);
    }

    #[test]
    fn reversed_chain_still_maps_onto_ball() {
        let chain = chain2d(&[(0.0, 0.0, 1.0), (1.2, 0.0, 1.0), (2.45, 0.0, 0.6)]);
        let rev = chain.reversed();
        let qc = construct(&rev).unwrap();
        let check = verify_construction(&rev, &qc, 10_000, 2000, 3).unwrap();
        assert!(check.passes(), "{check:?}");
    }

    #[test]
    fn k_bound_is_similarity_invariant() {
        let base = chain2d(&[(0.0, 0.0, 1.0), (1.2, 0.0, 1.0), (2.45, 0.0, 0.6)]);
        let qc0 = construct(&base).unwrap();

        // Rotate, scale and translate the whole chain.
        let (c, s) = (0.6_f64.cos(), 0.6_f64.sin());
        let transform = |p: &[f64]| -> Vec<f64> {
            vec![
                2.5 * (c * p[0] - s * p[1]) - 3.0,
                2.5 * (s * p[0] + c * p[1]) + 1.0,
            ]
        };
        let moved = BallChain::new(
            base.balls
                .iter()
                .map(|b| Ball::new(transform(&b.center), 2.5 * b.radius).unwrap())
                .collect(),
        )
        .unwrap();
        let qc1 = construct(&moved).unwrap();
        assert_eq!(qc0.per_step.len(), qc1.per_step.len());
        for (a, b) in qc0.per_step.iter().zip(&qc1.per_step) {
            assert!((a.k - b.k).abs() < 1e-9, "{} vs {}", a.k, b.k);
            assert!((a.alpha - b.alpha).abs() < 1e-9);
            assert!((a.phi0 - b.phi0).abs() < 1e-9);
        }
        assert!((qc0.k_bound - qc1.k_bound).abs() < 1e-9);
    }

    #[test]
    fn construct_rejects_invalid_chain() {
        let chain = chain2d(&[(0.0, 0.0, 1.0), (3.0, 0.0, 1.0)]);
        assert!(matches!(construct(&chain), Err(Error::ChainGeometry(_))));
    }

    #[test]
    fn three_ball_chain_in_3d() {
        let chain = BallChain::new(vec![
            ball(&[0.0, 0.0, 0.0], 1.0),
            ball(&[1.2, 0.1, 0.0], 1.0),
            ball(&[2.45, 0.0, 0.1], 0.6),
        ])
        .unwrap();
        let qc = construct(&chain).unwrap();
        assert!(qc.map.parity() > 0.0);
        let check = verify_construction(&chain, &qc, 8000, 2000, 5).unwrap();
        assert!(check.passes(), "{check:?}");
    }

    #[test]
    fn bent_chain_is_supported() {
        // Centers not collinear.
        let chain = chain2d(&[(0.0, 0.0, 1.0), (1.2, 0.6, 1.0), (1.2, 2.0, 0.7)]);
        assert!(validate_chain(&chain).is_none());
        let qc = construct(&chain).unwrap();
        let check = verify_construction(&chain, &qc, 10_000, 2000, 13).unwrap();
        assert!(check.passes(), "{check:?}");
    }
}
