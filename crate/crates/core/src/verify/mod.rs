//! Empirical verification harness: the two modulus inequalities on
//! concrete maps and condenser families, the preimage-size bound with
//! its explicit constant, and a deterministic check suite over closed
//! test maps.

mod blaschke;
mod census;

pub use blaschke::{BlaschkeMap, C2};
pub use census::{census_fn, multiplicity_census, multiplicity_census_blaschke, Census, CensusOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI, TAU};

use crate::dilatation;
use crate::error::{Error, Result};
use crate::geometry::ExtPoint;
use crate::mobius::{map_ball_exact, MobiusMap};
use crate::modulus::{
    annulus_modulus, capacity_2d, comparison_constant, lambda_bounds, InnerPlate, OuterPlate,
    RingDomain,
};
use crate::qcmaps::{Folding, MapExpr, Validity, Winding};
use crate::sample::{Sampler, DEFAULT_SEED};

/// A real quantity known either exactly or as an interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub fn point(v: f64) -> Self {
        Bound { lo: v, hi: v }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Bound { lo, hi }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Bound {
            lo: self.lo * s,
            hi: self.hi * s,
        }
    }
}

/// One verified inequality lhs <= rhs, compared against the unfavorable
/// interval endpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: Bound,
    pub rhs: Bound,
    /// rhs.lo - lhs.hi; positive margins indicate comfortable passes.
    pub margin: f64,
    pub tol: f64,
    pub passed: bool,
}

impl InequalityCheck {
    pub fn evaluate(name: impl Into<String>, lhs: Bound, rhs: Bound, tol: f64) -> Self {
        InequalityCheck {
            name: name.into(),
            lhs,
            rhs,
            margin: rhs.lo - lhs.hi,
            tol,
            passed: lhs.hi <= rhs.lo * (1.0 + tol),
        }
    }
}

/// A ring-condenser curve family: all curves joining the inner plate to
/// the outer plate.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurveFamily {
    /// Concentric circles about the origin.
    Annulus { a: f64, b: f64 },
    /// Concentric circles about an interior point of a wedge; used for
    /// maps only defined on the wedge.
    RingInWedge {
        center: [f64; 2],
        r_inner: f64,
        r_outer: f64,
    },
}

/// Tolerance when both sides of a modulus inequality carry grid error.
const MODULUS_CHECK_TOL: f64 = 0.05;
/// Circle plates are sampled this densely for the grid solver.
const PLATE_SAMPLES: usize = 4000;

fn circle_points(center: [f64; 2], r: f64, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let t = TAU * k as f64 / count as f64;
            vec![center[0] + r * t.cos(), center[1] + r * t.sin()]
        })
        .collect()
}

fn map_points(e: &MapExpr, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|p| {
            let img = e.eval(&ExtPoint::finite(p.clone()))?;
            Ok(img.expect_finite()?.to_vec())
        })
        .collect()
}

fn grid_modulus_from_samples(inner: Vec<Vec<f64>>, outer: Vec<Vec<f64>>, grid: usize) -> Result<f64> {
    capacity_2d(
        &RingDomain {
            n: 2,
            inner: InnerPlate::Points { points: inner },
            outer: OuterPlate::Curve { points: outer },
        },
        grid,
    )
}

/// Moduli of the family and of its image under the map. Closed forms are
/// used where the image family is again a round annulus; otherwise the
/// image plates are sampled and solved on the grid.
fn family_moduli(e: &MapExpr, family: &CurveFamily, grid: usize) -> Result<(Bound, Bound)> {
    match (family, e) {
        (CurveFamily::Annulus { a, b }, MapExpr::Affine(_)) => {
            let m = annulus_modulus(*a, *b, 2)?;
            Ok((Bound::point(m), Bound::point(m)))
        }
        (CurveFamily::Annulus { a, b }, MapExpr::Winding(w)) => {
            if w.plane != (0, 1) {
                return Err(Error::OutOfRange(
                    "winding plane must be the coordinate plane of the annulus".into(),
                ));
            }
            // A winding about the annulus center maps the annulus family
            // onto the annulus family.
            let m = annulus_modulus(*a, *b, 2)?;
            Ok((Bound::point(m), Bound::point(m)))
        }
        (CurveFamily::Annulus { a, b }, MapExpr::Mobius(m)) => {
            let src = annulus_modulus(*a, *b, 2)?;
            let inner = map_ball_exact(m, &crate::geometry::Ball::new(vec![0.0, 0.0], *a)?)?;
            let outer = map_ball_exact(m, &crate::geometry::Ball::new(vec![0.0, 0.0], *b)?)?;
            let img = capacity_2d(
                &RingDomain {
                    n: 2,
                    inner: InnerPlate::Ball {
                        center: inner.center,
                        radius: inner.radius,
                    },
                    outer: OuterPlate::Sphere {
                        center: outer.center,
                        radius: outer.radius,
                    },
                },
                grid,
            )?;
            Ok((Bound::point(src), Bound::point(img)))
        }
        (
            CurveFamily::RingInWedge {
                center,
                r_inner,
                r_outer,
            },
            MapExpr::Folding(f),
        ) => {
            if f.frame.dim() != 2 {
                return Err(Error::OutOfRange("wedge family is planar".into()));
            }
            // The ring must sit inside the source wedge.
            let wedge = crate::geometry::Wedge::new(f.gamma_src, f.alpha_src.min(TAU - 1e-12), f.frame.clone())?;
            let c = center.to_vec();
            if !wedge.contains(&c, 1e-9) {
                return Err(Error::OutOfRange("family center outside source wedge".into()));
            }
            let src_inner = circle_points(*center, *r_inner, PLATE_SAMPLES);
            let src_outer = circle_points(*center, *r_outer, PLATE_SAMPLES);
            let src = grid_modulus_from_samples(src_inner.clone(), src_outer.clone(), grid)?;
            let img_inner = map_points(e, &src_inner)?;
            let img_outer = map_points(e, &src_outer)?;
            let img = grid_modulus_from_samples(img_inner, img_outer, grid)?;
            Ok((Bound::point(src), Bound::point(img)))
        }
        _ => Err(Error::OutOfRange(
            "image family is not a computable condenser for this map".into(),
        )),
    }
}

fn inner_dilatation(e: &MapExpr, family: &CurveFamily) -> Result<f64> {
    let ad = e.analytic_dilatation(2);
    if ad.validity == Validity::Exact {
        return Ok(ad.k_i);
    }
    let sampler = family_sampler(family);
    let rep = dilatation::sample_dilatation(e, &sampler, 4000, dilatation::DEFAULT_STEP, DEFAULT_SEED)?;
    Ok(rep.k_i_max)
}

fn outer_dilatation(e: &MapExpr, family: &CurveFamily) -> Result<f64> {
    let ad = e.analytic_dilatation(2);
    if ad.validity == Validity::Exact {
        return Ok(ad.k_o);
    }
    let sampler = family_sampler(family);
    let rep = dilatation::sample_dilatation(e, &sampler, 4000, dilatation::DEFAULT_STEP, DEFAULT_SEED)?;
    Ok(rep.k_o_max)
}

fn family_sampler(family: &CurveFamily) -> Sampler {
    match family {
        CurveFamily::Annulus { a, b } => Sampler::Shell {
            center: vec![0.0, 0.0],
            r_min: *a,
            r_max: *b,
        },
        CurveFamily::RingInWedge {
            center,
            r_inner,
            r_outer,
        } => Sampler::Shell {
            center: center.to_vec(),
            r_min: *r_inner,
            r_max: *r_outer,
        },
    }
}

/// Check M(fΓ) <= K_I(f) · M(Γ) on a ring-condenser family.
pub fn check_poletskii(
    name: impl Into<String>,
    e: &MapExpr,
    family: &CurveFamily,
    grid: usize,
) -> Result<InequalityCheck> {
    let (src, img) = family_moduli(e, family, grid)?;
    let k_i = inner_dilatation(e, family)?;
    Ok(InequalityCheck::evaluate(
        name,
        img,
        src.scaled(k_i),
        MODULUS_CHECK_TOL,
    ))
}

/// Check M(Γ) <= K_O(f) · N · M(fΓ) on a ring-condenser family, with the
/// multiplicity bound N supplied analytically.
pub fn check_ko(
    name: impl Into<String>,
    e: &MapExpr,
    family: &CurveFamily,
    multiplicity: usize,
    grid: usize,
) -> Result<InequalityCheck> {
    let (src, img) = family_moduli(e, family, grid)?;
    let k_o = outer_dilatation(e, family)?;
    Ok(InequalityCheck::evaluate(
        name,
        src,
        img.scaled(k_o * multiplicity as f64),
        MODULUS_CHECK_TOL,
    ))
}

/// Lower bound h(d2) on the diameter of one preimage continuum in terms
/// of the other's, for a closed K-quasiregular map of multiplicity p on
/// the unit ball, both continua inside B(t).
///
/// Inverts the distortion chain
///   (2 λ_n (1-t²)/(1+t²)² |z1-z2|)^C >= |y1-y2| / (1-t²),
/// with C = (C(n,t) / (p K_I K_O))^{1/(n-1)} and d(A) <= 2|z1-z2|.
/// An equivalent assembly keeps λ_n outside the power,
/// |y| <= λ (2|z|)^C; the form above is used. Only K = max(K_I, K_O) is
/// taken as input, so K_I K_O is replaced by K², which weakens h and
/// keeps the bound valid. λ_n uses the conservative upper bracket end.
pub fn preimage_size_bound(d2: f64, n: usize, k: f64, p: usize, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::OutOfRange(format!("t = {t} must lie in (0, 1)")));
    }
    if !(k >= 1.0) {
        return Err(Error::OutOfRange(format!("K = {k} must be >= 1")));
    }
    if p < 1 {
        return Err(Error::OutOfRange("multiplicity must be >= 1".into()));
    }
    if !(d2 >= 0.0) {
        return Err(Error::OutOfRange(format!("diameter {d2} must be >= 0")));
    }
    let c_nt = comparison_constant(n, t)?;
    let exponent = (c_nt / (p as f64 * k * k)).powf(1.0 / (n as f64 - 1.0));
    let (_, lambda) = lambda_bounds(n)?;
    let one_minus = 1.0 - t * t;
    let prefactor = (1.0 + t * t).powi(2) / (2.0 * lambda * one_minus);
    Ok(prefactor * ((d2 / 2.0) / one_minus).powf(1.0 / exponent))
}

/// The same bound applied inside B(x, r): normalize diameters by r.
pub fn preimage_size_bound_in_ball(
    d2: f64,
    ball_radius: f64,
    n: usize,
    k: f64,
    p: usize,
    t: f64,
) -> Result<f64> {
    if !(ball_radius > 0.0) {
        return Err(Error::OutOfRange("ball radius must be positive".into()));
    }
    Ok(ball_radius * preimage_size_bound(d2 / ball_radius, n, k, p, t)?)
}

/// One empirical soundness trial: two disjoint preimage continua with a
/// common image, their diameters, and the claimed lower bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PreimageTrial {
    pub d1: f64,
    pub d2: f64,
    pub bound: f64,
}

/// Generate preimage-continuum pairs of a Blaschke map by tracking root
/// branches along short image paths, and evaluate the size bound on each
/// ordered pair. Trials keep both continua inside B(t) and away from the
/// branch set (|z| > 0.1 and branch separation > 4x the continuum size).
pub fn preimage_soundness_trials(
    map: &BlaschkeMap,
    t: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<PreimageTrial>> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let degree = map.degree();
    let p = degree;
    let steps = 9;
    let seg_len = 0.02;
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < 2 * trials && attempts < 40 * trials {
        attempts += 1;
        let r0 = rng.gen_range(0.12..(0.9 * t).max(0.13));
        let ang = rng.gen_range(0.0..TAU);
        let dir = rng.gen_range(0.0..TAU);
        let z0 = [r0 * ang.cos(), r0 * ang.sin()];
        let base: Vec<C2> = (0..steps)
            .map(|j| {
                let s = (j as f64 / (steps - 1) as f64 - 0.5) * seg_len;
                [z0[0] + s * dir.cos(), z0[1] + s * dir.sin()]
            })
            .collect();
        if base
            .iter()
            .any(|z| blaschke::cabs(*z) >= 0.98 * t || blaschke::cabs(*z) < 0.1)
        {
            continue;
        }
        // Track all root branches along the image path.
        let mut branches: Vec<Vec<C2>> = Vec::new();
        let mut ok = true;
        for (j, zeta) in base.iter().enumerate() {
            let w = map.eval(*zeta);
            let roots = match map.preimages(w) {
                Ok(r) => r,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            if j == 0 {
                let mut sorted = roots;
                sorted.sort_by(|a, b| (a[0], a[1]).partial_cmp(&(b[0], b[1])).unwrap());
                branches = sorted.into_iter().map(|r| vec![r]).collect();
            } else {
                // Greedy nearest-end assignment (degrees here are <= 3).
                let mut remaining = roots;
                for branch in branches.iter_mut() {
                    let last = *branch.last().unwrap();
                    let (idx, _) = remaining
                        .iter()
                        .enumerate()
                        .min_by(|(_, a), (_, b)| {
                            blaschke::cabs(blaschke::csub(**a, last))
                                .partial_cmp(&blaschke::cabs(blaschke::csub(**b, last)))
                                .unwrap()
                        })
                        .unwrap();
                    branch.push(remaining.swap_remove(idx));
                }
            }
        }
        if !ok || branches.len() != degree {
            continue;
        }
        let diam = |pts: &[C2]| -> f64 {
            let mut d = 0.0_f64;
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    d = d.max(blaschke::cabs(blaschke::csub(pts[i], pts[j])));
                }
            }
            d
        };
        let min_gap = |a: &[C2], b: &[C2]| -> f64 {
            let mut d = f64::INFINITY;
            for x in a {
                for y in b {
                    d = d.min(blaschke::cabs(blaschke::csub(*x, *y)));
                }
            }
            d
        };
        // The branch following the base segment, paired with another
        // branch that stays in B(t) and is cleanly separated.
        let main_idx = (0..branches.len())
            .min_by(|&i, &j| {
                blaschke::cabs(blaschke::csub(branches[i][0], base[0]))
                    .partial_cmp(&blaschke::cabs(blaschke::csub(branches[j][0], base[0])))
                    .unwrap()
            })
            .unwrap();
        let mut partner = None;
        let mut best_gap = 0.0;
        for i in 0..branches.len() {
            if i == main_idx {
                continue;
            }
            if branches[i].iter().any(|z| blaschke::cabs(*z) > t) {
                continue;
            }
            let gap = min_gap(&branches[main_idx], &branches[i]);
            if gap > 4.0 * seg_len && gap > best_gap {
                best_gap = gap;
                partner = Some(i);
            }
        }
        let Some(partner) = partner else { continue };
        let d_main = diam(&branches[main_idx]);
        let d_partner = diam(&branches[partner]);
        if d_main <= 0.0 || d_partner <= 0.0 {
            continue;
        }
        out.push(PreimageTrial {
            d1: d_main,
            d2: d_partner,
            bound: preimage_size_bound(d_partner, 2, 1.0, p, t)?,
        });
        out.push(PreimageTrial {
            d1: d_partner,
            d2: d_main,
            bound: preimage_size_bound(d_main, 2, 1.0, p, t)?,
        });
    }
    if out.len() < 2 * trials {
        return Err(Error::Numeric(format!(
            "only {} of {} preimage trials could be generated",
            out.len() / 2,
            trials
        )));
    }
    Ok(out)
}

fn preimage_check(name: String, map: &BlaschkeMap, t: f64, trials: usize, seed: u64) -> Result<InequalityCheck> {
    let runs = preimage_soundness_trials(map, t, trials, seed)?;
    // Ratio form: max over trials of bound / d1 must stay below 1.
    let worst = runs
        .iter()
        .map(|r| r.bound / r.d1)
        .fold(0.0_f64, f64::max);
    Ok(InequalityCheck::evaluate(
        name,
        Bound::point(worst),
        Bound::point(1.0),
        0.0,
    ))
}

/// Suite configuration; defaults reproduce the shipped report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub grid: usize,
    pub preimage_trials: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: DEFAULT_SEED,
            grid: 256,
            preimage_trials: 100,
        }
    }
}

/// Deterministic report of the default check suite, ordered by name.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub grid: usize,
    pub checks: Vec<InequalityCheck>,
    pub all_passed: bool,
}

enum CheckCase {
    ModulusPair {
        label: String,
        map: MapExpr,
        family: CurveFamily,
        multiplicity: usize,
    },
    Preimage {
        label: String,
        map: BlaschkeMap,
        t: f64,
    },
}

/// Run the default suite: the two modulus inequalities for the identity,
/// windings of degree 2 and 3, and a compressing/expanding folding pair,
/// each over three condenser sizes; plus preimage-size soundness for
/// three Blaschke maps at three confinement radii.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut cases: Vec<CheckCase> = Vec::new();

    let rings = [(1.0, E, "1:e"), (1.0, E * E, "1:e2"), (0.5, 2.0, "1:4")];
    let plane_maps: Vec<(String, MapExpr, usize)> = vec![
        ("identity".into(), MapExpr::identity(2), 1),
        (
            "winding2".into(),
            MapExpr::Winding(Winding::new(2, (0, 1))?),
            2,
        ),
        (
            "winding3".into(),
            MapExpr::Winding(Winding::new(3, (0, 1))?),
            3,
        ),
    ];
    for (a, b, ring_label) in rings {
        for (map_label, map, mult) in &plane_maps {
            cases.push(CheckCase::ModulusPair {
                label: format!("{map_label}/annulus({ring_label})"),
                map: map.clone(),
                family: CurveFamily::Annulus { a, b },
                multiplicity: *mult,
            });
        }
    }

    // Folding pair: compress 3π/2 → π and expand π → 3π/2, on ring
    // condensers inside the source wedge, with three modulus sizes.
    let fold_rings = [
        (0.20, 0.20 * E, "1:e"),
        (0.09, 0.09 * E * E, "1:e2"),
        (0.16, 0.64, "1:4"),
    ];
    let compress = Folding::standard(1.5 * PI, 0.0, PI, 0.0, 2)?;
    let expand = compress.inverse();
    for (label, fold, center_angle) in [
        ("fold(3pi2->pi)", compress, 0.75 * PI),
        ("fold(pi->3pi2)", expand, 0.5 * PI),
    ] {
        for (r_in, r_out, ring_label) in fold_rings {
            cases.push(CheckCase::ModulusPair {
                label: format!("{label}/ring({ring_label})"),
                map: MapExpr::Folding(fold.clone()),
                family: CurveFamily::RingInWedge {
                    center: [center_angle.cos(), center_angle.sin()],
                    r_inner: r_in,
                    r_outer: r_out,
                },
                multiplicity: 1,
            });
        }
    }

    // Preimage-size soundness for closed plane test maps.
    let blaschke_maps: Vec<(String, BlaschkeMap)> = vec![
        ("z2".into(), BlaschkeMap::new(vec![[0.0, 0.0]; 2])?),
        ("z3".into(), BlaschkeMap::new(vec![[0.0, 0.0]; 3])?),
        (
            "z2*b(0.5)".into(),
            BlaschkeMap::new(vec![[0.0, 0.0], [0.0, 0.0], [0.5, 0.0]])?,
        ),
    ];
    for (label, map) in &blaschke_maps {
        for t in [0.3, 0.5, 0.7] {
            cases.push(CheckCase::Preimage {
                label: format!("preimage/{label}/t={t}"),
                map: map.clone(),
                t,
            });
        }
    }

    let mut checks: Vec<InequalityCheck> = cases
        .par_iter()
        .map(|case| -> Result<Vec<InequalityCheck>> {
            match case {
                CheckCase::ModulusPair {
                    label,
                    map,
                    family,
                    multiplicity,
                } => {
                    let (src, img) = family_moduli(map, family, cfg.grid)?;
                    let k_i = inner_dilatation(map, family)?;
                    let k_o = outer_dilatation(map, family)?;
                    Ok(vec![
                        InequalityCheck::evaluate(
                            format!("poletskii/{label}"),
                            img,
                            src.scaled(k_i),
                            MODULUS_CHECK_TOL,
                        ),
                        InequalityCheck::evaluate(
                            format!("ko/{label}"),
                            src,
                            img.scaled(k_o * *multiplicity as f64),
                            MODULUS_CHECK_TOL,
                        ),
                    ])
                }
                CheckCase::Preimage { label, map, t } => Ok(vec![preimage_check(
                    label.clone(),
                    map,
                    *t,
                    cfg.preimage_trials,
                    cfg.seed,
                )?]),
            }
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        seed: cfg.seed,
        grid: cfg.grid,
        checks,
        all_passed,
    })
}

/// Wrapper keeping the Möbius image family available to callers.
pub fn mobius_family(m: MobiusMap) -> MapExpr {
    MapExpr::Mobius(m)
}
