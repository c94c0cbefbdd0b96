//! Acceptance suite: one test per shipped criterion, each printing a
//! single pass/fail line (visible with `-- --nocapture`). Tolerances are
//! pinned here, not configurable.

use std::process::Command;
use std::time::Instant;

use qcball_core::dilatation::{sample_dilatation, DEFAULT_STEP};
use qcball_core::geometry::{Ball, Wedge};
use qcball_core::linalg;
use qcball_core::mobius::{canonical_t, map_ball_exact, MobiusGen, MobiusMap};
use qcball_core::modulus::{capacity_2d, comparison_constant, grotzsch_bounds, InnerPlate, OuterPlate, RingDomain};
use qcball_core::qcmaps::{Folding, MapExpr};
use qcball_core::quasiball::{construct, verify_construction, BallChain};
use qcball_core::sample::Sampler;
use qcball_core::verify::{run_suite, SuiteConfig};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::f64::consts::{E, PI, TAU};

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
}

fn unit_annulus() -> RingDomain {
    RingDomain {
        n: 2,
        inner: InnerPlate::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        },
        outer: OuterPlate::Sphere {
            center: vec![0.0, 0.0],
            radius: E,
        },
    }
}

#[test]
fn criterion_1_annulus_identity() {
    let start = Instant::now();
    let got = capacity_2d(&unit_annulus(), 512).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let want = 2.0 * PI;
    let rel = (got - want).abs() / want;
    report(
        "1 (annulus identity)",
        rel < 0.02 && elapsed < 30.0,
        &format!("capacity {got:.6} vs 2π, rel err {:.3}%, {elapsed:.1}s", rel * 100.0),
    );
}

#[test]
fn criterion_2_conformal_invariance() {
    // Möbius image of the annulus 1 < |z| < e under the inversion
    // centered at 3e1: both plates are again circles, computed exactly.
    let m = MobiusMap::new(
        2,
        vec![
            MobiusGen::Translation {
                offset: vec![-3.0, 0.0],
            },
            MobiusGen::Inversion,
        ],
    )
    .unwrap();
    let inner = map_ball_exact(&m, &Ball::new(vec![0.0, 0.0], 1.0).unwrap()).unwrap();
    let outer = map_ball_exact(&m, &Ball::new(vec![0.0, 0.0], E).unwrap()).unwrap();
    let image_ring = RingDomain {
        n: 2,
        inner: InnerPlate::Ball {
            center: inner.center,
            radius: inner.radius,
        },
        outer: OuterPlate::Sphere {
            center: outer.center,
            radius: outer.radius,
        },
    };
    let got = capacity_2d(&image_ring, 512).unwrap();
    let want = 2.0 * PI;
    let rel = (got - want).abs() / want;
    let source = capacity_2d(&unit_annulus(), 512).unwrap();
    let cross = (got - source).abs() / source;
    report(
        "2 (conformal invariance)",
        rel < 0.03 && cross < 0.03,
        &format!(
            "image capacity {got:.6}, rel err vs 2π {:.3}%, vs source grid {:.3}%",
            rel * 100.0,
            cross * 100.0
        ),
    );
}

#[test]
fn criterion_3_folding_dilatation() {
    let mut details = Vec::new();
    let mut ok = true;
    for n in [2usize, 3, 4] {
        let fold = MapExpr::Folding(Folding::standard(PI, 0.0, TAU, 0.0, n).unwrap());
        let sampler = Sampler::WedgeSector {
            wedge: Wedge::standard(0.0, PI, n).unwrap(),
            r_min: 0.2,
            r_max: 1.2,
            phi_margin: 1e-3,
            z_halfwidth: 0.8,
        };
        let rep = sample_dilatation(&fold, &sampler, 10_000, DEFAULT_STEP, 0x5EED).unwrap();
        let want_i = 2.0;
        let want_o = 2.0_f64.powi(n as i32 - 1);
        let err_i = (rep.k_i_max - want_i).abs() / want_i;
        let err_o = (rep.k_o_max - want_o).abs() / want_o;
        ok &= err_i < 0.02 && err_o < 0.02;
        details.push(format!(
            "n={n}: K_I {:.4} (want {want_i}), K_O {:.4} (want {want_o})",
            rep.k_i_max, rep.k_o_max
        ));
    }
    report("3 (folding dilatation)", ok, &details.join("; "));
}

#[test]
fn criterion_4_chain_constructions() {
    let start = Instant::now();
    let chains = [
        BallChain::new(vec![
            Ball::new(vec![0.0, 0.0], 1.0).unwrap(),
            Ball::new(vec![2.0_f64.sqrt(), 0.0], 1.0).unwrap(),
        ])
        .unwrap(),
        BallChain::new(vec![
            Ball::new(vec![0.0, 0.0], 1.0).unwrap(),
            Ball::new(vec![1.2, 0.0], 1.0).unwrap(),
            Ball::new(vec![2.45, 0.0], 0.6).unwrap(),
        ])
        .unwrap(),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (label, chain) in ["2-ball", "3-ball"].iter().zip(&chains) {
        let qc = construct(chain).unwrap();
        let check = verify_construction(chain, &qc, 100_000, 10_000, 0x5EED).unwrap();
        ok &= check.interior_contained >= 0.999
            && check.exterior_outside >= 0.999
            && check.dilatation.k_max <= qc.k_bound * 1.02;
        details.push(format!(
            "{label}: in {:.4}, out {:.4}, k_max {:.4} <= {:.4}",
            check.interior_contained,
            check.exterior_outside,
            check.dilatation.k_max,
            qc.k_bound * 1.02
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 60.0;
    details.push(format!("{elapsed:.1}s"));
    report("4 (chain end-to-end)", ok, &details.join("; "));
}

#[test]
fn criterion_5_mobius_distortion() {
    let mut rng = StdRng::seed_from_u64(0x5EED);
    let mut violations = 0usize;
    for &s in &[0.3_f64, 0.6, 0.9] {
        let lo = (1.0 - s * s) / (1.0 + s * s).powi(2);
        let hi = 1.0 / (1.0 - s * s);
        let sample = |rng: &mut StdRng| -> Vec<f64> {
            loop {
                let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if linalg::norm(&v) <= 1.0 {
                    return linalg::scaled(&v, s);
                }
            }
        };
        for _ in 0..10_000 {
            let a = sample(&mut rng);
            let x = sample(&mut rng);
            let y = sample(&mut rng);
            let t = canonical_t(&a).unwrap();
            let tx = t
                .evaluate(&qcball_core::geometry::ExtPoint::finite(x.clone()))
                .unwrap();
            let ty = t
                .evaluate(&qcball_core::geometry::ExtPoint::finite(y.clone()))
                .unwrap();
            let d = linalg::dist(&x, &y);
            let td = linalg::dist(tx.expect_finite().unwrap(), ty.expect_finite().unwrap());
            if td < lo * d - 1e-12 || td > hi * d + 1e-12 {
                violations += 1;
            }
        }
    }
    report(
        "5 (Möbius distortion)",
        violations == 0,
        &format!("{violations} violations over 30000 triples"),
    );
}

#[test]
fn criterion_6_inequality_suite() {
    let rep = run_suite(&SuiteConfig::default()).unwrap();
    let failing: Vec<&str> = rep
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    report(
        "6 (inequality suite)",
        rep.all_passed && rep.checks.len() == 39,
        &format!("{} checks, failing: {failing:?}", rep.checks.len()),
    );
}

#[test]
fn criterion_7_bounds_coherence() {
    let mut rng = StdRng::seed_from_u64(0x5EED);
    let mut ok = true;
    for _ in 0..1000 {
        let s = rng.gen_range(1.0001..200.0);
        let n = rng.gen_range(2..=8usize);
        let b = grotzsch_bounds(s, n).unwrap();
        ok &= b.lower <= b.upper && b.lower > 0.0;
    }
    let c = comparison_constant(2, 1.0 / E).unwrap();
    let want = 1.0 / (1.0 + 4.0_f64.ln());
    let exact = (c - want).abs() < 1e-12;
    report(
        "7 (bounds coherence)",
        ok && exact,
        &format!("1000 random (s, n) coherent; C(2, 1/e) = {c:.15} vs {want:.15}"),
    );
}

#[test]
fn criterion_8_determinism() {
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_qcball"))
            .args(["verify", "suite"])
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "suite run failed");
        out.stdout
    };
    let a = run();
    let b = run();
    report(
        "8 (determinism)",
        a == b && !a.is_empty(),
        &format!("two runs, {} bytes each, byte-identical: {}", a.len(), a == b),
    );
}
