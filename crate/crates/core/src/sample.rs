//! Deterministic point sources for sampling-based estimates. Every
//! sampler produces its i-th point from a per-index seed, so parallel
//! and serial consumers see identical streams.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::{from_cylindrical, Ball, CylCoords, Wedge};
use crate::linalg;

/// Default run seed.
pub const DEFAULT_SEED: u64 = 0x5EED;

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    // SplitMix64 avalanche so consecutive indices decorrelate.
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let m = linalg::norm(&v);
        if m > 1e-12 {
            return linalg::scaled(&v, 1.0 / m);
        }
    }
}

/// Uniform point in the ball of the given center and radius.
pub fn point_in_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    let dir = unit_vector(rng, n);
    let u: f64 = rng.gen_range(0.0..1.0);
    let r = radius * u.powf(1.0 / n as f64);
    linalg::add(center, &linalg::scaled(&dir, r))
}

/// Uniform point on the boundary sphere.
pub fn point_on_sphere(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    let dir = unit_vector(rng, center.len());
    linalg::add(center, &linalg::scaled(&dir, radius))
}

/// Deterministic quasi-uniform boundary sampling of a sphere: uniform
/// angle grid in the plane, Fibonacci points on the 2-sphere, seeded
/// uniform directions in higher dimensions.
pub fn sphere_grid(center: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    let n = center.len();
    match n {
        2 => (0..count)
            .map(|i| {
                let phi = std::f64::consts::TAU * i as f64 / count as f64;
                vec![center[0] + radius * phi.cos(), center[1] + radius * phi.sin()]
            })
            .collect(),
        3 => {
            let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
            (0..count)
                .map(|i| {
                    let t = (i as f64 + 0.5) / count as f64;
                    let z = 1.0 - 2.0 * t;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = std::f64::consts::TAU * (i as f64 / golden).fract();
                    vec![
                        center[0] + radius * r * phi.cos(),
                        center[1] + radius * r * phi.sin(),
                        center[2] + radius * z,
                    ]
                })
                .collect()
        }
        _ => {
            let mut rng = rng_for(0xB0D7, 0);
            (0..count)
                .map(|_| point_on_sphere(&mut rng, center, radius))
                .collect()
        }
    }
}

/// A reproducible point source over a region of R^n.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Sampler {
    /// Uniform in a ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Uniform direction with radius uniform in [r_min, r_max].
    Shell {
        center: Vec<f64>,
        r_min: f64,
        r_max: f64,
    },
    /// Cylindrical sampling inside a wedge, away from its edges.
    WedgeSector {
        wedge: Wedge,
        r_min: f64,
        r_max: f64,
        phi_margin: f64,
        z_halfwidth: f64,
    },
    /// Uniform-ish over a union of balls (ball chosen round-robin).
    BallUnion { balls: Vec<Ball> },
}

impl Sampler {
    pub fn dim(&self) -> usize {
        match self {
            Sampler::Ball { center, .. } | Sampler::Shell { center, .. } => center.len(),
            Sampler::WedgeSector { wedge, .. } => wedge.dim(),
            Sampler::BallUnion { balls } => balls[0].dim(),
        }
    }

    /// The i-th sample of the stream identified by `seed`.
    pub fn point(&self, seed: u64, index: u64) -> Vec<f64> {
        let mut rng = rng_for(seed, index);
        match self {
            Sampler::Ball { center, radius } => point_in_ball(&mut rng, center, *radius),
            Sampler::Shell { center, r_min, r_max } => {
                let dir = unit_vector(&mut rng, center.len());
                let r = rng.gen_range(*r_min..*r_max);
                linalg::add(center, &linalg::scaled(&dir, r))
            }
            Sampler::WedgeSector {
                wedge,
                r_min,
                r_max,
                phi_margin,
                z_halfwidth,
            } => {
                let n = wedge.dim();
                let r = rng.gen_range(*r_min..*r_max);
                let phi = wedge.gamma + rng.gen_range(*phi_margin..wedge.alpha - *phi_margin);
                let z: Vec<f64> = (0..n - 2)
                    .map(|_| rng.gen_range(-*z_halfwidth..*z_halfwidth))
                    .collect();
                let local = from_cylindrical(&CylCoords {
                    r,
                    phi: crate::geometry::normalize_angle(phi),
                    z,
                });
                wedge.to_world(&local)
            }
            Sampler::BallUnion { balls } => {
                let b = &balls[(index as usize) % balls.len()];
                point_in_ball(&mut rng, &b.center, b.radius)
            }
        }
    }
}
