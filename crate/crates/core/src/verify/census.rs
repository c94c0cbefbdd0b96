//! Preimage counting by dense sampling plus derivative-free local
//! refinement. For the closed test maps the count with multiplicity is
//! constant over generic targets and equals the analytic degree.

use crate::error::{Error, Result};
use crate::geometry::ExtPoint;
use crate::linalg;
use crate::qcmaps::MapExpr;
use crate::sample::Sampler;
use crate::verify::blaschke::BlaschkeMap;

#[derive(Clone, Debug)]
pub struct CensusOptions {
    /// Number of dense samples of the domain.
    pub grid: usize,
    /// Residual target of the local refinement.
    pub refine_tol: f64,
    /// Preimages closer than this merge.
    pub dedupe_radius: f64,
    /// |det f'| below this flags a non-generic target.
    pub jacobian_threshold: f64,
    pub seed: u64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            grid: 20_000,
            refine_tol: 1e-10,
            dedupe_radius: 1e-4,
            jacobian_threshold: 1e-8,
            seed: 0x5EED,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Census {
    pub count: usize,
    pub preimages: Vec<Vec<f64>>,
}

/// Count preimages of `y` under a black-box map over a sampled domain.
pub fn census_fn(
    f: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
    domain: &Sampler,
    y: &[f64],
    opts: &CensusOptions,
) -> Result<Census> {
    let n = domain.dim();
    let residual = |p: &[f64]| -> Option<f64> { f(p).map(|v| linalg::dist(&v, y)) };

    // Dense scan for candidate basins.
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(opts.grid);
    for i in 0..opts.grid as u64 {
        let p = domain.point(opts.seed, i);
        if let Some(r) = residual(&p) {
            scored.push((r, p));
        }
    }
    if scored.is_empty() {
        return Err(Error::AllSamplesExcluded(opts.grid));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let spacing = 4.0 * opts.dedupe_radius;
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for (_, p) in scored.iter().take(4000) {
        if candidates.len() >= 48 {
            break;
        }
        if candidates.iter().all(|c| linalg::dist(c, p) > spacing.max(0.05)) {
            candidates.push(p.clone());
        }
    }

    // Pattern-search refinement: halve the step until the residual
    // target is met or the step underflows.
    let mut found: Vec<Vec<f64>> = Vec::new();
    for start in candidates {
        let mut p = start;
        let Some(mut fp) = residual(&p) else { continue };
        let mut step = 0.05;
        while step > 1e-13 && fp > opts.refine_tol {
            let mut improved = false;
            for axis in 0..n {
                for sign in [-1.0, 1.0] {
                    let mut q = p.clone();
                    q[axis] += sign * step;
                    if let Some(fq) = residual(&q) {
                        if fq < fp {
                            p = q;
                            fp = fq;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if fp <= 1e-8 {
            found.push(p);
        }
    }

    // Merge duplicates, keeping the best representative of each cluster.
    let mut preimages: Vec<Vec<f64>> = Vec::new();
    for p in found {
        if preimages.iter().all(|q| linalg::dist(q, &p) > opts.dedupe_radius) {
            preimages.push(p);
        }
    }
    if preimages.is_empty() {
        return Err(Error::NonGenericTarget(
            "no preimage found in the sampled domain".into(),
        ));
    }

    // Generic targets have nondegenerate derivatives at every preimage.
    let h = 1e-6;
    for p in &preimages {
        let mut jac = linalg::Matrix::zeros(n);
        for j in 0..n {
            let mut plus = p.clone();
            plus[j] += h;
            let mut minus = p.clone();
            minus[j] -= h;
            let (fp, fm) = match (f(&plus), f(&minus)) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::NonGenericTarget(
                        "preimage too close to the domain edge".into(),
                    ))
                }
            };
            for i in 0..n {
                jac.set(i, j, (fp[i] - fm[i]) / (2.0 * h));
            }
        }
        if jac.det().abs() < opts.jacobian_threshold {
            return Err(Error::NonGenericTarget(format!(
                "target within reach of a critical value (|J| = {:.3e})",
                jac.det().abs()
            )));
        }
    }

    Ok(Census {
        count: preimages.len(),
        preimages,
    })
}

/// Census of a map expression over a sampled domain.
pub fn multiplicity_census(
    e: &MapExpr,
    domain: &Sampler,
    y: &[f64],
    opts: &CensusOptions,
) -> Result<Census> {
    let f = |p: &[f64]| -> Option<Vec<f64>> {
        e.eval(&ExtPoint::finite(p.to_vec()))
            .ok()
            .and_then(|img| img.as_finite().map(|v| v.to_vec()))
    };
    census_fn(&f, domain, y, opts)
}

/// Census of a Blaschke product over the disk of the given radius.
pub fn multiplicity_census_blaschke(
    b: &BlaschkeMap,
    disk_radius: f64,
    y: [f64; 2],
    opts: &CensusOptions,
) -> Result<Census> {
    let f = |p: &[f64]| -> Option<Vec<f64>> {
        let w = b.eval([p[0], p[1]]);
        Some(vec![w[0], w[1]])
    };
    let domain = Sampler::Ball {
        center: vec![0.0, 0.0],
        radius: disk_radius,
    };
    census_fn(&f, &domain, &y, opts)
}
