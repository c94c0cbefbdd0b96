//! Finite Blaschke products on the unit disk, evaluated in real 2D
//! arithmetic, plus exact preimage enumeration through the associated
//! polynomial (Durand-Kerner roots). These are the closed test maps for
//! the inequality harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C2 = [f64; 2];

pub fn cadd(a: C2, b: C2) -> C2 {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn csub(a: C2, b: C2) -> C2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn cmul(a: C2, b: C2) -> C2 {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

pub fn cconj(a: C2) -> C2 {
    [a[0], -a[1]]
}

pub fn cabs(a: C2) -> f64 {
    a[0].hypot(a[1])
}

pub fn cdiv(a: C2, b: C2) -> C2 {
    let d = b[0] * b[0] + b[1] * b[1];
    [
        (a[0] * b[0] + a[1] * b[1]) / d,
        (a[1] * b[0] - a[0] * b[1]) / d,
    ]
}

/// A finite Blaschke product with the unimodular constant fixed to 1:
/// b(z) = ∏ (z - a_i) / (1 - conj(a_i) z). Zeros repeat according to
/// multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeMap {
    pub zeros: Vec<C2>,
}

impl BlaschkeMap {
    pub fn new(zeros: Vec<C2>) -> Result<Self> {
        if zeros.is_empty() {
            return Err(Error::EmptySet);
        }
        for z in &zeros {
            if cabs(*z) >= 1.0 {
                return Err(Error::OutOfRange(format!(
                    "blaschke zero ({}, {}) must lie in the open disk",
                    z[0], z[1]
                )));
            }
        }
        Ok(BlaschkeMap { zeros })
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    /// Evaluate the product; maps the closed disk into itself with
    /// |b(z)| = 1 on the unit circle.
    pub fn eval(&self, z: C2) -> C2 {
        let mut acc = [1.0, 0.0];
        for a in &self.zeros {
            let num = csub(z, *a);
            let den = csub([1.0, 0.0], cmul(cconj(*a), z));
            acc = cmul(acc, cdiv(num, den));
        }
        acc
    }

    /// All preimages of `w` in the disk: roots of
    /// ∏(z - a_i) - w ∏(1 - conj(a_i) z), which has exactly `degree`
    /// roots, all inside the disk for |w| < 1.
    pub fn preimages(&self, w: C2) -> Result<Vec<C2>> {
        let num = poly_from_roots(&self.zeros);
        let recip: Vec<C2> = self.zeros.iter().map(|a| cconj(*a)).collect();
        // Q(z) = ∏ (1 - conj(a_i) z): expand from its roots' reciprocal form.
        let mut q = vec![[1.0, 0.0]];
        for r in &recip {
            // Multiply by (1 - r z).
            let mut next = vec![[0.0, 0.0]; q.len() + 1];
            for (i, c) in q.iter().enumerate() {
                next[i] = cadd(next[i], *c);
                next[i + 1] = csub(next[i + 1], cmul(*r, *c));
            }
            q = next;
        }
        let d = self.degree();
        let mut p: Vec<C2> = (0..=d)
            .map(|i| {
                let a = num.get(i).copied().unwrap_or([0.0, 0.0]);
                let b = q.get(i).copied().unwrap_or([0.0, 0.0]);
                csub(a, cmul(w, b))
            })
            .collect();
        let lead = p[d];
        if cabs(lead) < 1e-12 {
            return Err(Error::NonGenericTarget(
                "preimage polynomial degenerates".into(),
            ));
        }
        for c in &mut p {
            *c = cdiv(*c, lead);
        }
        Ok(durand_kerner(&p))
    }
}

/// Monic polynomial coefficients (low to high) from its roots.
pub fn poly_from_roots(roots: &[C2]) -> Vec<C2> {
    let mut p = vec![[1.0, 0.0]];
    for r in roots {
        let mut next = vec![[0.0, 0.0]; p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            next[i] = csub(next[i], cmul(*r, *c));
            next[i + 1] = cadd(next[i + 1], *c);
        }
        p = next;
    }
    p
}

pub fn poly_eval(coeffs: &[C2], z: C2) -> C2 {
    let mut acc = [0.0, 0.0];
    for c in coeffs.iter().rev() {
        acc = cadd(cmul(acc, z), *c);
    }
    acc
}

/// All roots of a monic polynomial (coefficients low to high, last = 1)
/// by Durand-Kerner iteration from a fixed spread of starting points.
pub fn durand_kerner(coeffs: &[C2]) -> Vec<C2> {
    let d = coeffs.len() - 1;
    let seed: C2 = [0.4, 0.9];
    let mut roots: Vec<C2> = (0..d)
        .map(|k| {
            let mut z = [1.0, 0.0];
            for _ in 0..=k {
                z = cmul(z, seed);
            }
            z
        })
        .collect();
    for _ in 0..200 {
        let mut max_step = 0.0_f64;
        for i in 0..d {
            let mut denom = [1.0, 0.0];
            for j in 0..d {
                if j != i {
                    denom = cmul(denom, csub(roots[i], roots[j]));
                }
            }
            let step = cdiv(poly_eval(coeffs, roots[i]), denom);
            roots[i] = csub(roots[i], step);
            max_step = max_step.max(cabs(step));
        }
        if max_step < 1e-13 {
            break;
        }
    }
    roots
}
