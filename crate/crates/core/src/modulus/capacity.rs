//! Plane condenser capacity on a grid: clamp the inner plate at
//! potential 1 and the outer plate at 0, relax the five-point Laplacian
//! by SOR to a small residual, and return the discrete Dirichlet energy.
//! For round annuli this converges to the closed-form annulus modulus as
//! the grid is refined.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Inner plate of a condenser: a continuum held at potential 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InnerPlate {
    Ball { center: Vec<f64>, radius: f64 },
    Segment { a: Vec<f64>, b: Vec<f64> },
    /// Dense sample of a continuum; spacing must be below the grid step.
    Points { points: Vec<Vec<f64>> },
}

/// Outer plate: the boundary held at potential 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OuterPlate {
    Sphere { center: Vec<f64>, radius: f64 },
    ComplementOfBall { center: Vec<f64>, radius: f64 },
    /// Ordered closed polyline; consecutive samples are rasterized as
    /// segments, so gaps cannot leak.
    Curve { points: Vec<Vec<f64>> },
}

/// A condenser: inner continuum strictly inside the region bounded by
/// the outer plate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RingDomain {
    pub n: usize,
    pub inner: InnerPlate,
    pub outer: OuterPlate,
}

const FREE: u8 = 0;
const ONE: u8 = 1;
const ZERO: u8 = 2;

struct Grid {
    res: usize,
    x0: f64,
    y0: f64,
    h: f64,
    class: Vec<u8>,
}

impl Grid {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.res + i
    }

    fn node(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + i as f64 * self.h, self.y0 + j as f64 * self.h)
    }

    /// Mark the four corners of the cell containing `p`. A dense sample
    /// of a curve marked this way is watertight for the 5-point stencil
    /// (nearest-node marking can leak through diagonal gaps).
    fn mark_cell(&mut self, p: &[f64], class: u8) -> Result<()> {
        let fi = (p[0] - self.x0) / self.h;
        let fj = (p[1] - self.y0) / self.h;
        if fi < 0.0 || fj < 0.0 || fi > (self.res - 1) as f64 || fj > (self.res - 1) as f64 {
            return Err(Error::OutOfRange("plate point outside the grid box".into()));
        }
        let i0 = fi.floor() as usize;
        let j0 = fj.floor() as usize;
        for di in 0..2usize {
            for dj in 0..2usize {
                let (i, j) = ((i0 + di).min(self.res - 1), (j0 + dj).min(self.res - 1));
                let id = self.idx(i, j);
                self.class[id] = class;
            }
        }
        Ok(())
    }

    fn mark_segment(&mut self, a: &[f64], b: &[f64], class: u8) -> Result<()> {
        let len = linalg::dist(a, b);
        let steps = (len / (0.5 * self.h)).ceil() as usize + 1;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            self.mark_cell(&p, class)?;
        }
        Ok(())
    }
}

fn bounding_square(ring: &RingDomain) -> (f64, f64, f64) {
    match &ring.outer {
        OuterPlate::Sphere { center, radius } | OuterPlate::ComplementOfBall { center, radius } => {
            let half = radius * 1.02;
            (center[0] - half, center[1] - half, 2.0 * half)
        }
        OuterPlate::Curve { points } => {
            let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in points {
                xmin = xmin.min(p[0]);
                xmax = xmax.max(p[0]);
                ymin = ymin.min(p[1]);
                ymax = ymax.max(p[1]);
            }
            let side = (xmax - xmin).max(ymax - ymin) * 1.05;
            let cx = 0.5 * (xmin + xmax);
            let cy = 0.5 * (ymin + ymax);
            (cx - side / 2.0, cy - side / 2.0, side)
        }
    }
}

/// Capacity of a plane ring condenser on a `res` x `res` grid.
///
/// The relaxation runs to a maximum pointwise residual of 1e-10; a
/// rasterization where the plates touch is rejected.
pub fn capacity_2d(ring: &RingDomain, res: usize) -> Result<f64> {
    if ring.n != 2 {
        return Err(Error::OutOfRange(format!(
            "grid capacity is implemented for n = 2 only, got n = {}",
            ring.n
        )));
    }
    if res < 16 {
        return Err(Error::OutOfRange(format!("grid resolution {res} too small")));
    }
    let (x0, y0, side) = bounding_square(ring);
    let h = side / (res - 1) as f64;
    let mut grid = Grid {
        res,
        x0,
        y0,
        h,
        class: vec![FREE; res * res],
    };

    // Outer plate and box edges at potential zero. Midpoint convention:
    // a node belongs to a plate when it lies within h/2 of it, so the
    // effective Dirichlet boundary sits on the true circle on average.
    for j in 0..res {
        for i in 0..res {
            let (x, y) = grid.node(i, j);
            let on_border = i == 0 || j == 0 || i == res - 1 || j == res - 1;
            let outside = match &ring.outer {
                OuterPlate::Sphere { center, radius }
                | OuterPlate::ComplementOfBall { center, radius } => {
                    (x - center[0]).hypot(y - center[1]) >= *radius - 0.5 * h
                }
                OuterPlate::Curve { .. } => false,
            };
            if on_border || outside {
                let id = grid.idx(i, j);
                grid.class[id] = ZERO;
            }
        }
    }
    if let OuterPlate::Curve { points } = &ring.outer {
        if points.len() < 3 {
            return Err(Error::OutOfRange("outer curve needs >= 3 points".into()));
        }
        for k in 0..points.len() {
            let a = &points[k];
            let b = &points[(k + 1) % points.len()];
            grid.mark_segment(a, b, ZERO)?;
        }
    }

    // Inner plate at potential one; overlap with the outer plate is a
    // degenerate rasterization.
    let mark_one = |grid: &mut Grid, i: usize, j: usize| -> Result<()> {
        let id = grid.idx(i, j);
        if grid.class[id] == ZERO {
            return Err(Error::DegenerateRasterization);
        }
        grid.class[id] = ONE;
        Ok(())
    };
    match &ring.inner {
        InnerPlate::Ball { center, radius } => {
            for j in 0..res {
                for i in 0..res {
                    let (x, y) = grid.node(i, j);
                    if (x - center[0]).hypot(y - center[1]) <= radius + 0.5 * h {
                        mark_one(&mut grid, i, j)?;
                    }
                }
            }
        }
        InnerPlate::Segment { a, b } => {
            for j in 0..res {
                for i in 0..res {
                    let (x, y) = grid.node(i, j);
                    if segment_distance(&[x, y], a, b) <= 0.6 * h {
                        mark_one(&mut grid, i, j)?;
                    }
                }
            }
        }
        InnerPlate::Points { points } => {
            if points.is_empty() {
                return Err(Error::EmptySet);
            }
            for p in points {
                let fi = (p[0] - grid.x0) / grid.h;
                let fj = (p[1] - grid.y0) / grid.h;
                if fi < 0.0 || fj < 0.0 || fi > (res - 1) as f64 || fj > (res - 1) as f64 {
                    return Err(Error::OutOfRange(
                        "inner plate point outside the grid box".into(),
                    ));
                }
                let (i0, j0) = (fi.floor() as usize, fj.floor() as usize);
                for di in 0..2usize {
                    for dj in 0..2usize {
                        mark_one(&mut grid, (i0 + di).min(res - 1), (j0 + dj).min(res - 1))?;
                    }
                }
            }
        }
    }

    // Adjacent plates of opposite potential mean the gap was lost.
    for j in 0..res {
        for i in 0..res {
            if grid.class[grid.idx(i, j)] != ONE {
                continue;
            }
            let neighbors = [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ];
            for (ni, nj) in neighbors {
                if ni < res && nj < res && grid.class[grid.idx(ni, nj)] == ZERO {
                    return Err(Error::DegenerateRasterization);
                }
            }
        }
    }

    // SOR with the optimal square-domain factor.
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / res as f64).sin());
    let mut u = vec![0.0_f64; res * res];
    for (id, c) in grid.class.iter().enumerate() {
        if *c == ONE {
            u[id] = 1.0;
        }
    }
    let free: Vec<usize> = (0..res * res).filter(|&id| grid.class[id] == FREE).collect();
    if free.is_empty() {
        return Err(Error::DegenerateRasterization);
    }
    let max_sweeps = 40 * res.max(1000);
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut max_residual = 0.0_f64;
        for &id in &free {
            let avg = 0.25 * (u[id - 1] + u[id + 1] + u[id - res] + u[id + res]);
            let diff = avg - u[id];
            u[id] += omega * diff;
            max_residual = max_residual.max(diff.abs());
        }
        if max_residual < 1e-10 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric("relaxation did not reach residual 1e-10".into()));
    }

    // Discrete Dirichlet energy: in the plane the grid spacing cancels.
    let mut energy = 0.0;
    for j in 0..res {
        for i in 0..res {
            let id = grid.idx(i, j);
            if i + 1 < res {
                let d = u[id + 1] - u[id];
                energy += d * d;
            }
            if j + 1 < res {
                let d = u[id + res] - u[id];
                energy += d * d;
            }
        }
    }
    Ok(energy)
}

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = linalg::sub(b, a);
    let ap = linalg::sub(p, a);
    let denom = linalg::dot(&ab, &ab);
    let t = if denom > 0.0 {
        (linalg::dot(&ap, &ab) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    linalg::dist(p, &linalg::add(a, &linalg::scaled(&ab, t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::{annulus_modulus, grotzsch_bounds};
    use std::f64::consts::{E, PI, TAU};

    fn annulus_ring(a: f64, b: f64) -> RingDomain {
        RingDomain {
            n: 2,
            inner: InnerPlate::Ball {
                center: vec![0.0, 0.0],
                radius: a,
            },
            outer: OuterPlate::Sphere {
                center: vec![0.0, 0.0],
                radius: b,
            },
        }
    }

    #[test]
    fn round_annulus_matches_closed_form() {
        let got = capacity_2d(&annulus_ring(1.0, E), 256).unwrap();
        let want = annulus_modulus(1.0, E, 2).unwrap();
        assert!((got - want).abs() / want < 0.02, "got {got}, want {want}");

        let got = capacity_2d(&annulus_ring(1.0, E * E), 256).unwrap();
        assert!((got - PI).abs() / PI < 0.02, "got {got}, want {PI}");
    }

    #[test]
    fn refinement_converges() {
        let want = annulus_modulus(1.0, E, 2).unwrap();
        let coarse = capacity_2d(&annulus_ring(1.0, E), 128).unwrap();
        let fine = capacity_2d(&annulus_ring(1.0, E), 256).unwrap();
        assert!((fine - coarse).abs() / want < 0.01);
        assert!((fine - want).abs() <= (coarse - want).abs() + 0.01 * want);
    }

    #[test]
    fn degenerate_rasterization_rejected() {
        let ring = RingDomain {
            n: 2,
            inner: InnerPlate::Ball {
                center: vec![0.0, 0.0],
                radius: 0.999,
            },
            outer: OuterPlate::Sphere {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
        };
        assert!(matches!(
            capacity_2d(&ring, 64),
            Err(Error::DegenerateRasterization)
        ));
    }

    #[test]
    fn dimension_guard() {
        let mut ring = annulus_ring(1.0, 2.0);
        ring.n = 3;
        assert!(capacity_2d(&ring, 64).is_err());
    }

    #[test]
    fn complement_of_ball_outer_matches_sphere_outer() {
        let a = capacity_2d(&annulus_ring(1.0, 2.0), 128).unwrap();
        let ring = RingDomain {
            n: 2,
            inner: InnerPlate::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            outer: OuterPlate::ComplementOfBall {
                center: vec![0.0, 0.0],
                radius: 2.0,
            },
        };
        let b = capacity_2d(&ring, 128).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampled_curve_outer_matches_closed_form() {
        // The rasterized curve plate carries a one-cell thickness bias,
        // so the tolerance is looser than for analytic plates.
        let want = annulus_modulus(1.0, 2.0, 2).unwrap();
        let m = 1200;
        let points: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let phi = TAU * k as f64 / m as f64;
                vec![2.0 * phi.cos(), 2.0 * phi.sin()]
            })
            .collect();
        let ring = RingDomain {
            n: 2,
            inner: InnerPlate::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            outer: OuterPlate::Curve { points },
        };
        let got = capacity_2d(&ring, 256).unwrap();
        assert!((got - want).abs() / want < 0.025, "got {got}, want {want}");
    }

    #[test]
    fn inner_point_samples_match_closed_form() {
        let want = annulus_modulus(1.0, 2.0, 2).unwrap();
        let m = 1200;
        let points: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let phi = TAU * k as f64 / m as f64;
                vec![phi.cos(), phi.sin()]
            })
            .collect();
        let ring = RingDomain {
            n: 2,
            inner: InnerPlate::Points { points },
            outer: OuterPlate::Sphere {
                center: vec![0.0, 0.0],
                radius: 2.0,
            },
        };
        let got = capacity_2d(&ring, 256).unwrap();
        assert!((got - want).abs() / want < 0.03, "got {got}, want {want}");
    }

    #[test]
    fn grotzsch_ring_capacity_lands_in_bounds() {
        // Bounded realization of the Grötzsch ring: the ray inverts to
        // the segment [0, e1/s] inside the unit disk, with the disk
        // boundary as outer plate.
        let s = 3.0;
        let ring = RingDomain {
            n: 2,
            inner: InnerPlate::Segment {
                a: vec![0.0, 0.0],
                b: vec![1.0 / s, 0.0],
            },
            outer: OuterPlate::ComplementOfBall {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
        };
        let got = capacity_2d(&ring, 256).unwrap();
        let bounds = grotzsch_bounds(s, 2).unwrap();
        assert!(
            got > bounds.lower * 0.97 && got < bounds.upper * 1.03,
            "capacity {got} outside [{}, {}]",
            bounds.lower,
            bounds.upper
        );
    }
}
