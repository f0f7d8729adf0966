//! Composite tensor-product Gauss-Legendre quadrature over the unit
//! cell, with self-consistent refinement.
//!
//! The cell is split into `m` subcells per axis with `q` Gauss nodes per
//! subcell per axis; `m` doubles until two successive estimates agree to
//! the target tolerance. Node evaluation parallelizes over fixed chunks,
//! so results are bit-identical across thread counts.

use serde::{Deserialize, Serialize};

use crate::sum::deterministic_sum;
use crate::{Error, Result, Vector};

/// Quadrature parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss-Legendre order per subcell per axis, in `3..=10`.
    pub nodes_per_axis: usize,
    /// Starting subdivisions per axis.
    pub initial_subdivisions: usize,
    /// Refinement cap; exceeding it is an error.
    pub max_subdivisions: usize,
    /// Successive estimates must agree to this tolerance.
    pub tol: f64,
}

impl QuadratureSpec {
    /// Defaults: q = 5, m = 4 doubling to at most 1024, tolerance 1e-12
    /// in one and two dimensions and 1e-10 in three.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            nodes_per_axis: 5,
            initial_subdivisions: 4,
            max_subdivisions: 1024,
            tol: if dim <= 2 { 1e-12 } else { 1e-10 },
        }
    }

    fn validate(&self) -> Result<()> {
        if !(3..=10).contains(&self.nodes_per_axis) {
            return Err(Error::Config(format!(
                "quadrature order must be in 3..=10, got {}",
                self.nodes_per_axis
            )));
        }
        if self.initial_subdivisions == 0 || self.max_subdivisions < self.initial_subdivisions {
            return Err(Error::Config(
                "quadrature subdivisions must satisfy 1 <= initial <= max".into(),
            ));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::Config("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// What the refinement actually did.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureDiag {
    /// Subdivisions per axis of the accepted estimate.
    pub subdivisions: usize,
    /// Total nodes evaluated for the accepted estimate.
    pub nodes: usize,
    /// |accepted - previous| at acceptance.
    pub last_delta: f64,
}

/// Gauss-Legendre nodes and weights on [0, 1]; weights sum to 1.
pub fn gauss_legendre_unit(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q {
        // Standard initial guess, then Newton on P_q.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1, 1] -> [0, 1]; reverse so nodes ascend.
        nodes[q - 1 - i] = 0.5 * (x + 1.0);
        weights[q - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n` and its derivative at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// One composite level: `m` subcells per axis, nodes and weights flattened
/// per axis.
fn axis_rule(m: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre_unit(q);
    let mut nodes = Vec::with_capacity(m * q);
    let mut weights = Vec::with_capacity(m * q);
    let h = 1.0 / m as f64;
    for cell in 0..m {
        for k in 0..q {
            nodes.push((cell as f64 + gx[k]) * h);
            weights.push(gw[k] * h);
        }
    }
    (nodes, weights)
}

fn estimate<F>(dim: usize, m: usize, q: usize, f: &F) -> Result<f64>
where
    F: Fn(&Vector) -> Result<f64> + Sync,
{
    let (nodes, weights) = axis_rule(m, q);
    let len = nodes.len();
    let total = len.pow(dim as u32);
    deterministic_sum(total, |idx| {
        let mut rem = idx;
        let mut x = Vector::zeros();
        let mut w = 1.0;
        // Lexicographic decomposition, last axis fastest.
        for axis in (0..dim).rev() {
            let k = rem % len;
            rem /= len;
            x[axis] = nodes[k];
            w *= weights[k];
        }
        Ok(w * f(&x)?)
    })
}

/// Integrates `f` over the unit cell `[0,1)^dim`, refining until two
/// successive composite estimates agree to `spec.tol`.
pub fn integrate_unit_cell<F>(
    dim: usize,
    spec: &QuadratureSpec,
    f: F,
) -> Result<(f64, QuadratureDiag)>
where
    F: Fn(&Vector) -> Result<f64> + Sync,
{
    spec.validate()?;
    let q = spec.nodes_per_axis;
    let mut m = spec.initial_subdivisions;
    let mut prev = estimate(dim, m, q, &f)?;
    while m * 2 <= spec.max_subdivisions {
        m *= 2;
        let next = estimate(dim, m, q, &f)?;
        let delta = (next - prev).abs();
        if delta < spec.tol {
            return Ok((
                next,
                QuadratureDiag {
                    subdivisions: m,
                    nodes: (m * q).pow(dim as u32),
                    last_delta: delta,
                },
            ));
        }
        prev = next;
    }
    Err(Error::QuadratureNotConverged {
        prev,
        last: prev,
        max_subdivisions: spec.max_subdivisions,
    })
}
