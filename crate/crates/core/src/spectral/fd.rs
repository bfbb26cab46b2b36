//! Finite-difference discretization of `−d²/dx² + q` with (weighted) delta
//! vertex conditions, used as an independent check on the secular-matrix route.
//!
//! Each edge carries a uniform grid with step `h_e ≤ h`. Interior rows are the
//! three-point stencil; a vertex row is the flux balance `Σ c_e ∂u_e = α u_w`
//! with the one-sided derivative corrected to second order through the ODE.
//! Scaled by the cell widths, this is a symmetric pencil `K u = λ B u` with
//! diagonal positive `B`.
//!
//! Eigenvalues are counted by Sylvester inertia of `K − λB`: the tridiagonal
//! edge chains are factored in `O(n)` and eliminated onto the `M × M` vertex
//! block.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{CouplingVector, MetricGraph};
use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdError {
    #[error("grid step {h} exceeds a tenth of the shortest edge ({min_length})")]
    StepTooLarge { h: f64, min_length: f64 },
    #[error("discretization needs {points} grid points, cap is {cap}")]
    TooManyPoints { points: usize, cap: usize },
    #[error("could not bracket the lowest {count} eigenvalues")]
    NoBracket { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub max_points: usize,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions { max_points: 20_000_000 }
    }
}

struct Chain {
    lo: usize,
    hi: usize,
    c_lo: f64,
    c_hi: f64,
    h: f64,
    q: f64,
    interior: usize,
}

struct Discretization {
    chains: Vec<Chain>,
    /// Vertex block of `K` and of `B`.
    vertex_k: DMatrix<f64>,
    vertex_b: Vec<f64>,
}

impl Discretization {
    fn new(g: &MetricGraph, alpha: &CouplingVector, h: f64) -> Self {
        let n = g.vertex_count();
        let mut vertex_k = DMatrix::zeros(n, n);
        let mut vertex_b = vec![0.0; n];
        let mut chains = Vec::with_capacity(g.edge_count());
        for v in 0..n {
            vertex_k[(v, v)] += alpha[v];
        }
        for ((i, j), d) in g.edges() {
            let cells = ((d.length / h).ceil() as usize).max(2);
            let he = d.length / cells as f64;
            for (v, c) in [(i, d.c_lo), (j, d.c_hi)] {
                vertex_k[(v, v)] += c * c / he + 0.5 * he * c * c * d.q;
                vertex_b[v] += 0.5 * he * c * c;
            }
            chains.push(Chain { lo: i, hi: j, c_lo: d.c_lo, c_hi: d.c_hi, h: he, q: d.q, interior: cells - 1 });
        }
        Discretization { chains, vertex_k, vertex_b }
    }

    fn points(&self) -> usize {
        self.vertex_b.len() + self.chains.iter().map(|c| c.interior).sum::<usize>()
    }

    /// Number of eigenvalues of the pencil strictly below `lambda`.
    fn count_below(&self, lambda: f64) -> usize {
        let mut negatives = 0;
        let mut schur = self.vertex_k.clone();
        for v in 0..self.vertex_b.len() {
            schur[(v, v)] -= lambda * self.vertex_b[v];
        }
        let mut pivots = Vec::new();
        for c in &self.chains {
            let diag = 2.0 / c.h + c.h * (c.q - lambda);
            let off = -1.0 / c.h;
            let n = c.interior;
            pivots.clear();
            let mut d = diag;
            for k in 0..n {
                if k > 0 {
                    d = diag - off * off / pivots[k - 1];
                }
                if d == 0.0 {
                    d = f64::EPSILON * diag.abs().max(1.0);
                }
                pivots.push(d);
            }
            negatives += pivots.iter().filter(|&&p| p < 0.0).count();

            // first column of T⁻¹: forward with unit lower factor, then back-substitute
            let mut y = vec![0.0; n];
            y[0] = 1.0;
            for k in 1..n {
                y[k] = -(off / pivots[k - 1]) * y[k - 1];
            }
            let mut x = vec![0.0; n];
            x[n - 1] = y[n - 1] / pivots[n - 1];
            for k in (0..n - 1).rev() {
                x[k] = y[k] / pivots[k] - (off / pivots[k]) * x[k + 1];
            }
            let t11 = x[0];
            let tn1 = x[n - 1];
            let tnn = 1.0 / pivots[n - 1];

            let r_lo = -c.c_lo / c.h;
            let r_hi = -c.c_hi / c.h;
            schur[(c.lo, c.lo)] -= r_lo * r_lo * t11;
            schur[(c.hi, c.hi)] -= r_hi * r_hi * tnn;
            schur[(c.lo, c.hi)] -= r_lo * r_hi * tn1;
            schur[(c.hi, c.lo)] -= r_lo * r_hi * tn1;
        }
        negatives + linalg::eigenvalues_descending(&schur).iter().filter(|&&x| x < 0.0).count()
    }
}

/// Lowest `count` eigenvalues of the finite-difference operator with grid
/// step at most `h`.
pub fn fd_oracle(
    g: &MetricGraph,
    alpha: &CouplingVector,
    h: f64,
    count: usize,
    options: FdOptions,
) -> Result<Vec<f64>, FdError> {
    let min_length = g.min_length();
    if !(h > 0.0) || h > min_length / 10.0 * (1.0 + 1e-12) {
        return Err(FdError::StepTooLarge { h, min_length });
    }
    let disc = Discretization::new(g, alpha, h);
    let points = disc.points();
    if points > options.max_points {
        return Err(FdError::TooManyPoints { points, cap: options.max_points });
    }
    if count == 0 {
        return Ok(Vec::new());
    }

    let mut lo = -1.0;
    while disc.count_below(lo) > 0 {
        lo *= 10.0;
        if lo < -1e300 {
            return Err(FdError::NoBracket { count });
        }
    }
    let mut hi = 1.0;
    while disc.count_below(hi) < count {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(FdError::NoBracket { count });
        }
    }

    let mut out = Vec::with_capacity(count);
    for target in 1..=count {
        // smallest λ with more than target − 1 eigenvalues strictly below it
        let (mut a, mut b) = (lo, hi);
        while b - a > 1e-13 * b.abs().max(1.0) {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if disc.count_below(mid) >= target {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
        lo = a;
    }
    Ok(out)
}
