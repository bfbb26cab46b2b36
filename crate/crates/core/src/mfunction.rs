//! Edge and whole-graph M-functions and the secular matrix `Q(λ) = M(λ) − diag(α)`.
//!
//! For an edge of length `ℓ`, endpoint weights `c_i`, `c_j` and constant
//! potential `q`, with `k = √(λ − q)`:
//!
//! ```text
//!          ⎡ −c_i² k cot(kℓ)     c_i c_j k / sin(kℓ) ⎤
//! M_e(λ) = ⎣ c_i c_j k / sin(kℓ)  −c_j² k cot(kℓ)    ⎦
//! ```
//!
//! Both entries are even in `k`, so real `λ < q` uses the hyperbolic form
//! and no branch of the square root is ever chosen for real arguments.

use std::fmt;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use thiserror::Error;

use crate::graph::{CouplingVector, EdgeData, MetricGraph};
use crate::linalg;

/// Below this value of `|k ℓ|` the Taylor expansions are used.
pub const SERIES_THRESHOLD: f64 = 1e-4;
/// Real `λ` closer than `GUARD · (π/ℓ)²` to a Dirichlet value is rejected.
pub const SINGULARITY_GUARD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("λ = {lambda} hits the Dirichlet value {dirichlet} (n = {n}) of edge {edge:?}")]
pub struct DirichletSingularity {
    pub lambda: f64,
    pub dirichlet: f64,
    pub n: u64,
    /// Offending edge as `(lo, hi)`; `None` for a bare edge evaluation.
    pub edge: Option<(usize, usize)>,
}

/// Which operator family a metric graph belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Laplacian with standard delta couplings (unit weights, no potential).
    Delta,
    /// Laplacian with weighted delta couplings.
    Weighted,
    /// Schrödinger operator with edge-wise constant potential.
    Schrodinger,
}

impl Family {
    pub fn classify(g: &MetricGraph) -> Family {
        if g.edge_data().iter().any(|d| d.q != 0.0) {
            Family::Schrodinger
        } else if g.edge_data().iter().any(|d| d.c_lo != 1.0 || d.c_hi != 1.0) {
            Family::Weighted
        } else {
            Family::Delta
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Delta => "delta",
            Family::Weighted => "weighted",
            Family::Schrodinger => "schrodinger",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "delta" => Ok(Family::Delta),
            "weighted" => Ok(Family::Weighted),
            "schrodinger" => Ok(Family::Schrodinger),
            other => Err(format!("unknown family `{other}` (expected delta, weighted or schrodinger)")),
        }
    }
}

/// `(k cot(kℓ), k / sin(kℓ))` for real `z = k²`.
fn kernel_pair(z: f64, length: f64) -> (f64, f64) {
    let t2 = z * length * length;
    if t2.abs() < SERIES_THRESHOLD * SERIES_THRESHOLD {
        let cot = 1.0 - t2 / 3.0 - t2 * t2 / 45.0 - 2.0 * t2 * t2 * t2 / 945.0;
        let csc = 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0 + 31.0 * t2 * t2 * t2 / 15120.0;
        return (cot / length, csc / length);
    }
    if z > 0.0 {
        let k = z.sqrt();
        let (s, c) = (k * length).sin_cos();
        (k * c / s, k / s)
    } else {
        let kappa = (-z).sqrt();
        let x = kappa * length;
        // sinh overflows to inf for large x, which correctly sends the coupling to 0.
        (kappa / x.tanh(), kappa / x.sinh())
    }
}

/// Complex counterpart of [`kernel_pair`].
fn kernel_pair_complex(z: Complex64, length: f64) -> (Complex64, Complex64) {
    let t2 = z * length * length;
    if t2.norm() < SERIES_THRESHOLD * SERIES_THRESHOLD {
        let cot = 1.0 - t2 / 3.0 - t2 * t2 / 45.0 - 2.0 * t2 * t2 * t2 / 945.0;
        let csc = 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0 + 31.0 * t2 * t2 * t2 / 15120.0;
        return (cot / length, csc / length);
    }
    let k = z.sqrt();
    let x = k * length;
    let (s, c) = (x.sin(), x.cos());
    (k * c / s, k / s)
}

fn check_dirichlet(lambda: f64, length: f64, q: f64) -> Result<(), DirichletSingularity> {
    let z = lambda - q;
    if z <= 0.0 {
        return Ok(());
    }
    let base = std::f64::consts::PI / length;
    let n = (z.sqrt() / base).round();
    if n >= 1.0 {
        let dirichlet = q + (base * n).powi(2);
        if (lambda - dirichlet).abs() <= SINGULARITY_GUARD * base * base {
            return Err(DirichletSingularity { lambda, dirichlet, n: n as u64, edge: None });
        }
    }
    Ok(())
}

/// 2×2 M-function of a single edge at real `λ`.
pub fn edge_m(lambda: f64, length: f64, c_i: f64, c_j: f64, q: f64) -> Result<Matrix2<f64>, DirichletSingularity> {
    check_dirichlet(lambda, length, q)?;
    let (kcot, kcsc) = kernel_pair(lambda - q, length);
    Ok(Matrix2::new(-c_i * c_i * kcot, c_i * c_j * kcsc, c_i * c_j * kcsc, -c_j * c_j * kcot))
}

/// 2×2 M-function of a single edge at complex `λ`.
pub fn edge_m_complex(lambda: Complex64, length: f64, c_i: f64, c_j: f64, q: f64) -> Matrix2<Complex64> {
    let (kcot, kcsc) = kernel_pair_complex(lambda - q, length);
    Matrix2::new(-c_i * c_i * kcot, c_i * c_j * kcsc, c_i * c_j * kcsc, -c_j * c_j * kcot)
}

fn edge_m_data(lambda: f64, d: &EdgeData) -> Result<Matrix2<f64>, DirichletSingularity> {
    edge_m(lambda, d.length, d.c_lo, d.c_hi, d.q)
}

/// Whole-graph M-function at real `λ`.
pub fn assemble_m(g: &MetricGraph, lambda: f64) -> Result<DMatrix<f64>, DirichletSingularity> {
    let n = g.vertex_count();
    let mut m = DMatrix::zeros(n, n);
    for ((i, j), d) in g.edges() {
        let e = edge_m_data(lambda, d).map_err(|err| DirichletSingularity { edge: Some((i, j)), ..err })?;
        m[(i, i)] += e[(0, 0)];
        m[(j, j)] += e[(1, 1)];
        m[(i, j)] = e[(0, 1)];
        m[(j, i)] = e[(1, 0)];
    }
    Ok(m)
}

/// Whole-graph M-function at complex `λ` (used for Herglotz checks).
pub fn assemble_m_complex(g: &MetricGraph, lambda: Complex64) -> DMatrix<Complex64> {
    let n = g.vertex_count();
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for ((i, j), d) in g.edges() {
        let e = edge_m_complex(lambda, d.length, d.c_lo, d.c_hi, d.q);
        m[(i, i)] += e[(0, 0)];
        m[(j, j)] += e[(1, 1)];
        m[(i, j)] = e[(0, 1)];
        m[(j, i)] = e[(1, 0)];
    }
    m
}

/// `Q(λ) = M(λ) − diag(α)` without the eigendecomposition.
pub fn secular_matrix(
    g: &MetricGraph,
    alpha: &CouplingVector,
    lambda: f64,
) -> Result<DMatrix<f64>, DirichletSingularity> {
    let mut m = assemble_m(g, lambda)?;
    for v in 0..g.vertex_count() {
        m[(v, v)] -= alpha[v];
    }
    Ok(m)
}

/// Secular matrix at one real `λ` with its symmetric eigendecomposition.
#[derive(Debug, Clone)]
pub struct SecularSample {
    pub lambda: f64,
    pub family: Family,
    pub q_matrix: DMatrix<f64>,
    /// Eigenvalues `ξ_1 ≥ … ≥ ξ_M`.
    pub eigenvalues: Vec<f64>,
    /// Eigenvector columns aligned with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

pub fn secular_q(g: &MetricGraph, alpha: &CouplingVector, lambda: f64) -> Result<SecularSample, DirichletSingularity> {
    let q_matrix = secular_matrix(g, alpha, lambda)?;
    let (eigenvalues, eigenvectors) = linalg::eigen_descending(&q_matrix);
    Ok(SecularSample { lambda, family: Family::classify(g), q_matrix, eigenvalues, eigenvectors })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Singularity {
    pub lambda: f64,
    /// Generating `(edge (lo, hi), n)` pairs; more than one when values coincide.
    pub sources: Vec<((usize, usize), u64)>,
}

impl Singularity {
    pub fn multiplicity(&self) -> usize {
        self.sources.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SingularitySet {
    pub points: Vec<Singularity>,
}

impl SingularitySet {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|s| s.lambda).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Dirichlet values `q + (πn/ℓ)²` in the open window `(lo, hi)`, sorted and
/// merged when within `1e-12` relative.
pub fn singularities(g: &MetricGraph, lo: f64, hi: f64) -> SingularitySet {
    let mut raw: Vec<(f64, (usize, usize), u64)> = Vec::new();
    for ((i, j), d) in g.edges() {
        let base = std::f64::consts::PI / d.length;
        let mut n: u64 = 1;
        if lo > d.q {
            n = n.max(((lo - d.q).sqrt() / base).floor() as u64);
        }
        loop {
            let value = d.q + (base * n as f64).powi(2);
            if value >= hi {
                break;
            }
            if value > lo {
                raw.push((value, (i, j), n));
            }
            n += 1;
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut points: Vec<Singularity> = Vec::new();
    for (value, edge, n) in raw {
        match points.last_mut() {
            Some(last) if (value - last.lambda).abs() <= 1e-12 * value.abs().max(1.0) => {
                last.sources.push((edge, n));
            }
            _ => points.push(Singularity { lambda: value, sources: vec![(edge, n)] }),
        }
    }
    SingularitySet { points }
}

/// Smallest Dirichlet value `min (q_ij + (π/ℓ_ij)²)`; `+∞` for a graph without edges.
pub fn first_singularity(g: &MetricGraph) -> f64 {
    g.edge_data().iter().map(|d| d.q + (std::f64::consts::PI / d.length).powi(2)).fold(f64::INFINITY, f64::min)
}
