//! Realization of a Colin de Verdière matrix `A` as a metric-graph operator
//! whose secular matrix satisfies `−Q(λ₂) = s·A` at its second eigenvalue.
//!
//! * delta: free lengths, `a_ij = −√λ₂ / sin(√λ₂ ℓ_ij)`, couplings fix the diagonal;
//! * weighted: unit lengths, `λ₂ = (π/2)²`, so `M_ij = c_ij² π/2` and `M_jj = 0`;
//! * schrodinger: unit lengths, `λ₂ = 0`, `y/sin y = s|a_ij|` with `q_ij = −y²`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::cdv::{self, CdvError, CDV_TOL};
use crate::graph::{CouplingVector, DiscreteGraph, EdgeSpec, GraphError, MetricGraph};
use crate::linalg;
use crate::mfunction::{self, DirichletSingularity, Family};
use crate::spectral::{self, SpectralError, SpectralPoint};

/// Relative max-norm residual accepted for `−Q(λ₂) = s·A`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Headroom above 1 for the smallest scaled off-diagonal magnitude in the
/// Schrödinger family.
pub const SCHRODINGER_HEADROOM: f64 = 1.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealizeError {
    #[error(transparent)]
    Cdv(#[from] CdvError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Singular(#[from] DirichletSingularity),
    #[error("matrix does not match the sign pattern of the graph")]
    Pattern,
    #[error("matrix has {0} negative eigenvalues, exactly one is required")]
    Inertia(usize),
    #[error("graph has no edges")]
    NoEdges,
    #[error("λ₂ = {0} must be positive")]
    NonPositiveLambda2(f64),
    #[error("√λ₂ = {sqrt} must be below min |a_ij| = {limit}")]
    Lambda2TooLarge { sqrt: f64, limit: f64 },
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub family: Family,
    pub graph: MetricGraph,
    pub alpha: CouplingVector,
    pub lambda2: f64,
    /// Positive factor applied to `A` before realizing it.
    pub scale: f64,
}

impl Realization {
    /// `−Q(λ₂)`.
    pub fn realized_matrix(&self) -> Result<DMatrix<f64>, DirichletSingularity> {
        Ok(-mfunction::secular_matrix(&self.graph, &self.alpha, self.lambda2)?)
    }
}

fn check_candidate(a: &DMatrix<f64>, g: &DiscreteGraph) -> Result<(), RealizeError> {
    let c = cdv::validate_cdv(a, g, CDV_TOL)?;
    if !c.symmetric || !c.pattern_ok {
        return Err(RealizeError::Pattern);
    }
    if !c.inertia_ok() {
        return Err(RealizeError::Inertia(c.negative_eigenvalue_count));
    }
    if g.edge_count() == 0 {
        return Err(RealizeError::NoEdges);
    }
    Ok(())
}

fn min_off_diagonal(a: &DMatrix<f64>, g: &DiscreteGraph) -> f64 {
    g.edges().iter().map(|&(i, j)| a[(i, j)].abs()).fold(f64::INFINITY, f64::min)
}

/// Couplings that make the diagonal of `−Q(λ₂)` equal to `s·a_jj`.
fn diagonal_couplings(
    graph: &MetricGraph,
    a: &DMatrix<f64>,
    scale: f64,
    lambda2: f64,
) -> Result<CouplingVector, RealizeError> {
    let m = mfunction::assemble_m(graph, lambda2)?;
    let n = graph.vertex_count();
    Ok(CouplingVector::new((0..n).map(|j| m[(j, j)] + scale * a[(j, j)]).collect(), n)?)
}

/// Standard delta couplings with free edge lengths. Default `λ₂ = (min|a_ij|/2)²`;
/// each length is the smaller root of `sin(√λ₂ ℓ) = √λ₂ / |a_ij|`.
pub fn realize_delta(a: &DMatrix<f64>, g: &DiscreteGraph, lambda2: Option<f64>) -> Result<Realization, RealizeError> {
    check_candidate(a, g)?;
    let limit = min_off_diagonal(a, g);
    let lambda2 = lambda2.unwrap_or((0.5 * limit).powi(2));
    if !(lambda2 > 0.0) {
        return Err(RealizeError::NonPositiveLambda2(lambda2));
    }
    let root = lambda2.sqrt();
    if root >= limit {
        return Err(RealizeError::Lambda2TooLarge { sqrt: root, limit });
    }
    let specs = g
        .edges()
        .iter()
        .map(|&(i, j)| {
            let length = (root / a[(i, j)].abs()).asin() / root;
            EdgeSpec::unit(i, j).with_length(length)
        })
        .collect();
    let graph = MetricGraph::new(g.vertex_count(), specs)?;
    if graph.max_length() >= PI / root {
        return Err(RealizeError::Internal("edge length reached the first Dirichlet value".into()));
    }
    let alpha = diagonal_couplings(&graph, a, 1.0, lambda2)?;
    Ok(Realization { family: Family::Delta, graph, alpha, lambda2, scale: 1.0 })
}

/// Equilateral graph with weighted delta couplings at `λ₂ = (π/2)²`:
/// `c_ij = c_ji = √(2|a_ij|/π)`, `α_j = a_jj`.
pub fn realize_weighted(a: &DMatrix<f64>, g: &DiscreteGraph) -> Result<Realization, RealizeError> {
    check_candidate(a, g)?;
    let specs = g
        .edges()
        .iter()
        .map(|&(i, j)| {
            let c = (a[(i, j)].abs() / FRAC_PI_2).sqrt();
            EdgeSpec { c_i: c, c_j: c, ..EdgeSpec::unit(i, j) }
        })
        .collect();
    let graph = MetricGraph::new(g.vertex_count(), specs)?;
    let lambda2 = FRAC_PI_2 * FRAC_PI_2;
    let alpha = diagonal_couplings(&graph, a, 1.0, lambda2)?;
    Ok(Realization { family: Family::Weighted, graph, alpha, lambda2, scale: 1.0 })
}

/// Root of `y / sin y = target` on `(0, π)` for `target > 1`.
pub fn solve_y_over_sin(target: f64) -> Result<f64, RealizeError> {
    if !(target > 1.0) || !target.is_finite() {
        return Err(RealizeError::Internal(format!("y/sin y = {target} has no root in (0, π)")));
    }
    let f = |y: f64| if y == 0.0 { 1.0 - target } else { y / y.sin() - target };
    let (mut lo, mut hi) = (0.0, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Equilateral Schrödinger operator with standard delta couplings at `λ₂ = 0`.
/// `A` is scaled by `s = max(1, 1.01 / min|a_ij|)` so every `s|a_ij| > 1`.
pub fn realize_schrodinger(a: &DMatrix<f64>, g: &DiscreteGraph) -> Result<Realization, RealizeError> {
    check_candidate(a, g)?;
    let scale = f64::max(1.0, SCHRODINGER_HEADROOM / min_off_diagonal(a, g));
    let mut specs = Vec::with_capacity(g.edge_count());
    for &(i, j) in g.edges() {
        let y = solve_y_over_sin(scale * a[(i, j)].abs())?;
        specs.push(EdgeSpec { q: -y * y, ..EdgeSpec::unit(i, j) });
    }
    let graph = MetricGraph::new(g.vertex_count(), specs)?;
    let alpha = diagonal_couplings(&graph, a, scale, 0.0)?;
    Ok(Realization { family: Family::Schrodinger, graph, alpha, lambda2: 0.0, scale })
}

pub fn realize(a: &DMatrix<f64>, g: &DiscreteGraph, family: Family) -> Result<Realization, RealizeError> {
    match family {
        Family::Delta => realize_delta(a, g, None),
        Family::Weighted => realize_weighted(a, g),
        Family::Schrodinger => realize_schrodinger(a, g),
    }
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub family: Family,
    pub lambda2: f64,
    pub scale: f64,
    /// `‖−Q(λ₂) − s·A‖_∞ / ‖s·A‖_∞` (max-norm over entries).
    pub residual: f64,
    pub first_singularity: f64,
    pub admissible: bool,
    /// Second eigenvalue found independently by the counting function.
    pub second: Result<SpectralPoint, SpectralError>,
    pub expected_multiplicity: usize,
    /// `n(λ₂ − ε)` and `n(λ₂ + ε)`.
    pub counts_around: Option<(usize, usize)>,
    pub sap_realized: Option<bool>,
    pub sap_source: Option<bool>,
}

impl VerificationReport {
    pub fn residual_ok(&self) -> bool {
        self.residual <= RESIDUAL_TOL
    }

    pub fn lambda2_ok(&self) -> bool {
        self.second.as_ref().is_ok_and(|p| (p.lambda - self.lambda2).abs() <= 1e-8 * (1.0 + self.lambda2.abs()))
    }

    pub fn multiplicity_ok(&self) -> bool {
        self.second.as_ref().is_ok_and(|p| p.multiplicity == self.expected_multiplicity)
    }

    pub fn counting_ok(&self) -> bool {
        self.counts_around == Some((1, 1 + self.expected_multiplicity))
    }

    pub fn sap_agree(&self) -> bool {
        self.sap_realized.is_some() && self.sap_realized == self.sap_source
    }

    pub fn ok(&self) -> bool {
        self.residual_ok()
            && self.admissible
            && self.lambda2_ok()
            && self.multiplicity_ok()
            && self.counting_ok()
            && self.sap_agree()
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "MISMATCH"
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family: {}", self.family)?;
        writeln!(f, "lambda2: {} (scale {})", self.lambda2, self.scale)?;
        writeln!(f, "residual: {:e} [{}]", self.residual, mark(self.residual_ok()))?;
        writeln!(
            f,
            "first singularity: {} [{}]",
            self.first_singularity,
            if self.admissible { "admissible" } else { "NOT admissible" }
        )?;
        match &self.second {
            Ok(p) => writeln!(
                f,
                "second eigenvalue: {} multiplicity {} (dim ker A = {}) [{}]",
                p.lambda,
                p.multiplicity,
                self.expected_multiplicity,
                mark(self.lambda2_ok() && self.multiplicity_ok())
            )?,
            Err(e) => writeln!(f, "second eigenvalue: error: {e} [MISMATCH]")?,
        }
        match self.counts_around {
            Some((below, above)) => {
                writeln!(f, "counting around lambda2: {below} / {above} [{}]", mark(self.counting_ok()))?
            }
            None => writeln!(f, "counting around lambda2: unavailable [MISMATCH]")?,
        }
        let sap = |s: Option<bool>| match s {
            Some(true) => "holds",
            Some(false) => "fails",
            None => "n/a",
        };
        writeln!(
            f,
            "SAP: realized {}, source {} [{}]",
            sap(self.sap_realized),
            sap(self.sap_source),
            mark(self.sap_agree())
        )?;
        write!(f, "verdict: {}", if self.ok() { "ok" } else { "FAILED" })
    }
}

/// Independent round-trip checks of a realization against its source matrix.
pub fn verify_realization(r: &Realization, a: &DMatrix<f64>) -> VerificationReport {
    let g = &r.graph;
    let target = a * r.scale;
    let residual = match r.realized_matrix() {
        Ok(q) if q.shape() == target.shape() => {
            linalg::max_abs(&(q - &target)) / linalg::max_abs(&target).max(f64::MIN_POSITIVE)
        }
        _ => f64::INFINITY,
    };
    let first_singularity = mfunction::first_singularity(g);
    let admissible = r.lambda2 < spectral::valid_upper_bound(g);
    let second = spectral::second_eigenvalue(g, &r.alpha);
    let expected_multiplicity = cdv::kernel_dim(a, CDV_TOL);
    let eps = 1e-6 * (1.0 + r.lambda2.abs());
    let counts_around =
        match (spectral::counting(g, &r.alpha, r.lambda2 - eps), spectral::counting(g, &r.alpha, r.lambda2 + eps)) {
            (Ok(lo), Ok(hi)) => Some((lo, hi)),
            _ => None,
        };
    let sap_realized = r.realized_matrix().ok().and_then(|q| cdv::sap_check(&q, g.base()).ok()).map(|s| s.holds);
    let sap_source = cdv::sap_check(a, g.base()).ok().map(|s| s.holds);
    VerificationReport {
        family: r.family,
        lambda2: r.lambda2,
        scale: r.scale,
        residual,
        first_singularity,
        admissible,
        second,
        expected_multiplicity,
        counts_around,
        sap_realized,
        sap_source,
    }
}
