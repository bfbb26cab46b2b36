//! Colin de Verdière matrix checks: sign pattern, inertia, kernel dimension
//! and the Strong Arnold Property (SAP).
//!
//! SAP asks that no nonzero symmetric `X` with zero diagonal and zeros on
//! adjacent pairs satisfies `A·X = 0`. Such `X` live in the span of
//! `E_pq + E_qp` over non-adjacent pairs `p < q`, so SAP is the injectivity of
//! a linear map from that span into `M × M` matrices and is decided by its
//! smallest singular value.

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::DiscreteGraph;
use crate::linalg;

/// Shared relative tolerance for rank decisions.
pub const CDV_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CdvError {
    #[error("matrix is {rows}×{cols}, graph has {vertices} vertices")]
    Shape { rows: usize, cols: usize, vertices: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("entry ({}, {}) = {value} breaks the zero pattern of non-adjacent vertices", .i + 1, .j + 1)]
    PatternViolation { i: usize, j: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SapReport {
    pub holds: bool,
    /// Nonzero `X` in the complement pattern with `A·X ≈ 0` (Frobenius norm 1) when SAP fails.
    pub witness: Option<DMatrix<f64>>,
    /// Number of non-adjacent unordered pairs.
    pub perp_dimension: usize,
    /// Smallest singular value of the map divided by the largest.
    pub relative_gap: f64,
}

fn check_shape(a: &DMatrix<f64>, g: &DiscreteGraph) -> Result<(), CdvError> {
    let n = g.vertex_count();
    if a.nrows() != n || a.ncols() != n {
        return Err(CdvError::Shape { rows: a.nrows(), cols: a.ncols(), vertices: n });
    }
    Ok(())
}

/// Decides SAP for `a`, which must vanish on non-adjacent off-diagonal pairs.
pub fn sap_check(a: &DMatrix<f64>, g: &DiscreteGraph) -> Result<SapReport, CdvError> {
    check_shape(a, g)?;
    if !linalg::is_symmetric(a, 1e-12) {
        return Err(CdvError::NotSymmetric);
    }
    let pairs = g.non_adjacent_pairs();
    for &(p, q) in &pairs {
        for (i, j) in [(p, q), (q, p)] {
            if a[(i, j)] != 0.0 {
                return Err(CdvError::PatternViolation { i, j, value: a[(i, j)] });
            }
        }
    }
    let d = pairs.len();
    if d == 0 {
        return Ok(SapReport { holds: true, witness: None, perp_dimension: 0, relative_gap: 1.0 });
    }

    let n = g.vertex_count();
    // column k is vec(A·(E_pq + E_qp)) = vec of A[:,p] placed in column q and A[:,q] in column p
    let mut map = DMatrix::zeros(n * n, d);
    for (k, &(p, q)) in pairs.iter().enumerate() {
        for r in 0..n {
            map[(r + q * n, k)] = a[(r, p)];
            map[(r + p * n, k)] = a[(r, q)];
        }
    }
    let svd = map.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (mut smallest, mut largest) = (0, 0);
    for k in 0..svd.singular_values.len() {
        if svd.singular_values[k] < svd.singular_values[smallest] {
            smallest = k;
        }
        if svd.singular_values[k] > svd.singular_values[largest] {
            largest = k;
        }
    }
    let s_max = svd.singular_values[largest];
    let s_min = svd.singular_values[smallest];
    let relative_gap = if s_max > 0.0 { s_min / s_max } else { 0.0 };
    let holds = relative_gap > CDV_TOL;

    let witness = (!holds).then(|| {
        let mut x = DMatrix::zeros(n, n);
        for (k, &(p, q)) in pairs.iter().enumerate() {
            let c = v_t[(smallest, k)];
            x[(p, q)] = c;
            x[(q, p)] = c;
        }
        let norm = x.norm();
        x / norm
    });
    Ok(SapReport { holds, witness, perp_dimension: d, relative_gap })
}

/// Number of singular values at or below `tol` times the largest.
pub fn kernel_dim(a: &DMatrix<f64>, tol: f64) -> usize {
    linalg::nullity(a, tol)
}

/// Validation record of a candidate Colin de Verdière matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CdvCandidate {
    pub matrix: DMatrix<f64>,
    pub graph: DiscreteGraph,
    pub symmetric: bool,
    pub pattern_ok: bool,
    pub pattern_violations: Vec<(usize, usize)>,
    pub negative_eigenvalue_count: usize,
    pub kernel_dimension: usize,
    pub sap: Option<SapReport>,
}

impl CdvCandidate {
    pub fn inertia_ok(&self) -> bool {
        self.negative_eigenvalue_count == 1
    }

    /// `dim ker A` when every condition holds.
    pub fn mu(&self) -> Option<usize> {
        let sap = self.sap.as_ref().is_some_and(|s| s.holds);
        (self.symmetric && self.pattern_ok && self.inertia_ok() && sap).then_some(self.kernel_dimension)
    }
}

impl fmt::Display for CdvCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "symmetric: {}", self.symmetric)?;
        writeln!(f, "pattern: {}", if self.pattern_ok { "ok" } else { "violated" })?;
        for (i, j) in &self.pattern_violations {
            writeln!(f, "  bad entry ({}, {})", i + 1, j + 1)?;
        }
        writeln!(f, "negative eigenvalues: {}", self.negative_eigenvalue_count)?;
        writeln!(f, "kernel dimension: {}", self.kernel_dimension)?;
        match &self.sap {
            Some(s) => writeln!(f, "SAP: {}", if s.holds { "holds" } else { "fails" })?,
            None => writeln!(f, "SAP: not checked")?,
        }
        match self.mu() {
            Some(mu) => write!(f, "mu candidate: {mu}"),
            None => write!(f, "mu candidate: none"),
        }
    }
}

/// Checks pattern, inertia (exactly one eigenvalue below `−tol·max|ξ|`),
/// kernel dimension and SAP. Failures are recorded, never returned as errors,
/// except for a shape mismatch.
pub fn validate_cdv(a: &DMatrix<f64>, g: &DiscreteGraph, tol: f64) -> Result<CdvCandidate, CdvError> {
    check_shape(a, g)?;
    let n = g.vertex_count();
    let symmetric = linalg::is_symmetric(a, 1e-12);
    let entry_ok = |i: usize, j: usize| if g.adjacent(i, j) { a[(i, j)] < 0.0 } else { a[(i, j)] == 0.0 };
    let pattern_violations: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !entry_ok(i, j) || !entry_ok(j, i))
        .collect();
    let pattern_ok = pattern_violations.is_empty();
    let sym = (a + a.transpose()) * 0.5;
    let eigenvalues = linalg::eigenvalues_descending(&sym);
    let scale = eigenvalues.iter().fold(0.0, |m, x| f64::max(m, x.abs()));
    let negative_eigenvalue_count = eigenvalues.iter().filter(|&&x| x < -tol * scale).count();
    let kernel_dimension = kernel_dim(&sym, tol);
    let sap = if symmetric && pattern_ok { Some(sap_check(a, g)?) } else { None };
    Ok(CdvCandidate {
        matrix: a.clone(),
        graph: g.clone(),
        symmetric,
        pattern_ok,
        pattern_violations,
        negative_eigenvalue_count,
        kernel_dimension,
        sap,
    })
}

/// Topological reading of a Colin de Verdière number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MuInterpretation {
    pub mu: usize,
    pub path: bool,
    pub outerplanar: bool,
    pub planar: bool,
    pub linkless: bool,
}

pub fn interpret_mu(mu: usize) -> MuInterpretation {
    MuInterpretation { mu, path: mu == 1, outerplanar: mu <= 2, planar: mu <= 3, linkless: mu <= 4 }
}

impl fmt::Display for MuInterpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "mu = {}: path {}, outerplanar {}, planar {}, linklessly embeddable {}",
            self.mu, self.path, self.outerplanar, self.planar, self.linkless
        )
    }
}

/// Reference candidates for the catalog graphs: `−adjacency + θ₂·I`, with
/// `θ₂` the second largest adjacency eigenvalue. Exactly one negative
/// eigenvalue, kernel of dimension equal to the multiplicity of `θ₂`.
pub fn shifted_adjacency(g: &DiscreteGraph) -> DMatrix<f64> {
    let adj = g.adjacency_matrix();
    let theta = linalg::eigenvalues_descending(&adj);
    let shift = theta.get(1).copied().unwrap_or(0.0);
    -adj + DMatrix::identity(g.vertex_count(), g.vertex_count()) * shift
}
