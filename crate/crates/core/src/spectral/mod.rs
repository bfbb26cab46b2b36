//! Eigenvalues below the first M-function singularity.
//!
//! Every eigenvalue curve `ξ_j(λ)` of `Q(λ)` is nondecreasing between
//! singularities and tends to `−∞` as `λ → −∞`, so below the first singularity
//! the number of nonnegative eigenvalues of `Q(λ)` counts the operator
//! eigenvalues `≤ λ`. Eigenvalues are located by bisecting on that count.

mod edge_function;
pub mod fd;

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{CouplingVector, MetricGraph};
use crate::linalg;
use crate::mfunction::{self, first_singularity, DirichletSingularity, SINGULARITY_GUARD};

pub use edge_function::{eigenfunction_values, EdgeFunction};
pub use fd::{fd_oracle, FdError, FdOptions};

/// Relative singular-value threshold for kernel detection.
pub const KERNEL_TOL: f64 = 1e-8;
/// Absolute bisection resolution in `λ`.
pub const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("λ = {lambda} is not strictly below the first singularity {first}")]
    AboveFirstSingularity { lambda: f64, first: f64 },
    #[error("second eigenvalue is not strictly below the first singularity {first} (count below it: {count})")]
    BorderOrBeyondSingularity { first: f64, count: usize },
    #[error("invalid window: lo = {lo}, hi = {hi}")]
    BadWindow { lo: f64, hi: f64 },
    #[error("no λ with empty count found above {lo}")]
    NoLowerBound { lo: f64 },
    #[error("vector is not in the kernel of Q(λ) (relative residual {residual:e})")]
    NotInKernel { residual: f64 },
    #[error("kernel vector has {got} entries, graph has {expected} vertices")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Singular(#[from] DirichletSingularity),
}

/// An operator eigenvalue with its multiplicity and an orthonormal basis of
/// the kernel of `Q(λ)`.
#[derive(Debug, Clone)]
pub struct SpectralPoint {
    pub lambda: f64,
    pub multiplicity: usize,
    pub kernel_basis: Vec<DVector<f64>>,
}

impl SpectralPoint {
    /// Kernel basis as the columns of an `M × multiplicity` matrix.
    pub fn kernel_matrix(&self) -> DMatrix<f64> {
        let rows = self.kernel_basis.first().map_or(0, |v| v.len());
        let mut k = DMatrix::zeros(rows, self.kernel_basis.len());
        for (c, v) in self.kernel_basis.iter().enumerate() {
            k.set_column(c, v);
        }
        k
    }
}

/// Relative distance (in units of the largest `(π/ℓ)²`) below the first
/// singularity inside which an eigenvalue is treated as the border case.
/// Curves that reach zero exactly at a singularity are indistinguishable from
/// rounding noise closer than this.
pub const BORDER_MARGIN: f64 = 1e-7;

fn widest_scale(g: &MetricGraph) -> f64 {
    g.edge_data().iter().map(|d| (std::f64::consts::PI / d.length).powi(2)).fold(0.0, f64::max)
}

/// Largest `λ` accepted as "strictly below" the first singularity, keeping clear
/// of the Dirichlet guard band of every edge.
pub fn valid_upper_bound(g: &MetricGraph) -> f64 {
    first_singularity(g) - 4.0 * SINGULARITY_GUARD * widest_scale(g)
}

fn check_below(g: &MetricGraph, lambda: f64) -> Result<(), SpectralError> {
    if lambda > valid_upper_bound(g) || lambda.is_nan() {
        return Err(SpectralError::AboveFirstSingularity { lambda, first: first_singularity(g) });
    }
    Ok(())
}

/// Number of eigenvalues of `Q(λ)` that are `≥ 0`; equals the number of
/// operator eigenvalues `≤ λ`.
pub fn counting(g: &MetricGraph, alpha: &CouplingVector, lambda: f64) -> Result<usize, SpectralError> {
    check_below(g, lambda)?;
    let q = mfunction::secular_matrix(g, alpha, lambda)?;
    Ok(linalg::eigenvalues_descending(&q).iter().filter(|&&x| x >= 0.0).count())
}

/// A `λ` with `n(λ) = 0`, starting from a bound built from the vertex weight
/// sums, couplings and potentials and pushed further down if needed.
pub fn scan_lower_bound(g: &MetricGraph, alpha: &CouplingVector) -> Result<f64, SpectralError> {
    let weight_sum = (0..g.vertex_count())
        .map(|v| g.base().neighbors(v).iter().map(|&m| g.weight(v, m).unwrap_or(0.0).powi(2)).sum::<f64>())
        .fold(0.0, f64::max);
    let max_q = g.edge_data().iter().fold(0.0, |m, d| f64::max(m, d.q.abs()));
    let mut lo = -10.0 * weight_sum * weight_sum - alpha.max_abs() - max_q;
    for _ in 0..40 {
        if lo < valid_upper_bound(g) && counting(g, alpha, lo)? == 0 {
            return Ok(lo);
        }
        lo = 10.0 * lo - 1.0;
    }
    Err(SpectralError::NoLowerBound { lo })
}

/// Smallest `λ` in `(lo, hi]` with `n(λ) ≥ target`, as a bracket `(a, b)` with
/// `n(a) < target ≤ n(b)` and `b − a ≤ tol`.
fn bracket_threshold(
    g: &MetricGraph,
    alpha: &CouplingVector,
    mut lo: f64,
    mut hi: f64,
    target: usize,
    tol: f64,
) -> Result<(f64, f64), SpectralError> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if counting(g, alpha, mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// The `multiplicity` eigenvectors of `Q(λ)` whose eigenvalues are closest to zero.
fn nearest_kernel(
    g: &MetricGraph,
    alpha: &CouplingVector,
    lambda: f64,
    multiplicity: usize,
) -> Result<Vec<DVector<f64>>, SpectralError> {
    let q = mfunction::secular_matrix(g, alpha, lambda)?;
    let (values, vectors) = linalg::eigen_descending(&q);
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()));
    order.truncate(multiplicity);
    order.sort_unstable();
    Ok(linalg::column_vectors(&vectors, order))
}

/// All eigenvalues in `(lo, hi]`, each resolved to `|Δλ| ≤ tol`, with
/// multiplicity equal to the jump of the counting function.
pub fn locate_eigenvalues(
    g: &MetricGraph,
    alpha: &CouplingVector,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Vec<SpectralPoint>, SpectralError> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(SpectralError::BadWindow { lo, hi });
    }
    check_below(g, hi)?;
    let n_hi = counting(g, alpha, hi)?;
    let mut a = lo;
    let mut n_a = counting(g, alpha, lo)?;
    let mut points = Vec::new();
    while n_a < n_hi {
        let (l, b) = bracket_threshold(g, alpha, a, hi, n_a + 1, tol)?;
        let n_b = counting(g, alpha, b)?;
        let lambda = 0.5 * (l + b);
        let multiplicity = n_b - n_a;
        let kernel_basis = nearest_kernel(g, alpha, lambda, multiplicity)?;
        points.push(SpectralPoint { lambda, multiplicity, kernel_basis });
        a = b;
        n_a = n_b;
    }
    Ok(points)
}

/// The ground state: the first jump of the counting function.
pub fn ground_state(g: &MetricGraph, alpha: &CouplingVector) -> Result<SpectralPoint, SpectralError> {
    nth_jump(g, alpha, 1)
}

/// Second operator eigenvalue `λ₂`, reported with the full multiplicity of its
/// location. Fails when `λ₂` does not lie strictly below the first singularity.
pub fn second_eigenvalue(g: &MetricGraph, alpha: &CouplingVector) -> Result<SpectralPoint, SpectralError> {
    nth_jump(g, alpha, 2)
}

/// Upper end of the window searched for eigenvalues, [`BORDER_MARGIN`] below
/// the first singularity.
pub fn resolvable_upper_bound(g: &MetricGraph) -> f64 {
    first_singularity(g) - BORDER_MARGIN * widest_scale(g)
}

fn nth_jump(g: &MetricGraph, alpha: &CouplingVector, target: usize) -> Result<SpectralPoint, SpectralError> {
    let hi = resolvable_upper_bound(g);
    let n_hi = counting(g, alpha, hi)?;
    if n_hi < target {
        return Err(SpectralError::BorderOrBeyondSingularity { first: first_singularity(g), count: n_hi });
    }
    let lo = scan_lower_bound(g, alpha)?;
    let (a, b) = bracket_threshold(g, alpha, lo, hi, target, BISECTION_TOL)?;
    let n_b = counting(g, alpha, b)?;
    let lambda = 0.5 * (a + b);
    // a simple ground state merged into the bracket is not part of λ₂
    let multiplicity = n_b - (target - 1);
    let kernel_basis = nearest_kernel(g, alpha, lambda, multiplicity)?;
    Ok(SpectralPoint { lambda, multiplicity, kernel_basis })
}

/// Kernel dimension of `Q(λ)`: eigenvalues with `|ξ| ≤ tol · max |ξ|`, and
/// the corresponding orthonormal eigenvectors.
pub fn multiplicity(
    g: &MetricGraph,
    alpha: &CouplingVector,
    lambda: f64,
    tol: f64,
) -> Result<(usize, Vec<DVector<f64>>), SpectralError> {
    check_below(g, lambda)?;
    let q = mfunction::secular_matrix(g, alpha, lambda)?;
    let (values, vectors) = linalg::eigen_descending(&q);
    let largest = values.iter().fold(0.0, |m, x| f64::max(m, x.abs()));
    let cols: Vec<usize> = (0..values.len()).filter(|&k| values[k].abs() <= tol * largest).collect();
    Ok((cols.len(), linalg::column_vectors(&vectors, cols)))
}

/// Vertices `v` such that some nonzero combination of the kernel vectors
/// vanishes on `v` and all its neighbours (the star subgraph of `v`).
///
/// Below the first singularity a solution vanishing at both ends of an edge
/// vanishes on the whole edge, so this is vanishing on the metric star.
pub fn vanishing_stars(g: &MetricGraph, point: &SpectralPoint) -> BTreeSet<usize> {
    let kernel = point.kernel_matrix();
    let m = kernel.ncols();
    let mut out = BTreeSet::new();
    if m == 0 {
        return out;
    }
    for v in 0..g.vertex_count() {
        let rows: Vec<usize> = std::iter::once(v).chain(g.base().neighbors(v).iter().copied()).collect();
        let sub = kernel.select_rows(rows.iter());
        let rank = linalg::singular_values(&sub).iter().filter(|&&s| s > KERNEL_TOL).count();
        if rank < m {
            out.insert(v);
        }
    }
    out
}

/// Sorted eigenvalue curves of `Q(λ)` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCurveTable {
    pub grid: Vec<f64>,
    /// For each grid point, `ξ_1 ≥ … ≥ ξ_M`.
    pub values: Vec<Vec<f64>>,
    /// Grid points dropped because they sit on or next to a singularity.
    pub skipped: Vec<f64>,
}

/// Distance below which a grid point counts as sitting on a singularity.
pub const CURVE_SKIP_DISTANCE: f64 = 1e-6;

/// Samples `points` equally spaced values in `[lo, hi]`; a degenerate range
/// yields a single row.
pub fn eigen_curves(g: &MetricGraph, alpha: &CouplingVector, lo: f64, hi: f64, points: usize) -> EigenCurveTable {
    let grid: Vec<f64> = if points <= 1 || lo == hi {
        vec![lo]
    } else {
        let step = (hi - lo) / (points - 1) as f64;
        (0..points).map(|k| if k + 1 == points { hi } else { lo + step * k as f64 }).collect()
    };
    let near = mfunction::singularities(g, lo.min(hi) - 1.0, lo.max(hi) + 1.0).values();
    let mut table = EigenCurveTable { grid: Vec::new(), values: Vec::new(), skipped: Vec::new() };
    for lambda in grid {
        let close = near.iter().any(|s| (s - lambda).abs() <= CURVE_SKIP_DISTANCE);
        match (close, mfunction::secular_matrix(g, alpha, lambda)) {
            (false, Ok(q)) => {
                table.grid.push(lambda);
                table.values.push(linalg::eigenvalues_descending(&q));
            }
            _ => table.skipped.push(lambda),
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{catalog, EdgeSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn star_alpha() -> CouplingVector {
        let mut a = vec![-1.0; 7];
        a[0] = 0.0;
        CouplingVector::new(a, 7).unwrap()
    }

    #[test]
    fn path2_counting() {
        let g = catalog("path", &[2]).unwrap();
        let zero = CouplingVector::zeros(2);
        assert_eq!(counting(&g, &zero, 1.0).unwrap(), 1);
        assert_eq!(counting(&g, &zero, -1e6).unwrap(), 0);
        assert!(matches!(counting(&g, &zero, PI * PI), Err(SpectralError::AboveFirstSingularity { .. })));
        assert!(matches!(counting(&g, &zero, 12.0), Err(SpectralError::AboveFirstSingularity { .. })));
    }

    #[test]
    fn star_counting_around_zero() {
        let g = catalog("star", &[6]).unwrap();
        let a = star_alpha();
        assert_eq!(counting(&g, &a, -1e-6).unwrap(), 1);
        assert_eq!(counting(&g, &a, 1e-6).unwrap(), 6);
    }

    #[test]
    fn path3_neumann_eigenvalues() {
        let g = catalog("path", &[3]).unwrap();
        let pts = locate_eigenvalues(&g, &CouplingVector::zeros(3), -1.0, 9.0, 1e-10).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts[0].lambda.abs() < 1e-9);
        assert_relative_eq!(pts[1].lambda, PI * PI / 4.0, max_relative = 1e-9);
        assert!(pts.iter().all(|p| p.multiplicity == 1));

        let second = second_eigenvalue(&g, &CouplingVector::zeros(3)).unwrap();
        assert_relative_eq!(second.lambda, PI * PI / 4.0, max_relative = 1e-9);
        assert_eq!(second.multiplicity, 1);
    }

    #[test]
    fn star_second_eigenvalue() {
        let g = catalog("star", &[6]).unwrap();
        let a = star_alpha();
        let pts = locate_eigenvalues(&g, &a, -2.0, 1.0, 1e-10).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts[0].lambda < 0.0);
        assert_eq!(pts[0].multiplicity, 1);
        assert!(pts[1].lambda.abs() < 1e-9);
        assert_eq!(pts[1].multiplicity, 5);

        let p = second_eigenvalue(&g, &a).unwrap();
        assert!(p.lambda.abs() < 1e-9);
        assert_eq!(p.multiplicity, 5);
        assert_eq!(multiplicity(&g, &a, 0.0, KERNEL_TOL).unwrap().0, 5);
    }

    #[test]
    fn multiplicity_off_spectrum() {
        let g = catalog("path", &[2]).unwrap();
        let (m, basis) = multiplicity(&g, &CouplingVector::zeros(2), 1.0, KERNEL_TOL).unwrap();
        assert_eq!(m, 0);
        assert!(basis.is_empty());
    }

    /// Independent route for path(2) with α = (−1, −1): the two secular
    /// determinant branches `−k cot k + 1 ∓ k/sin k = 0`, bisected directly.
    fn path2_robin_oracle() -> Vec<f64> {
        let branch = |sign: f64| {
            move |lam: f64| {
                let (kc, ks) = if lam > 0.0 {
                    let k = lam.sqrt();
                    (k * k.cos() / k.sin(), k / k.sin())
                } else {
                    let k = (-lam).sqrt();
                    (k * k.cosh() / k.sinh(), k / k.sinh())
                };
                -kc + 1.0 + sign * ks
            }
        };
        let mut roots = Vec::new();
        for sign in [-1.0, 1.0] {
            let f = branch(sign);
            // scan for sign changes on (−20, π² − 1e-6)
            let n = 20000;
            let (a0, b0) = (-20.0, PI * PI - 1e-6);
            let mut prev = (a0, f(a0));
            for k in 1..=n {
                let x = a0 + (b0 - a0) * k as f64 / n as f64;
                let fx = f(x);
                if prev.1.signum() != fx.signum() && fx.is_finite() && prev.1.is_finite() {
                    let (mut lo, mut hi) = (prev.0, x);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if f(mid).signum() == f(lo).signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    roots.push(0.5 * (lo + hi));
                }
                prev = (x, fx);
            }
        }
        roots.sort_by(f64::total_cmp);
        roots
    }

    #[test]
    fn path2_robin_matches_determinant_oracle() {
        let g = catalog("path", &[2]).unwrap();
        let a = CouplingVector::new(vec![-1.0, -1.0], 2).unwrap();
        let oracle = path2_robin_oracle();
        assert_eq!(oracle.len(), 2);
        let pts = locate_eigenvalues(&g, &a, -20.0, PI * PI - 1e-6, 1e-11).unwrap();
        assert_eq!(pts.len(), 2);
        for (p, o) in pts.iter().zip(&oracle) {
            assert_eq!(p.multiplicity, 1);
            assert!((p.lambda - o).abs() < 1e-9, "{} vs {}", p.lambda, o);
        }
    }

    #[test]
    fn k33_equilateral_second_eigenvalue() {
        // Q((π/2)²) = (π/2)·adjacency, whose kernel is 4-dimensional.
        let g = catalog("k33", &[]).unwrap();
        let p = second_eigenvalue(&g, &CouplingVector::zeros(6)).unwrap();
        assert_relative_eq!(p.lambda, PI * PI / 4.0, max_relative = 1e-9);
        assert_eq!(p.multiplicity, 4);

        let g = catalog("k33_plus_edge", &[]).unwrap();
        let p = second_eigenvalue(&g, &CouplingVector::zeros(6)).unwrap();
        assert!(p.lambda < PI * PI);
        assert!(p.multiplicity <= 3, "multiplicity {}", p.multiplicity);
    }

    #[test]
    fn border_case_is_an_error() {
        // Single interval with Neumann ends: λ₂ = π² coincides with the singularity.
        let g = catalog("path", &[2]).unwrap();
        let err = second_eigenvalue(&g, &CouplingVector::zeros(2)).unwrap_err();
        assert!(matches!(err, SpectralError::BorderOrBeyondSingularity { count: 1, .. }));
    }

    #[test]
    fn kernel_vectors_have_small_residual() {
        let g = catalog("star", &[6]).unwrap();
        let a = star_alpha();
        let p = second_eigenvalue(&g, &a).unwrap();
        let q = mfunction::secular_matrix(&g, &a, p.lambda).unwrap();
        let qn = q.norm();
        for v in &p.kernel_basis {
            assert!((&q * v).norm() <= KERNEL_TOL * qn);
            assert_relative_eq!(v.norm(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn ground_state_is_simple_and_positive() {
        for (name, params) in [("k33", &[][..]), ("star", &[4][..]), ("cycle", &[5][..])] {
            let g = catalog(name, params).unwrap();
            let n = g.vertex_count();
            let alpha = CouplingVector::new((0..n).map(|v| (v as f64 * 0.7).sin()).collect(), n).unwrap();
            let p = ground_state(&g, &alpha).unwrap();
            assert_eq!(p.multiplicity, 1);
            let v = &p.kernel_basis[0];
            let s = v.sum().signum();
            assert!(v.iter().all(|x| s * x > 0.0), "{name}: {v}");
        }
    }

    #[test]
    fn star_vanishing_stars() {
        let g = catalog("star", &[6]).unwrap();
        let p = second_eigenvalue(&g, &star_alpha()).unwrap();
        let stars = vanishing_stars(&g, &p);
        let leaves: BTreeSet<usize> = (1..7).collect();
        assert_eq!(stars, leaves);
    }

    #[test]
    fn nowhere_zero_simple_kernel_has_no_vanishing_star() {
        let g = catalog("path", &[3]).unwrap();
        let p = ground_state(&g, &CouplingVector::zeros(3)).unwrap();
        assert!(vanishing_stars(&g, &p).is_empty());
    }

    #[test]
    fn curves_skip_singularities() {
        let g = MetricGraph::new(2, vec![EdgeSpec::unit(0, 1)]).unwrap();
        let t = eigen_curves(&g, &CouplingVector::zeros(2), 0.0, 2.0 * PI * PI, 3);
        assert_eq!(t.grid.len(), 2);
        assert_eq!(t.skipped.len(), 1);
        let single = eigen_curves(&g, &CouplingVector::zeros(2), 1.0, 1.0, 10);
        assert_eq!(single.grid, vec![1.0]);
    }
}
