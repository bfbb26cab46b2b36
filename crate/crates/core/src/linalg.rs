//! Small dense helpers shared by the spectral and matrix-certification code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Symmetric eigendecomposition with eigenvalues sorted descending and the
/// eigenvector columns permuted to match.
pub fn eigen_descending(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// Eigenvalues only, sorted descending.
pub fn eigenvalues_descending(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Singular values sorted descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values at or below `tol` times the largest one.
/// A zero matrix has full nullity.
pub fn nullity(m: &DMatrix<f64>, tol: f64) -> usize {
    let s = singular_values(m);
    let largest = s.first().copied().unwrap_or(0.0);
    if largest == 0.0 {
        return m.ncols();
    }
    let rank = s.iter().filter(|&&x| x > tol * largest).count();
    m.ncols() - rank
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= rel_tol * scale))
}

pub fn column_vectors(m: &DMatrix<f64>, cols: impl IntoIterator<Item = usize>) -> Vec<DVector<f64>> {
    cols.into_iter().map(|c| m.column(c).into_owned()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullity_counts() {
        assert_eq!(nullity(&DMatrix::identity(4, 4), 1e-8), 0);
        assert_eq!(nullity(&DMatrix::from_element(3, 3, 1.0), 1e-8), 2);
        assert_eq!(nullity(&DMatrix::zeros(3, 3), 1e-8), 3);
    }

    #[test]
    fn eigen_order() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let (vals, vecs) = eigen_descending(&m);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] + 1.0).abs() < 1e-14);
        let v0 = vecs.column(0);
        assert!((v0[0] - v0[1]).abs() < 1e-14);
    }
}
