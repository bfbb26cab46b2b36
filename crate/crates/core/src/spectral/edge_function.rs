use nalgebra::DVector;

use super::{SpectralError, SpectralPoint};
use crate::graph::{CouplingVector, MetricGraph};
use crate::mfunction;

/// `s(x)` with `s'' = −z s`, `s(0) = 0`, `s'(0) = 1`, and its derivative.
fn fundamental(z: f64, x: f64) -> (f64, f64) {
    let t2 = z * x * x;
    if t2.abs() < 1e-8 {
        let s = x * (1.0 - t2 / 6.0 + t2 * t2 / 120.0);
        let ds = 1.0 - t2 / 2.0 + t2 * t2 / 24.0;
        (s, ds)
    } else if z > 0.0 {
        let k = z.sqrt();
        ((k * x).sin() / k, (k * x).cos())
    } else {
        let k = (-z).sqrt();
        ((k * x).sinh() / k, (k * x).cosh())
    }
}

/// Solution of `−u'' + q u = λ u` on one edge, parametrized by `x ∈ [0, ℓ]`
/// measured from the lower-numbered endpoint:
/// `u(x) = A·s(x) + B·s(ℓ − x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFunction {
    pub edge: (usize, usize),
    pub length: f64,
    /// `λ − q` on this edge.
    pub z: f64,
    pub a: f64,
    pub b: f64,
    /// Endpoint values `(u(0), u(ℓ))`, i.e. the weighted vertex values times the endpoint weights.
    pub end_values: (f64, f64),
}

impl EdgeFunction {
    pub fn value(&self, x: f64) -> f64 {
        self.a * fundamental(self.z, x).0 + self.b * fundamental(self.z, self.length - x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.a * fundamental(self.z, x).1 - self.b * fundamental(self.z, self.length - x).1
    }

    /// Derivative into the edge at the lower endpoint.
    pub fn inward_derivative_lo(&self) -> f64 {
        self.derivative(0.0)
    }

    /// Derivative into the edge at the higher endpoint.
    pub fn inward_derivative_hi(&self) -> f64 {
        -self.derivative(self.length)
    }
}

/// Reconstructs the eigenfunction belonging to `kernel_vector` edge by edge.
pub fn eigenfunction_values(
    g: &MetricGraph,
    _alpha: &CouplingVector,
    point: &SpectralPoint,
    kernel_vector: &DVector<f64>,
) -> Result<Vec<EdgeFunction>, SpectralError> {
    let n = g.vertex_count();
    if kernel_vector.len() != n {
        return Err(SpectralError::DimensionMismatch { expected: n, got: kernel_vector.len() });
    }
    super::check_below(g, point.lambda)?;
    let norm = kernel_vector.norm();
    if norm > 0.0 {
        let mut projected = DVector::zeros(n);
        for b in &point.kernel_basis {
            projected += b * b.dot(kernel_vector);
        }
        let residual = (kernel_vector - projected).norm() / norm;
        if residual > super::KERNEL_TOL {
            return Err(SpectralError::NotInKernel { residual });
        }
    }

    let lambda = point.lambda;
    let mut out = Vec::with_capacity(g.edge_count());
    for ((i, j), d) in g.edges() {
        mfunction::edge_m(lambda, d.length, d.c_lo, d.c_hi, d.q)
            .map_err(|e| mfunction::DirichletSingularity { edge: Some((i, j)), ..e })?;
        let z = lambda - d.q;
        let u_lo = d.c_lo * kernel_vector[i];
        let u_hi = d.c_hi * kernel_vector[j];
        let s_len = fundamental(z, d.length).0;
        out.push(EdgeFunction {
            edge: (i, j),
            length: d.length,
            z,
            a: u_hi / s_len,
            b: u_lo / s_len,
            end_values: (u_lo, u_hi),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{catalog, EdgeSpec};
    use crate::spectral::{second_eigenvalue, KERNEL_TOL};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn point(lambda: f64, basis: Vec<DVector<f64>>) -> SpectralPoint {
        SpectralPoint { lambda, multiplicity: basis.len(), kernel_basis: basis }
    }

    #[test]
    fn zero_vector_gives_zero_functions() {
        let g = catalog("k33", &[]).unwrap();
        let fs = eigenfunction_values(&g, &CouplingVector::zeros(6), &point(1.0, vec![]), &DVector::zeros(6)).unwrap();
        assert_eq!(fs.len(), 9);
        for f in fs {
            for x in [0.0, 0.3, 1.0] {
                assert_eq!(f.value(x), 0.0);
            }
        }
    }

    #[test]
    fn quarter_sine() {
        let g = MetricGraph::new(2, vec![EdgeSpec::unit(0, 1)]).unwrap();
        let v = DVector::from_vec(vec![0.0, 1.0]);
        let p = point(PI * PI / 4.0, vec![v.clone()]);
        let f = &eigenfunction_values(&g, &CouplingVector::zeros(2), &p, &v).unwrap()[0];
        for x in [0.0, 0.25, 0.5, 1.0] {
            assert_relative_eq!(f.value(x), (PI * x / 2.0).sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn star_eigenfunctions_are_linear() {
        let g = catalog("star", &[6]).unwrap();
        let mut a = vec![-1.0; 7];
        a[0] = 0.0;
        let alpha = CouplingVector::new(a, 7).unwrap();
        let p = second_eigenvalue(&g, &alpha).unwrap();
        let mut v = DVector::zeros(7);
        v[1] = 1.0;
        v[2] = -1.0;
        let fs = eigenfunction_values(&g, &alpha, &p, &v).unwrap();
        for f in &fs {
            let leaf = f.edge.1;
            let slope = v[leaf];
            for x in [0.0, 0.2, 0.7, 1.0] {
                assert!((f.value(x) - slope * x).abs() < 1e-8, "edge {:?}", f.edge);
            }
        }
    }

    #[test]
    fn rejects_vector_outside_kernel() {
        let g = catalog("star", &[6]).unwrap();
        let mut a = vec![-1.0; 7];
        a[0] = 0.0;
        let alpha = CouplingVector::new(a, 7).unwrap();
        let p = second_eigenvalue(&g, &alpha).unwrap();
        let mut v = DVector::zeros(7);
        v[0] = 1.0;
        assert!(matches!(eigenfunction_values(&g, &alpha, &p, &v), Err(SpectralError::NotInKernel { .. })));
    }

    #[test]
    fn reconstructed_functions_satisfy_vertex_conditions() {
        // weighted Schrödinger data; flux balance Σ c ∂u = α u_w at every vertex
        let specs = vec![
            EdgeSpec { i: 0, j: 1, length: 0.8, c_i: 1.3, c_j: 0.7, q: -0.5 },
            EdgeSpec { i: 1, j: 2, length: 1.1, c_i: 0.9, c_j: 1.2, q: 0.4 },
            EdgeSpec { i: 0, j: 2, length: 0.6, c_i: 1.0, c_j: 1.5, q: 0.0 },
            EdgeSpec { i: 2, j: 3, length: 0.9, c_i: 0.6, c_j: 1.1, q: 1.0 },
        ];
        let g = MetricGraph::new(4, specs).unwrap();
        let alpha = CouplingVector::new(vec![0.3, -1.2, 0.8, -0.4], 4).unwrap();
        let p = second_eigenvalue(&g, &alpha).unwrap();
        let v = &p.kernel_basis[0];
        let fs = eigenfunction_values(&g, &alpha, &p, v).unwrap();
        let mut flux = [0.0; 4];
        for f in &fs {
            let (i, j) = f.edge;
            let c_lo = g.weight(i, j).unwrap();
            let c_hi = g.weight(j, i).unwrap();
            assert_relative_eq!(f.value(0.0), c_lo * v[i], epsilon = 1e-12);
            assert_relative_eq!(f.value(f.length), c_hi * v[j], epsilon = 1e-12);
            flux[i] += c_lo * f.inward_derivative_lo();
            flux[j] += c_hi * f.inward_derivative_hi();
            // the ODE itself, by a centered second difference
            let (x, h) = (0.37 * f.length, 1e-4);
            let second = (f.value(x + h) - 2.0 * f.value(x) + f.value(x - h)) / (h * h);
            assert!((-second - f.z * f.value(x)).abs() < 1e-5);
        }
        for k in 0..4 {
            assert!(
                (flux[k] - alpha[k] * v[k]).abs() < 1e2 * KERNEL_TOL,
                "vertex {k}: {} vs {}",
                flux[k],
                alpha[k] * v[k]
            );
        }
    }
}
