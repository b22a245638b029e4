//! Small dense linear-algebra helpers shared across modules.

use alloc::vec::Vec;
use nalgebra::{Complex, DMatrix, DVector};

#[allow(unused_imports)]
use num_traits::Float;

/// Orthonormal basis of the orthogonal complement of the unit vector `q`,
/// returned as the columns of an `n x (n-1)` matrix.
///
/// Uses the Householder reflector mapping the last coordinate axis onto
/// `-sign(q_n) q`; its first `n-1` columns are orthonormal and orthogonal
/// to `q`.
pub fn tangent_basis(q: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    if n == 1 {
        return DMatrix::zeros(1, 0);
    }
    let sign = if q[n - 1] >= 0.0 { 1.0 } else { -1.0 };
    let mut u = DVector::from_column_slice(q);
    u[n - 1] += sign;
    let norm = u.norm();
    let mut basis = DMatrix::zeros(n, n - 1);
    if norm < 1e-14 {
        // q is numerically -e_n (sign convention makes this unreachable),
        // fall back to the coordinate complement.
        for j in 0..n - 1 {
            basis[(j, j)] = 1.0;
        }
        return basis;
    }
    let u = u / norm;
    for j in 0..n - 1 {
        for i in 0..n {
            let e = if i == j { 1.0 } else { 0.0 };
            basis[(i, j)] = e - 2.0 * u[i] * u[j];
        }
    }
    basis
}

/// Eigenvalues of a dense symmetric matrix, sorted ascending.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut eigs: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eigs
}

/// Complex spectrum of a dense real matrix, sorted by (re, im).
pub fn complex_spectrum(m: DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut eigs: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    sort_complex(&mut eigs);
    eigs
}

pub fn sort_complex(v: &mut [Complex<f64>]) {
    v.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .expect("finite eigenvalues")
    });
}

/// Central finite-difference Jacobian of `f` at `x` with step `h`.
pub fn central_jacobian<F>(f: F, x: &[f64], h: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        let fp = f(&xp);
        let fm = f(&xm);
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    jac
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        for x in a {
            *x /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tangent_basis_is_orthonormal_complement() {
        for q in [
            alloc::vec![0.6, 0.8],
            alloc::vec![0.0, 0.0, 1.0],
            alloc::vec![-1.0, 0.0, 0.0],
            alloc::vec![0.5, -0.5, 0.5, -0.5],
        ] {
            let b = tangent_basis(&q);
            let n = q.len();
            assert_eq!(b.ncols(), n - 1);
            for j in 0..n - 1 {
                let col: Vec<f64> = (0..n).map(|i| b[(i, j)]).collect();
                assert_abs_diff_eq!(dot(&col, &q), 0.0, epsilon = 1e-13);
                assert_abs_diff_eq!(norm(&col), 1.0, epsilon = 1e-13);
                for k in 0..j {
                    let other: Vec<f64> = (0..n).map(|i| b[(i, k)]).collect();
                    assert_abs_diff_eq!(dot(&col, &other), 0.0, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn tangent_basis_n1_is_empty() {
        assert_eq!(tangent_basis(&[1.0]).ncols(), 0);
    }

    #[test]
    fn jacobian_of_linear_map() {
        let jac = central_jacobian(|x| alloc::vec![2.0 * x[0] - x[1], 3.0 * x[1]], &[0.4, -1.0], 1e-6);
        assert_abs_diff_eq!(jac[(0, 0)], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(jac[(0, 1)], -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(jac[(1, 0)], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(jac[(1, 1)], 3.0, epsilon = 1e-9);
    }
}
