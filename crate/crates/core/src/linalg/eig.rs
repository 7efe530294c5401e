use nalgebra::{DMatrix, DVector};

use super::{max_abs, LinalgError};

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    pub fn min(&self) -> Option<f64> {
        self.values.iter().copied().next()
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigen-decomposition. Inputs asymmetric by at most
/// `1e-12·max(1, ‖S‖)` are averaged with their transpose first.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<SymEig, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::NotSquare {
            rows: s.nrows(),
            cols: s.ncols(),
        });
    }
    let n = s.nrows();
    let asym = max_abs(&(s - s.transpose()));
    let scale = s.norm();
    if asym > 1e-12 * scale.max(1.0) {
        return Err(LinalgError::Asymmetric(asym));
    }
    let mut a = (s + s.transpose()) * 0.5;
    let mut v = DMatrix::identity(n, n);
    let stop = 1e-12 * scale;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal(&a) <= stop {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut v, p, q, c, sn);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEig { values, vectors })
}

fn off_diagonal(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Applies the rotation `A ← JᵀAJ`, `V ← VJ` zeroing `A[p,q]`.
fn rotate(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = a.nrows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_reconstruction(s: &DMatrix<f64>) {
        let e = sym_eig(s).unwrap();
        let n = s.nrows();
        let v = &e.vectors;
        assert!((v.transpose() * v - DMatrix::identity(n, n)).norm() <= 1e-10);
        let rebuilt = v * DMatrix::from_diagonal(&e.values) * v.transpose();
        assert!((rebuilt - s).norm() <= 1e-10 * s.norm().max(1.0));
        assert!(e.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diagonal_sorted() {
        let e = sym_eig(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]))).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn swap_matrix() {
        let e = sym_eig(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_dense_matrix() {
        let s = DMatrix::from_row_slice(
            4,
            4,
            &[
                4.0, 1.0, -2.0, 0.5, 1.0, 3.0, 0.0, 1.0, -2.0, 0.0, -1.0, 2.0, 0.5, 1.0, 2.0, 0.0,
            ],
        );
        check_reconstruction(&s);
    }

    #[test]
    fn rejects_asymmetric() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eig(&s), Err(LinalgError::Asymmetric(_))));
    }

    #[test]
    fn tolerates_rounding_asymmetry() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0 + 1e-15, 1.0]);
        assert!(sym_eig(&s).is_ok());
    }
}
