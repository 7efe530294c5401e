//! Gaussian elimination over any [`Field`], exact for rationals.

use crate::field::{axpy, Field};

pub type Mat<T> = Vec<Vec<T>>;

/// Reduced row echelon form and pivot columns.
pub fn rref<T: Field>(m: &Mat<T>, cols: usize) -> (Mat<T>, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == a.len() {
            break;
        }
        let Some(p) = (r..a.len())
            .filter(|&i| !a[i][c].is_zero())
            .max_by(|&i, &j| a[i][c].cmp_abs(&a[j][c]))
        else {
            continue;
        };
        a.swap(r, p);
        let piv = a[r][c].clone();
        a[r] = a[r].iter().map(|v| v.div(&piv)).collect();
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let s = a[i][c].clone();
                a[i] = axpy(&a[i], &s, &a[r]);
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank<T: Field>(m: &Mat<T>, cols: usize) -> usize {
    rref(m, cols).1.len()
}

/// Basis of `{z : m z = 0}`.
pub fn nullspace<T: Field>(m: &Mat<T>, cols: usize) -> Vec<Vec<T>> {
    let (a, pivots) = rref(m, cols);
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut z = vec![T::zero(); cols];
            z[free] = T::from_f64(1.0);
            for (r, &p) in pivots.iter().enumerate() {
                z[p] = a[r][free].neg();
            }
            z
        })
        .collect()
}

pub fn det<T: Field>(m: &Mat<T>) -> T {
    let n = m.len();
    let mut a = m.clone();
    let mut d = T::from_f64(1.0);
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return T::zero();
        };
        if p != c {
            a.swap(c, p);
            d = d.neg();
        }
        let piv = a[c][c].clone();
        d = d.mul(&piv);
        for i in c + 1..n {
            if !a[i][c].is_zero() {
                let s = a[i][c].div(&piv);
                a[i] = axpy(&a[i], &s, &a[c]);
            }
        }
    }
    d
}

/// Inverse of a square matrix, `None` when singular.
pub fn inverse<T: Field>(m: &Mat<T>) -> Option<Mat<T>> {
    let n = m.len();
    let aug: Mat<T> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| T::from_f64(if i == j { 1.0 } else { 0.0 })));
            r
        })
        .collect();
    let (a, pivots) = rref(&aug, n);
    (pivots.len() == n).then(|| a.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn matmul<T: Field>(a: &Mat<T>, b: &Mat<T>, inner: usize, cols: usize) -> Mat<T> {
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).fold(T::zero(), |s, k| s.add(&row[k].mul(&b[k][j]))))
                .collect()
        })
        .collect()
}
