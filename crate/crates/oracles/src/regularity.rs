//! Primal regularity tests for the linearized KKT system, evaluated exactly.
//!
//! Rows of the linearization read `G x + B y = ·`, `A_α x = ·`, and on β the
//! complementarity `0 ≤ y_j ⊥ −A_j x ≥ 0`. Lipschitz single-valuedness is
//! tested through the Schur complement P-matrix condition; isolated calmness
//! through the homogeneous complementarity system, one exact cone per branch.

use crate::dd::enumerate;
use crate::exact::{det, inverse, matmul, Mat};
use crate::field::{rows_of, Field};
use nalgebra::DMatrix;
use num_rational::BigRational;

type Q = BigRational;

fn q(v: f64) -> Q {
    Q::from_f64(v)
}

/// `[[G, B_α], [−A_α, 0]]`
fn reduced_matrix(g: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>, alpha: &[usize]) -> Mat<Q> {
    let n = g.nrows();
    let k = n + alpha.len();
    let mut m = vec![vec![q(0.0); k]; k];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = q(g[(i, j)]);
        }
        for (c, &s) in alpha.iter().enumerate() {
            m[i][n + c] = q(b[(i, s)]);
        }
    }
    for (r, &s) in alpha.iter().enumerate() {
        for j in 0..n {
            m[n + r][j] = q(-a[(s, j)]);
        }
    }
    m
}

pub fn is_p_matrix(m: &Mat<Q>) -> bool {
    let k = m.len();
    (1u64..1 << k).all(|mask| {
        let idx: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let sub: Mat<Q> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| m[i][j].clone()).collect())
            .collect();
        det(&sub).signum().is_gt()
    })
}

/// Strong regularity of the linearized system: the reduced matrix on α is
/// nonsingular and its Schur complement onto β is a P-matrix.
pub fn strongly_regular(
    g: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    alpha: &[usize],
    beta: &[usize],
) -> bool {
    let n = g.nrows();
    let k = n + alpha.len();
    let Some(kinv) = inverse(&reduced_matrix(g, a, b, alpha)) else {
        return false;
    };
    if beta.is_empty() {
        return true;
    }
    let left: Mat<Q> = beta
        .iter()
        .map(|&s| {
            (0..k)
                .map(|j| if j < n { q(a[(s, j)]) } else { q(0.0) })
                .collect()
        })
        .collect();
    let right: Mat<Q> = (0..k)
        .map(|i| {
            beta.iter()
                .map(|&s| if i < n { q(b[(i, s)]) } else { q(0.0) })
                .collect()
        })
        .collect();
    let schur = matmul(&matmul(&left, &kinv, k, k), &right, k, beta.len());
    is_p_matrix(&schur)
}

/// Isolated calmness by exhaustive branch enumeration. Returns the verdict
/// and the number of branches examined.
pub fn isolated_calmness(
    g: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    alpha: &[usize],
    beta: &[usize],
) -> (bool, usize) {
    let n = g.nrows();
    let slots: Vec<usize> = alpha.iter().chain(beta).copied().collect();
    let d = n + slots.len();
    let zero = || vec![q(0.0); d];
    let mut eqs: Vec<Vec<Q>> = Vec::new();
    for i in 0..n {
        let mut r = zero();
        for j in 0..n {
            r[j] = q(g[(i, j)]);
        }
        for (c, &s) in slots.iter().enumerate() {
            r[n + c] = q(b[(i, s)]);
        }
        eqs.push(r);
    }
    let a_row = |s: usize| {
        let mut r = zero();
        for j in 0..n {
            r[j] = q(a[(s, j)]);
        }
        r
    };
    for &s in alpha {
        eqs.push(a_row(s));
    }
    let branches = 1usize << beta.len();
    for mask in 0..branches {
        let mut rows: Vec<Vec<Q>> = Vec::new();
        for e in &eqs {
            rows.push(e.iter().map(Field::neg).collect());
            rows.push(e.clone());
        }
        for (t, &s) in beta.iter().enumerate() {
            let mut y = zero();
            y[n + alpha.len() + t] = q(1.0);
            if mask >> t & 1 == 0 {
                // y_j = 0, A_j x ≤ 0
                rows.push(y.iter().map(Field::neg).collect());
                rows.push(y);
                rows.push(a_row(s));
            } else {
                // A_j x = 0, y_j ≥ 0
                let r = a_row(s);
                rows.push(r.iter().map(Field::neg).collect());
                rows.push(r);
                rows.push(y.iter().map(Field::neg).collect());
            }
        }
        if !enumerate(d, &rows).is_trivial() {
            return (false, mask + 1);
        }
    }
    (true, branches)
}

/// Rank of a floating-point matrix computed exactly.
pub fn exact_rank(m: &DMatrix<f64>) -> usize {
    crate::exact::rank(&rows_of::<Q>(m), m.ncols())
}
