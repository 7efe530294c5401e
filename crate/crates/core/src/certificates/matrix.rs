//! Nonsingularity tests for the equality-only and strictly complementary cases.

use nalgebra::{DMatrix, DVector};

use super::data::StabilityData;
use super::verdict::{to_vec, Status, Verdict, Witness};
use crate::index_sets::IndexSets;
use crate::linalg::block_matrix;
use crate::linalg::{lu_nonsingular, rank, Svd};

/// `[[Gᵀ, −A_Sᵀ], [B_Sᵀ, 0]]` for the slot subset `S`.
pub fn saddle_matrix(data: &StabilityData, slots: &[usize]) -> DMatrix<f64> {
    let n = data.n();
    let k = slots.len();
    let gt = data.g.transpose();
    let at = -data.a_rows(slots).transpose();
    let bt = data.bt_rows(slots);
    block_matrix(
        &[n, k],
        &[n, k],
        &[&[Some(&gt), Some(&at)], &[Some(&bt), None]],
    )
}

fn matrix_verdict(m: &DMatrix<f64>, pivot_tol: f64, what: &str) -> Verdict {
    let lu = lu_nonsingular(m, pivot_tol);
    let mut v = if lu.nonsingular {
        Verdict::new(Status::Holds, format!("{what} matrix is nonsingular"))
    } else {
        let mut v = Verdict::new(Status::Fails, format!("{what} matrix is singular"));
        v.witness = Some(Witness::NullVector {
            z: to_vec(&kernel_vector(m)),
        });
        v
    };
    v.condition_estimate = Some(lu.condition_estimate);
    v
}

/// Right singular vector of the smallest singular value, scaled to `‖z‖∞ = 1`.
pub fn kernel_vector(m: &DMatrix<f64>) -> DVector<f64> {
    let svd = Svd::new(m);
    let z = svd.v.column(svd.v.ncols() - 1).into_owned();
    let s = z.amax();
    z / s
}

/// Lipschitz single-valued localization when every row is an equality.
pub fn check_equality_case(data: &StabilityData, pivot_tol: f64) -> Verdict {
    if !data.all_equalities() {
        return Verdict::not_applicable("inequality rows present");
    }
    let all: Vec<usize> = (0..data.m()).collect();
    matrix_verdict(&saddle_matrix(data, &all), pivot_tol, "equality-case")
}

/// Nonsingularity test restricted to the α rows; needs β = ∅.
pub fn check_strict_complementarity(
    data: &StabilityData,
    sets: &IndexSets,
    pivot_tol: f64,
    rank_tol: f64,
) -> Verdict {
    if sets.beta_count() > 0 {
        return Verdict::not_applicable("degenerate rows present");
    }
    let alpha = sets.alpha();
    let mut v = matrix_verdict(
        &saddle_matrix(data, &alpha),
        pivot_tol,
        "strict-complementarity",
    );
    let a_alpha = data.a_rows(&alpha);
    v.licq_alpha = Some(rank(&a_alpha, rank_tol) == alpha.len());
    v
}
