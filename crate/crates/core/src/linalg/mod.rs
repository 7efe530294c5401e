//! Dense kernels used by the solver and the certificates.
//!
//! nalgebra provides storage and basic arithmetic only; factorizations, the
//! eigensolver, the SVD and the simplex method live here so that their tolerances
//! and tie-breaking are fixed and documented.

mod cone;
mod eig;
mod lu;
mod simplex;
mod svd;

pub use cone::{cone_is_trivial, ConeSpec, ConeVerdict};
pub use eig::{sym_eig, SymEig};
pub use lu::{lu_nonsingular, Lu, NonsingularityVerdict};
pub use simplex::{LinearProgram, LpResult};
pub use svd::{nullspace, rank, Svd};

use nalgebra::DMatrix;
use thiserror::Error;

pub const DEFAULT_PIVOT_TOL: f64 = 1e-10;
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
pub const DEFAULT_LP_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
}

/// Stacks matrices vertically; all must share the column count `cols`.
pub fn vstack(parts: &[&DMatrix<f64>], cols: usize) -> DMatrix<f64> {
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        debug_assert_eq!(p.ncols(), cols);
        out.view_mut((r, 0), (p.nrows(), cols)).copy_from(p);
        r += p.nrows();
    }
    out
}

/// Builds a block matrix from a row-major grid of optional blocks (`None` is zero).
pub fn block_matrix(
    rows: &[usize],
    cols: &[usize],
    blocks: &[&[Option<&DMatrix<f64>>]],
) -> DMatrix<f64> {
    let total_r: usize = rows.iter().sum();
    let total_c: usize = cols.iter().sum();
    let mut out = DMatrix::zeros(total_r, total_c);
    let mut r0 = 0;
    for (i, row) in blocks.iter().enumerate() {
        let mut c0 = 0;
        for (j, blk) in row.iter().enumerate() {
            if let Some(m) = blk {
                debug_assert_eq!(m.shape(), (rows[i], cols[j]));
                out.view_mut((r0, c0), (rows[i], cols[j])).copy_from(m);
            }
            c0 += cols[j];
        }
        r0 += rows[i];
    }
    out
}

/// Largest absolute entry; used as a cheap scale for tolerances.
pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
