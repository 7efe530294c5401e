//! Active-set classification of constraint rows at a candidate LGNE.
//!
//! Per multiplier block: α holds equality rows and strictly active inequality
//! rows (positive multiplier), β the degenerate rows (active, zero multiplier),
//! γ the inactive rows.

use serde::Serialize;
use thiserror::Error;

use crate::kkt::kkt_residual;
use crate::problem::ProblemError;
use crate::system::{KktSystem, PrimalDualPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyTolerances {
    pub tol_active: f64,
    pub tol_mult: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances {
            tol_active: 1e-8,
            tol_mult: 1e-8,
        }
    }
}

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("row {row} of block {block} is ambiguous: g = {g:e}, y = {y:e}")]
    Ambiguous {
        block: usize,
        row: usize,
        g: f64,
        y: f64,
    },
    #[error("point is not an approximate LGNE: KKT residual {residual:e} exceeds {limit:e}")]
    NotStationary { residual: f64, limit: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexClass {
    Alpha,
    Beta,
    Gamma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexSets {
    /// Class of every multiplier slot, in the system's flat slot order.
    pub classes: Vec<IndexClass>,
    pub tolerances: ClassifyTolerances,
}

impl IndexSets {
    pub fn slots_in(&self, class: IndexClass) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == class)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn alpha(&self) -> Vec<usize> {
        self.slots_in(IndexClass::Alpha)
    }

    pub fn beta(&self) -> Vec<usize> {
        self.slots_in(IndexClass::Beta)
    }

    pub fn gamma(&self) -> Vec<usize> {
        self.slots_in(IndexClass::Gamma)
    }

    pub fn beta_count(&self) -> usize {
        self.classes
            .iter()
            .filter(|c| **c == IndexClass::Beta)
            .count()
    }

    /// Number of β partitions, `3^{|β|}`; `None` on overflow.
    pub fn partition_count(&self) -> Option<u64> {
        3u64.checked_pow(self.beta_count() as u32)
    }

    /// Number of complementarity branches, `2^{|β|}`; `None` on overflow.
    pub fn branch_count(&self) -> Option<u64> {
        2u64.checked_pow(self.beta_count() as u32)
    }

    /// Every assignment of the β slots to `+`, `0`, `−` in lexicographic order
    /// (first β slot most significant, `+ < 0 < −`).
    pub fn partitions(&self) -> impl Iterator<Item = Partition> + '_ {
        let beta = self.beta();
        let total = self.partition_count().expect("partition count fits in u64");
        (0..total).map(move |idx| Partition::decode(&beta, idx))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum BetaSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "-")]
    Minus,
}

/// A split of β into β⁺, β⁰, β⁻: `(slot, sign)` pairs in β order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition(pub Vec<(usize, BetaSign)>);

impl Partition {
    /// The `idx`-th partition of `beta` in lexicographic order.
    pub fn decode(beta: &[usize], mut idx: u64) -> Self {
        let mut signs = vec![BetaSign::Plus; beta.len()];
        for s in signs.iter_mut().rev() {
            *s = match idx % 3 {
                0 => BetaSign::Plus,
                1 => BetaSign::Zero,
                _ => BetaSign::Minus,
            };
            idx /= 3;
        }
        Partition(beta.iter().copied().zip(signs).collect())
    }

    pub fn with_sign(&self, sign: BetaSign) -> Vec<usize> {
        self.0
            .iter()
            .filter(|(_, s)| *s == sign)
            .map(|(k, _)| k)
            .copied()
            .collect()
    }
}

/// Classifies every multiplier slot at `pt`.
///
/// The point must be an approximate LGNE: its KKT residual may not exceed
/// `10 · tol_active`.
pub fn classify(
    sys: &KktSystem,
    pt: &PrimalDualPoint,
    tols: ClassifyTolerances,
) -> Result<IndexSets, ClassifyError> {
    let residual = kkt_residual(sys, pt, &sys.zero_perturbation())?;
    let limit = 10.0 * tols.tol_active;
    if residual.is_nan() || residual > limit {
        return Err(ClassifyError::NotStationary { residual, limit });
    }
    let values = sys.problem().constraint_values(&pt.x)?;
    let classes = sys
        .slots()
        .iter()
        .enumerate()
        .map(|(k, slot)| {
            if !sys.is_ineq_slot(k) {
                return Ok(IndexClass::Alpha);
            }
            let g = values[slot.row];
            let y = pt.y[slot.block][slot.pos];
            if g >= -tols.tol_active && y > tols.tol_mult {
                Ok(IndexClass::Alpha)
            } else if g.abs() <= tols.tol_active && y.abs() <= tols.tol_mult {
                Ok(IndexClass::Beta)
            } else if g < -tols.tol_active && y.abs() <= tols.tol_mult {
                Ok(IndexClass::Gamma)
            } else {
                Err(ClassifyError::Ambiguous {
                    block: slot.block,
                    row: sys.problem().original_index(slot.row),
                    g,
                    y,
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(IndexSets {
        classes,
        tolerances: tols,
    })
}
