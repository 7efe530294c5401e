//! Partition-wise and branch-wise homogeneous systems, decided as cone triviality.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::data::StabilityData;
use super::verdict::{
    to_vec, BranchChoice, BranchEntry, LabeledValue, PartitionEntry, Status, Verdict, Witness,
};
use crate::index_sets::{BetaSign, IndexSets, Partition};
use crate::linalg::block_matrix;
use crate::linalg::{cone_is_trivial, ConeSpec, ConeVerdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeTolerances {
    pub rank_tol: f64,
    pub lp_tol: f64,
}

/// The coderivative system of one β partition, in variables `(w1, w2_T)` with
/// `T = α ∪ β⁺ ∪ β⁰` (slot order):
/// `Gᵀw1 − A_Tᵀ w2_T = 0`, `(Bᵀw1)_{α∪β⁺} = 0`, `(Bᵀw1)_{β⁰} ≤ 0`, `w2_{β⁰} ≥ 0`.
/// Multiplier components on γ and β⁻ are fixed at zero and dropped.
pub fn lipschitz_cone(
    data: &StabilityData,
    sets: &IndexSets,
    part: &Partition,
) -> (ConeSpec, Vec<usize>) {
    let n = data.n();
    let mut plus = sets.alpha();
    plus.extend(part.with_sign(BetaSign::Plus));
    plus.sort_unstable();
    let zero = part.with_sign(BetaSign::Zero);
    let mut t: Vec<usize> = plus.iter().chain(zero.iter()).copied().collect();
    t.sort_unstable();
    let k = t.len();
    let gt = data.g.transpose();
    let at = -data.a_rows(&t).transpose();
    let bt_plus = data.bt_rows(&plus);
    let e = block_matrix(
        &[n, plus.len()],
        &[n, k],
        &[&[Some(&gt), Some(&at)], &[Some(&bt_plus), None]],
    );
    let bt_zero = data.bt_rows(&zero);
    let sel = DMatrix::from_fn(
        zero.len(),
        k,
        |r, c| {
            if t[c] == zero[r] {
                -1.0
            } else {
                0.0
            }
        },
    );
    let f = block_matrix(
        &[zero.len(), zero.len()],
        &[n, k],
        &[&[Some(&bt_zero), None], &[None, Some(&sel)]],
    );
    (ConeSpec::new(e, f), t)
}

/// The graphical-derivative system of one complementarity branch, in variables
/// `(dx, dy_T)` with `T = α ∪ {β rows on the active branch}`:
/// `G dx + B_T dy_T = 0`, `A_α dx = 0`, and per β row either `A_i dx ≤ 0`
/// (multiplier branch, `dy_i = 0`) or `A_i dx = 0, dy_i ≥ 0`.
pub fn calmness_cone(
    data: &StabilityData,
    sets: &IndexSets,
    branch: &[(usize, BranchChoice)],
) -> (ConeSpec, Vec<usize>) {
    let n = data.n();
    let alpha = sets.alpha();
    let active: Vec<usize> = branch
        .iter()
        .filter(|(_, c)| *c == BranchChoice::RowActive)
        .map(|(s, _)| *s)
        .collect();
    let zero: Vec<usize> = branch
        .iter()
        .filter(|(_, c)| *c == BranchChoice::MultiplierZero)
        .map(|(s, _)| *s)
        .collect();
    let mut t: Vec<usize> = alpha.iter().chain(active.iter()).copied().collect();
    t.sort_unstable();
    let k = t.len();
    let bt = data.b.select_columns(&t);
    let a_eq = data.a_rows(&t);
    let e = block_matrix(
        &[n, k],
        &[n, k],
        &[&[Some(&data.g), Some(&bt)], &[Some(&a_eq), None]],
    );
    let a_zero = data.a_rows(&zero);
    let sel = DMatrix::from_fn(
        active.len(),
        k,
        |r, c| {
            if t[c] == active[r] {
                -1.0
            } else {
                0.0
            }
        },
    );
    let f = block_matrix(
        &[zero.len(), active.len()],
        &[n, k],
        &[&[Some(&a_zero), None], &[None, Some(&sel)]],
    );
    (ConeSpec::new(e, f), t)
}

/// The `idx`-th branch in lexicographic order, multiplier branch first.
pub fn decode_branch(beta: &[usize], idx: u64) -> Vec<(usize, BranchChoice)> {
    let len = beta.len();
    beta.iter()
        .enumerate()
        .map(|(i, &s)| {
            let bit = (idx >> (len - 1 - i)) & 1;
            let choice = if bit == 0 {
                BranchChoice::MultiplierZero
            } else {
                BranchChoice::RowActive
            };
            (s, choice)
        })
        .collect()
}

fn labeled(data: &StabilityData, slots: &[usize], values: &[f64]) -> Vec<LabeledValue> {
    slots
        .iter()
        .zip(values)
        .map(|(&s, &value)| LabeledValue {
            block: data.labels[s].block,
            row: data.labels[s].row,
            value,
        })
        .collect()
}

/// Evaluates every cone (in parallel) and returns the first nontrivial one in
/// index order, so the reported witness does not depend on scheduling.
fn first_nontrivial<F>(count: u64, check: F) -> Option<(u64, ConeVerdict, Vec<usize>)>
where
    F: Fn(u64) -> (ConeVerdict, Vec<usize>) + Sync,
{
    let results: Vec<(ConeVerdict, Vec<usize>)> = (0..count).into_par_iter().map(&check).collect();
    results
        .into_iter()
        .enumerate()
        .find(|(_, (v, _))| !v.trivial)
        .map(|(i, (v, t))| (i as u64, v, t))
}

/// Lipschitz single-valued localization: every partition cone must be trivial.
pub fn check_lipschitz(data: &StabilityData, sets: &IndexSets, tol: ConeTolerances) -> Verdict {
    let beta = sets.beta();
    let count = sets
        .partition_count()
        .expect("partition count checked by caller");
    let failing = first_nontrivial(count, |idx| {
        let part = Partition::decode(&beta, idx);
        let (cone, t) = lipschitz_cone(data, sets, &part);
        (cone_is_trivial(&cone, tol.rank_tol, tol.lp_tol), t)
    });
    let n = data.n();
    let mut v = match failing {
        None => Verdict::new(
            Status::Holds,
            format!("all {count} partition systems have only the trivial solution"),
        ),
        Some((idx, cv, t)) => {
            let part = Partition::decode(&beta, idx);
            let ray = cv.witness.expect("nontrivial cone carries a witness");
            let mut v = Verdict::new(
                Status::Fails,
                format!("partition {} of {count} admits a nonzero solution", idx + 1),
            );
            v.witness = Some(Witness::Partition {
                partition: part
                    .0
                    .iter()
                    .map(|&(s, sign)| PartitionEntry {
                        block: data.labels[s].block,
                        row: data.labels[s].row,
                        sign,
                    })
                    .collect(),
                w1: to_vec(&ray.rows(0, n).into_owned()),
                w2: labeled(data, &t, ray.rows(n, t.len()).as_slice()),
            });
            v
        }
    };
    v.partitions_checked = Some(count);
    v
}

/// Isolated calmness: every complementarity branch cone must be trivial.
pub fn check_isolated_calmness(
    data: &StabilityData,
    sets: &IndexSets,
    tol: ConeTolerances,
) -> Verdict {
    let beta = sets.beta();
    let count = sets.branch_count().expect("branch count checked by caller");
    let failing = first_nontrivial(count, |idx| {
        let branch = decode_branch(&beta, idx);
        let (cone, t) = calmness_cone(data, sets, &branch);
        (cone_is_trivial(&cone, tol.rank_tol, tol.lp_tol), t)
    });
    let n = data.n();
    let mut v = match failing {
        None => Verdict::new(
            Status::Holds,
            format!("all {count} branch systems have only the trivial solution"),
        ),
        Some((idx, cv, t)) => {
            let branch = decode_branch(&beta, idx);
            let ray = cv.witness.expect("nontrivial cone carries a witness");
            let mut v = Verdict::new(
                Status::Fails,
                format!("branch {} of {count} admits a nonzero solution", idx + 1),
            );
            v.witness = Some(Witness::Branch {
                branch: branch
                    .iter()
                    .map(|&(s, choice)| BranchEntry {
                        block: data.labels[s].block,
                        row: data.labels[s].row,
                        choice,
                    })
                    .collect(),
                dx: to_vec(&ray.rows(0, n).into_owned()),
                dy: labeled(data, &t, ray.rows(n, t.len()).as_slice()),
            });
            v
        }
    };
    v.branches_checked = Some(count);
    v
}
