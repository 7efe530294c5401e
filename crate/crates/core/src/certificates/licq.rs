use super::data::StabilityData;
use super::verdict::{to_vec, Status, Verdict, Witness};
use crate::index_sets::IndexSets;
use crate::linalg::nullspace;

/// Linear independence of the gradients of all active rows (α ∪ β).
pub fn check_licq(data: &StabilityData, sets: &IndexSets, rank_tol: f64) -> Verdict {
    if !data.formulation.is_symmetric_coupling() {
        return Verdict::not_applicable("stated for consensus and classical formulations only");
    }
    let mut active = sets.alpha();
    active.extend(sets.beta());
    active.sort_unstable();
    let rows = data.a_rows(&active);
    let dependence = nullspace(&rows.transpose(), rank_tol);
    if dependence.ncols() == 0 {
        return Verdict::new(
            Status::Holds,
            format!("{} active gradients are linearly independent", active.len()),
        );
    }
    let c = dependence.column(0).into_owned();
    let c = &c / c.amax();
    let mut v = Verdict::new(Status::Fails, "active gradients are linearly dependent");
    v.witness = Some(Witness::Dependence {
        rows: active.iter().map(|&s| data.labels[s]).collect(),
        coefficients: to_vec(&c),
    });
    v
}
