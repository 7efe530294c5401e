use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::problem::ProblemError;
use crate::system::{Formulation, KktSystem, PrimalDualPoint};

/// Names a multiplier slot by its block and original constraint index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlotLabel {
    pub block: usize,
    pub row: usize,
}

/// Derivative data of the KKT system at a point.
///
/// With `l` the stacked player Lagrangian gradients and `g` the constraint values
/// per multiplier slot: `G = ∂l/∂x`, `B = ∂l/∂y`, `A = ∂g/∂x`,
/// `q1 = l − G x̄ − B ȳ`, `q2 = −g + A x̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityData {
    pub formulation: Formulation,
    pub g: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q1: DVector<f64>,
    pub q2: DVector<f64>,
    pub ineq: Vec<bool>,
    pub labels: Vec<SlotLabel>,
    pub player_ranges: Vec<Range<usize>>,
    /// Players whose Lagrangian sees each slot.
    pub slot_players: Vec<Vec<usize>>,
}

impl StabilityData {
    pub fn assemble(sys: &KktSystem, pt: &PrimalDualPoint) -> Result<Self, ProblemError> {
        sys.check_point(pt)?;
        let problem = sys.problem();
        let g = sys.g_matrix(pt);
        let a = sys.a_matrix(&pt.x);
        let b = sys.b_matrix(&pt.x);
        let y = sys.flatten_y(&pt.y);
        let l = sys.lagrangian_grads(pt, &sys.zero_perturbation())?;
        let values = problem.constraint_values(&pt.x)?;
        let gv = DVector::from_iterator(
            sys.num_multipliers(),
            sys.slots().iter().map(|s| values[s.row]),
        );
        let q1 = l - &g * &pt.x - &b * &y;
        let q2 = -gv + &a * &pt.x;
        Ok(StabilityData {
            formulation: sys.formulation(),
            q1,
            q2,
            ineq: (0..sys.num_multipliers())
                .map(|k| sys.is_ineq_slot(k))
                .collect(),
            labels: sys
                .slots()
                .iter()
                .map(|s| SlotLabel {
                    block: s.block,
                    row: problem.original_index(s.row),
                })
                .collect(),
            player_ranges: (0..problem.num_players())
                .map(|nu| problem.player_range(nu))
                .collect(),
            slot_players: sys
                .slots()
                .iter()
                .map(|s| sys.blocks()[s.block].players.clone())
                .collect(),
            g,
            a,
            b,
        })
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn all_equalities(&self) -> bool {
        self.ineq.iter().all(|i| !i)
    }

    /// Rows of `A` for the given slots.
    pub fn a_rows(&self, slots: &[usize]) -> DMatrix<f64> {
        self.a.select_rows(slots)
    }

    /// Rows of `Bᵀ` for the given slots.
    pub fn bt_rows(&self, slots: &[usize]) -> DMatrix<f64> {
        self.b.select_columns(slots).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Problem;

    #[test]
    fn shared_fixture_data() {
        let p = Problem::from_json_str(
            r#"{"mode":"shared","players":[
                {"dim":1,"Q":[[1,1],[1,0]],"c":[0,0]},
                {"dim":1,"Q":[[0,1],[1,1]],"c":[0,0]}],
              "constraints":[{"owner":"shared","kind":"ineq","a":[1,1],"b":-1}]}"#,
        )
        .unwrap();
        let sys = KktSystem::with_default(&p);
        let d = StabilityData::assemble(&sys, &sys.zero_point()).unwrap();
        assert_eq!(d.g, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        assert_eq!(d.a, DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
        assert_eq!(d.b, d.a.transpose());
        assert_eq!(d.q2.as_slice(), &[1.0]);
    }

    #[test]
    fn sc_fixture_data() {
        let p = Problem::from_json_str(
            r#"{"mode":"per_player","players":[
                {"dim":1,"Q":[[1,0],[0,0]],"c":[1,0]},
                {"dim":1,"Q":[[0,0],[0,1]],"c":[0,1]}],
              "constraints":[
                {"owner":0,"kind":"ineq","a":[-1,0],"b":0},
                {"owner":1,"kind":"ineq","a":[0,-1],"b":0}]}"#,
        )
        .unwrap();
        let sys = KktSystem::with_default(&p);
        let d = StabilityData::assemble(&sys, &sys.zero_point()).unwrap();
        assert_eq!(d.g, DMatrix::identity(2, 2));
        assert_eq!(d.a, -DMatrix::identity(2, 2));
        assert_eq!(d.b, -DMatrix::identity(2, 2));
        assert_eq!(d.q1.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn unconstrained_data() {
        let p = Problem::from_json_str(
            r#"{"mode":"per_player","players":[{"dim":1,"Q":[[2]],"c":[0]}]}"#,
        )
        .unwrap();
        let sys = KktSystem::with_default(&p);
        let d = StabilityData::assemble(&sys, &sys.zero_point()).unwrap();
        assert_eq!(d.g, DMatrix::from_element(1, 1, 2.0));
        assert_eq!(d.m(), 0);
    }
}
