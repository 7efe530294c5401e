//! The linearized generalized equation `δ ∈ q̄ + M z + N_Θ(z)` at a base point,
//! with `M = [[G, B], [−A, 0]]` and `Θ = ℝⁿ × K°`.

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::certificates::StabilityData;
use crate::kkt::fischer_burmeister;
use crate::linalg::block_matrix;
use crate::system::{Formulation, KktSystem, Perturbation};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedGE {
    pub m: DMatrix<f64>,
    pub qbar: DVector<f64>,
    pub ineq: Vec<bool>,
    pub formulation: Formulation,
    n: usize,
}

impl LinearizedGE {
    pub fn build(data: &StabilityData) -> Self {
        let n = data.n();
        let m = data.m();
        let neg_a = -&data.a;
        let mm = block_matrix(
            &[n, m],
            &[n, m],
            &[&[Some(&data.g), Some(&data.b)], &[Some(&neg_a), None]],
        );
        let qbar = DVector::from_iterator(n + m, data.q1.iter().chain(data.q2.iter()).copied());
        LinearizedGE {
            m: mm,
            qbar,
            ineq: data.ineq.clone(),
            formulation: data.formulation,
            n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Residual of the inclusion at `z = (x, y)` for the right-hand side `δ`.
    ///
    /// Primal rows: `δ₁ − q̄₁ − (Gx + By)`. Multiplier rows with
    /// `s = q̄₂ − Ax − δ₂`: `−s` on equality rows and `φ(y_i, s_i)` on inequality
    /// rows, which vanishes iff `y_i ≥ 0`, `s_i ≥ 0`, `y_i s_i = 0`.
    pub fn residual(&self, z: &DVector<f64>, delta: &DVector<f64>) -> f64 {
        let n = self.n;
        let lin = &self.qbar + &self.m * z;
        let mut r = DVector::zeros(z.len());
        for i in 0..n {
            r[i] = delta[i] - lin[i];
        }
        for (k, &ineq) in self.ineq.iter().enumerate() {
            let s = lin[n + k] - delta[n + k];
            r[n + k] = if ineq {
                fischer_burmeister(z[n + k], s)
            } else {
                -s
            };
        }
        r.norm()
    }

    /// Right-hand side for a canonical perturbation: `δ = (v, −u)`.
    pub fn delta(sys: &KktSystem, pert: &Perturbation) -> DVector<f64> {
        let u = sys.flatten_y(&pert.u);
        DVector::from_iterator(
            pert.v.len() + u.len(),
            pert.v.iter().copied().chain(u.iter().map(|v| -v)),
        )
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Vec<f64>> = self
            .m
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        json!({
            "M": rows,
            "qbar": self.qbar.iter().copied().collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Problem;
    use crate::system::PrimalDualPoint;

    const SC: &str = r#"{"mode":"per_player","players":[
        {"dim":1,"Q":[[1,0],[0,0]],"c":[1,0]},
        {"dim":1,"Q":[[0,0],[0,1]],"c":[0,1]}],
      "constraints":[
        {"owner":0,"kind":"ineq","a":[-1,0],"b":0},
        {"owner":1,"kind":"ineq","a":[0,-1],"b":0}]}"#;

    #[test]
    fn sc_blocks() {
        let p = Problem::from_json_str(SC).unwrap();
        let sys = KktSystem::with_default(&p);
        let pt = PrimalDualPoint {
            x: DVector::zeros(2),
            y: vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![1.0])],
        };
        let data = StabilityData::assemble(&sys, &pt).unwrap();
        let lin = LinearizedGE::build(&data);
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, -1.0, 0.0, //
                0.0, 1.0, 0.0, -1.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0,
            ],
        );
        assert_eq!(lin.m, expected);
        let z = DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(lin.residual(&z, &DVector::zeros(4)), 0.0);
    }

    #[test]
    fn unconstrained_is_g() {
        let p = Problem::from_json_str(
            r#"{"mode":"per_player","players":[{"dim":1,"Q":[[2]],"c":[1]}]}"#,
        )
        .unwrap();
        let sys = KktSystem::with_default(&p);
        let data = StabilityData::assemble(&sys, &sys.zero_point()).unwrap();
        let lin = LinearizedGE::build(&data);
        assert_eq!(lin.m, DMatrix::from_element(1, 1, 2.0));
    }

    #[test]
    fn degenerate_residual_matches_direct_formula() {
        let p = Problem::from_json_str(
            r#"{"mode":"per_player","players":[{"dim":1,"Q":[[1]],"c":[0]}],
              "constraints":[{"owner":0,"kind":"ineq","a":[-1],"b":0}]}"#,
        )
        .unwrap();
        let sys = KktSystem::with_default(&p);
        let data = StabilityData::assemble(&sys, &sys.zero_point()).unwrap();
        let lin = LinearizedGE::build(&data);
        for (x, y, d1, d2) in [
            (0.3f64, 0.7, 0.1, -0.2),
            (-1.0, 2.0, 0.0, 0.5),
            (0.0, 0.0, 0.0, 0.0),
        ] {
            let z = DVector::from_vec(vec![x, y]);
            let delta = DVector::from_vec(vec![d1, d2]);
            // x − y = d1 and 0 ≤ y ⊥ x − d2 ≥ 0
            let direct = ((d1 - (x - y)).powi(2) + fischer_burmeister(y, x - d2).powi(2)).sqrt();
            assert!((lin.residual(&z, &delta) - direct).abs() < 1e-15);
        }
    }
}
