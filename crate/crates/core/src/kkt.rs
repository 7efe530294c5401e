//! LGNE computation by a damped semismooth Newton method.
//!
//! The KKT conditions are written as `Φ(x, y) = 0` with one block of Lagrangian
//! gradients per player, plain residuals `g_i − u_i` for equality rows and the
//! Fischer–Burmeister value `φ(y_i, −(g_i − u_i))` for inequality rows, where
//! `φ(a, b) = √(a² + b²) − a − b`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::linalg::{Lu, Svd, DEFAULT_RANK_TOL};
use crate::problem::{ConstraintMode, Problem, ProblemError};
use crate::system::{Formulation, KktSystem, Perturbation, PrimalDualPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveParams {
    pub max_iter: usize,
    pub residual_tol: f64,
    pub armijo_slope: f64,
    pub step_shrink: f64,
    pub min_step: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            max_iter: 100,
            residual_tol: 1e-10,
            armijo_slope: 1e-4,
            step_shrink: 0.5,
            min_step: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub point: PrimalDualPoint,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Iterations whose Newton matrix was singular and used a least-squares step.
    pub least_squares_steps: usize,
}

/// Fischer–Burmeister function.
pub fn fischer_burmeister(a: f64, b: f64) -> f64 {
    a.hypot(b) - a - b
}

/// Element of the generalized gradient of φ at `(a, b)`. At the kink the element
/// for direction `(1, 1)/√2` is used.
fn fb_gradient(a: f64, b: f64) -> (f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        (s - 1.0, s - 1.0)
    } else {
        (a / r - 1.0, b / r - 1.0)
    }
}

/// Stacked KKT map `Φ`.
pub fn kkt_vector(
    sys: &KktSystem,
    pt: &PrimalDualPoint,
    pert: &Perturbation,
) -> Result<DVector<f64>, ProblemError> {
    let grads = sys.lagrangian_grads(pt, pert)?;
    let values = sys.problem().constraint_values(&pt.x)?;
    let n = sys.n();
    let mut phi = DVector::zeros(n + sys.num_multipliers());
    phi.rows_range_mut(0..n).copy_from(&grads);
    for (k, slot) in sys.slots().iter().enumerate() {
        let shifted = values[slot.row] - pert.u[slot.block][slot.pos];
        phi[n + k] = if sys.is_ineq_slot(k) {
            fischer_burmeister(pt.y[slot.block][slot.pos], -shifted)
        } else {
            shifted
        };
    }
    Ok(phi)
}

/// Euclidean norm of `Φ`.
pub fn kkt_residual(
    sys: &KktSystem,
    pt: &PrimalDualPoint,
    pert: &Perturbation,
) -> Result<f64, ProblemError> {
    Ok(kkt_vector(sys, pt, pert)?.norm())
}

/// Largest violation of the sign and complementarity conditions:
/// `|g − u|` on equality rows, and `−y`, `g − u`, `|y (g − u)|` on inequality rows.
pub fn complementarity_violation(
    sys: &KktSystem,
    pt: &PrimalDualPoint,
    pert: &Perturbation,
) -> Result<f64, ProblemError> {
    sys.check_point(pt)?;
    sys.check_perturbation(pert)?;
    let values = sys.problem().constraint_values(&pt.x)?;
    let mut worst: f64 = 0.0;
    for (k, slot) in sys.slots().iter().enumerate() {
        let s = values[slot.row] - pert.u[slot.block][slot.pos];
        let y = pt.y[slot.block][slot.pos];
        if sys.is_ineq_slot(k) {
            worst = worst.max(-y).max(s).max((y * s).abs());
        } else {
            worst = worst.max(s.abs());
        }
    }
    Ok(worst)
}

/// One element of the generalized Jacobian of `Φ`.
pub fn kkt_jacobian(sys: &KktSystem, pt: &PrimalDualPoint, pert: &Perturbation) -> DMatrix<f64> {
    let n = sys.n();
    let m = sys.num_multipliers();
    let g = sys.g_matrix(pt);
    let a = sys.a_matrix(&pt.x);
    let b = sys.b_matrix(&pt.x);
    let values = sys
        .problem()
        .constraint_values(&pt.x)
        .expect("point checked by caller");
    let mut jac = DMatrix::zeros(n + m, n + m);
    jac.view_mut((0, 0), (n, n)).copy_from(&g);
    jac.view_mut((0, n), (n, m)).copy_from(&b);
    for (k, slot) in sys.slots().iter().enumerate() {
        if sys.is_ineq_slot(k) {
            let y = pt.y[slot.block][slot.pos];
            let s = values[slot.row] - pert.u[slot.block][slot.pos];
            let (da, db) = fb_gradient(y, -s);
            for j in 0..n {
                jac[(n + k, j)] = -db * a[(k, j)];
            }
            jac[(n + k, n + k)] = da;
        } else {
            for j in 0..n {
                jac[(n + k, j)] = a[(k, j)];
            }
        }
    }
    jac
}

fn pack(sys: &KktSystem, pt: &PrimalDualPoint) -> DVector<f64> {
    let y = sys.flatten_y(&pt.y);
    DVector::from_iterator(sys.n() + y.len(), pt.x.iter().chain(y.iter()).copied())
}

fn unpack(sys: &KktSystem, z: &DVector<f64>) -> PrimalDualPoint {
    let n = sys.n();
    PrimalDualPoint {
        x: z.rows_range(0..n).into_owned(),
        y: sys.split_y(&z.rows_range(n..z.len()).into_owned()),
    }
}

/// Damped semismooth Newton on `Φ = 0` with an Armijo search on `½‖Φ‖²`.
///
/// A singular Newton matrix falls back to the minimum-norm least-squares step; if
/// that direction admits no Armijo step the negative merit gradient is tried.
/// The method stops without error when neither direction makes progress.
pub fn solve_lgne(
    sys: &KktSystem,
    start: &PrimalDualPoint,
    pert: &Perturbation,
    params: &SolveParams,
) -> Result<SolveResult, ProblemError> {
    sys.check_point(start)?;
    sys.check_perturbation(pert)?;
    let mut pt = start.clone();
    let mut phi = kkt_vector(sys, &pt, pert)?;
    let mut merit = 0.5 * phi.norm_squared();
    let mut iterations = 0;
    let mut least_squares_steps = 0;
    while phi.norm() > params.residual_tol && iterations < params.max_iter {
        let jac = kkt_jacobian(sys, &pt, pert);
        let rhs = -&phi;
        let newton = match Lu::new(&jac, 1e-14).solve(&rhs) {
            Some(d) => d,
            None => {
                least_squares_steps += 1;
                Svd::new(&jac).solve(&rhs, DEFAULT_RANK_TOL)
            }
        };
        let gradient = jac.transpose() * &phi;
        let z = pack(sys, &pt);
        let mut accepted = None;
        for dir in [newton, -&gradient] {
            let slope = gradient.dot(&dir);
            if slope.is_nan() || slope >= 0.0 {
                continue;
            }
            if let Some(step) = line_search(sys, pert, &z, &dir, merit, slope, params)? {
                accepted = Some(step);
                break;
            }
        }
        let Some((next, next_phi)) = accepted else {
            break;
        };
        pt = next;
        merit = 0.5 * next_phi.norm_squared();
        phi = next_phi;
        iterations += 1;
    }
    let residual = phi.norm();
    Ok(SolveResult {
        point: pt,
        residual,
        iterations,
        converged: residual <= params.residual_tol,
        least_squares_steps,
    })
}

fn line_search(
    sys: &KktSystem,
    pert: &Perturbation,
    z: &DVector<f64>,
    dir: &DVector<f64>,
    merit: f64,
    slope: f64,
    params: &SolveParams,
) -> Result<Option<(PrimalDualPoint, DVector<f64>)>, ProblemError> {
    let mut t = 1.0;
    while t >= params.min_step {
        let cand = unpack(sys, &(z + dir * t));
        let phi = kkt_vector(sys, &cand, pert)?;
        let m = 0.5 * phi.norm_squared();
        if m.is_finite() && m <= merit + params.armijo_slope * t * slope {
            return Ok(Some((cand, phi)));
        }
        t *= params.step_shrink;
    }
    Ok(None)
}

/// Solves the consensus system of a shared-constraint problem: all players price
/// the shared rows with one common multiplier vector.
pub fn solve_consensus(
    problem: &Problem,
    start: &PrimalDualPoint,
    pert: &Perturbation,
    params: &SolveParams,
) -> Result<SolveResult, ProblemError> {
    if problem.mode() != ConstraintMode::Shared {
        return Err(ProblemError::Validation(
            "consensus solve needs a shared-constraint problem".into(),
        ));
    }
    let sys = KktSystem::new(problem, Formulation::Consensus)?;
    solve_lgne(&sys, start, pert, params)
}

/// Copies a consensus multiplier into every player's block of the per-player
/// shared formulation.
pub fn expand_consensus(copies: &KktSystem, pt: &PrimalDualPoint) -> PrimalDualPoint {
    PrimalDualPoint {
        x: pt.x.clone(),
        y: vec![pt.y[0].clone(); copies.blocks().len()],
    }
}
