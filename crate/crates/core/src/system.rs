//! Multiplier layout and Lagrangian evaluation for a chosen formulation.
//!
//! Every formulation is described by a list of multiplier blocks. A block carries a
//! set of constraint rows, a multiplier vector of matching length, and the players
//! whose Lagrangians see that multiplier:
//!
//! * per-player and classical: block ν holds the rows owned by ν and is seen by ν only;
//! * shared, consensus: one block with every row, seen by all players;
//! * shared, per-player copies: N blocks, each with every row, block ν seen by ν only.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::problem::{ConstraintMode, Owner, Problem, ProblemError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    PerPlayer,
    Classical,
    Consensus,
    SharedCopies,
}

impl Formulation {
    pub fn default_for(mode: ConstraintMode) -> Self {
        match mode {
            ConstraintMode::PerPlayer => Formulation::PerPlayer,
            ConstraintMode::Classical => Formulation::Classical,
            ConstraintMode::Shared => Formulation::Consensus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Formulation::PerPlayer => "per_player",
            Formulation::Classical => "classical",
            Formulation::Consensus => "consensus",
            Formulation::SharedCopies => "shared_copies",
        }
    }

    /// Formulations where the multiplier Jacobian `B` equals `Aᵀ`.
    pub fn is_symmetric_coupling(self) -> bool {
        matches!(self, Formulation::Consensus | Formulation::Classical)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub players: Vec<usize>,
    /// Internal constraint indices, eq rows first.
    pub rows: Vec<usize>,
}

/// One scalar multiplier slot: which block it belongs to and which constraint row it prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub block: usize,
    pub pos: usize,
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: DVector<f64>,
    pub y: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub v: DVector<f64>,
    pub u: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdAudit {
    pub lagrangian_grad: f64,
    pub constraint_jacobian: f64,
}

impl FdAudit {
    pub fn max(&self) -> f64 {
        self.lagrangian_grad.max(self.constraint_jacobian)
    }
}

#[derive(Debug, Clone)]
pub struct KktSystem<'a> {
    problem: &'a Problem,
    formulation: Formulation,
    blocks: Vec<Block>,
    slots: Vec<Slot>,
    offsets: Vec<usize>,
}

impl<'a> KktSystem<'a> {
    pub fn new(problem: &'a Problem, formulation: Formulation) -> Result<Self, ProblemError> {
        let mode = problem.mode();
        let compatible = match formulation {
            Formulation::PerPlayer => mode == ConstraintMode::PerPlayer,
            Formulation::Classical => mode == ConstraintMode::Classical,
            Formulation::Consensus | Formulation::SharedCopies => mode == ConstraintMode::Shared,
        };
        if !compatible {
            return Err(ProblemError::Validation(format!(
                "formulation {} does not apply to {} problems",
                formulation.as_str(),
                mode.as_str()
            )));
        }
        let all_rows: Vec<usize> = (0..problem.m()).collect();
        let blocks: Vec<Block> = match formulation {
            Formulation::PerPlayer | Formulation::Classical => (0..problem.num_players())
                .map(|nu| Block {
                    players: vec![nu],
                    rows: (0..problem.m())
                        .filter(|&i| problem.constraints()[i].owner == Owner::Player(nu))
                        .collect(),
                })
                .collect(),
            Formulation::Consensus => vec![Block {
                players: (0..problem.num_players()).collect(),
                rows: all_rows,
            }],
            Formulation::SharedCopies => (0..problem.num_players())
                .map(|nu| Block {
                    players: vec![nu],
                    rows: all_rows.clone(),
                })
                .collect(),
        };
        let mut slots = Vec::new();
        let mut offsets = vec![0];
        for (b, block) in blocks.iter().enumerate() {
            for (pos, &row) in block.rows.iter().enumerate() {
                slots.push(Slot { block: b, pos, row });
            }
            offsets.push(slots.len());
        }
        Ok(KktSystem {
            problem,
            formulation,
            blocks,
            slots,
            offsets,
        })
    }

    pub fn with_default(problem: &'a Problem) -> Self {
        Self::new(problem, Formulation::default_for(problem.mode()))
            .expect("default formulation always matches the mode")
    }

    pub fn problem(&self) -> &'a Problem {
        self.problem
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Flat multiplier slots, block by block.
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }

    /// Total number of scalar multipliers.
    pub fn num_multipliers(&self) -> usize {
        self.slots.len()
    }

    pub fn block_range(&self, b: usize) -> std::ops::Range<usize> {
        self.offsets[b]..self.offsets[b + 1]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.rows.len()).collect()
    }

    pub fn is_ineq_slot(&self, k: usize) -> bool {
        self.problem.constraints()[self.slots[k].row].is_ineq()
    }

    pub fn blocks_of_player(&self, nu: usize) -> impl Iterator<Item = usize> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .filter(move |(_, b)| b.players.contains(&nu))
            .map(|(i, _)| i)
    }

    pub fn zero_point(&self) -> PrimalDualPoint {
        PrimalDualPoint {
            x: DVector::zeros(self.n()),
            y: self.block_sizes().into_iter().map(DVector::zeros).collect(),
        }
    }

    pub fn zero_perturbation(&self) -> Perturbation {
        Perturbation {
            v: DVector::zeros(self.n()),
            u: self.block_sizes().into_iter().map(DVector::zeros).collect(),
        }
    }

    pub fn flatten_y(&self, y: &[DVector<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.num_multipliers(),
            y.iter().flat_map(|b| b.iter().copied()),
        )
    }

    pub fn split_y(&self, flat: &DVector<f64>) -> Vec<DVector<f64>> {
        (0..self.blocks.len())
            .map(|b| flat.rows_range(self.block_range(b)).into_owned())
            .collect()
    }

    pub fn check_point(&self, pt: &PrimalDualPoint) -> Result<(), ProblemError> {
        self.problem.check_x(&pt.x)?;
        self.check_blocks(&pt.y, "y")
    }

    pub fn check_perturbation(&self, p: &Perturbation) -> Result<(), ProblemError> {
        if p.v.len() != self.n() {
            return Err(ProblemError::Dimension(format!(
                "v has length {}, expected {}",
                p.v.len(),
                self.n()
            )));
        }
        self.check_blocks(&p.u, "u")
    }

    fn check_blocks(&self, y: &[DVector<f64>], what: &str) -> Result<(), ProblemError> {
        let sizes = self.block_sizes();
        if y.len() != sizes.len() || y.iter().zip(&sizes).any(|(v, &s)| v.len() != s) {
            return Err(ProblemError::Dimension(format!(
                "{what} has block sizes {:?}, expected {sizes:?}",
                y.iter().map(|v| v.len()).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    /// `∇_{x^ν} L_ν(x, y; v, u)`; `u` does not enter the gradient.
    pub fn player_lagrangian_grad(
        &self,
        pt: &PrimalDualPoint,
        pert: &Perturbation,
        nu: usize,
    ) -> Result<DVector<f64>, ProblemError> {
        self.check_point(pt)?;
        self.check_perturbation(pert)?;
        Ok(self.player_grad_unchecked(pt, &pert.v, nu))
    }

    fn player_grad_unchecked(
        &self,
        pt: &PrimalDualPoint,
        v: &DVector<f64>,
        nu: usize,
    ) -> DVector<f64> {
        let range = self.problem.player_range(nu);
        let mut g = self.problem.players()[nu]
            .gradient(&pt.x)
            .rows_range(range.clone())
            .into_owned();
        for b in self.blocks_of_player(nu) {
            for (pos, &row) in self.blocks[b].rows.iter().enumerate() {
                let yi = pt.y[b][pos];
                if yi != 0.0 {
                    let grad = self.problem.constraints()[row].gradient(&pt.x);
                    g.axpy(yi, &grad.rows_range(range.clone()), 1.0);
                }
            }
        }
        g -= v.rows_range(range);
        g
    }

    /// All players' Lagrangian gradients stacked into a length-n vector.
    pub fn lagrangian_grads(
        &self,
        pt: &PrimalDualPoint,
        pert: &Perturbation,
    ) -> Result<DVector<f64>, ProblemError> {
        self.check_point(pt)?;
        self.check_perturbation(pert)?;
        let mut out = DVector::zeros(self.n());
        for nu in 0..self.problem.num_players() {
            let range = self.problem.player_range(nu);
            out.rows_range_mut(range)
                .copy_from(&self.player_grad_unchecked(pt, &pert.v, nu));
        }
        Ok(out)
    }

    /// Player Lagrangian value `θ_ν + Σ y_i (g_i − u_i) − ⟨v^ν, x^ν⟩`.
    pub fn player_lagrangian(
        &self,
        pt: &PrimalDualPoint,
        pert: &Perturbation,
        nu: usize,
    ) -> Result<f64, ProblemError> {
        self.check_point(pt)?;
        self.check_perturbation(pert)?;
        let range = self.problem.player_range(nu);
        let mut val = self.problem.players()[nu].objective(&pt.x);
        for b in self.blocks_of_player(nu) {
            for (pos, &row) in self.blocks[b].rows.iter().enumerate() {
                val +=
                    pt.y[b][pos] * (self.problem.constraints()[row].value(&pt.x) - pert.u[b][pos]);
            }
        }
        val -= pert
            .v
            .rows_range(range.clone())
            .dot(&pt.x.rows_range(range));
        Ok(val)
    }

    /// Constraint values grouped by block in internal order.
    pub fn eval_constraints(&self, x: &DVector<f64>) -> Result<Vec<DVector<f64>>, ProblemError> {
        let all = self.problem.constraint_values(x)?;
        Ok(self
            .blocks
            .iter()
            .map(|b| DVector::from_iterator(b.rows.len(), b.rows.iter().map(|&i| all[i])))
            .collect())
    }

    /// Full `m×n` Jacobian of the constraint rows (internal order).
    pub fn constraint_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = self.problem.m();
        let mut jac = DMatrix::zeros(m, self.n());
        for (i, c) in self.problem.constraints().iter().enumerate() {
            jac.row_mut(i).tr_copy_from(&c.gradient(x));
        }
        jac
    }

    /// Player-wise Hessian rows: block-row ν is row-block ν of
    /// `Q_ν + Σ_{b∋ν} Σ_i y_{b,i} H_i`. Not symmetric in general.
    pub fn g_matrix(&self, pt: &PrimalDualPoint) -> DMatrix<f64> {
        let n = self.n();
        let mut g = DMatrix::zeros(n, n);
        for nu in 0..self.problem.num_players() {
            let range = self.problem.player_range(nu);
            let mut full = self.problem.players()[nu].q.clone();
            for b in self.blocks_of_player(nu) {
                for (pos, &row) in self.blocks[b].rows.iter().enumerate() {
                    if let Some(h) = &self.problem.constraints()[row].h {
                        full += h * pt.y[b][pos];
                    }
                }
            }
            g.rows_range_mut(range.clone())
                .copy_from(&full.rows_range(range));
        }
        g
    }

    /// One full constraint gradient per multiplier slot (`slots × n`).
    pub fn a_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let jac = self.constraint_jacobian(x);
        DMatrix::from_fn(self.num_multipliers(), self.n(), |k, j| {
            jac[(self.slots[k].row, j)]
        })
    }

    /// Derivative of the stacked Lagrangian gradients with respect to the
    /// multipliers (`n × slots`): column `k` holds `∇_{x^ν} g_i` in the rows of
    /// every player ν that sees slot `k`.
    pub fn b_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let jac = self.constraint_jacobian(x);
        let mut b = DMatrix::zeros(self.n(), self.num_multipliers());
        for (k, slot) in self.slots.iter().enumerate() {
            for &nu in &self.blocks[slot.block].players {
                for j in self.problem.player_range(nu) {
                    b[(j, k)] = jac[(slot.row, j)];
                }
            }
        }
        b
    }

    /// Compares analytic derivatives against central differences of the player
    /// Lagrangians and constraint rows. Errors are `|fd − exact| / max(1, |exact|)`.
    pub fn fd_audit(&self, pt: &PrimalDualPoint, step: f64) -> Result<FdAudit, ProblemError> {
        self.check_point(pt)?;
        let zero = self.zero_perturbation();
        let rel = |fd: f64, exact: f64| (fd - exact).abs() / exact.abs().max(1.0);
        let shifted = |j: usize, h: f64| {
            let mut p = pt.clone();
            p.x[j] += h;
            p
        };
        let mut lag_err: f64 = 0.0;
        for nu in 0..self.problem.num_players() {
            let exact = self.player_grad_unchecked(pt, &zero.v, nu);
            for (k, j) in self.problem.player_range(nu).enumerate() {
                let plus = self.player_lagrangian(&shifted(j, step), &zero, nu)?;
                let minus = self.player_lagrangian(&shifted(j, -step), &zero, nu)?;
                lag_err = lag_err.max(rel((plus - minus) / (2.0 * step), exact[k]));
            }
        }
        let jac = self.constraint_jacobian(&pt.x);
        let mut jac_err: f64 = 0.0;
        for j in 0..self.n() {
            let plus = self.problem.constraint_values(&shifted(j, step).x)?;
            let minus = self.problem.constraint_values(&shifted(j, -step).x)?;
            for i in 0..self.problem.m() {
                jac_err = jac_err.max(rel((plus[i] - minus[i]) / (2.0 * step), jac[(i, j)]));
            }
        }
        Ok(FdAudit {
            lagrangian_grad: lag_err,
            constraint_jacobian: jac_err,
        })
    }

    /// Builds a point from file data. `y` is given per block in file row order, or as
    /// one flat vector (split by block sizes).
    pub fn point_from_file(&self, file: &PointFile) -> Result<PrimalDualPoint, ProblemError> {
        let x = DVector::from_vec(file.x.clone());
        self.problem.check_x(&x)?;
        let blocks: Vec<Vec<f64>> = match &file.y {
            None => self
                .block_sizes()
                .into_iter()
                .map(|s| vec![0.0; s])
                .collect(),
            Some(YField::Blocks(b)) => b.clone(),
            Some(YField::Flat(flat)) => {
                if flat.len() != self.num_multipliers() {
                    return Err(ProblemError::Dimension(format!(
                        "y has length {}, expected {}",
                        flat.len(),
                        self.num_multipliers()
                    )));
                }
                (0..self.blocks.len())
                    .map(|b| flat[self.block_range(b)].to_vec())
                    .collect()
            }
        };
        let raw: Vec<DVector<f64>> = blocks.into_iter().map(DVector::from_vec).collect();
        self.check_blocks(&raw, "y")?;
        let y = raw
            .iter()
            .enumerate()
            .map(|(b, vals)| {
                let order = self.file_order(b);
                let mut internal = DVector::zeros(vals.len());
                for (file_pos, &pos) in order.iter().enumerate() {
                    internal[pos] = vals[file_pos];
                }
                internal
            })
            .collect();
        Ok(PrimalDualPoint { x, y })
    }

    /// Inverse of [`Self::point_from_file`]: y blocks in file row order.
    pub fn point_to_file(&self, pt: &PrimalDualPoint) -> PointFile {
        let y = (0..self.blocks.len())
            .map(|b| self.file_order(b).iter().map(|&pos| pt.y[b][pos]).collect())
            .collect();
        PointFile {
            x: pt.x.iter().copied().collect(),
            y: Some(YField::Blocks(y)),
        }
    }

    /// Positions within block `b`, listed in ascending original row index.
    pub fn file_order(&self, b: usize) -> Vec<usize> {
        let rows = &self.blocks[b].rows;
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by_key(|&pos| self.problem.original_index(rows[pos]));
        order
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, serde::Serialize)]
pub struct PointFile {
    pub x: Vec<f64>,
    #[serde(default)]
    pub y: Option<YField>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, serde::Serialize)]
#[serde(untagged)]
pub enum YField {
    Blocks(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}
