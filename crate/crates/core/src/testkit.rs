//! Random instances with a planted LGNE, for tests and benchmarks.
//!
//! Data are small integers so that exactly singular matrices and exact ties
//! occur with positive probability. The planted point satisfies the KKT system
//! exactly: the linear terms `c_ν` are chosen to make every player stationary.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::problem::{ConstraintKind, ConstraintMode, ConstraintSpec, Owner, PlayerSpec, Problem};
use crate::system::{KktSystem, PrimalDualPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub mode: ConstraintMode,
    pub players: usize,
    pub max_dim: usize,
    /// Rows per player (per-player mode) or in total (shared mode).
    pub max_rows: usize,
    /// Cap on the number of degenerate rows planted.
    pub max_beta: usize,
    /// Probability that a per-player row is an equality.
    pub eq_prob: f64,
    /// Entries are drawn from `-range..=range`.
    pub range: i32,
    /// Each player's own diagonal block gets a shift drawn from `0..=diag_boost`.
    pub diag_boost: i32,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec {
            mode: ConstraintMode::PerPlayer,
            players: 2,
            max_dim: 3,
            max_rows: 2,
            max_beta: 0,
            eq_prob: 0.0,
            range: 2,
            diag_boost: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub problem: Problem,
    pub x: DVector<f64>,
    /// Multiplier of every row, in file order.
    pub y: Vec<f64>,
}

impl Planted {
    /// The planted point laid out for `sys`; every block pricing a row gets that row's multiplier.
    pub fn point(&self, sys: &KktSystem) -> PrimalDualPoint {
        let y = sys
            .blocks()
            .iter()
            .map(|b| {
                DVector::from_iterator(
                    b.rows.len(),
                    b.rows
                        .iter()
                        .map(|&r| self.y[self.problem.original_index(r)]),
                )
            })
            .collect();
        PrimalDualPoint {
            x: self.x.clone(),
            y,
        }
    }
}

enum RowStatus {
    Active,
    Degenerate,
    Inactive,
}

fn int<R: Rng>(rng: &mut R, range: i32) -> f64 {
    rng.random_range(-range..=range) as f64
}

pub fn planted<R: Rng>(rng: &mut R, spec: &InstanceSpec) -> Planted {
    let dims: Vec<usize> = (0..spec.players)
        .map(|_| rng.random_range(1..=spec.max_dim))
        .collect();
    let n: usize = dims.iter().sum();
    let mut offsets = vec![0];
    for d in &dims {
        offsets.push(offsets.last().unwrap() + d);
    }
    let x = DVector::from_fn(n, |_, _| int(rng, spec.range));

    let owners: Vec<Owner> = match spec.mode {
        ConstraintMode::Shared => (0..rng.random_range(1..=spec.max_rows))
            .map(|_| Owner::Shared)
            .collect(),
        _ => (0..spec.players)
            .flat_map(|nu| vec![Owner::Player(nu); rng.random_range(0..=spec.max_rows)])
            .collect(),
    };
    let mut beta_left = spec.max_beta;
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for owner in owners {
        let mut a = DVector::from_fn(n, |_, _| int(rng, spec.range));
        if spec.mode == ConstraintMode::Classical {
            if let Owner::Player(nu) = owner {
                for j in (0..n).filter(|j| !(offsets[nu]..offsets[nu + 1]).contains(j)) {
                    a[j] = 0.0;
                }
            }
        }
        if a.iter().all(|v| *v == 0.0) {
            let j = match owner {
                Owner::Player(nu) if spec.mode == ConstraintMode::Classical => {
                    rng.random_range(offsets[nu]..offsets[nu + 1])
                }
                _ => rng.random_range(0..n),
            };
            a[j] = 1.0;
        }
        let shared = owner == Owner::Shared;
        let kind = if !shared && rng.random_bool(spec.eq_prob) {
            ConstraintKind::Eq
        } else {
            ConstraintKind::Ineq
        };
        let status = match rng.random_range(0..3) {
            _ if kind == ConstraintKind::Eq => RowStatus::Active,
            1 if beta_left > 0 => RowStatus::Degenerate,
            2 => RowStatus::Inactive,
            _ => RowStatus::Active,
        };
        let (g, mult) = match status {
            RowStatus::Active if kind == ConstraintKind::Eq => (0.0, int(rng, spec.range)),
            RowStatus::Active => (0.0, rng.random_range(1..=spec.range.max(1)) as f64),
            RowStatus::Degenerate => {
                beta_left -= 1;
                (0.0, 0.0)
            }
            RowStatus::Inactive => (-(rng.random_range(1..=spec.range.max(1)) as f64), 0.0),
        };
        let b = g - a.dot(&x);
        rows.push(ConstraintSpec {
            owner,
            kind,
            h: None,
            a,
            b,
        });
        y.push(mult);
    }

    let players = (0..spec.players)
        .map(|nu| {
            let mut q = DMatrix::from_fn(n, n, |_, _| int(rng, spec.range));
            q = (&q + q.transpose()) * 0.5;
            q.apply(|v| *v = v.round());
            let range = offsets[nu]..offsets[nu + 1];
            let boost = rng.random_range(0..=spec.diag_boost) as f64;
            for j in range.clone() {
                q[(j, j)] += boost;
            }
            let mut grad = &q * &x;
            for (row, mult) in rows.iter().zip(&y) {
                let sees = match row.owner {
                    Owner::Player(o) => o == nu,
                    Owner::Shared => true,
                };
                if sees {
                    grad += &row.a * *mult;
                }
            }
            let c = DVector::from_fn(n, |j, _| if range.contains(&j) { -grad[j] } else { 0.0 });
            PlayerSpec {
                dim: dims[nu],
                q,
                c,
            }
        })
        .collect();
    let problem = Problem::new(spec.mode, players, rows).expect("generated data are valid");
    Planted { problem, x, y }
}
