//! GNEP data model.
//!
//! A [`Problem`] holds N players with quadratic objectives
//! `θ_ν(x) = ½ xᵀQ_ν x + c_νᵀx` over the full profile `x = (x¹, …, x^N)`, and a list
//! of affine-or-quadratic constraint rows `g_i(x) = ½ xᵀH_i x + a_iᵀx + b_i`.
//! Equality rows mean `g_i(x) = 0`, inequality rows mean `g_i(x) ≤ 0`.
//!
//! Rows are stored internally grouped by owner with every equality row ahead of the
//! inequality rows of the same owner. The permutation back to file order is kept so
//! that reports can name rows by their original index.

use std::io::Read;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    PerPlayer,
    Shared,
    Classical,
}

impl ConstraintMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintMode::PerPlayer => "per_player",
            ConstraintMode::Shared => "shared",
            ConstraintMode::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Eq,
    Ineq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Player(usize),
    Shared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerSpec {
    pub dim: usize,
    /// Full `n×n` symmetric Hessian of the player's objective.
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl PlayerSpec {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x)
    }

    /// Full gradient `Qx + c`; only the player's own block enters its KKT system.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x + &self.c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub owner: Owner,
    pub kind: ConstraintKind,
    /// Quadratic part; `None` for affine rows.
    pub h: Option<DMatrix<f64>>,
    pub a: DVector<f64>,
    pub b: f64,
}

impl ConstraintSpec {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let quad = self.h.as_ref().map_or(0.0, |h| 0.5 * x.dot(&(h * x)));
        quad + self.a.dot(x) + self.b
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.h {
            Some(h) => h * x + &self.a,
            None => self.a.clone(),
        }
    }

    pub fn is_ineq(&self) -> bool {
        self.kind == ConstraintKind::Ineq
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    mode: ConstraintMode,
    players: Vec<PlayerSpec>,
    /// Internal (eq-first per owner) order.
    constraints: Vec<ConstraintSpec>,
    /// `original[i]` is the file index of internal row `i`.
    original: Vec<usize>,
    offsets: Vec<usize>,
}

impl Problem {
    /// Validates the data and reorders rows eq-first within each owner.
    pub fn new(
        mode: ConstraintMode,
        players: Vec<PlayerSpec>,
        constraints: Vec<ConstraintSpec>,
    ) -> Result<Self, ProblemError> {
        if players.is_empty() {
            return Err(ProblemError::Validation(
                "at least one player is required".into(),
            ));
        }
        let mut offsets = Vec::with_capacity(players.len() + 1);
        offsets.push(0);
        for (nu, p) in players.iter().enumerate() {
            if p.dim == 0 {
                return Err(ProblemError::Validation(format!("player {nu} has dim 0")));
            }
            offsets.push(offsets[nu] + p.dim);
        }
        let n = offsets[players.len()];
        for (nu, p) in players.iter().enumerate() {
            check_square(&p.q, n, &format!("player {nu} Q"))?;
            check_symmetric(&p.q, &format!("player {nu} Q"))?;
            if p.c.len() != n {
                return Err(ProblemError::Validation(format!(
                    "player {nu} c has length {}, expected {n}",
                    p.c.len()
                )));
            }
            check_finite(p.c.iter().chain(p.q.iter()), &format!("player {nu}"))?;
        }
        for (i, con) in constraints.iter().enumerate() {
            if con.a.len() != n {
                return Err(ProblemError::Validation(format!(
                    "constraint {i} a has length {}, expected {n}",
                    con.a.len()
                )));
            }
            if let Some(h) = &con.h {
                check_square(h, n, &format!("constraint {i} H"))?;
                check_symmetric(h, &format!("constraint {i} H"))?;
                check_finite(h.iter(), &format!("constraint {i}"))?;
            }
            check_finite(
                con.a.iter().chain(std::iter::once(&con.b)),
                &format!("constraint {i}"),
            )?;
            match (mode, con.owner) {
                (ConstraintMode::Shared, Owner::Shared) => {}
                (ConstraintMode::Shared, Owner::Player(_)) => {
                    return Err(ProblemError::Validation(format!(
                        "constraint {i}: shared mode requires owner \"shared\""
                    )))
                }
                (_, Owner::Shared) => {
                    return Err(ProblemError::Validation(format!(
                        "constraint {i}: {} mode requires a player owner",
                        mode.as_str()
                    )))
                }
                (_, Owner::Player(nu)) if nu >= players.len() => {
                    return Err(ProblemError::Validation(format!(
                        "constraint {i}: owner {nu} out of range"
                    )))
                }
                _ => {}
            }
            if mode == ConstraintMode::Classical {
                if let Owner::Player(nu) = con.owner {
                    check_own_block(con, offsets[nu]..offsets[nu + 1], i)?;
                }
            }
        }

        let mut order: Vec<usize> = (0..constraints.len()).collect();
        order.sort_by_key(|&i| {
            let owner = match constraints[i].owner {
                Owner::Player(nu) => nu,
                Owner::Shared => 0,
            };
            (owner, constraints[i].kind, i)
        });
        let internal = order.iter().map(|&i| constraints[i].clone()).collect();
        Ok(Problem {
            mode,
            players,
            constraints: internal,
            original: order,
            offsets,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self, ProblemError> {
        let raw: RawProblem = serde_json::from_str(s)?;
        raw.into_problem()
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, ProblemError> {
        let raw: RawProblem = serde_json::from_reader(reader)?;
        raw.into_problem()
    }

    /// Serializes back to the file schema, rows in original order.
    pub fn to_json_value(&self) -> Value {
        let mut rows: Vec<(usize, &ConstraintSpec)> = self
            .original
            .iter()
            .copied()
            .zip(self.constraints.iter())
            .collect();
        rows.sort_by_key(|(orig, _)| *orig);
        let players: Vec<Value> = self
            .players
            .iter()
            .map(|p| {
                serde_json::json!({
                    "dim": p.dim,
                    "Q": matrix_rows(&p.q),
                    "c": p.c.iter().copied().collect::<Vec<_>>(),
                })
            })
            .collect();
        let constraints: Vec<Value> = rows
            .into_iter()
            .map(|(_, c)| {
                let owner = match c.owner {
                    Owner::Player(nu) => Value::from(nu),
                    Owner::Shared => Value::from("shared"),
                };
                let kind = match c.kind {
                    ConstraintKind::Eq => "eq",
                    ConstraintKind::Ineq => "ineq",
                };
                serde_json::json!({
                    "owner": owner,
                    "kind": kind,
                    "H": c.h.as_ref().map(matrix_rows),
                    "a": c.a.iter().copied().collect::<Vec<_>>(),
                    "b": c.b,
                })
            })
            .collect();
        serde_json::json!({
            "mode": self.mode.as_str(),
            "players": players,
            "constraints": constraints,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("problem serializes")
    }

    pub fn mode(&self) -> ConstraintMode {
        self.mode
    }

    pub fn players(&self) -> &[PlayerSpec] {
        &self.players
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    /// Total primal dimension.
    pub fn n(&self) -> usize {
        *self.offsets.last().expect("offsets nonempty")
    }

    /// Number of constraint rows.
    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn player_range(&self, nu: usize) -> Range<usize> {
        self.offsets[nu]..self.offsets[nu + 1]
    }

    /// Player that owns primal coordinate `j`.
    pub fn player_of(&self, j: usize) -> usize {
        self.offsets.partition_point(|&o| o <= j) - 1
    }

    /// Rows in internal order.
    pub fn constraints(&self) -> &[ConstraintSpec] {
        &self.constraints
    }

    pub fn original_index(&self, internal: usize) -> usize {
        self.original[internal]
    }

    pub fn internal_index(&self, original: usize) -> Option<usize> {
        self.original.iter().position(|&o| o == original)
    }

    /// Constraint values in internal order.
    pub fn constraint_values(&self, x: &DVector<f64>) -> Result<DVector<f64>, ProblemError> {
        self.check_x(x)?;
        Ok(DVector::from_iterator(
            self.m(),
            self.constraints.iter().map(|c| c.value(x)),
        ))
    }

    /// Constraint values keyed by original file index.
    pub fn constraint_values_original(&self, x: &DVector<f64>) -> Result<Vec<f64>, ProblemError> {
        let internal = self.constraint_values(x)?;
        let mut out = vec![0.0; self.m()];
        for (i, v) in internal.iter().enumerate() {
            out[self.original[i]] = *v;
        }
        Ok(out)
    }

    pub fn check_x(&self, x: &DVector<f64>) -> Result<(), ProblemError> {
        if x.len() != self.n() {
            return Err(ProblemError::Dimension(format!(
                "x has length {}, expected {}",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn check_square(m: &DMatrix<f64>, n: usize, what: &str) -> Result<(), ProblemError> {
    if m.nrows() != n || m.ncols() != n {
        return Err(ProblemError::Validation(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<(), ProblemError> {
    for i in 0..m.nrows() {
        for j in 0..i {
            if m[(i, j)] != m[(j, i)] {
                return Err(ProblemError::Validation(format!(
                    "{what} is not symmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

fn check_finite<'a>(
    mut values: impl Iterator<Item = &'a f64>,
    what: &str,
) -> Result<(), ProblemError> {
    if values.any(|v| !v.is_finite()) {
        return Err(ProblemError::Validation(format!(
            "{what} has a non-finite entry"
        )));
    }
    Ok(())
}

fn check_own_block(con: &ConstraintSpec, own: Range<usize>, i: usize) -> Result<(), ProblemError> {
    let foreign = |j: usize| !own.contains(&j);
    if con
        .a
        .iter()
        .enumerate()
        .any(|(j, v)| foreign(j) && *v != 0.0)
    {
        return Err(ProblemError::Validation(format!(
            "constraint {i}: classical mode row touches a foreign block in a"
        )));
    }
    if let Some(h) = &con.h {
        for r in 0..h.nrows() {
            for c in 0..h.ncols() {
                if (foreign(r) || foreign(c)) && h[(r, c)] != 0.0 {
                    return Err(ProblemError::Validation(format!(
                        "constraint {i}: classical mode row touches a foreign block in H"
                    )));
                }
            }
        }
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    mode: String,
    players: Vec<RawPlayer>,
    #[serde(default)]
    constraints: Vec<RawConstraint>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlayer {
    dim: usize,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    c: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawOwner {
    Index(usize),
    Name(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraint {
    owner: RawOwner,
    kind: String,
    #[serde(rename = "H", default)]
    h: Option<Vec<Vec<f64>>>,
    a: Vec<f64>,
    b: f64,
}

fn dense(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, ProblemError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ProblemError::Validation(format!("{what} has ragged rows")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl RawProblem {
    fn into_problem(self) -> Result<Problem, ProblemError> {
        let mode = match self.mode.as_str() {
            "per_player" => ConstraintMode::PerPlayer,
            "shared" => ConstraintMode::Shared,
            "classical" => ConstraintMode::Classical,
            other => return Err(ProblemError::Validation(format!("unknown mode {other:?}"))),
        };
        let players = self
            .players
            .into_iter()
            .enumerate()
            .map(|(nu, p)| {
                Ok(PlayerSpec {
                    dim: p.dim,
                    q: dense(&p.q, &format!("player {nu} Q"))?,
                    c: DVector::from_vec(p.c),
                })
            })
            .collect::<Result<Vec<_>, ProblemError>>()?;
        let constraints = self
            .constraints
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let owner = match c.owner {
                    RawOwner::Index(nu) => Owner::Player(nu),
                    RawOwner::Name(s) if s == "shared" => Owner::Shared,
                    RawOwner::Name(s) => {
                        return Err(ProblemError::Validation(format!(
                            "constraint {i}: unknown owner {s:?}"
                        )))
                    }
                };
                let kind = match c.kind.as_str() {
                    "eq" => ConstraintKind::Eq,
                    "ineq" => ConstraintKind::Ineq,
                    other => {
                        return Err(ProblemError::Validation(format!(
                            "constraint {i}: unknown kind {other:?}"
                        )))
                    }
                };
                let h =
                    c.h.map(|rows| dense(&rows, &format!("constraint {i} H")))
                        .transpose()?;
                Ok(ConstraintSpec {
                    owner,
                    kind,
                    h,
                    a: DVector::from_vec(c.a),
                    b: c.b,
                })
            })
            .collect::<Result<Vec<_>, ProblemError>>()?;
        Problem::new(mode, players, constraints)
    }
}
