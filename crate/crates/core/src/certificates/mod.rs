//! Stability certificates for the LGNE solution mapping at a given point.

mod cones;
mod data;
mod licq;
mod matrix;
mod second_order;
mod verdict;

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

pub use cones::{
    calmness_cone, check_isolated_calmness, check_lipschitz, decode_branch, lipschitz_cone,
    ConeTolerances,
};
pub use data::{SlotLabel, StabilityData};
pub use licq::check_licq;
pub use matrix::{check_equality_case, check_strict_complementarity, kernel_vector, saddle_matrix};
pub use second_order::{check_second_order, SecondOrderTolerances};
pub use verdict::{
    BranchChoice, BranchEntry, LabeledValue, PartitionEntry, Status, Verdict, Witness,
};

use crate::index_sets::{classify, ClassifyError, ClassifyTolerances, IndexClass, IndexSets};
use crate::linalg::{DEFAULT_LP_TOL, DEFAULT_PIVOT_TOL, DEFAULT_RANK_TOL};
use crate::problem::ProblemError;
use crate::system::{KktSystem, PrimalDualPoint};

pub const DEFAULT_MAX_PARTITIONS: u64 = 729;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub tol_active: f64,
    pub tol_mult: f64,
    pub pivot_tol: f64,
    pub rank_tol: f64,
    pub lp_tol: f64,
    pub max_partitions: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let c = ClassifyTolerances::default();
        Tolerances {
            tol_active: c.tol_active,
            tol_mult: c.tol_mult,
            pivot_tol: DEFAULT_PIVOT_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            lp_tol: DEFAULT_LP_TOL,
            max_partitions: DEFAULT_MAX_PARTITIONS,
        }
    }
}

impl Tolerances {
    pub fn classify(&self) -> ClassifyTolerances {
        ClassifyTolerances {
            tol_active: self.tol_active,
            tol_mult: self.tol_mult,
        }
    }

    pub fn cones(&self) -> ConeTolerances {
        ConeTolerances {
            rank_tol: self.rank_tol,
            lp_tol: self.lp_tol,
        }
    }

    pub fn second_order(&self) -> SecondOrderTolerances {
        SecondOrderTolerances {
            rank_tol: self.rank_tol,
            lp_tol: self.lp_tol,
        }
    }
}

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{count} partitions exceed the limit of {limit}; raise --max-partitions to proceed")]
    TooManyPartitions { count: String, limit: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockIndexSets {
    pub block: usize,
    pub players: Vec<usize>,
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub gamma: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificates {
    pub equality_case: Verdict,
    pub strict_complementarity: Verdict,
    pub lipschitz_localization: Verdict,
    pub isolated_calmness: Verdict,
    pub second_order: Verdict,
    pub licq: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Consistency {
    pub ok: bool,
    pub violations: Vec<String>,
    /// Conclusions that follow from combinations of verdicts.
    pub derived: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub mode: String,
    pub formulation: String,
    pub index_sets: Vec<BlockIndexSets>,
    pub certificates: Certificates,
    pub tolerances: Tolerances,
    pub timings_ms: Option<BTreeMap<String, f64>>,
    pub consistency: Consistency,
    pub notes: Vec<String>,
}

/// Original row indices of each block, per class.
pub fn block_index_sets(sys: &KktSystem, sets: &IndexSets) -> Vec<BlockIndexSets> {
    let problem = sys.problem();
    sys.blocks()
        .iter()
        .enumerate()
        .map(|(b, block)| {
            let of = |class: IndexClass| {
                let mut rows: Vec<usize> = sys
                    .block_range(b)
                    .filter(|&k| sets.classes[k] == class)
                    .map(|k| problem.original_index(sys.slots()[k].row))
                    .collect();
                rows.sort_unstable();
                rows
            };
            BlockIndexSets {
                block: b,
                players: block.players.clone(),
                alpha: of(IndexClass::Alpha),
                beta: of(IndexClass::Beta),
                gamma: of(IndexClass::Gamma),
            }
        })
        .collect()
}

struct Timer {
    enabled: bool,
    times: BTreeMap<String, f64>,
}

impl Timer {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            self.times
                .insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
        }
        out
    }
}

/// Classifies, assembles and runs every certificate that applies to the
/// formulation and index structure at `pt`.
///
/// Problems whose rows are all equalities get only the equality-case test. The
/// strict-complementarity test needs β = ∅. LICQ is reported for consensus and
/// classical formulations.
pub fn run_all(
    sys: &KktSystem,
    pt: &PrimalDualPoint,
    tol: &Tolerances,
    timings: bool,
) -> Result<CertificateReport, CertificateError> {
    let mut timer = Timer {
        enabled: timings,
        times: BTreeMap::new(),
    };
    let sets = timer.run("classify", || classify(sys, pt, tol.classify()))?;
    let data = timer.run("assemble", || StabilityData::assemble(sys, pt))?;
    let na = || Verdict::not_applicable("not applicable to this problem");
    let mut notes = Vec::new();

    let certificates = if data.all_equalities() {
        let eq = timer.run("equality_case", || {
            check_equality_case(&data, tol.pivot_tol)
        });
        Certificates {
            equality_case: eq,
            strict_complementarity: na(),
            lipschitz_localization: na(),
            isolated_calmness: na(),
            second_order: na(),
            licq: na(),
        }
    } else {
        let count = sets.partition_count().filter(|&c| c <= tol.max_partitions);
        if count.is_none() {
            return Err(CertificateError::TooManyPartitions {
                count: format!("3^{}", sets.beta_count()),
                limit: tol.max_partitions,
            });
        }
        let sc = timer.run("strict_complementarity", || {
            check_strict_complementarity(&data, &sets, tol.pivot_tol, tol.rank_tol)
        });
        let lip = timer.run("lipschitz_localization", || {
            check_lipschitz(&data, &sets, tol.cones())
        });
        let ic = timer.run("isolated_calmness", || {
            check_isolated_calmness(&data, &sets, tol.cones())
        });
        let so = timer.run("second_order", || {
            check_second_order(&data, &sets, tol.second_order())
        });
        let licq = timer.run("licq", || check_licq(&data, &sets, tol.rank_tol));
        notes.push(
            "lipschitz_localization requires the multiplier components on alpha, beta+ and beta0 to vanish"
                .to_string(),
        );
        Certificates {
            equality_case: Verdict::not_applicable("inequality rows present"),
            strict_complementarity: sc,
            lipschitz_localization: lip,
            isolated_calmness: ic,
            second_order: so,
            licq,
        }
    };
    let consistency = consistency(&certificates);
    Ok(CertificateReport {
        mode: sys.problem().mode().as_str().to_string(),
        formulation: sys.formulation().as_str().to_string(),
        index_sets: block_index_sets(sys, &sets),
        certificates,
        tolerances: *tol,
        timings_ms: timings.then_some(timer.times),
        consistency,
        notes,
    })
}

/// Logical cross-checks between verdicts.
pub fn consistency(c: &Certificates) -> Consistency {
    let mut violations = Vec::new();
    let mut derived = Vec::new();
    if c.lipschitz_localization.holds() && c.isolated_calmness.fails() {
        violations.push("lipschitz_localization holds but isolated_calmness fails".to_string());
    }
    let sc = c.strict_complementarity.status;
    if sc != Status::NotApplicable
        && c.lipschitz_localization.status != Status::NotApplicable
        && sc != c.lipschitz_localization.status
    {
        violations.push(format!(
            "strict_complementarity is {} but lipschitz_localization is {}",
            sc.as_str(),
            c.lipschitz_localization.status.as_str()
        ));
    }
    if c.licq.holds() && c.second_order.holds() {
        derived.push("licq and second_order hold: lipschitz_localization is implied".to_string());
        if !c.lipschitz_localization.holds() {
            violations
                .push("licq and second_order hold but lipschitz_localization does not".to_string());
        }
    }
    Consistency {
        ok: violations.is_empty(),
        violations,
        derived,
    }
}
