use nalgebra::DVector;
use serde::Serialize;

use super::data::SlotLabel;
use crate::index_sets::BetaSign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
    NotApplicable,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::Fails => "fails",
            Status::Inconclusive => "inconclusive",
            Status::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledValue {
    pub block: usize,
    pub row: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionEntry {
    pub block: usize,
    pub row: usize,
    pub sign: BetaSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchChoice {
    /// `d_y = 0` on the row, the row direction may be strictly negative.
    MultiplierZero,
    /// The row direction vanishes, `d_y ≥ 0`.
    RowActive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchEntry {
    pub block: usize,
    pub row: usize,
    pub choice: BranchChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Kernel vector of a nonsingularity test matrix.
    NullVector { z: Vec<f64> },
    Partition {
        partition: Vec<PartitionEntry>,
        w1: Vec<f64>,
        w2: Vec<LabeledValue>,
    },
    Branch {
        branch: Vec<BranchEntry>,
        dx: Vec<f64>,
        dy: Vec<LabeledValue>,
    },
    /// Cone direction with `⟨d, Gᵀd⟩ = value < 0`.
    Direction { d: Vec<f64>, value: f64 },
    /// Vanishing combination of the listed constraint gradients.
    Dependence {
        rows: Vec<SlotLabel>,
        coefficients: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub detail: String,
    pub partitions_checked: Option<u64>,
    pub branches_checked: Option<u64>,
    /// Pivot-ratio estimate for the matrix tests.
    pub condition_estimate: Option<f64>,
    /// Second-order bounds on the minimum of `⟨d, Gᵀd⟩` over unit cone directions.
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    /// Row independence of the α gradients, reported alongside the
    /// strict-complementarity test.
    pub licq_alpha: Option<bool>,
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn new(status: Status, detail: impl Into<String>) -> Self {
        Verdict {
            status,
            detail: detail.into(),
            partitions_checked: None,
            branches_checked: None,
            condition_estimate: None,
            lower_bound: None,
            upper_bound: None,
            licq_alpha: None,
            witness: None,
        }
    }

    pub fn not_applicable(detail: impl Into<String>) -> Self {
        Self::new(Status::NotApplicable, detail)
    }

    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn fails(&self) -> bool {
        self.status == Status::Fails
    }
}

pub(crate) fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}
