use thiserror::Error;

use gnep_core::certificates::CertificateError;
use gnep_core::index_sets::ClassifyError;
use gnep_core::perturbation::ProbeError;
use gnep_core::problem::ProblemError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NotConverged { .. } => 3,
            CliError::Certificate(e) | CliError::Probe(ProbeError::Certificate(e)) => match e {
                CertificateError::Classify(ClassifyError::Ambiguous { .. }) => 4,
                _ => 2,
            },
            _ => 2,
        }
    }
}
