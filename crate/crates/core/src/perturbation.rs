//! Empirical probing of the solution mapping under canonical perturbations.
//!
//! Perturbations `p = (v, u)` are drawn uniformly from a ball around zero. Each
//! sample is re-solved from the base point and from a few jittered starts; the
//! resulting solutions give empirical Lipschitz and calmness moduli and reveal
//! multiple solutions near the base point. Results corroborate or question the
//! certificates; they never override them.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::certificates::{run_all, CertificateError, CertificateReport, Status, Tolerances};
use crate::kkt::{kkt_residual, solve_lgne, SolveParams};
use crate::problem::ProblemError;
use crate::system::{KktSystem, Perturbation, PrimalDualPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeParams {
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub solve: SolveParams,
    /// Additional starts per sample, drawn from a ball of radius `radius` around the base point.
    pub jitter_starts: usize,
    /// Solutions farther than this from the base point are outside the localization.
    pub neighborhood: f64,
    /// Two converged solutions closer than this count as the same solution.
    pub distinct_tol: f64,
}

impl Default for ProbeParams {
    fn default() -> Self {
        ProbeParams {
            radius: 1e-4,
            samples: 200,
            seed: 0,
            solve: SolveParams::default(),
            jitter_starts: 4,
            neighborhood: 1.0,
            distinct_tol: 1e-7,
        }
    }
}

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid probe parameters: {0}")]
    Params(String),
    #[error("base point has KKT residual {residual:e}, above the solver tolerance {tol:e}")]
    BaseResidual { residual: f64, tol: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    /// Largest `‖z(p) − z(p′)‖ / ‖p − p′‖` over pairs of converged samples.
    pub empirical_lipschitz: f64,
    /// Largest `‖z(p) − z̄‖ / ‖p‖` over converged samples.
    pub calmness_ratio: f64,
    pub multi_solution_flag: bool,
    /// Samples whose warm-started solve did not converge.
    pub failures: usize,
    /// Pairs left out of the Lipschitz estimate because a solve failed.
    pub excluded_pairs: usize,
    /// Distance from the base point of the solution at `p = 0`.
    pub zero_perturbation_error: f64,
}

struct Sample {
    p: DVector<f64>,
    z: Option<DVector<f64>>,
    multi: bool,
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

/// Uniform draw from the ball of radius `r` in `ℝᵈ`.
fn ball(rng: &mut ChaCha8Rng, d: usize, r: f64) -> DVector<f64> {
    if d == 0 {
        return DVector::zeros(0);
    }
    loop {
        let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 0.0 {
            let u: f64 = rng.random();
            return g * (r * u.powf(1.0 / d as f64) / norm);
        }
    }
}

fn perturbation(sys: &KktSystem, p: &DVector<f64>) -> Perturbation {
    let n = sys.n();
    Perturbation {
        v: p.rows_range(0..n).into_owned(),
        u: sys.split_y(&p.rows_range(n..p.len()).into_owned()),
    }
}

pub fn probe(
    sys: &KktSystem,
    base: &PrimalDualPoint,
    params: &ProbeParams,
) -> Result<ProbeReport, ProbeError> {
    if !(params.radius > 0.0 && params.radius.is_finite()) {
        return Err(ProbeError::Params("radius must be positive".into()));
    }
    if params.samples < 2 {
        return Err(ProbeError::Params("at least two samples are needed".into()));
    }
    let zero = sys.zero_perturbation();
    let residual = kkt_residual(sys, base, &zero)?;
    if residual > params.solve.residual_tol {
        return Err(ProbeError::BaseResidual {
            residual,
            tol: params.solve.residual_tol,
        });
    }
    let zbar = pack(sys, base);
    let d = zbar.len();

    let zero_solve = solve_lgne(sys, base, &zero, &params.solve)?;
    let zero_perturbation_error = (pack(sys, &zero_solve.point) - &zbar).norm();

    let samples: Vec<Sample> = (0..params.samples)
        .into_par_iter()
        .map(|i| -> Result<Sample, ProblemError> {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(i as u64);
            let p = ball(&mut rng, d, params.radius);
            let pert = perturbation(sys, &p);
            let main = solve_lgne(sys, base, &pert, &params.solve)?;
            let z = main.converged.then(|| pack(sys, &main.point));
            let mut multi = false;
            for _ in 0..params.jitter_starts {
                let start = unpack(sys, &(&zbar + ball(&mut rng, d, params.radius)));
                let res = solve_lgne(sys, &start, &pert, &params.solve)?;
                if let (true, Some(z)) = (res.converged, &z) {
                    let zj = pack(sys, &res.point);
                    if (&zj - &zbar).norm() <= params.neighborhood
                        && (&zj - z).norm() > params.distinct_tol
                    {
                        multi = true;
                    }
                }
            }
            Ok(Sample { p, z, multi })
        })
        .collect::<Result<_, _>>()?;

    let failures = samples.iter().filter(|s| s.z.is_none()).count();
    let multi_solution_flag = samples.iter().any(|s| s.multi);
    let mut calmness_ratio: f64 = 0.0;
    for s in &samples {
        if let Some(z) = &s.z {
            let pn = s.p.norm();
            if pn > 0.0 {
                calmness_ratio = calmness_ratio.max((z - &zbar).norm() / pn);
            }
        }
    }
    let mut empirical_lipschitz: f64 = 0.0;
    let mut excluded_pairs = 0;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            match (&samples[i].z, &samples[j].z) {
                (Some(zi), Some(zj)) => {
                    let dp = (&samples[i].p - &samples[j].p).norm();
                    if dp > 0.0 {
                        empirical_lipschitz = empirical_lipschitz.max((zi - zj).norm() / dp);
                    }
                }
                _ => excluded_pairs += 1,
            }
        }
    }
    Ok(ProbeReport {
        radius: params.radius,
        samples: params.samples,
        seed: params.seed,
        empirical_lipschitz,
        calmness_ratio,
        multi_solution_flag,
        failures,
        excluded_pairs,
        zero_perturbation_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub certificate: String,
    pub certificate_status: Status,
    pub empirically_consistent: bool,
    /// `None` when the certificate is inconclusive or does not apply.
    pub agree: Option<bool>,
    pub needs_review: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalReport {
    pub probe: ProbeReport,
    /// The same probe at a ten times smaller radius.
    pub probe_small: ProbeReport,
    /// Calmness ratio grew by 10× or more when the radius shrank 10×.
    pub calmness_blow_up: bool,
    /// Lipschitz estimates at both radii agree within a factor 5.
    pub lipschitz_stable: bool,
    pub agreement: Vec<Agreement>,
}

/// Empirical behaviour predicted by a Lipschitz single-valued localization.
fn lipschitz_like(a: &ProbeReport, b: &ProbeReport) -> bool {
    let clean = |r: &ProbeReport| {
        !r.multi_solution_flag && r.failures == 0 && r.empirical_lipschitz.is_finite()
    };
    clean(a) && clean(b) && stable(a.empirical_lipschitz, b.empirical_lipschitz, 5.0)
}

fn stable(a: f64, b: f64, factor: f64) -> bool {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    hi <= factor * lo || hi <= 1e-12
}

pub fn calmness_blow_up(large: &ProbeReport, small: &ProbeReport) -> bool {
    small.calmness_ratio >= 10.0 * large.calmness_ratio && small.calmness_ratio > 0.0
}

/// Runs the certificates and a two-radius probe and lines up their conclusions.
/// Disagreements are marked for review and left unresolved.
pub fn probe_vs_certificates(
    sys: &KktSystem,
    base: &PrimalDualPoint,
    params: &ProbeParams,
    tol: &Tolerances,
) -> Result<(CertificateReport, EmpiricalReport), ProbeError> {
    let report = run_all(sys, base, tol, false)?;
    let probe_large = probe(sys, base, params)?;
    let small = ProbeParams {
        radius: params.radius / 10.0,
        ..*params
    };
    let probe_small = probe(sys, base, &small)?;
    let lip = lipschitz_like(&probe_large, &probe_small);
    let blow_up = calmness_blow_up(&probe_large, &probe_small);
    let c = &report.certificates;
    let rows = [
        ("equality_case", c.equality_case.status, lip),
        (
            "strict_complementarity",
            c.strict_complementarity.status,
            lip,
        ),
        (
            "lipschitz_localization",
            c.lipschitz_localization.status,
            lip,
        ),
        ("isolated_calmness", c.isolated_calmness.status, !blow_up),
    ];
    let agreement = rows
        .into_iter()
        .map(|(name, status, empirical)| {
            let agree = match status {
                Status::Holds => Some(empirical),
                Status::Fails => Some(!empirical),
                _ => None,
            };
            Agreement {
                certificate: name.to_string(),
                certificate_status: status,
                empirically_consistent: empirical,
                agree,
                needs_review: agree == Some(false),
            }
        })
        .collect();
    let empirical = EmpiricalReport {
        lipschitz_stable: stable(
            probe_large.empirical_lipschitz,
            probe_small.empirical_lipschitz,
            5.0,
        ),
        probe: probe_large,
        probe_small,
        calmness_blow_up: blow_up,
        agreement,
    };
    Ok((report, empirical))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Problem;

    const SC: &str = r#"{"mode":"per_player","players":[
        {"dim":1,"Q":[[1,0],[0,0]],"c":[1,0]},
        {"dim":1,"Q":[[0,0],[0,1]],"c":[0,1]}],
      "constraints":[
        {"owner":0,"kind":"ineq","a":[-1,0],"b":0},
        {"owner":1,"kind":"ineq","a":[0,-1],"b":0}]}"#;

    fn sc_base(sys: &KktSystem) -> PrimalDualPoint {
        let mut pt = sys.zero_point();
        pt.y = vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![1.0])];
        pt
    }

    #[test]
    fn rejects_zero_radius() {
        let p = Problem::from_json_str(SC).unwrap();
        let sys = KktSystem::with_default(&p);
        let params = ProbeParams {
            radius: 0.0,
            ..ProbeParams::default()
        };
        assert!(matches!(
            probe(&sys, &sc_base(&sys), &params),
            Err(ProbeError::Params(_))
        ));
    }

    #[test]
    fn sc_probe_is_single_valued_and_deterministic() {
        let p = Problem::from_json_str(SC).unwrap();
        let sys = KktSystem::with_default(&p);
        let params = ProbeParams {
            samples: 40,
            seed: 7,
            ..ProbeParams::default()
        };
        let a = probe(&sys, &sc_base(&sys), &params).unwrap();
        let b = probe(&sys, &sc_base(&sys), &params).unwrap();
        assert_eq!(a, b);
        assert!(!a.multi_solution_flag);
        assert_eq!(a.failures, 0);
        assert!(a.empirical_lipschitz > 0.0 && a.empirical_lipschitz < 10.0);
        assert!(a.zero_perturbation_error <= 1e-8);
    }

    #[test]
    fn base_point_must_solve() {
        let p = Problem::from_json_str(SC).unwrap();
        let sys = KktSystem::with_default(&p);
        assert!(matches!(
            probe(&sys, &sys.zero_point(), &ProbeParams::default()),
            Err(ProbeError::BaseResidual { .. })
        ));
    }
}
