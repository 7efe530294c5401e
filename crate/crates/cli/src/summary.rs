//! Human-readable summaries printed to standard output.

use std::fmt::Write;

use gnep_core::certificates::CertificateReport;
use gnep_core::kkt::SolveResult;
use gnep_core::perturbation::EmpiricalReport;
use gnep_core::system::{KktSystem, PrimalDualPoint};

fn point(out: &mut String, sys: &KktSystem, pt: &PrimalDualPoint) {
    let file = sys.point_to_file(pt);
    let _ = writeln!(out, "x = {:?}", file.x);
    if let Some(y) = file.y {
        let _ = writeln!(out, "y = {}", serde_json::to_string(&y).unwrap_or_default());
    }
}

pub fn solve(sys: &KktSystem, res: &SolveResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "converged in {} iterations, residual {:.3e}",
        res.iterations, res.residual
    );
    point(&mut out, sys, &res.point);
    out
}

pub fn analysis(
    sys: &KktSystem,
    pt: &PrimalDualPoint,
    report: &CertificateReport,
    empirical: Option<&EmpiricalReport>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "mode {}, formulation {}",
        report.mode, report.formulation
    );
    point(&mut out, sys, pt);
    for b in &report.index_sets {
        let _ = writeln!(
            out,
            "block {} players {:?}: alpha {:?} beta {:?} gamma {:?}",
            b.block, b.players, b.alpha, b.beta, b.gamma
        );
    }
    let c = &report.certificates;
    for (name, v) in [
        ("equality_case", &c.equality_case),
        ("strict_complementarity", &c.strict_complementarity),
        ("lipschitz_localization", &c.lipschitz_localization),
        ("isolated_calmness", &c.isolated_calmness),
        ("second_order", &c.second_order),
        ("licq", &c.licq),
    ] {
        let _ = writeln!(out, "{name:<24} {:<15} {}", v.status.as_str(), v.detail);
    }
    if report.consistency.ok {
        let _ = writeln!(out, "consistency ok");
    } else {
        for v in &report.consistency.violations {
            let _ = writeln!(out, "consistency violation: {v}");
        }
    }
    if let Some(e) = empirical {
        let _ = writeln!(
            out,
            "probe r={:e}: lipschitz {:.4e}, calmness {:.4e}, multiple solutions {}, failures {}",
            e.probe.radius,
            e.probe.empirical_lipschitz,
            e.probe.calmness_ratio,
            e.probe.multi_solution_flag,
            e.probe.failures
        );
        let _ = writeln!(
            out,
            "probe r={:e}: lipschitz {:.4e}, calmness {:.4e}, multiple solutions {}, failures {}",
            e.probe_small.radius,
            e.probe_small.empirical_lipschitz,
            e.probe_small.calmness_ratio,
            e.probe_small.multi_solution_flag,
            e.probe_small.failures
        );
        for a in e.agreement.iter().filter(|a| a.needs_review) {
            let _ = writeln!(
                out,
                "review: {} is {} but the probe disagrees",
                a.certificate,
                a.certificate_status.as_str()
            );
        }
    }
    out
}
