//! Acceptance suite: one pass/fail line per criterion. Runs without the test
//! harness so the lines are always printed, in order.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gnep_core::certificates::{run_all, StabilityData, Status, Tolerances};
use gnep_core::index_sets::{classify, ClassifyTolerances};
use gnep_core::kkt::{
    complementarity_violation, expand_consensus, kkt_residual, solve_consensus, solve_lgne,
    SolveParams,
};
use gnep_core::linalg::{cone_is_trivial, ConeSpec, DEFAULT_LP_TOL, DEFAULT_RANK_TOL};
use gnep_core::perturbation::{calmness_blow_up, probe, ProbeParams, ProbeReport};
use gnep_core::problem::{ConstraintMode, Problem};
use gnep_core::system::{Formulation, KktSystem, PrimalDualPoint};
use gnep_core::testkit::{planted, InstanceSpec};
use gnep_oracles::dd::cone_generators;
use gnep_oracles::regularity::{exact_rank, isolated_calmness, strongly_regular};
use gnep_oracles::BigRational;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn fixture(name: &str) -> Problem {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture exists");
    Problem::from_json_str(&text).expect("fixture parses")
}

fn point(x: &[f64], y: &[&[f64]]) -> PrimalDualPoint {
    PrimalDualPoint {
        x: DVector::from_row_slice(x),
        y: y.iter().map(|b| DVector::from_row_slice(b)).collect(),
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_verdicts(sys: &KktSystem, pt: &PrimalDualPoint) -> (bool, bool, usize) {
    let sets = classify(sys, pt, ClassifyTolerances::default()).unwrap();
    let data = StabilityData::assemble(sys, pt).unwrap();
    let (alpha, beta) = (sets.alpha(), sets.beta());
    let sr = strongly_regular(&data.g, &data.a, &data.b, &alpha, &beta);
    let (ic, branches) = isolated_calmness(&data.g, &data.a, &data.b, &alpha, &beta);
    (sr, ic, branches)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();

    let sc = fixture("fix_sc.json");
    let sys = KktSystem::with_default(&sc);
    let pt = point(&[0.0, 0.0], &[&[1.0], &[1.0]]);
    let c = run_all(&sys, &pt, &tol, false)
        .map_err(|e| e.to_string())?
        .certificates;
    let (sr, ic, _) = oracle_verdicts(&sys, &pt);
    check(
        c.strict_complementarity.holds()
            && c.lipschitz_localization.holds()
            && c.isolated_calmness.holds()
            && sr
            && ic,
        || format!("FIX-SC verdicts {c:?}"),
    )?;

    let deg = fixture("fix_deg.json");
    let sys = KktSystem::with_default(&deg);
    let pt = point(&[0.0], &[&[0.0]]);
    let c = run_all(&sys, &pt, &tol, false)
        .map_err(|e| e.to_string())?
        .certificates;
    let (sr, ic, branches) = oracle_verdicts(&sys, &pt);
    check(
        c.lipschitz_localization.holds()
            && c.lipschitz_localization.partitions_checked == Some(3)
            && c.isolated_calmness.holds()
            && c.isolated_calmness.branches_checked == Some(2)
            && sr
            && ic
            && branches == 2,
        || format!("FIX-DEG verdicts {c:?}"),
    )?;

    // KKT matrix of FIX-EQ written out by hand: rows ∂/∂x₁, ∂/∂x₂ of the
    // Lagrangians, then the two equality rows
    let eq = fixture("fix_eq.json");
    let sys = KktSystem::with_default(&eq);
    let res = solve_lgne(
        &sys,
        &sys.zero_point(),
        &sys.zero_perturbation(),
        &SolveParams::default(),
    )
    .map_err(|e| e.to_string())?;
    let c = run_all(&sys, &res.point, &tol, false)
        .map_err(|e| e.to_string())?
        .certificates;
    let hand = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.5, 1.0, 0.0, 0.5, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0,
        ],
    );
    let rank = exact_rank(&hand);
    let expected = if rank == 4 {
        Status::Holds
    } else {
        Status::Fails
    };
    check(c.equality_case.status == expected, || {
        format!(
            "FIX-EQ equality case {:?}, exact rank {rank}",
            c.equality_case.status
        )
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 1.0, || format!("took {elapsed:.3} s"))?;
    Ok(format!(
        "FIX-SC all hold; FIX-DEG 3 partitions / 2 branches hold; FIX-EQ exact rank {rank} -> {}; {elapsed:.3} s",
        expected.as_str()
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spec = InstanceSpec {
        mode: ConstraintMode::PerPlayer,
        players: 2,
        max_dim: 3,
        max_rows: 2,
        ..InstanceSpec::default()
    };
    let (mut kept, mut attempts, mut holds) = (0, 0, 0);
    while kept < 100 && attempts < 5000 {
        attempts += 1;
        let inst = planted(&mut rng, &spec);
        let sys = KktSystem::with_default(&inst.problem);
        let res = solve_lgne(
            &sys,
            &sys.zero_point(),
            &sys.zero_perturbation(),
            &SolveParams::default(),
        )
        .map_err(|e| e.to_string())?;
        if !res.converged {
            continue;
        }
        let Ok(sets) = classify(&sys, &res.point, ClassifyTolerances::default()) else {
            continue;
        };
        if sets.beta_count() > 0 || inst.problem.m() == 0 {
            continue;
        }
        let c = run_all(&sys, &res.point, &Tolerances::default(), false)
            .map_err(|e| e.to_string())?
            .certificates;
        check(
            c.lipschitz_localization.status == c.strict_complementarity.status,
            || {
                format!(
                    "instance {attempts}: partition verdict {:?}, matrix verdict {:?}",
                    c.lipschitz_localization.status, c.strict_complementarity.status
                )
            },
        )?;
        kept += 1;
        holds += c.lipschitz_localization.holds() as usize;
    }
    check(kept == 100, || {
        format!("only {kept} instances with empty beta in {attempts} attempts")
    })?;
    Ok(format!(
        "100/100 agree ({holds} hold, {} fail) from {attempts} solved candidates",
        100 - holds
    ))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut lip_holds, mut violations, mut with_beta) = (0, 0, 0);
    for i in 0..200 {
        let mode = [
            ConstraintMode::PerPlayer,
            ConstraintMode::Shared,
            ConstraintMode::Classical,
        ][i % 3];
        let spec = InstanceSpec {
            mode,
            max_beta: 3,
            eq_prob: if mode == ConstraintMode::Shared {
                0.0
            } else {
                0.2
            },
            ..InstanceSpec::default()
        };
        let inst = planted(&mut rng, &spec);
        let sys = KktSystem::with_default(&inst.problem);
        let pt = inst.point(&sys);
        let r = run_all(&sys, &pt, &Tolerances::default(), false).map_err(|e| e.to_string())?;
        let c = &r.certificates;
        with_beta += r.index_sets.iter().any(|b| !b.beta.is_empty()) as usize;
        if c.lipschitz_localization.holds() {
            lip_holds += 1;
            if !c.isolated_calmness.holds() {
                violations += 1;
            }
        }
    }
    check(violations == 0, || format!("{violations} violations"))?;
    Ok(format!(
        "200 instances ({with_beta} with degenerate rows), {lip_holds} lipschitz holds, 0 violations"
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut nontrivial = 0;
    for i in 0..50 {
        let k = rng.random_range(1..=6);
        let me = rng.random_range(0..=2.min(k));
        let mf = rng.random_range(0..=6);
        let mut entry = |_, _| rng.random_range(-2..=2) as f64;
        let e = DMatrix::from_fn(me, k, &mut entry);
        let f = DMatrix::from_fn(mf, k, &mut entry);
        let cone = ConeSpec::new(e.clone(), f.clone());
        let lp = cone_is_trivial(&cone, DEFAULT_RANK_TOL, DEFAULT_LP_TOL);
        let dd = cone_generators::<BigRational>(&e, &f);
        check(lp.trivial == dd.is_trivial(), || {
            format!(
                "cone {i}: LP trivial {} vs DD trivial {}\nE = {e}\nF = {f}",
                lp.trivial,
                dd.is_trivial()
            )
        })?;
        if let Some(z) = &lp.witness {
            nontrivial += 1;
            check(z.amax() >= 1.0 - 1e-9 && cone.violation(z) <= 1e-9, || {
                format!("cone {i}: witness {z} violates by {}", cone.violation(z))
            })?;
        }
    }
    Ok(format!(
        "50/50 agree with exact double description ({nontrivial} nontrivial, witnesses verified)"
    ))
}

fn criterion_5() -> Outcome {
    let cases: [(&str, Vec<f64>); 4] = [
        ("fix_sc.json", vec![1.0, 1.0]),
        ("fix_deg.json", vec![1.0]),
        ("fix_eq.json", vec![0.0, 0.0]),
        ("fix_shared.json", vec![0.0, 0.0]),
    ];
    let mut lines = Vec::new();
    for (name, x0) in cases {
        let p = fixture(name);
        let sys = KktSystem::with_default(&p);
        let mut start = sys.zero_point();
        start.x = DVector::from_vec(x0);
        let zero = sys.zero_perturbation();
        let res =
            solve_lgne(&sys, &start, &zero, &SolveParams::default()).map_err(|e| e.to_string())?;
        let resid = kkt_residual(&sys, &res.point, &zero).map_err(|e| e.to_string())?;
        let comp = complementarity_violation(&sys, &res.point, &zero).map_err(|e| e.to_string())?;
        check(
            res.converged && resid <= 1e-10 && res.iterations <= 50 && comp <= 1e-8,
            || {
                format!("{name}: converged {} residual {resid:e} iterations {} complementarity {comp:e}", res.converged, res.iterations)
            },
        )?;
        lines.push(format!("{name} {} it", res.iterations));
    }
    Ok(lines.join(", "))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for name in [
        "fix_sc.json",
        "fix_deg.json",
        "fix_eq.json",
        "fix_eq_unique.json",
        "fix_shared.json",
        "fix_icfail.json",
    ] {
        let p = fixture(name);
        let sys = KktSystem::with_default(&p);
        for _ in 0..10 {
            let mut pt = sys.zero_point();
            pt.x.apply(|v| *v = rng.random_range(-2.0..2.0));
            for b in pt.y.iter_mut() {
                b.apply(|v| *v = rng.random_range(-2.0..2.0));
            }
            let audit = sys.fd_audit(&pt, 1e-5).map_err(|e| e.to_string())?;
            worst = worst.max(audit.max());
            check(audit.max() <= 1e-6, || {
                format!("{name}: relative error {:e}", audit.max())
            })?;
        }
    }
    Ok(format!("60 points, worst relative error {worst:.2e}"))
}

fn probe_pair(name: &str, pt: &PrimalDualPoint) -> Result<(ProbeReport, ProbeReport), String> {
    let p = fixture(name);
    let sys = KktSystem::with_default(&p);
    let params = ProbeParams {
        radius: 1e-4,
        samples: 200,
        seed: 42,
        ..ProbeParams::default()
    };
    let large = probe(&sys, pt, &params).map_err(|e| e.to_string())?;
    let small = probe(
        &sys,
        pt,
        &ProbeParams {
            radius: 1e-5,
            ..params
        },
    )
    .map_err(|e| e.to_string())?;
    Ok((large, small))
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    for (name, pt) in [
        ("fix_sc.json", point(&[0.0, 0.0], &[&[1.0], &[1.0]])),
        ("fix_deg.json", point(&[0.0], &[&[0.0]])),
    ] {
        let (a, b) = probe_pair(name, &pt)?;
        let (lo, hi) = (
            a.empirical_lipschitz.min(b.empirical_lipschitz),
            a.empirical_lipschitz.max(b.empirical_lipschitz),
        );
        check(
            !a.multi_solution_flag
                && !b.multi_solution_flag
                && a.failures == 0
                && b.failures == 0
                && hi.is_finite()
                && lo > 0.0
                && hi <= 5.0 * lo,
            || format!("{name}: {a:?} / {b:?}"),
        )?;
        lines.push(format!(
            "{name} L {:.3}/{:.3}",
            a.empirical_lipschitz, b.empirical_lipschitz
        ));
    }
    let (a, b) = probe_pair("fix_icfail.json", &point(&[0.0], &[&[1.0, 1.0, 0.0]]))?;
    check(calmness_blow_up(&a, &b), || {
        format!(
            "calmness ratio {:e} -> {:e}",
            a.calmness_ratio, b.calmness_ratio
        )
    })?;
    lines.push(format!(
        "fix_icfail calmness x{:.2}",
        b.calmness_ratio / a.calmness_ratio
    ));
    Ok(lines.join(", "))
}

fn criterion_8() -> Outcome {
    let p = fixture("fix_shared.json");
    let consensus = KktSystem::new(&p, Formulation::Consensus).map_err(|e| e.to_string())?;
    let res = solve_consensus(
        &p,
        &consensus.zero_point(),
        &consensus.zero_perturbation(),
        &SolveParams::default(),
    )
    .map_err(|e| e.to_string())?;
    check(res.converged, || "consensus solve did not converge".into())?;
    let copies = KktSystem::new(&p, Formulation::SharedCopies).map_err(|e| e.to_string())?;
    let expanded = expand_consensus(&copies, &res.point);
    let resid =
        kkt_residual(&copies, &expanded, &copies.zero_perturbation()).map_err(|e| e.to_string())?;
    check(resid <= 1e-8, || format!("per-player residual {resid:e}"))?;

    let report = run_all(&consensus, &res.point, &Tolerances::default(), false)
        .map_err(|e| e.to_string())?;
    let c = &report.certificates;
    // derivatives of the fixture by hand: ∇²θ rows, shared row (1, 1)
    let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let b = a.transpose();
    let data = StabilityData::assemble(&consensus, &res.point).map_err(|e| e.to_string())?;
    check(data.g == g && data.a == a && data.b == b, || {
        "assembled data differ from hand derivatives".into()
    })?;
    let sets = classify(&consensus, &res.point, ClassifyTolerances::default())
        .map_err(|e| e.to_string())?;
    let (alpha, beta) = (sets.alpha(), sets.beta());
    let sr = strongly_regular(&g, &a, &b, &alpha, &beta);
    let (ic, branches) = isolated_calmness(&g, &a, &b, &alpha, &beta);
    check(
        c.lipschitz_localization.status != Status::NotApplicable
            && c.isolated_calmness.status != Status::NotApplicable
            && c.lipschitz_localization.holds() == sr
            && c.isolated_calmness.holds() == ic,
        || format!("certificates {c:?} vs exact lipschitz {sr}, calmness {ic}"),
    )?;
    Ok(format!(
        "per-player residual {resid:.1e}; lipschitz {} / calmness {} match exact enumeration ({branches} branch)",
        c.lipschitz_localization.status.as_str(),
        c.isolated_calmness.status.as_str()
    ))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let spec = InstanceSpec {
        mode: ConstraintMode::Shared,
        max_rows: 3,
        max_beta: 2,
        diag_boost: 4,
        ..InstanceSpec::default()
    };
    let (mut found, mut attempts, mut counterexamples) = (0, 0, 0);
    while found < 50 && attempts < 5000 {
        attempts += 1;
        let inst = planted(&mut rng, &spec);
        let sys = KktSystem::with_default(&inst.problem);
        let pt = inst.point(&sys);
        let c = run_all(&sys, &pt, &Tolerances::default(), false)
            .map_err(|e| e.to_string())?
            .certificates;
        if !(c.licq.holds() && c.second_order.holds()) {
            continue;
        }
        found += 1;
        let (sr, _, _) = oracle_verdicts(&sys, &pt);
        if !c.lipschitz_localization.holds() || !sr {
            counterexamples += 1;
        }
    }
    check(found == 50, || {
        format!("only {found} qualifying instances in {attempts} attempts")
    })?;
    check(counterexamples == 0, || {
        format!("{counterexamples} counterexamples")
    })?;
    Ok(format!(
        "50 instances with licq and second order holding ({attempts} drawn), 0 counterexamples"
    ))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("report.json");
    let status = Command::new(env!("CARGO_BIN_EXE_gnep"))
        .args(args)
        .arg("--report")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    check(status.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr))
    })?;
    std::fs::read(&out).map_err(|e| e.to_string())
}

fn criterion_10() -> Outcome {
    let sc = fixture_path("fix_sc.json");
    let deg = fixture_path("fix_deg.json");
    let shared = fixture_path("fix_shared.json");
    let runs: Vec<Vec<String>> = vec![
        vec!["analyze".into(), sc.display().to_string()],
        vec![
            "analyze".into(),
            shared.display().to_string(),
            "--verbosity".into(),
            "high".into(),
        ],
        vec![
            "perturb".into(),
            sc.display().to_string(),
            "--seed".into(),
            "7".into(),
        ],
        vec![
            "perturb".into(),
            deg.display().to_string(),
            "--samples".into(),
            "50".into(),
        ],
    ];
    for args in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = run_cli(&args)?;
        let second = run_cli(&args)?;
        check(first == second, || format!("{args:?}: reports differ"))?;
    }
    Ok(format!(
        "{} invocations reproduced byte for byte",
        runs.len()
    ))
}

fn main() -> std::process::ExitCode {
    let criteria: [Criterion; 10] = [
        ("fixture certificates", criterion_1),
        ("oracle equivalence without degeneracy", criterion_2),
        ("lipschitz implies calmness", criterion_3),
        ("cone triviality kernel", criterion_4),
        ("solver contract", criterion_5),
        ("derivative audit", criterion_6),
        ("empirical corroboration", criterion_7),
        ("consensus embedding", criterion_8),
        ("licq and second order imply lipschitz", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!(
                "criterion {:>2} PASS  {name}: {detail} [{secs:.2} s]",
                i + 1
            ),
            Err(detail) => {
                println!(
                    "criterion {:>2} FAIL  {name}: {detail} [{secs:.2} s]",
                    i + 1
                );
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
