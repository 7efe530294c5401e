//! Certificates against exact primal oracles on random planted instances.

use gnep_core::certificates::{run_all, StabilityData, Status, Tolerances};
use gnep_core::index_sets::{classify, ClassifyTolerances};
use gnep_core::problem::ConstraintMode;
use gnep_core::system::KktSystem;
use gnep_core::testkit::{planted, InstanceSpec};
use gnep_oracles::regularity::{isolated_calmness, strongly_regular};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn agreement(mode: ConstraintMode, seed: u64, count: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
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
    let mut tally = [[0usize; 2]; 2];
    for i in 0..count {
        let inst = planted(&mut rng, &spec);
        let sys = KktSystem::with_default(&inst.problem);
        let pt = inst.point(&sys);
        let report = run_all(&sys, &pt, &Tolerances::default(), false).unwrap();
        let c = &report.certificates;
        if c.lipschitz_localization.status == Status::NotApplicable {
            continue;
        }
        let sets = classify(&sys, &pt, ClassifyTolerances::default()).unwrap();
        let data = StabilityData::assemble(&sys, &pt).unwrap();
        let (alpha, beta) = (sets.alpha(), sets.beta());
        let sr = strongly_regular(&data.g, &data.a, &data.b, &alpha, &beta);
        let (ic, _) = isolated_calmness(&data.g, &data.a, &data.b, &alpha, &beta);
        assert_eq!(
            c.lipschitz_localization.holds(),
            sr,
            "{mode:?} instance {i}: lipschitz {:?} vs oracle {sr}\n{:?}",
            c.lipschitz_localization,
            inst.problem.to_json_string()
        );
        assert_eq!(
            c.isolated_calmness.holds(),
            ic,
            "{mode:?} instance {i}: calmness {:?} vs oracle {ic}\n{:?}",
            c.isolated_calmness,
            inst.problem.to_json_string()
        );
        tally[sr as usize][ic as usize] += 1;
    }
    // both verdicts occur, so the comparison is not vacuous
    assert!(tally[1][1] > 0 && tally[0][0] > 0, "{tally:?}");
}

#[test]
fn per_player_instances_match_exact_oracles() {
    agreement(ConstraintMode::PerPlayer, 11, 150);
}

#[test]
fn consensus_instances_match_exact_oracles() {
    agreement(ConstraintMode::Shared, 12, 150);
}

#[test]
fn classical_instances_match_exact_oracles() {
    agreement(ConstraintMode::Classical, 13, 150);
}
