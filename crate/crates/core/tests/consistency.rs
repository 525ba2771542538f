//! Cross-module consistency checks on full runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use online_mdp::adversary::{AdversaryKind, AdversaryScript, AdversarySequence, DEFAULT_MEMORY_CAP};
use online_mdp::cover::{lipschitz_check, lipschitz_constant, policy_value, state_law_gaps};
use online_mdp::harness::{
    comparator_losses, expected_losses_for_policy_sequence, mean_and_stderr, play_policy_sequence, run_game,
};
use online_mdp::mdp::{
    enumerate_deterministic_policies, induce_transition_matrix, policy_distance, Policy, ProblemShape,
    DEFAULT_POLICY_CAP,
};
use online_mdp::mixing::{certify_mixing, contraction_coefficient, smooth_model, MixingVerdict};
use online_mdp::sdmdp::{PolicyClass, PolicyLearner, SdMdpLearner};

fn deterministic_class(shape: ProblemShape) -> PolicyClass {
    PolicyClass::new(enumerate_deterministic_policies(shape, DEFAULT_POLICY_CAP).unwrap()).unwrap()
}

fn sequence(kind: AdversaryKind, shape: ProblemShape, seed: u64, horizon: usize) -> AdversarySequence {
    AdversaryScript::new(kind, shape, seed, 0.25, 50, 0.0)
        .unwrap()
        .precompute(horizon, DEFAULT_MEMORY_CAP)
        .unwrap()
}

fn random_policy<R: Rng>(shape: ProblemShape, rng: &mut R) -> Policy {
    let probs = (0..shape.num_states())
        .flat_map(|_| {
            let row: Vec<f64> = (0..shape.num_actions()).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(move |v| v / s)
        })
        .collect();
    Policy::new(shape, probs).unwrap()
}

fn tau_of(seq: &AdversarySequence) -> f64 {
    match certify_mixing(&seq.distinct_models(), seq.shape(), DEFAULT_POLICY_CAP).unwrap() {
        MixingVerdict::Certified(c) => c.tau,
        MixingVerdict::Refuted { .. } => panic!("smoothed adversary must mix"),
    }
}

#[test]
fn realized_loss_matches_propagated_expectation_for_fixed_policy_sequence() {
    let shape = ProblemShape::new(3, 2).unwrap();
    let class = deterministic_class(shape);
    let seq = sequence(AdversaryKind::RandomSmoothed, shape, 3, 60);
    // A policy sequence taken from one learner run, then held fixed.
    let mut learner = SdMdpLearner::new(class.clone(), 60, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trace = run_game(&mut learner, &seq, 0, 1, &mut rng, false).unwrap();
    let policies = trace.policy_sequence();

    let expected: f64 = expected_losses_for_policy_sequence(&class, &policies, &seq, 0)
        .unwrap()
        .iter()
        .sum();
    let samples: Vec<f64> = (0..20_000)
        .map(|_| play_policy_sequence(&class, &policies, &seq, 0, &mut rng).unwrap())
        .collect();
    let (mean, se) = mean_and_stderr(&samples);
    assert!((mean - expected).abs() <= 3.0 * se, "mean {mean} expected {expected} se {se}");
}

#[test]
fn policy_gaps_telescope_into_switch_counts() {
    let shape = ProblemShape::new(3, 2).unwrap();
    let class = deterministic_class(shape);
    let horizon = 3_000;
    let seq = sequence(AdversaryKind::LeaderPunisher, shape, 9, horizon);
    for seed in 0..5 {
        let mut learner = SdMdpLearner::new(class.clone(), horizon, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = run_game(&mut learner, &seq, 0, seed, &mut rng, false).unwrap();
        assert_eq!(trace.switch_count, learner.switch_count());
        let switched: Vec<usize> = trace.records.iter().map(|r| usize::from(r.switched)).collect();
        assert_eq!(switched.iter().sum::<usize>(), trace.switch_count);
        let mut prefix = vec![0usize];
        for s in &switched {
            prefix.push(prefix.last().unwrap() + s);
        }
        let ps = trace.policy_sequence();
        for t in 0..horizon {
            for k in [1, 2, 5, 17, 100] {
                if k > t {
                    continue;
                }
                let gap = policy_distance(class.get(ps[t - k]), class.get(ps[t])).unwrap();
                // Switches in rounds t-k+1 ..= t (0-based records).
                let switches = prefix[t + 1] - prefix[t + 1 - k];
                assert!(gap <= 2.0 * switches as f64 + 1e-12);
            }
        }
    }
}

#[test]
fn tracked_laws_stay_on_the_simplex_and_costs_in_range() {
    let shape = ProblemShape::new(4, 2).unwrap();
    let class = deterministic_class(shape);
    let horizon = 100_000;
    let seq = sequence(AdversaryKind::RandomSmoothed, shape, 5, horizon);
    let mut learner = SdMdpLearner::new(class, horizon, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for round in seq.rounds() {
        learner.choose_policy(&mut rng).unwrap();
        let costs = learner.observe(&round.model, &round.loss).unwrap();
        assert!(costs.iter().all(|c| (0.0..=1.0).contains(c)));
    }
    for d in learner.policy_distributions() {
        let sum: f64 = d.as_slice().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        assert!(d.as_slice().iter().all(|&p| p >= 0.0));
    }
}

#[test]
fn policy_value_matches_comparator_rows() {
    let shape = ProblemShape::new(3, 2).unwrap();
    let class = deterministic_class(shape);
    let seq = sequence(AdversaryKind::SinusoidalLoss, shape, 4, 400);
    let totals = comparator_losses(&class, &seq, 1).unwrap().totals();
    for (i, p) in class.policies().iter().enumerate() {
        assert!((policy_value(p, &seq, 1).unwrap() - totals[i]).abs() <= 1e-9);
    }
}

#[test]
fn lipschitz_sweep_on_smoothed_adversaries() {
    let shape = ProblemShape::new(3, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut tau_constant_misses = 0;
    for (i, kind) in [AdversaryKind::RandomSmoothed, AdversaryKind::ModelSwitching, AdversaryKind::SinusoidalLoss]
        .into_iter()
        .enumerate()
    {
        let seq = sequence(kind, shape, 30 + i as u64, 200);
        let tau = tau_of(&seq);
        let constant = lipschitz_constant(tau);
        for _ in 0..334 {
            let p = random_policy(shape, &mut rng);
            let q = random_policy(shape, &mut rng);
            let check = lipschitz_check(&p, &q, &seq, 0, tau).unwrap();
            assert!(check.ok, "{check:?}");
            if !check.tau_ok {
                tau_constant_misses += 1;
            }
            let dist = policy_distance(&p, &q).unwrap();
            for gap in state_law_gaps(&p, &q, &seq, 0).unwrap() {
                assert!(gap <= constant * dist + 1e-9);
            }
        }
    }
    // Informational: how often the bare tau constant would have been violated.
    println!("pairs exceeding tau * T * dist: {tau_constant_misses}");
}

#[test]
fn smoothing_bounds_every_deterministic_policy_exhaustively() {
    let shape = ProblemShape::new(4, 2).unwrap();
    let policies = enumerate_deterministic_policies(shape, DEFAULT_POLICY_CAP).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for gamma in [0.1, 0.25, 0.5, 1.0] {
        for _ in 0..50 {
            let raw = online_mdp::adversary::random_model(shape, &mut rng);
            let m = smooth_model(&raw, gamma).unwrap();
            for p in &policies {
                let delta = contraction_coefficient(&induce_transition_matrix(p, &m).unwrap()).unwrap();
                assert!(delta <= 1.0 - gamma + 1e-12);
            }
        }
    }
}
