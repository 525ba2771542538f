//! Game loop, regret accounting and Monte Carlo aggregation.
//!
//! Per round the loop is: the learner picks a policy, the (pre-materialized)
//! adversary round is read, an action is sampled in the current state, its
//! loss is recorded, the next state is sampled, and the learner observes the
//! round's model and loss. Random draws happen in the fixed order
//! (stay-or-redraw decision, redraw sample if any, action, next state) from a
//! single `ChaCha8Rng` stream seeded with the run seed.
//!
//! Comparator losses are exact expectations `sum_t c_t(pi)` obtained by
//! propagating each comparator's state law, so regret against `pi` is
//! `realized_total - sum_t c_t(pi)` and splits exactly into
//!
//! ```text
//! B_T    = realized_total - sum_t c_t(pi_t)
//! C_T(pi) = sum_t c_t(pi_t) - sum_t c_t(pi)
//! ```

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::adversary::AdversarySequence;
use crate::error::{invalid, Error, Result};
use crate::mdp::{
    expected_loss_unchecked, sample_action, sample_next_state, Policy, StateDistribution,
};
use crate::sdmdp::{CounterfactualTracker, EwaMdpLearner, PolicyClass, PolicyLearner, SdMdpLearner};
use crate::streams::argmin;

/// One round of a played game.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub state: usize,
    pub policy: usize,
    pub action: usize,
    /// `l_t(x_t, a_t)`.
    pub loss: f64,
    pub switched: bool,
    pub redrew: bool,
    pub redraw_probability: f64,
    /// `c_t(pi_t)`.
    pub chosen_cost: f64,
    /// Full `c_t` when recording was requested.
    pub costs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameTrace {
    pub seed: u64,
    pub adversary: String,
    pub learner: String,
    pub records: Vec<RoundRecord>,
    pub switch_count: usize,
}

impl GameTrace {
    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    pub fn realized_total(&self) -> f64 {
        self.records.iter().map(|r| r.loss).sum()
    }

    pub fn policy_sequence(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.policy).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    SdMdp,
    EwaMdp,
}

impl LearnerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::SdMdp => "sd-mdp",
            LearnerKind::EwaMdp => "ewa-mdp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sd-mdp" => Ok(LearnerKind::SdMdp),
            "ewa-mdp" => Ok(LearnerKind::EwaMdp),
            other => Err(invalid("learner", format!("unknown learner {other:?}"))),
        }
    }

    pub fn build(&self, class: PolicyClass, horizon: usize, x0: usize) -> Result<Box<dyn PolicyLearner>> {
        Ok(match self {
            LearnerKind::SdMdp => Box::new(SdMdpLearner::new(class, horizon, x0)?),
            LearnerKind::EwaMdp => Box::new(EwaMdpLearner::new(class, horizon, x0)?),
        })
    }
}

/// Plays the full game against a materialized adversary.
pub fn run_game(
    learner: &mut dyn PolicyLearner,
    sequence: &AdversarySequence,
    x0: usize,
    seed: u64,
    rng: &mut dyn RngCore,
    record_costs: bool,
) -> Result<GameTrace> {
    let shape = learner.class().shape();
    if sequence.shape() != shape {
        return Err(Error::ShapeMismatch(format!(
            "learner is {}x{}, adversary is {}x{}",
            shape.num_states(),
            shape.num_actions(),
            sequence.shape().num_states(),
            sequence.shape().num_actions()
        )));
    }
    if learner.horizon() != sequence.len() {
        return Err(invalid(
            "horizon",
            format!(
                "learner tuned for {} rounds, adversary has {}",
                learner.horizon(),
                sequence.len()
            ),
        ));
    }
    if x0 >= shape.num_states() {
        return Err(Error::IndexOutOfRange {
            what: "state",
            index: x0,
            size: shape.num_states(),
        });
    }
    let mut state = x0;
    let mut records = Vec::with_capacity(sequence.len());
    for (i, round) in sequence.rounds().iter().enumerate() {
        let choice = learner.choose_policy(rng)?;
        let policy = learner.class().get(choice.expert);
        let action = sample_action(policy, state, rng)?;
        let loss = round.loss.get(state, action);
        let next = sample_next_state(&round.model, state, action, rng)?;
        let costs = learner.observe(&round.model, &round.loss)?;
        records.push(RoundRecord {
            t: i + 1,
            state,
            policy: choice.expert,
            action,
            loss,
            switched: choice.switched,
            redrew: choice.redrew,
            redraw_probability: choice.redraw_probability,
            chosen_cost: costs[choice.expert],
            costs: record_costs.then_some(costs),
        });
        state = next;
    }
    Ok(GameTrace {
        seed,
        adversary: sequence.description().to_string(),
        learner: learner.name().to_string(),
        records,
        switch_count: learner.switch_count(),
    })
}

/// `c_t(pi)` for every comparator and round, laid out `[policy][t - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparatorMatrix {
    num_policies: usize,
    horizon: usize,
    values: Vec<f64>,
}

impl ComparatorMatrix {
    pub fn num_policies(&self) -> usize {
        self.num_policies
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn get(&self, policy: usize, t: usize) -> f64 {
        self.values[policy * self.horizon + (t - 1)]
    }

    pub fn row(&self, policy: usize) -> &[f64] {
        &self.values[policy * self.horizon..(policy + 1) * self.horizon]
    }

    pub fn totals(&self) -> Vec<f64> {
        (0..self.num_policies)
            .map(|p| self.row(p).iter().sum())
            .collect()
    }
}

/// Pure propagation of every comparator's state law; no randomness.
pub fn comparator_losses(
    class: &PolicyClass,
    sequence: &AdversarySequence,
    x0: usize,
) -> Result<ComparatorMatrix> {
    let horizon = sequence.len();
    let mut tracker = CounterfactualTracker::new(class.clone(), x0)?;
    let mut values = vec![0.0; class.len() * horizon];
    let mut costs = Vec::with_capacity(class.len());
    for (i, round) in sequence.rounds().iter().enumerate() {
        tracker.observe_into(&round.model, &round.loss, &mut costs)?;
        for (p, &c) in costs.iter().enumerate() {
            values[p * horizon + i] = c;
        }
    }
    Ok(ComparatorMatrix {
        num_policies: class.len(),
        horizon,
        values,
    })
}

/// `(4 + 2 tau^2) sqrt(T ln N) + ln N`.
pub fn sd_mdp_regret_bound(num_policies: usize, horizon: usize, tau: f64) -> f64 {
    let ln_n = (num_policies as f64).ln();
    (4.0 + 2.0 * tau * tau) * (horizon as f64 * ln_n).sqrt() + ln_n
}

/// The policy-class bound plus the discretization cost `tau T eps` of an eps-cover.
pub fn cover_regret_bound(cover_size: usize, horizon: usize, tau: f64, epsilon: f64) -> f64 {
    sd_mdp_regret_bound(cover_size, horizon, tau) + tau * horizon as f64 * epsilon
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub realized_total: f64,
    pub comparator_totals: Vec<f64>,
    /// `R_T(pi)` for every comparator.
    pub regret: Vec<f64>,
    pub b_term: f64,
    pub c_term: Vec<f64>,
    pub switch_count: usize,
    /// Lowest comparator total, ties to the lowest index.
    pub best_comparator: usize,
    pub bound_thm2: f64,
    pub bound_thm1: f64,
    pub tau: f64,
}

impl RegretReport {
    pub fn regret_vs_best(&self) -> f64 {
        self.regret[self.best_comparator]
    }

    /// Largest `|R_T(pi) - (B_T + C_T(pi))|`.
    pub fn decomposition_residual(&self) -> f64 {
        self.regret
            .iter()
            .zip(&self.c_term)
            .map(|(r, c)| (r - (self.b_term + c)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn regret_report(trace: &GameTrace, comparators: &ComparatorMatrix, tau: f64) -> Result<RegretReport> {
    if comparators.horizon != trace.horizon() {
        return Err(invalid(
            "comparator matrix",
            format!("{} rounds vs trace of {}", comparators.horizon, trace.horizon()),
        ));
    }
    let n = comparators.num_policies;
    if let Some(r) = trace.records.iter().find(|r| r.policy >= n) {
        return Err(Error::IndexOutOfRange {
            what: "policy",
            index: r.policy,
            size: n,
        });
    }
    let realized_total = trace.realized_total();
    let chosen_total: f64 = trace
        .records
        .iter()
        .map(|r| comparators.get(r.policy, r.t))
        .sum();
    let comparator_totals = comparators.totals();
    let b_term = realized_total - chosen_total;
    let c_term: Vec<f64> = comparator_totals.iter().map(|c| chosen_total - c).collect();
    let regret: Vec<f64> = comparator_totals.iter().map(|c| realized_total - c).collect();
    let ln_n = (n as f64).ln();
    let horizon = trace.horizon();
    Ok(RegretReport {
        best_comparator: argmin(&comparator_totals),
        realized_total,
        comparator_totals,
        regret,
        b_term,
        c_term,
        switch_count: trace.switch_count,
        bound_thm2: sd_mdp_regret_bound(n, horizon, tau),
        bound_thm1: 4.0 * (horizon as f64 * ln_n).sqrt() + ln_n,
        tau,
    })
}

/// Pathwise comparator loss `sum_t l_t(x_t^pi, pi(x_t^pi))` on one sampled trajectory.
pub fn sample_comparator_total(
    policy: &Policy,
    sequence: &AdversarySequence,
    x0: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let mut state = x0;
    let mut total = 0.0;
    for round in sequence.rounds() {
        let action = sample_action(policy, state, rng)?;
        total += round.loss.get(state, action);
        state = sample_next_state(&round.model, state, action, rng)?;
    }
    Ok(total)
}

/// `E[l_t(x_t^A, a_t)]` per round for a fixed policy sequence, where `x_t^A`
/// follows the time-varying chain `P(pi_1, m_1), P(pi_2, m_2), ...` from `x0`.
pub fn expected_losses_for_policy_sequence(
    class: &PolicyClass,
    policy_sequence: &[usize],
    sequence: &AdversarySequence,
    x0: usize,
) -> Result<Vec<f64>> {
    if policy_sequence.len() != sequence.len() {
        return Err(invalid("policy sequence", "length differs from the adversary's"));
    }
    let mut law = StateDistribution::point_mass(class.shape().num_states(), x0)?;
    let mut out = Vec::with_capacity(sequence.len());
    let mut scratch = Vec::new();
    for (&p, round) in policy_sequence.iter().zip(sequence.rounds()) {
        if p >= class.len() {
            return Err(Error::IndexOutOfRange {
                what: "policy",
                index: p,
                size: class.len(),
            });
        }
        let policy = class.get(p);
        out.push(expected_loss_unchecked(law.as_slice(), policy, &round.loss));
        law.push_forward_in_place(policy, &round.model, &mut scratch);
    }
    Ok(out)
}

/// Realized total loss when the policy sequence is fixed in advance.
pub fn play_policy_sequence(
    class: &PolicyClass,
    policy_sequence: &[usize],
    sequence: &AdversarySequence,
    x0: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let mut state = x0;
    let mut total = 0.0;
    for (&p, round) in policy_sequence.iter().zip(sequence.rounds()) {
        let action = sample_action(class.get(p), state, rng)?;
        total += round.loss.get(state, action);
        state = sample_next_state(&round.model, state, action, rng)?;
    }
    Ok(total)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `ln y` on `ln x`. `None` unless every `y > 0`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Monte Carlo over learner seeds against one fixed adversary sequence.
#[derive(Debug, Clone)]
pub struct MonteCarloSpec {
    pub learner: LearnerKind,
    pub class: PolicyClass,
    pub sequence: Arc<AdversarySequence>,
    pub x0: usize,
    pub seeds: Vec<u64>,
    pub tau: f64,
}

/// Per-seed outcome kept by the aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub realized_total: f64,
    pub regret_vs_best: f64,
    pub b_term: f64,
    pub switch_count: usize,
    pub decomposition_residual: f64,
    pub max_redraw_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub horizon: usize,
    pub num_policies: usize,
    pub best_comparator: usize,
    pub best_comparator_total: f64,
    pub mean_regret: f64,
    pub stderr_regret: f64,
    pub mean_switches: f64,
    pub stderr_switches: f64,
    pub mean_b_term: f64,
    pub bound_thm2: f64,
    pub tau: f64,
    pub eta: f64,
    pub outcomes: Vec<SeedOutcome>,
}

pub fn monte_carlo(spec: &MonteCarloSpec) -> Result<MonteCarloSummary> {
    if spec.seeds.len() < 2 {
        return Err(invalid("seeds", "Monte Carlo needs at least two seeds"));
    }
    let comparators = comparator_losses(&spec.class, &spec.sequence, spec.x0)?;
    let horizon = spec.sequence.len();
    let outcomes = spec
        .seeds
        .par_iter()
        .map(|&seed| -> Result<(SeedOutcome, f64)> {
            let mut learner = spec.learner.build(spec.class.clone(), horizon, spec.x0)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = run_game(learner.as_mut(), &spec.sequence, spec.x0, seed, &mut rng, false)?;
            let report = regret_report(&trace, &comparators, spec.tau)?;
            let max_redraw_probability = trace
                .records
                .iter()
                .skip(1)
                .map(|r| r.redraw_probability)
                .fold(0.0, f64::max);
            Ok((
                SeedOutcome {
                    seed,
                    realized_total: report.realized_total,
                    regret_vs_best: report.regret_vs_best(),
                    b_term: report.b_term,
                    switch_count: report.switch_count,
                    decomposition_residual: report.decomposition_residual(),
                    max_redraw_probability,
                },
                learner.eta(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let eta = outcomes.first().map_or(0.0, |o| o.1);
    let outcomes: Vec<SeedOutcome> = outcomes.into_iter().map(|o| o.0).collect();
    let totals = comparators.totals();
    let best = argmin(&totals);
    let regrets: Vec<f64> = outcomes.iter().map(|o| o.regret_vs_best).collect();
    let switches: Vec<f64> = outcomes.iter().map(|o| o.switch_count as f64).collect();
    let bs: Vec<f64> = outcomes.iter().map(|o| o.b_term).collect();
    let (mean_regret, stderr_regret) = mean_and_stderr(&regrets);
    let (mean_switches, stderr_switches) = mean_and_stderr(&switches);
    Ok(MonteCarloSummary {
        horizon,
        num_policies: spec.class.len(),
        best_comparator: best,
        best_comparator_total: totals[best],
        mean_regret,
        stderr_regret,
        mean_switches,
        stderr_switches,
        mean_b_term: mean_and_stderr(&bs).0,
        bound_thm2: sd_mdp_regret_bound(spec.class.len(), horizon, spec.tau),
        tau: spec.tau,
        eta,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AdversaryKind, AdversaryScript, Round, DEFAULT_MEMORY_CAP};
    use crate::mdp::{
        enumerate_deterministic_policies, LossFunction, ProblemShape, TransitionModel,
        DEFAULT_POLICY_CAP,
    };

    fn shape() -> ProblemShape {
        ProblemShape::new(2, 2).unwrap()
    }

    fn class(shape: ProblemShape) -> PolicyClass {
        PolicyClass::new(enumerate_deterministic_policies(shape, DEFAULT_POLICY_CAP).unwrap()).unwrap()
    }

    fn constant_sequence(c: f64, horizon: usize) -> AdversarySequence {
        let round = Round {
            model: TransitionModel::new(shape(), vec![0.6, 0.4, 0.3, 0.7, 0.5, 0.5, 0.2, 0.8]).unwrap(),
            loss: LossFunction::constant(shape(), c).unwrap(),
        };
        AdversarySequence::new(shape(), "constant", vec![round; horizon]).unwrap()
    }

    fn flip_fixture() -> AdversarySequence {
        let s = shape();
        let flip = TransitionModel::deterministic(s, &[0, 1, 1, 0]).unwrap();
        AdversarySequence::new(
            s,
            "flip",
            vec![
                Round {
                    model: flip.clone(),
                    loss: LossFunction::constant(s, 0.0).unwrap(),
                },
                Round {
                    model: flip,
                    loss: LossFunction::new(s, vec![0.0, 0.0, 1.0, 1.0]).unwrap(),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_round_game() {
        let seq = constant_sequence(0.5, 1);
        let mut learner = SdMdpLearner::new(class(shape()), 1, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trace = run_game(&mut learner, &seq, 0, 1, &mut rng, true).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert!(trace.records[0].redrew);
        assert!(!trace.records[0].switched);
        assert_eq!(trace.records[0].costs.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn zero_loss_game() {
        let seq = constant_sequence(0.0, 300);
        let mut learner = SdMdpLearner::new(class(shape()), 300, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trace = run_game(&mut learner, &seq, 0, 2, &mut rng, false).unwrap();
        assert_eq!(trace.realized_total(), 0.0);
        assert_eq!(trace.switch_count, 0);
        assert!(trace.records.iter().skip(1).all(|r| !r.redrew));
    }

    #[test]
    fn traces_are_seed_deterministic() {
        let seq = AdversaryScript::new(AdversaryKind::RandomSmoothed, shape(), 3, 0.25, 10, 0.0)
            .unwrap()
            .precompute(500, DEFAULT_MEMORY_CAP)
            .unwrap();
        let run = || {
            let mut learner = SdMdpLearner::new(class(shape()), 500, 1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            run_game(&mut learner, &seq, 1, 77, &mut rng, true).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn horizon_and_shape_mismatch() {
        let seq = constant_sequence(0.1, 10);
        let mut learner = SdMdpLearner::new(class(shape()), 11, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(run_game(&mut learner, &seq, 0, 0, &mut rng, false).is_err());
        let other = ProblemShape::new(3, 2).unwrap();
        let mut learner = SdMdpLearner::new(class(other), 10, 0).unwrap();
        assert!(matches!(
            run_game(&mut learner, &seq, 0, 0, &mut rng, false),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn comparator_examples() {
        let m = comparator_losses(&class(shape()), &constant_sequence(0.25, 20), 0).unwrap();
        assert!(m.values.iter().all(|&c| (c - 0.25).abs() < 1e-15));

        let m = comparator_losses(&class(shape()), &flip_fixture(), 0).unwrap();
        assert_eq!(m.get(3, 2), 1.0);
        assert_eq!(m.get(0, 2), 0.0);
    }

    #[test]
    fn comparators_do_not_depend_on_learners() {
        let seq = AdversaryScript::new(AdversaryKind::SinusoidalLoss, shape(), 8, 0.25, 25, 0.0)
            .unwrap()
            .precompute(200, DEFAULT_MEMORY_CAP)
            .unwrap();
        let before = comparator_losses(&class(shape()), &seq, 0).unwrap();
        for kind in [LearnerKind::SdMdp, LearnerKind::EwaMdp] {
            let mut learner = kind.build(class(shape()), 200, 0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            run_game(learner.as_mut(), &seq, 0, 3, &mut rng, false).unwrap();
            assert_eq!(comparator_losses(&class(shape()), &seq, 0).unwrap(), before);
        }
    }

    #[test]
    fn self_comparison_has_zero_c_term() {
        // A one-policy class never switches, and C_T against itself is 0.
        let single = PolicyClass::new(vec![Policy::uniform(shape())]).unwrap();
        let seq = constant_sequence(0.4, 50);
        let mut learner = SdMdpLearner::new(single.clone(), 50, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trace = run_game(&mut learner, &seq, 0, 4, &mut rng, false).unwrap();
        let report = regret_report(&trace, &comparator_losses(&single, &seq, 0).unwrap(), 1.0).unwrap();
        assert_eq!(report.c_term[0], 0.0);
        assert_eq!(report.switch_count, 0);
    }

    #[test]
    fn bound_arithmetic() {
        let tau = -1.0 / 0.75f64.ln();
        let b = sd_mdp_regret_bound(16, 20_000, tau);
        assert!((b - 6635.5).abs() < 0.5, "{b}");
        assert!(((4.0 * (10_000.0 * 8f64.ln()).sqrt() + 8f64.ln()) - 578.9).abs() < 0.05);
    }

    #[test]
    fn decomposition_identity_and_switch_count() {
        let seq = AdversaryScript::new(AdversaryKind::ModelSwitching, shape(), 5, 0.25, 40, 0.0)
            .unwrap()
            .precompute(2000, DEFAULT_MEMORY_CAP)
            .unwrap();
        let comps = comparator_losses(&class(shape()), &seq, 0).unwrap();
        for seed in 0..5 {
            let mut learner = SdMdpLearner::new(class(shape()), 2000, 0).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = run_game(&mut learner, &seq, 0, seed, &mut rng, false).unwrap();
            let report = regret_report(&trace, &comps, 2.0).unwrap();
            assert!(report.decomposition_residual() <= 1e-9);
            assert_eq!(
                trace.switch_count,
                trace.records.iter().filter(|r| r.switched).count()
            );
            assert!(report.realized_total >= 0.0 && report.realized_total <= 2000.0);
            for r in &trace.records {
                assert!((0.0..=1.0).contains(&r.loss));
                assert_eq!(r.chosen_cost, comps.get(r.policy, r.t));
            }
        }
    }

    #[test]
    fn identical_seeds_have_zero_variance() {
        let seq = Arc::new(constant_sequence(0.3, 100));
        let summary = monte_carlo(&MonteCarloSpec {
            learner: LearnerKind::SdMdp,
            class: class(shape()),
            sequence: seq,
            x0: 0,
            seeds: vec![9, 9],
            tau: 1.0,
        })
        .unwrap();
        assert_eq!(summary.stderr_regret, 0.0);
        assert_eq!(summary.stderr_switches, 0.0);
    }

    #[test]
    fn monte_carlo_needs_two_seeds() {
        let spec = MonteCarloSpec {
            learner: LearnerKind::SdMdp,
            class: class(shape()),
            sequence: Arc::new(constant_sequence(0.3, 10)),
            x0: 0,
            seeds: vec![1],
            tau: 1.0,
        };
        assert!(monte_carlo(&spec).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, 3.0 * x.sqrt())).collect();
        assert!((log_log_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert!(log_log_slope(&[(1.0, 1.0), (2.0, -1.0)]).is_none());
    }

    #[test]
    fn mean_and_stderr_basic() {
        let (m, s) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - ((5.0 / 3.0) / 4.0f64).sqrt()).abs() < 1e-15);
    }
}
