//! Learners over a finite policy class.
//!
//! Each policy is an expert whose round-`t` loss is its exact counterfactual
//! expected loss `E[l_t(x_t^pi, pi)]`, where `x_t^pi` is the state reached by
//! running `pi` from `x0` against the models seen so far. The law of `x_t^pi`
//! is tracked by forward propagation, so the cost per round is
//! `|Pi| * |X|^2 * |A|`.

use std::sync::Arc;

use rand::RngCore;

use crate::error::{invalid, Error, Result};
use crate::experts::{learning_rate, Choice, ExponentialWeights, ShrinkingDartboard};
use crate::mdp::{expected_loss_unchecked, LossFunction, Policy, ProblemShape, StateDistribution, TransitionModel};

/// A nonempty list of same-shape policies.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyClass {
    shape: ProblemShape,
    policies: Arc<[Policy]>,
}

impl PolicyClass {
    pub fn new(policies: Vec<Policy>) -> Result<Self> {
        let first = policies
            .first()
            .ok_or_else(|| invalid("policy class", "empty"))?;
        let shape = first.shape();
        if let Some(p) = policies.iter().find(|p| p.shape() != shape) {
            return Err(Error::ShapeMismatch(format!(
                "policy class mixes {}x{} and {}x{}",
                shape.num_states(),
                shape.num_actions(),
                p.shape().num_states(),
                p.shape().num_actions()
            )));
        }
        Ok(Self {
            shape,
            policies: policies.into(),
        })
    }

    pub fn shape(&self) -> ProblemShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn get(&self, i: usize) -> &Policy {
        &self.policies[i]
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }
}

/// Laws of `x_t^pi` for every policy in a class, all started at `x0`.
#[derive(Debug, Clone)]
pub struct CounterfactualTracker {
    class: PolicyClass,
    dists: Vec<StateDistribution>,
    scratch: Vec<f64>,
}

impl CounterfactualTracker {
    pub fn new(class: PolicyClass, x0: usize) -> Result<Self> {
        let start = StateDistribution::point_mass(class.shape().num_states(), x0)?;
        Ok(Self {
            dists: vec![start; class.len()],
            class,
            scratch: Vec::new(),
        })
    }

    pub fn class(&self) -> &PolicyClass {
        &self.class
    }

    pub fn distributions(&self) -> &[StateDistribution] {
        &self.dists
    }

    /// Returns `c_t(pi)` for every policy, evaluated on the current laws, then
    /// advances each law one step under `model`.
    pub fn observe(&mut self, model: &TransitionModel, loss: &LossFunction) -> Result<Vec<f64>> {
        let mut costs = Vec::with_capacity(self.class.len());
        self.observe_into(model, loss, &mut costs)?;
        Ok(costs)
    }

    pub fn observe_into(
        &mut self,
        model: &TransitionModel,
        loss: &LossFunction,
        costs: &mut Vec<f64>,
    ) -> Result<()> {
        let shape = self.class.shape();
        if model.shape() != shape || loss.shape() != shape {
            return Err(Error::ShapeMismatch(format!(
                "policy class is {}x{}, round inputs are {}x{} / {}x{}",
                shape.num_states(),
                shape.num_actions(),
                model.shape().num_states(),
                model.shape().num_actions(),
                loss.shape().num_states(),
                loss.shape().num_actions()
            )));
        }
        costs.clear();
        for (policy, dist) in self.class.policies.iter().zip(self.dists.iter_mut()) {
            costs.push(expected_loss_unchecked(dist.as_slice(), policy, loss));
            dist.push_forward_in_place(policy, model, &mut self.scratch);
        }
        Ok(())
    }
}

/// A learner that picks a policy index each round and then observes the
/// round's model and loss.
pub trait PolicyLearner: Send {
    fn class(&self) -> &PolicyClass;

    fn horizon(&self) -> usize;

    fn eta(&self) -> f64;

    fn choose_policy(&mut self, rng: &mut dyn RngCore) -> Result<Choice>;

    /// Full-information feedback; returns `c_t`.
    fn observe(&mut self, model: &TransitionModel, loss: &LossFunction) -> Result<Vec<f64>>;

    fn switch_count(&self) -> usize;

    fn name(&self) -> &'static str;
}

/// Shrinking dartboard over a policy class.
#[derive(Debug, Clone)]
pub struct SdMdpLearner {
    tracker: CounterfactualTracker,
    experts: ShrinkingDartboard,
    horizon: usize,
}

impl SdMdpLearner {
    pub fn new(class: PolicyClass, horizon: usize, x0: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon", "must be positive"));
        }
        let experts = ShrinkingDartboard::new(class.len(), horizon)?;
        Ok(Self {
            tracker: CounterfactualTracker::new(class, x0)?,
            experts,
            horizon,
        })
    }

    pub fn experts(&self) -> &ShrinkingDartboard {
        &self.experts
    }

    pub fn policy_distributions(&self) -> &[StateDistribution] {
        self.tracker.distributions()
    }
}

impl PolicyLearner for SdMdpLearner {
    fn class(&self) -> &PolicyClass {
        self.tracker.class()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn eta(&self) -> f64 {
        self.experts.state().eta()
    }

    fn choose_policy(&mut self, rng: &mut dyn RngCore) -> Result<Choice> {
        self.experts.choose(rng)
    }

    fn observe(&mut self, model: &TransitionModel, loss: &LossFunction) -> Result<Vec<f64>> {
        let costs = self.tracker.observe(model, loss)?;
        self.experts.update(&costs)?;
        Ok(costs)
    }

    fn switch_count(&self) -> usize {
        self.experts.state().switch_count()
    }

    fn name(&self) -> &'static str {
        "sd-mdp"
    }
}

/// Baseline: exponential weights over the class with a fresh draw every round.
#[derive(Debug, Clone)]
pub struct EwaMdpLearner {
    tracker: CounterfactualTracker,
    experts: ExponentialWeights,
    horizon: usize,
}

impl EwaMdpLearner {
    pub fn new(class: PolicyClass, horizon: usize, x0: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon", "must be positive"));
        }
        let experts = ExponentialWeights::with_eta(class.len(), learning_rate(class.len(), horizon))?;
        Ok(Self {
            tracker: CounterfactualTracker::new(class, x0)?,
            experts,
            horizon,
        })
    }
}

impl PolicyLearner for EwaMdpLearner {
    fn class(&self) -> &PolicyClass {
        self.tracker.class()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn eta(&self) -> f64 {
        self.experts.state().eta()
    }

    fn choose_policy(&mut self, rng: &mut dyn RngCore) -> Result<Choice> {
        self.experts.choose(rng)
    }

    fn observe(&mut self, model: &TransitionModel, loss: &LossFunction) -> Result<Vec<f64>> {
        let costs = self.tracker.observe(model, loss)?;
        self.experts.update(&costs)?;
        Ok(costs)
    }

    fn switch_count(&self) -> usize {
        self.experts.state().switch_count()
    }

    fn name(&self) -> &'static str {
        "ewa-mdp"
    }
}
