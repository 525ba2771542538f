//! Seeded oblivious adversaries.
//!
//! A script's round-`t` output `(m_t, l_t)` depends only on the script's own
//! parameters and `t`. There is no learner-history argument anywhere in this
//! module. Generated models are smoothed with `gamma` so that every induced
//! matrix has contraction coefficient at most `1 - gamma`.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::mdp::{
    deterministic_actions_at, deterministic_policy_count, expected_loss_unchecked, LossFunction,
    Policy, ProblemShape, StateDistribution, TransitionModel, DEFAULT_POLICY_CAP,
};
use crate::mixing::smooth_model;
use crate::streams::argmin;

pub const DEFAULT_GAMMA: f64 = 0.25;

/// Default cap on floats held by a materialized sequence.
pub const DEFAULT_MEMORY_CAP: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdversaryKind {
    Fixed,
    ModelSwitching,
    RandomSmoothed,
    LeaderPunisher,
    SinusoidalLoss,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 5] = [
        AdversaryKind::Fixed,
        AdversaryKind::ModelSwitching,
        AdversaryKind::RandomSmoothed,
        AdversaryKind::LeaderPunisher,
        AdversaryKind::SinusoidalLoss,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AdversaryKind::Fixed => "fixed",
            AdversaryKind::ModelSwitching => "model-switching",
            AdversaryKind::RandomSmoothed => "random-smoothed",
            AdversaryKind::LeaderPunisher => "leader-punisher-oblivious",
            AdversaryKind::SinusoidalLoss => "sinusoidal-loss",
        }
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdversaryKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid("adversary kind", format!("unknown kind {s:?}")))
    }
}

/// One round of adversary output.
#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub model: TransitionModel,
    pub loss: LossFunction,
}

/// A fully specified oblivious adversary.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryScript {
    kind: AdversaryKind,
    shape: ProblemShape,
    seed: u64,
    gamma: f64,
    period: usize,
    phase: f64,
    base_models: Vec<TransitionModel>,
    base_loss: LossFunction,
    loss_phases: Vec<f64>,
}

const TAG_BASE: u64 = 0x5eed_0001;
const TAG_ROUND: u64 = 0x5eed_0002;

fn random_row<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = row.iter().sum();
    for v in row.iter_mut() {
        *v /= sum;
    }
    row
}

/// Raw random kernel with rows uniform on the simplex.
pub fn random_model<R: Rng + ?Sized>(shape: ProblemShape, rng: &mut R) -> TransitionModel {
    let n = shape.num_states();
    let kernel = (0..n * shape.num_actions())
        .flat_map(|_| random_row(n, rng))
        .collect();
    TransitionModel::from_raw_unchecked(shape, kernel)
}

pub fn random_loss<R: Rng + ?Sized>(shape: ProblemShape, rng: &mut R) -> LossFunction {
    let values = (0..shape.num_states() * shape.num_actions())
        .map(|_| rng.gen::<f64>())
        .collect();
    LossFunction::new(shape, values).expect("uniform draws lie in [0, 1)")
}

impl AdversaryScript {
    pub fn new(
        kind: AdversaryKind,
        shape: ProblemShape,
        seed: u64,
        gamma: f64,
        period: usize,
        phase: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(invalid("gamma", format!("{gamma} not in (0, 1]")));
        }
        if period == 0 {
            return Err(invalid("period", "must be positive"));
        }
        if !phase.is_finite() {
            return Err(invalid("phase", "must be finite"));
        }
        if kind == AdversaryKind::LeaderPunisher
            && !deterministic_policy_count(shape).is_some_and(|c| c <= DEFAULT_POLICY_CAP)
        {
            return Err(Error::CapExceeded {
                what: "deterministic policy",
                requested: format!("{}^{}", shape.num_actions(), shape.num_states()),
                cap: DEFAULT_POLICY_CAP,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ TAG_BASE);
        let base_models = (0..2)
            .map(|_| smooth_model(&random_model(shape, &mut rng), gamma))
            .collect::<Result<Vec<_>>>()?;
        let base_loss = random_loss(shape, &mut rng);
        let loss_phases = (0..shape.num_states() * shape.num_actions())
            .map(|_| TAU * rng.gen::<f64>())
            .collect();
        Ok(Self {
            kind,
            shape,
            seed,
            gamma,
            period,
            phase,
            base_models,
            base_loss,
            loss_phases,
        })
    }

    /// Replaces the generated base models with `models`, cycled every `period`
    /// rounds by the switching kinds. With `smooth = false` the models are used
    /// as given, which may break mixing.
    pub fn with_models(mut self, models: Vec<TransitionModel>, smooth: bool) -> Result<Self> {
        if models.is_empty() {
            return Err(invalid("model list", "empty"));
        }
        if self.kind == AdversaryKind::RandomSmoothed {
            return Err(invalid(
                "model list",
                "random-smoothed draws fresh models every round",
            ));
        }
        if let Some(m) = models.iter().find(|m| m.shape() != self.shape) {
            return Err(Error::ShapeMismatch(format!(
                "script is {}x{}, model is {}x{}",
                self.shape.num_states(),
                self.shape.num_actions(),
                m.shape().num_states(),
                m.shape().num_actions()
            )));
        }
        self.base_models = if smooth {
            models
                .iter()
                .map(|m| smooth_model(m, self.gamma))
                .collect::<Result<_>>()?
        } else {
            models
        };
        Ok(self)
    }

    pub fn kind(&self) -> AdversaryKind {
        self.kind
    }

    pub fn shape(&self) -> ProblemShape {
        self.shape
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn base_models(&self) -> &[TransitionModel] {
        &self.base_models
    }

    pub fn describe(&self) -> String {
        format!(
            "{}(seed={},gamma={},period={})",
            self.kind, self.seed, self.gamma, self.period
        )
    }

    fn round_rng(&self, t: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ TAG_ROUND);
        rng.set_stream(t as u64);
        rng
    }

    fn model_at(&self, t: usize) -> TransitionModel {
        let idx = match self.kind {
            AdversaryKind::ModelSwitching => ((t - 1) / self.period) % self.base_models.len(),
            _ => 0,
        };
        self.base_models[idx].clone()
    }

    fn sinusoidal_loss(&self, t: usize) -> LossFunction {
        let values = self
            .loss_phases
            .iter()
            .map(|&phi| {
                let angle = TAU * t as f64 / self.period as f64 + self.phase + phi;
                (0.5 * (1.0 + angle.sin())).clamp(0.0, 1.0)
            })
            .collect();
        LossFunction::new(self.shape, values).expect("clamped to [0, 1]")
    }

    /// `(m_t, l_t)` for round `t >= 1`.
    ///
    /// The leader-punisher kind replays its own simulation from round 1, so
    /// streaming it costs `O(t)`; use [`AdversaryScript::precompute`] for runs.
    pub fn emit(&self, t: usize) -> Result<Round> {
        if t == 0 {
            return Err(Error::RoundOutOfRange { round: t, horizon: 0 });
        }
        match self.kind {
            AdversaryKind::Fixed | AdversaryKind::ModelSwitching => Ok(Round {
                model: self.model_at(t),
                loss: self.base_loss.clone(),
            }),
            AdversaryKind::SinusoidalLoss => Ok(Round {
                model: self.model_at(t),
                loss: self.sinusoidal_loss(t),
            }),
            AdversaryKind::RandomSmoothed => {
                let mut rng = self.round_rng(t);
                let model = smooth_model(&random_model(self.shape, &mut rng), self.gamma)?;
                Ok(Round {
                    model,
                    loss: random_loss(self.shape, &mut rng),
                })
            }
            AdversaryKind::LeaderPunisher => {
                let mut sim = PunisherSim::new(self)?;
                let mut round = None;
                for s in 1..=t {
                    round = Some(sim.next(self, s));
                }
                Ok(round.expect("t >= 1"))
            }
        }
    }

    /// Materializes rounds `1..=horizon`, shared read-only across seeds.
    pub fn precompute(&self, horizon: usize, memory_cap: usize) -> Result<AdversarySequence> {
        let n = self.shape.num_states();
        let k = self.shape.num_actions();
        let per_round = n * k * n + n * k;
        let needed = per_round.saturating_mul(horizon);
        if needed > memory_cap {
            return Err(Error::CapExceeded {
                what: "materialized float",
                requested: needed.to_string(),
                cap: memory_cap,
            });
        }
        let mut rounds = Vec::with_capacity(horizon);
        if self.kind == AdversaryKind::LeaderPunisher {
            let mut sim = PunisherSim::new(self)?;
            for t in 1..=horizon {
                rounds.push(sim.next(self, t));
            }
        } else {
            for t in 1..=horizon {
                rounds.push(self.emit(t)?);
            }
        }
        Ok(AdversarySequence {
            shape: self.shape,
            description: self.describe(),
            rounds,
        })
    }
}

/// The punisher's private simulation: counterfactual totals of every
/// deterministic policy under the script's own rounds. Every `period` rounds
/// the current leader (lowest total, ties low) is re-elected and its actions
/// carry a full unit of loss until the next election.
struct PunisherSim {
    policies: Vec<Policy>,
    dists: Vec<StateDistribution>,
    totals: Vec<f64>,
    leader: usize,
    scratch: Vec<f64>,
}

impl PunisherSim {
    fn new(script: &AdversaryScript) -> Result<Self> {
        let shape = script.shape;
        let count = deterministic_policy_count(shape).unwrap_or(usize::MAX);
        let policies = (0..count)
            .map(|i| Policy::deterministic(shape, &deterministic_actions_at(shape, i)))
            .collect::<Result<Vec<_>>>()?;
        let start = StateDistribution::point_mass(shape.num_states(), 0)?;
        Ok(Self {
            dists: vec![start; policies.len()],
            totals: vec![0.0; policies.len()],
            policies,
            leader: 0,
            scratch: Vec::new(),
        })
    }

    fn next(&mut self, script: &AdversaryScript, t: usize) -> Round {
        if (t - 1).is_multiple_of(script.period) {
            self.leader = argmin(&self.totals);
        }
        let shape = script.shape;
        let k = shape.num_actions();
        let target = self.policies[self.leader]
            .deterministic_actions()
            .expect("enumerated policies are deterministic");
        let values = (0..shape.num_states() * k)
            .map(|i| {
                let (x, a) = (i / k, i % k);
                if a == target[x] {
                    1.0
                } else {
                    0.5 * script.base_loss.get(x, a)
                }
            })
            .collect();
        let loss = LossFunction::new(shape, values).expect("values lie in [0, 1]");
        let model = script.model_at(t);
        for ((policy, dist), total) in self
            .policies
            .iter()
            .zip(self.dists.iter_mut())
            .zip(self.totals.iter_mut())
        {
            *total += expected_loss_unchecked(dist.as_slice(), policy, &loss);
            dist.push_forward_in_place(policy, &model, &mut self.scratch);
        }
        Round { model, loss }
    }
}

/// A materialized adversary: `rounds[t - 1]` is round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarySequence {
    shape: ProblemShape,
    description: String,
    rounds: Vec<Round>,
}

impl AdversarySequence {
    pub fn new(shape: ProblemShape, description: impl Into<String>, rounds: Vec<Round>) -> Result<Self> {
        if let Some(r) = rounds
            .iter()
            .find(|r| r.model.shape() != shape || r.loss.shape() != shape)
        {
            return Err(Error::ShapeMismatch(format!(
                "sequence is {}x{}, round has {}x{}",
                shape.num_states(),
                shape.num_actions(),
                r.model.shape().num_states(),
                r.model.shape().num_actions()
            )));
        }
        Ok(Self {
            shape,
            description: description.into(),
            rounds,
        })
    }

    pub fn shape(&self) -> ProblemShape {
        self.shape
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    /// Round `t` (1-based).
    pub fn round(&self, t: usize) -> Result<&Round> {
        if t == 0 || t > self.rounds.len() {
            return Err(Error::RoundOutOfRange {
                round: t,
                horizon: self.rounds.len(),
            });
        }
        Ok(&self.rounds[t - 1])
    }

    pub fn models(&self) -> impl Iterator<Item = &TransitionModel> {
        self.rounds.iter().map(|r| &r.model)
    }

    /// Distinct models in first-appearance order.
    pub fn distinct_models(&self) -> Vec<TransitionModel> {
        let mut seen = HashSet::new();
        self.models()
            .filter(|m| seen.insert(m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<u64>>()))
            .cloned()
            .collect()
    }
}
