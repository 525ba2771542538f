//! Experiment configuration files (TOML).
//!
//! ```toml
//! [shape]
//! states = 4
//! actions = 2
//!
//! [adversary]
//! kind = "model-switching"  # fixed | model-switching | random-smoothed |
//!                           # leader-punisher-oblivious | sinusoidal-loss
//! seed = 7
//! gamma = 0.25
//! period = 500
//! phase = 0.0
//! # model_file = "kernels.txt"  # explicit base models in the text format
//! # smooth = true               # false feeds model_file through unsmoothed
//!
//! [learner]
//! algorithm = "sd-mdp"            # sd-mdp | ewa-mdp
//! policy_class = "all-deterministic"  # all-deterministic | file | cover
//! # policy_file = "policies.txt"
//! # cover_epsilon = 0.2           # default 1/T, raised to fit cover_cap
//! cover_cap = 1000000
//! allow_unmixed = false
//!
//! [run]
//! horizons = [5000, 10000]
//! seeds = [1, 2, 3]
//! x0 = 0
//! comparator = "exact"            # exact | sampled
//! record_costs = false
//!
//! [experts]
//! num_experts = 8
//! horizon = 10000
//! streams = ["fixed-gap", "phase-shifted-punisher", "random"]
//! algorithms = ["sd", "ewa"]
//! seed = 0
//! gap = 0.2
//! period = 200
//! ```
//!
//! Only `[shape]`, `run.horizons` and `run.seeds` are required. Relative file
//! paths are resolved against the config file's directory by [`load_config`].

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryKind, DEFAULT_GAMMA};
use crate::cover::DEFAULT_COVER_CAP;
use crate::harness::LearnerKind;
use crate::mdp::ProblemShape;
use crate::streams::StreamKind;

const DEFAULT_PERIOD: usize = 100;
const DEFAULT_EXPERTS: usize = 8;
const DEFAULT_EXPERTS_HORIZON: usize = 10_000;
const DEFAULT_GAP: f64 = 0.2;
const DEFAULT_STREAM_PERIOD: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Invalid(Vec<FieldError>),
    Io { path: PathBuf, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "config line {line}: {message}"),
            ConfigError::Invalid(errors) => {
                write!(f, "invalid config:")?;
                for e in errors {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
            ConfigError::Io { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Exact,
    Sampled,
}

impl Comparator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Comparator::Exact => "exact",
            Comparator::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpertAlgorithm {
    ShrinkingDartboard,
    ExponentialWeights,
}

impl ExpertAlgorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExpertAlgorithm::ShrinkingDartboard => "sd",
            ExpertAlgorithm::ExponentialWeights => "ewa",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "sd" => Some(ExpertAlgorithm::ShrinkingDartboard),
            "ewa" => Some(ExpertAlgorithm::ExponentialWeights),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyClassSource {
    AllDeterministic,
    File(PathBuf),
    Cover { epsilon: Option<f64>, cap: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversaryConfig {
    pub kind: AdversaryKind,
    pub seed: u64,
    pub gamma: f64,
    pub period: usize,
    pub phase: f64,
    pub model_file: Option<PathBuf>,
    pub smooth: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: LearnerKind,
    pub policy_class: PolicyClassSource,
    pub allow_unmixed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub horizons: Vec<usize>,
    pub seeds: Vec<u64>,
    pub x0: usize,
    pub comparator: Comparator,
    pub record_costs: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertsConfig {
    pub num_experts: usize,
    pub horizon: usize,
    pub streams: Vec<StreamKind>,
    pub algorithms: Vec<ExpertAlgorithm>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub shape: ProblemShape,
    pub adversary: AdversaryConfig,
    pub learner: LearnerConfig,
    pub run: RunConfig,
    pub experts: ExpertsConfig,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    shape: Option<RawShape>,
    #[serde(skip_serializing_if = "Option::is_none")]
    adversary: Option<RawAdversary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    learner: Option<RawLearner>,
    run: Option<RawRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    experts: Option<RawExperts>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawShape {
    states: Option<i64>,
    actions: Option<i64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawAdversary {
    kind: Option<String>,
    seed: Option<i64>,
    gamma: Option<f64>,
    period: Option<i64>,
    phase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model_file: Option<String>,
    smooth: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawLearner {
    algorithm: Option<String>,
    policy_class: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    policy_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cover_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cover_cap: Option<i64>,
    allow_unmixed: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    horizons: Option<Vec<i64>>,
    seeds: Option<Vec<i64>>,
    x0: Option<i64>,
    comparator: Option<String>,
    record_costs: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawExperts {
    num_experts: Option<i64>,
    horizon: Option<i64>,
    streams: Option<Vec<String>>,
    algorithms: Option<Vec<String>>,
    seed: Option<i64>,
    gap: Option<f64>,
    period: Option<i64>,
}

struct Checker {
    errors: Vec<FieldError>,
}

impl Checker {
    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.errors.push(FieldError {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn positive(&mut self, field: &str, value: Option<i64>, default: Option<usize>) -> usize {
        match (value, default) {
            (Some(v), _) if v > 0 => v as usize,
            (Some(v), _) => {
                self.fail(field, format!("must be positive, got {v}"));
                1
            }
            (None, Some(d)) => d,
            (None, None) => {
                self.fail(field, "missing");
                1
            }
        }
    }

    fn seed(&mut self, field: &str, value: Option<i64>) -> u64 {
        match value {
            Some(v) if v >= 0 => v as u64,
            Some(v) => {
                self.fail(field, format!("must be nonnegative, got {v}"));
                0
            }
            None => 0,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates `text`, reporting every validation failure at once.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut c = Checker { errors: Vec::new() };

    let shape_raw = raw.shape.unwrap_or_else(|| {
        c.fail("shape", "missing section");
        RawShape {
            states: Some(1),
            actions: Some(1),
        }
    });
    let states = c.positive("shape.states", shape_raw.states, None);
    let actions = c.positive("shape.actions", shape_raw.actions, None);
    let shape = ProblemShape::new(states, actions).expect("both dimensions positive");

    let adv = raw.adversary.unwrap_or_default();
    let kind = match adv.kind.as_deref() {
        None => AdversaryKind::Fixed,
        Some(s) => s.parse().unwrap_or_else(|_| {
            c.fail("adversary.kind", format!("unknown kind {s:?}"));
            AdversaryKind::Fixed
        }),
    };
    let gamma = adv.gamma.unwrap_or(DEFAULT_GAMMA);
    if !(gamma > 0.0 && gamma <= 1.0) {
        c.fail("adversary.gamma", format!("{gamma} not in (0, 1]"));
    }
    let phase = adv.phase.unwrap_or(0.0);
    if !phase.is_finite() {
        c.fail("adversary.phase", "must be finite");
    }
    let smooth = adv.smooth.unwrap_or(true);
    if !smooth && adv.model_file.is_none() {
        c.fail("adversary.smooth", "only explicit model_file models may be left unsmoothed");
    }
    if adv.model_file.is_some() && kind == AdversaryKind::RandomSmoothed {
        c.fail("adversary.model_file", "random-smoothed draws its own models");
    }
    let adversary = AdversaryConfig {
        kind,
        seed: c.seed("adversary.seed", adv.seed),
        gamma,
        period: c.positive("adversary.period", adv.period, Some(DEFAULT_PERIOD)),
        phase,
        model_file: adv.model_file.map(PathBuf::from),
        smooth,
    };

    let lrn = raw.learner.unwrap_or_default();
    let algorithm = match lrn.algorithm.as_deref() {
        None => LearnerKind::SdMdp,
        Some(s) => LearnerKind::parse(s).unwrap_or_else(|_| {
            c.fail("learner.algorithm", format!("unknown algorithm {s:?}"));
            LearnerKind::SdMdp
        }),
    };
    let policy_class = match lrn.policy_class.as_deref().unwrap_or("all-deterministic") {
        "all-deterministic" => PolicyClassSource::AllDeterministic,
        "file" => match &lrn.policy_file {
            Some(p) => PolicyClassSource::File(PathBuf::from(p)),
            None => {
                c.fail("learner.policy_file", "required when policy_class = \"file\"");
                PolicyClassSource::AllDeterministic
            }
        },
        "cover" => {
            if let Some(e) = lrn.cover_epsilon {
                if !(e > 0.0 && e <= 2.0) {
                    c.fail("learner.cover_epsilon", format!("{e} not in (0, 2]"));
                }
            }
            PolicyClassSource::Cover {
                epsilon: lrn.cover_epsilon,
                cap: c.positive("learner.cover_cap", lrn.cover_cap, Some(DEFAULT_COVER_CAP)),
            }
        }
        other => {
            c.fail("learner.policy_class", format!("unknown source {other:?}"));
            PolicyClassSource::AllDeterministic
        }
    };
    if lrn.policy_file.is_some() && !matches!(policy_class, PolicyClassSource::File(_)) {
        c.fail("learner.policy_file", "set but policy_class is not \"file\"");
    }
    if (lrn.cover_epsilon.is_some() || lrn.cover_cap.is_some())
        && !matches!(policy_class, PolicyClassSource::Cover { .. })
    {
        c.fail("learner.cover_epsilon", "cover options set but policy_class is not \"cover\"");
    }
    let learner = LearnerConfig {
        algorithm,
        policy_class,
        allow_unmixed: lrn.allow_unmixed.unwrap_or(false),
    };

    let run_raw = raw.run.unwrap_or_else(|| {
        c.fail("run", "missing section");
        RawRun::default()
    });
    let horizons = match run_raw.horizons {
        None => {
            c.fail("run.horizons", "missing");
            vec![]
        }
        Some(hs) if hs.is_empty() => {
            c.fail("run.horizons", "empty");
            vec![]
        }
        Some(hs) => hs
            .iter()
            .enumerate()
            .map(|(i, &h)| c.positive(&format!("run.horizons[{i}]"), Some(h), None))
            .collect(),
    };
    let seeds: Vec<u64> = match run_raw.seeds {
        None => {
            c.fail("run.seeds", "missing");
            vec![]
        }
        Some(ss) if ss.is_empty() => {
            c.fail("run.seeds", "empty");
            vec![]
        }
        Some(ss) => ss
            .iter()
            .enumerate()
            .map(|(i, &s)| c.seed(&format!("run.seeds[{i}]"), Some(s)))
            .collect(),
    };
    if seeds.iter().collect::<HashSet<_>>().len() != seeds.len() {
        c.fail("run.seeds", "seeds must be distinct");
    }
    let x0 = match run_raw.x0 {
        None => 0,
        Some(x) if x >= 0 && (x as usize) < states => x as usize,
        Some(x) => {
            c.fail("run.x0", format!("{x} is not a state of a {states}-state problem"));
            0
        }
    };
    let comparator = match run_raw.comparator.as_deref().unwrap_or("exact") {
        "exact" => Comparator::Exact,
        "sampled" => Comparator::Sampled,
        other => {
            c.fail("run.comparator", format!("unknown mode {other:?}"));
            Comparator::Exact
        }
    };
    let run = RunConfig {
        horizons,
        seeds,
        x0,
        comparator,
        record_costs: run_raw.record_costs.unwrap_or(false),
    };

    let ex = raw.experts.unwrap_or_default();
    let gap = ex.gap.unwrap_or(DEFAULT_GAP);
    if !(0.0..=1.0).contains(&gap) {
        c.fail("experts.gap", format!("{gap} not in [0, 1]"));
    }
    let stream_period = c.positive("experts.period", ex.period, Some(DEFAULT_STREAM_PERIOD));
    let stream_names = ex.streams.unwrap_or_else(|| {
        ["fixed-gap", "phase-shifted-punisher", "random"]
            .map(String::from)
            .to_vec()
    });
    if stream_names.is_empty() {
        c.fail("experts.streams", "empty");
    }
    let streams = stream_names
        .iter()
        .filter_map(|s| match s.parse::<StreamKind>() {
            Ok(StreamKind::FixedGap { .. }) => Some(StreamKind::FixedGap { gap }),
            Ok(StreamKind::PhaseShiftedPunisher { .. }) => Some(StreamKind::PhaseShiftedPunisher {
                period: stream_period,
            }),
            Ok(k) => Some(k),
            Err(_) => {
                c.fail("experts.streams", format!("unknown stream {s:?}"));
                None
            }
        })
        .collect();
    let algorithm_names = ex.algorithms.unwrap_or_else(|| vec!["sd".into(), "ewa".into()]);
    if algorithm_names.is_empty() {
        c.fail("experts.algorithms", "empty");
    }
    let algorithms = algorithm_names
        .iter()
        .filter_map(|s| {
            let a = ExpertAlgorithm::parse(s);
            if a.is_none() {
                c.fail("experts.algorithms", format!("unknown algorithm {s:?} (sd | ewa)"));
            }
            a
        })
        .collect();
    let experts = ExpertsConfig {
        num_experts: c.positive("experts.num_experts", ex.num_experts, Some(DEFAULT_EXPERTS)),
        horizon: c.positive("experts.horizon", ex.horizon, Some(DEFAULT_EXPERTS_HORIZON)),
        streams,
        algorithms,
        seed: c.seed("experts.seed", ex.seed),
    };

    if !c.errors.is_empty() {
        return Err(ConfigError::Invalid(c.errors));
    }
    Ok(ExperimentConfig {
        shape,
        adversary,
        learner,
        run,
        experts,
    })
}

/// Reads `path`, parses it, and resolves relative file references against
/// the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut config = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(p) = &mut config.adversary.model_file {
        *p = base.join(&*p);
    }
    if let PolicyClassSource::File(p) = &mut config.learner.policy_class {
        *p = base.join(&*p);
    }
    Ok(config)
}

fn stream_name(kind: &StreamKind) -> String {
    kind.to_string()
}

impl ExperimentConfig {
    /// Canonical TOML with every field spelled out; reparses to `self`.
    pub fn to_canonical(&self) -> String {
        let path_str = |p: &PathBuf| p.to_string_lossy().into_owned();
        let (policy_class, policy_file, cover_epsilon, cover_cap) = match &self.learner.policy_class {
            PolicyClassSource::AllDeterministic => ("all-deterministic", None, None, None),
            PolicyClassSource::File(p) => ("file", Some(path_str(p)), None, None),
            PolicyClassSource::Cover { epsilon, cap } => ("cover", None, *epsilon, Some(*cap as i64)),
        };
        let (gap, stream_period) = self.experts.streams.iter().fold(
            (DEFAULT_GAP, DEFAULT_STREAM_PERIOD as i64),
            |(g, p), s| match s {
                StreamKind::FixedGap { gap } => (*gap, p),
                StreamKind::PhaseShiftedPunisher { period } => (g, *period as i64),
                StreamKind::Random => (g, p),
            },
        );
        let raw = RawConfig {
            shape: Some(RawShape {
                states: Some(self.shape.num_states() as i64),
                actions: Some(self.shape.num_actions() as i64),
            }),
            adversary: Some(RawAdversary {
                kind: Some(self.adversary.kind.as_str().to_string()),
                seed: Some(self.adversary.seed as i64),
                gamma: Some(self.adversary.gamma),
                period: Some(self.adversary.period as i64),
                phase: Some(self.adversary.phase),
                model_file: self.adversary.model_file.as_ref().map(path_str),
                smooth: Some(self.adversary.smooth),
            }),
            learner: Some(RawLearner {
                algorithm: Some(self.learner.algorithm.as_str().to_string()),
                policy_class: Some(policy_class.to_string()),
                policy_file,
                cover_epsilon,
                cover_cap,
                allow_unmixed: Some(self.learner.allow_unmixed),
            }),
            run: Some(RawRun {
                horizons: Some(self.run.horizons.iter().map(|&h| h as i64).collect()),
                seeds: Some(self.run.seeds.iter().map(|&s| s as i64).collect()),
                x0: Some(self.run.x0 as i64),
                comparator: Some(self.run.comparator.as_str().to_string()),
                record_costs: Some(self.run.record_costs),
            }),
            experts: Some(RawExperts {
                num_experts: Some(self.experts.num_experts as i64),
                horizon: Some(self.experts.horizon as i64),
                streams: Some(self.experts.streams.iter().map(stream_name).collect()),
                algorithms: Some(
                    self.experts
                        .algorithms
                        .iter()
                        .map(|a| a.as_str().to_string())
                        .collect(),
                ),
                seed: Some(self.experts.seed as i64),
                gap: Some(gap),
                period: Some(stream_period),
            }),
        };
        toml::to_string(&raw).expect("plain data serializes")
    }
}
