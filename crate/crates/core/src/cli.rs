//! Subcommand implementations behind the `online-mdp` binary.
//!
//! Every subcommand reads one [`ExperimentConfig`] and writes CSV or text
//! files into an output directory. Numeric CSV fields use 12 significant
//! digits; integers and flags are written as plain integers.
//!
//! | subcommand      | files                                                |
//! |-----------------|------------------------------------------------------|
//! | `run`           | `trace.csv`, `report.csv`, `costs.csv` (optional)    |
//! | `sweep`         | `summary.csv`                                        |
//! | `experts-bench` | `experts.csv`                                        |
//! | `mixing-check`  | none; prints `delta_max`, `tau` and the witness      |
//! | `cover`         | `cover.txt` (policy text format)                     |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adversary::{AdversaryScript, AdversarySequence, DEFAULT_MEMORY_CAP};
use crate::config::{Comparator, ConfigError, ExpertAlgorithm, ExperimentConfig, PolicyClassSource};
use crate::cover::{build_cover, epsilon_within_cap, CoverSpec, DEFAULT_COVER_CAP};
use crate::error::Error;
use crate::experts::{sd_regret_bound, ExponentialWeights, ShrinkingDartboard};
use crate::harness::{
    comparator_losses, monte_carlo, regret_report, run_game, sample_comparator_total,
    MonteCarloSpec,
};
use crate::mdp::{deterministic_actions_at, enumerate_deterministic_policies, ProblemShape, TransitionModel, DEFAULT_POLICY_CAP};
use crate::mixing::{certify_mixing, MixingVerdict};
use crate::sdmdp::PolicyClass;
use crate::streams::{argmin, LossStream};
use crate::textfmt::{parse_models, parse_policies, write_policy};

/// Exit status for a refuted mixing check.
pub const EXIT_REFUTED: i32 = 2;

/// Env var consulted for the default worker count.
pub const WORKERS_ENV: &str = "ONLINE_MDP_WORKERS";

const SAMPLED_COMPARATOR_TAG: u64 = 0x5A4D_504C_4544_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Sweep,
    ExpertsBench,
    MixingCheck,
    Cover,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Library(#[from] Error),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(
        "mixing refuted: delta_max = {delta_max} for deterministic policy {policy} \
         (actions {actions:?}) under model {model}; set learner.allow_unmixed to override"
    )]
    Refuted {
        delta_max: f64,
        policy: usize,
        actions: Vec<usize>,
        model: usize,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Refuted { .. } => EXIT_REFUTED,
            _ => 1,
        }
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub status: i32,
    pub files: Vec<PathBuf>,
    /// Human-readable report for stdout.
    pub message: String,
}

/// `%.12g`-style formatting.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..12).contains(&exp) {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim(&format!("{x:.*}", (11 - exp) as usize))
    }
}

fn write_file(out_dir: &Path, name: &str, contents: &str, outcome: &mut Outcome) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let path = out_dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io {
        path: path.clone(),
        message: e.to_string(),
    })?;
    outcome.files.push(path);
    Ok(())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("worker count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn script(config: &ExperimentConfig) -> Result<AdversaryScript, CliError> {
    let a = &config.adversary;
    let mut script = AdversaryScript::new(a.kind, config.shape, a.seed, a.gamma, a.period, a.phase)?;
    if let Some(path) = &a.model_file {
        let models = parse_models(&read_file(path)?)?;
        script = script.with_models(models, a.smooth)?;
    }
    Ok(script)
}

fn refutation(shape: ProblemShape, delta_max: f64, witness: (usize, usize)) -> CliError {
    CliError::Refuted {
        delta_max,
        policy: witness.0,
        actions: deterministic_actions_at(shape, witness.0),
        model: witness.1,
    }
}

/// Certified `tau` of the sequence's models; infinite when refuted but allowed.
fn certified_tau(
    config: &ExperimentConfig,
    sequence: &AdversarySequence,
    notes: &mut String,
) -> Result<f64, CliError> {
    match certify_mixing(&sequence.distinct_models(), config.shape, DEFAULT_POLICY_CAP)? {
        MixingVerdict::Certified(c) => Ok(c.tau),
        MixingVerdict::Refuted { delta_max, witness } => {
            let err = refutation(config.shape, delta_max, witness);
            if config.learner.allow_unmixed {
                let _ = writeln!(notes, "warning: {err}; continuing with tau = inf");
                Ok(f64::INFINITY)
            } else {
                Err(err)
            }
        }
    }
}

fn cover_for(config: &ExperimentConfig, horizon: usize) -> Result<CoverSpec, CliError> {
    let (epsilon, cap) = match &config.learner.policy_class {
        PolicyClassSource::Cover { epsilon, cap } => (*epsilon, *cap),
        _ => (None, DEFAULT_COVER_CAP),
    };
    let target = epsilon.unwrap_or((1.0 / horizon as f64).min(2.0));
    let eps = epsilon_within_cap(config.shape, target, cap)?;
    Ok(build_cover(config.shape, eps, cap)?)
}

fn policy_class(config: &ExperimentConfig, horizon: usize) -> Result<(PolicyClass, Option<CoverSpec>), CliError> {
    Ok(match &config.learner.policy_class {
        PolicyClassSource::AllDeterministic => (
            PolicyClass::new(enumerate_deterministic_policies(config.shape, DEFAULT_POLICY_CAP)?)?,
            None,
        ),
        PolicyClassSource::File(path) => {
            let policies = parse_policies(&read_file(path)?)?;
            if let Some(p) = policies.iter().find(|p| p.shape() != config.shape) {
                return Err(Error::ShapeMismatch(format!(
                    "{}: policy is {}x{}, config is {}x{}",
                    path.display(),
                    p.shape().num_states(),
                    p.shape().num_actions(),
                    config.shape.num_states(),
                    config.shape.num_actions()
                ))
                .into());
            }
            (PolicyClass::new(policies)?, None)
        }
        PolicyClassSource::Cover { .. } => {
            let cover = cover_for(config, horizon)?;
            (cover.class.clone(), Some(cover))
        }
    })
}

pub fn execute(
    command: Command,
    config: &ExperimentConfig,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<Outcome, CliError> {
    match command {
        Command::Run => run(config, out_dir),
        Command::Sweep => sweep(config, out_dir, workers),
        Command::ExpertsBench => experts_bench(config, out_dir, workers),
        Command::MixingCheck => mixing_check_config(config),
        Command::Cover => cover(config, out_dir),
    }
}

fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let horizon = config.run.horizons[0];
    let seed = config.run.seeds[0];
    let x0 = config.run.x0;
    let mut outcome = Outcome::default();
    let sequence = script(config)?.precompute(horizon, DEFAULT_MEMORY_CAP)?;
    let tau = certified_tau(config, &sequence, &mut outcome.message)?;
    let (class, _) = policy_class(config, horizon)?;
    let mut learner = config.learner.algorithm.build(class.clone(), horizon, x0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = run_game(learner.as_mut(), &sequence, x0, seed, &mut rng, config.run.record_costs)?;
    let comparators = comparator_losses(&class, &sequence, x0)?;
    let report = regret_report(&trace, &comparators, tau)?;

    let mut csv = String::from("t,state,policy,action,loss,switched,redrew,redraw_probability,chosen_cost\n");
    for r in &trace.records {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.state,
            r.policy,
            r.action,
            format_number(r.loss),
            u8::from(r.switched),
            u8::from(r.redrew),
            format_number(r.redraw_probability),
            format_number(r.chosen_cost)
        );
    }
    write_file(out_dir, "trace.csv", &csv, &mut outcome)?;

    if config.run.record_costs {
        let mut csv = String::from("t");
        for i in 0..class.len() {
            let _ = write!(csv, ",c_{i}");
        }
        csv.push('\n');
        for r in &trace.records {
            let costs = r.costs.as_ref().expect("costs were recorded");
            let row: Vec<String> = costs.iter().map(|&c| format_number(c)).collect();
            let _ = writeln!(csv, "{},{}", r.t, row.join(","));
        }
        write_file(out_dir, "costs.csv", &csv, &mut outcome)?;
    }

    let sampled = match config.run.comparator {
        Comparator::Exact => None,
        Comparator::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SAMPLED_COMPARATOR_TAG);
            Some(
                class
                    .policies()
                    .iter()
                    .map(|p| sample_comparator_total(p, &sequence, x0, &mut rng))
                    .collect::<Result<Vec<f64>, Error>>()?,
            )
        }
    };
    let mut csv = String::from("policy,comparator_total,regret,c_term");
    if sampled.is_some() {
        csv.push_str(",sampled_total");
    }
    csv.push('\n');
    for i in 0..class.len() {
        let _ = write!(
            csv,
            "{},{},{},{}",
            i,
            format_number(report.comparator_totals[i]),
            format_number(report.regret[i]),
            format_number(report.c_term[i])
        );
        if let Some(s) = &sampled {
            let _ = write!(csv, ",{}", format_number(s[i]));
        }
        csv.push('\n');
    }
    write_file(out_dir, "report.csv", &csv, &mut outcome)?;

    let _ = writeln!(
        outcome.message,
        "{} vs {} T={} seed={} |policies|={}\nrealized_total={} best_policy={} regret_vs_best={} \
         b_term={} switches={} tau={} bound={}",
        trace.learner,
        trace.adversary,
        horizon,
        seed,
        class.len(),
        format_number(report.realized_total),
        report.best_comparator,
        format_number(report.regret_vs_best()),
        format_number(report.b_term),
        report.switch_count,
        format_number(tau),
        format_number(report.bound_thm2)
    );
    Ok(outcome)
}

fn sweep(config: &ExperimentConfig, out_dir: &Path, workers: Option<usize>) -> Result<Outcome, CliError> {
    if config.run.seeds.len() < 2 {
        return Err(CliError::Usage("sweep needs at least two seeds in run.seeds".into()));
    }
    let mut outcome = Outcome::default();
    let base = script(config)?;
    let mut csv = String::from("T,seeds,mean_regret,stderr,bound_thm2,switches_mean,tau\n");
    for &horizon in &config.run.horizons {
        let sequence = base.precompute(horizon, DEFAULT_MEMORY_CAP)?;
        let tau = certified_tau(config, &sequence, &mut outcome.message)?;
        let (class, _) = policy_class(config, horizon)?;
        let spec = MonteCarloSpec {
            learner: config.learner.algorithm,
            class,
            sequence: Arc::new(sequence),
            x0: config.run.x0,
            seeds: config.run.seeds.clone(),
            tau,
        };
        let summary = in_pool(workers, || monte_carlo(&spec))??;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            horizon,
            config.run.seeds.len(),
            format_number(summary.mean_regret),
            format_number(summary.stderr_regret),
            format_number(summary.bound_thm2),
            format_number(summary.mean_switches),
            format_number(tau)
        );
    }
    write_file(out_dir, "summary.csv", &csv, &mut outcome)?;
    let _ = write!(outcome.message, "{csv}");
    Ok(outcome)
}

fn bench_rows(
    stream: &LossStream,
    algorithm: ExpertAlgorithm,
    horizon: usize,
    seed: u64,
) -> Result<String, Error> {
    let n = stream.num_experts;
    let losses = stream.generate(horizon);
    let bound = sd_regret_bound(n, horizon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sd = ShrinkingDartboard::new(n, horizon)?;
    let mut ewa = ExponentialWeights::new(n, horizon)?;
    let mut totals = vec![0.0; n];
    let mut realized = 0.0;
    let mut out = String::new();
    for (i, row) in losses.iter().enumerate() {
        let choice = match algorithm {
            ExpertAlgorithm::ShrinkingDartboard => sd.choose(&mut rng)?,
            ExpertAlgorithm::ExponentialWeights => ewa.choose(&mut rng)?,
        };
        match algorithm {
            ExpertAlgorithm::ShrinkingDartboard => sd.update(row)?,
            ExpertAlgorithm::ExponentialWeights => ewa.update(row)?,
        }
        for (t, c) in totals.iter_mut().zip(row) {
            *t += c;
        }
        realized += row[choice.expert];
        let regret = realized - totals[argmin(&totals)];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            stream.kind,
            algorithm.as_str(),
            i + 1,
            choice.expert,
            u8::from(choice.switched),
            format_number(row[choice.expert]),
            format_number(regret),
            format_number(bound)
        );
    }
    Ok(out)
}

fn experts_bench(config: &ExperimentConfig, out_dir: &Path, workers: Option<usize>) -> Result<Outcome, CliError> {
    use rayon::prelude::*;
    let ex = &config.experts;
    let jobs: Vec<(LossStream, ExpertAlgorithm)> = ex
        .streams
        .iter()
        .map(|&kind| LossStream::new(kind, ex.num_experts, ex.seed))
        .collect::<Result<Vec<_>, Error>>()?
        .into_iter()
        .flat_map(|s| ex.algorithms.iter().map(move |&a| (s, a)))
        .collect();
    let blocks = in_pool(workers, || {
        jobs.par_iter()
            .map(|(s, a)| bench_rows(s, *a, ex.horizon, ex.seed))
            .collect::<Result<Vec<String>, Error>>()
    })??;
    let mut csv = String::from("stream,algorithm,round,chosen,switched,loss,cumulative_regret,bound\n");
    for b in &blocks {
        csv.push_str(b);
    }
    let mut outcome = Outcome::default();
    write_file(out_dir, "experts.csv", &csv, &mut outcome)?;
    let _ = writeln!(
        outcome.message,
        "experts-bench: {} streams x {} algorithms, N={} T={}",
        ex.streams.len(),
        ex.algorithms.len(),
        ex.num_experts,
        ex.horizon
    );
    Ok(outcome)
}

fn report_verdict(shape: ProblemShape, verdict: MixingVerdict, what: &str) -> Result<Outcome, CliError> {
    match verdict {
        MixingVerdict::Certified(c) => Ok(Outcome {
            status: 0,
            files: vec![],
            message: format!(
                "certified {what}\ndelta_max={} tau={} witness_policy={} witness_actions={:?} witness_model={}\n",
                format_number(c.delta_max),
                format_number(c.tau),
                c.witness.0,
                deterministic_actions_at(shape, c.witness.0),
                c.witness.1
            ),
        }),
        MixingVerdict::Refuted { delta_max, witness } => Err(refutation(shape, delta_max, witness)),
    }
}

/// Certifies the models of explicit text files, used as given.
pub fn mixing_check_files(paths: &[PathBuf]) -> Result<Outcome, CliError> {
    let mut models: Vec<TransitionModel> = Vec::new();
    for path in paths {
        models.extend(parse_models(&read_file(path)?)?);
    }
    let shape = models
        .first()
        .ok_or_else(|| CliError::Usage("no models given".into()))?
        .shape();
    let verdict = certify_mixing(&models, shape, DEFAULT_POLICY_CAP)?;
    report_verdict(shape, verdict, &format!("{} model(s)", models.len()))
}

/// Certifies the adversary's models over the longest configured horizon.
fn mixing_check_config(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let horizon = *config.run.horizons.iter().max().expect("validated nonempty");
    let sequence = script(config)?.precompute(horizon, DEFAULT_MEMORY_CAP)?;
    let verdict = certify_mixing(&sequence.distinct_models(), config.shape, DEFAULT_POLICY_CAP)?;
    report_verdict(config.shape, verdict, sequence.description())
}

fn cover(config: &ExperimentConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let cover = cover_for(config, config.run.horizons[0])?;
    let mut text = format!("# {}\n", cover.summary());
    for p in cover.class.policies() {
        write_policy(&mut text, p);
    }
    let mut outcome = Outcome::default();
    write_file(out_dir, "cover.txt", &text, &mut outcome)?;
    outcome.message = format!("{}\n", cover.summary());
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(1.0), "1");
        assert_eq!(format_number(20000.0), "20000");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(6635.512345678912), "6635.51234568");
        assert_eq!(format_number(-2.5e-7), "-2.5e-07");
        assert_eq!(format_number(1e15), "1e+15");
        assert_eq!(format_number(999999999999.9), "1e+12");
        assert_eq!(format_number(0.0001), "0.0001");
        assert_eq!(format_number(f64::INFINITY), "inf");
    }
}
