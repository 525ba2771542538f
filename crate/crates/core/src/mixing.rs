//! Uniform-mixing certificates.
//!
//! A set of transition models mixes uniformly with time constant `tau` when
//! every induced matrix contracts the l1 distance between any two state
//! distributions by at least `exp(-1/tau)`. The tightest factor for a single
//! matrix is its Dobrushin ergodicity coefficient
//!
//! ```text
//! delta(P) = 1/2 * max_{i,j} || P(i,.) - P(j,.) ||_1
//! ```
//!
//! Checking deterministic policies suffices: the induced matrix of a
//! stochastic policy is a row-wise mixture of deterministic ones.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::mdp::{
    deterministic_actions_at, deterministic_policy_count, induce_transition_matrix, l1_distance,
    propagate, Policy, ProblemShape, StateDistribution, TransitionMatrix, TransitionModel,
    STOCHASTIC_TOL,
};

/// Worst contraction over a (deterministic policy, model) grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingCertificate {
    pub delta_max: f64,
    pub tau: f64,
    /// `(policy index, model index)` achieving `delta_max`.
    pub witness: (usize, usize),
}

impl MixingCertificate {
    /// `exp(-1/tau)`, with `tau = 0` meaning one-step mixing.
    pub fn contraction_factor(&self) -> f64 {
        if self.tau == 0.0 {
            0.0
        } else {
            (-1.0 / self.tau).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixingVerdict {
    Certified(MixingCertificate),
    Refuted { delta_max: f64, witness: (usize, usize) },
}

impl MixingVerdict {
    pub fn certificate(&self) -> Option<&MixingCertificate> {
        match self {
            MixingVerdict::Certified(c) => Some(c),
            MixingVerdict::Refuted { .. } => None,
        }
    }

    pub fn into_result(self) -> Result<MixingCertificate> {
        match self {
            MixingVerdict::Certified(c) => Ok(c),
            MixingVerdict::Refuted { delta_max, witness } => Err(Error::MixingRefuted {
                delta_max,
                policy: witness.0,
                model: witness.1,
            }),
        }
    }
}

/// Smallest `tau` with `exp(-1/tau) >= delta`; zero for `delta = 0`.
pub fn tau_from_delta(delta: f64) -> f64 {
    if delta <= 0.0 {
        0.0
    } else {
        -1.0 / delta.ln()
    }
}

/// Dobrushin coefficient of a row-stochastic matrix.
pub fn contraction_coefficient(matrix: &TransitionMatrix) -> Result<f64> {
    let n = matrix.size();
    for i in 0..n {
        let row = matrix.row(i);
        let sum: f64 = row.iter().sum();
        if row.iter().any(|&p| !p.is_finite() || p < 0.0) || (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(invalid("transition matrix", format!("row {i} is not stochastic")));
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = matrix
                .row(i)
                .iter()
                .zip(matrix.row(j))
                .map(|(a, b)| (a - b).abs())
                .sum();
            worst = worst.max(0.5 * d);
        }
    }
    Ok(worst.min(1.0))
}

/// Max contraction coefficient over all deterministic policies and `models`.
///
/// Returns a refutation carrying the witness pair when the maximum reaches 1.
pub fn certify_mixing(
    models: &[TransitionModel],
    shape: ProblemShape,
    policy_cap: usize,
) -> Result<MixingVerdict> {
    if models.is_empty() {
        return Err(invalid("model set", "need at least one model"));
    }
    let count = deterministic_policy_count(shape)
        .filter(|&c| c <= policy_cap)
        .ok_or_else(|| Error::CapExceeded {
            what: "deterministic policy",
            requested: format!("{}^{}", shape.num_actions(), shape.num_states()),
            cap: policy_cap,
        })?;
    let policies: Vec<Policy> = (0..count)
        .map(|i| Policy::deterministic(shape, &deterministic_actions_at(shape, i)))
        .collect::<Result<_>>()?;

    let mut delta_max = -1.0;
    let mut witness = (0, 0);
    for (mi, model) in models.iter().enumerate() {
        for (pi, policy) in policies.iter().enumerate() {
            let delta = contraction_coefficient(&induce_transition_matrix(policy, model)?)?;
            if delta > delta_max {
                delta_max = delta;
                witness = (pi, mi);
            }
        }
    }
    Ok(if delta_max >= 1.0 {
        MixingVerdict::Refuted { delta_max, witness }
    } else {
        MixingVerdict::Certified(MixingCertificate {
            delta_max,
            tau: tau_from_delta(delta_max),
            witness,
        })
    })
}

/// `(1 - gamma) * raw + gamma / |X|`.
pub fn smooth_model(raw: &TransitionModel, gamma: f64) -> Result<TransitionModel> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", format!("{gamma} not in (0, 1]")));
    }
    let floor = gamma / raw.shape().num_states() as f64;
    let kernel = raw
        .as_slice()
        .iter()
        .map(|&p| (1.0 - gamma) * p + floor)
        .collect();
    TransitionModel::new(raw.shape(), kernel)
}

fn random_distribution<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateDistribution {
    // Mix flat-simplex draws with sparse ones so near-extreme pairs get probed.
    let sparse = rng.gen_bool(0.3);
    let mut mass: Vec<f64> = (0..n)
        .map(|_| {
            if sparse && rng.gen_bool(0.5) {
                0.0
            } else {
                -(1.0 - rng.gen::<f64>()).ln()
            }
        })
        .collect();
    if mass.iter().all(|&m| m == 0.0) {
        mass[rng.gen_range(0..n)] = 1.0;
    }
    let sum: f64 = mass.iter().sum();
    for m in mass.iter_mut() {
        *m /= sum;
    }
    StateDistribution::new(mass).unwrap_or_else(|_| StateDistribution::uniform(n))
}

/// Largest observed `||dP - d'P||_1 / ||d - d'||_1` over random draws of
/// distributions, deterministic policies and models. Pairs with `d = d'` are skipped.
pub fn verify_contraction_empirically<R: Rng + ?Sized>(
    models: &[TransitionModel],
    shape: ProblemShape,
    num_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if models.is_empty() {
        return Err(invalid("model set", "need at least one model"));
    }
    let n = shape.num_states();
    let mut worst: f64 = 0.0;
    for _ in 0..num_samples {
        let d = random_distribution(n, rng);
        let d2 = random_distribution(n, rng);
        let actions: Vec<usize> = (0..n).map(|_| rng.gen_range(0..shape.num_actions())).collect();
        let policy = Policy::deterministic(shape, &actions)?;
        let model = &models[rng.gen_range(0..models.len())];
        let denom = l1_distance(&d, &d2)?;
        if denom == 0.0 {
            continue;
        }
        let p = induce_transition_matrix(&policy, model)?;
        let num = l1_distance(&propagate(&d, &p)?, &propagate(&d2, &p)?)?;
        worst = worst.max(num / denom);
    }
    Ok(worst)
}
