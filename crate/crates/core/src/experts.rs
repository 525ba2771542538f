//! Full-information expert learners over `N` experts.
//!
//! [`ShrinkingDartboard`] multiplies weights by `(1 - eta)^loss` and keeps its
//! previous expert with probability equal to that expert's latest weight ratio,
//! redrawing from the normalized weights otherwise. The marginal law of the
//! chosen expert is still the normalized weight vector, but the expert changes
//! with probability at most `eta` per round.
//!
//! [`ExponentialWeights`] is the classic forecaster: weights decay by
//! `exp(-eta * loss)` and a fresh expert is drawn every round.
//!
//! Weights are kept as natural logs; `T * ln(1 - eta)` routinely reaches
//! several hundred below zero.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::mdp::sample_index;

/// `min(sqrt(ln N / T), 1/2)`.
pub fn learning_rate(num_experts: usize, horizon: usize) -> f64 {
    if num_experts == 0 || horizon == 0 {
        return 0.0;
    }
    ((num_experts as f64).ln() / horizon as f64).sqrt().min(0.5)
}

/// `4 sqrt(T ln N) + ln N`, the shrinking-dartboard regret guarantee.
pub fn sd_regret_bound(num_experts: usize, horizon: usize) -> f64 {
    let ln_n = (num_experts as f64).ln();
    4.0 * (horizon as f64 * ln_n).sqrt() + ln_n
}

/// Normalized probabilities from log weights by max-shifted exponentiation.
pub fn normalize_log_weights(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_weights.iter().map(|&w| (w - max).exp()).collect();
    let sum: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= sum;
    }
    p
}

/// `ln sum_i exp(log_weights[i])`.
pub fn log_sum_exp(log_weights: &[f64]) -> f64 {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + log_weights.iter().map(|&w| (w - max).exp()).sum::<f64>().ln()
}

/// Weights and switching bookkeeping shared by both learners.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertState {
    log_weights: Vec<f64>,
    prev_log_weights: Vec<f64>,
    current_expert: Option<usize>,
    eta: f64,
    /// 1-based index of the round about to be played.
    round: usize,
    chosen_in_round: bool,
    switch_count: usize,
}

impl ExpertState {
    pub fn new(num_experts: usize, eta: f64) -> Result<Self> {
        if num_experts == 0 {
            return Err(invalid("expert count", "need at least one expert"));
        }
        if !(0.0..1.0).contains(&eta) {
            return Err(invalid("eta", format!("{eta} not in [0, 1)")));
        }
        Ok(Self {
            log_weights: vec![0.0; num_experts],
            prev_log_weights: vec![0.0; num_experts],
            current_expert: None,
            eta,
            round: 1,
            chosen_in_round: false,
            switch_count: 0,
        })
    }

    pub fn num_experts(&self) -> usize {
        self.log_weights.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn current_expert(&self) -> Option<usize> {
        self.current_expert
    }

    pub fn switch_count(&self) -> usize {
        self.switch_count
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn prev_log_weights(&self) -> &[f64] {
        &self.prev_log_weights
    }

    /// `q_t`: the normalized weights.
    pub fn distribution(&self) -> Vec<f64> {
        normalize_log_weights(&self.log_weights)
    }

    /// `ln W_t`.
    pub fn log_total_weight(&self) -> f64 {
        log_sum_exp(&self.log_weights)
    }

    /// Probability of keeping the previous expert, `w_{I,t-1} / w_{I,t-2}`;
    /// `None` before any expert has been chosen.
    pub fn stay_probability(&self) -> Option<f64> {
        self.current_expert
            .map(|i| (self.log_weights[i] - self.prev_log_weights[i]).exp().min(1.0))
    }

    fn begin_choice(&self) -> Result<()> {
        if self.chosen_in_round {
            return Err(Error::AlreadyChosen { round: self.round });
        }
        Ok(())
    }

    fn commit_choice(&mut self, expert: usize) -> bool {
        let switched = matches!(self.current_expert, Some(prev) if prev != expert);
        if switched {
            self.switch_count += 1;
        }
        self.current_expert = Some(expert);
        self.chosen_in_round = true;
        switched
    }

    fn apply_losses(&mut self, losses: &[f64], log_factor: f64) -> Result<()> {
        if losses.len() != self.log_weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} losses for {} experts",
                losses.len(),
                self.log_weights.len()
            )));
        }
        if let Some((index, &value)) = losses
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::LossOutOfRange { index, value });
        }
        self.prev_log_weights.copy_from_slice(&self.log_weights);
        for (w, &c) in self.log_weights.iter_mut().zip(losses) {
            *w += c * log_factor;
        }
        self.round += 1;
        self.chosen_in_round = false;
        Ok(())
    }
}

/// Outcome of one selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Choice {
    pub expert: usize,
    /// The acting expert differs from the previous round's.
    pub switched: bool,
    /// A fresh draw from `q_t` happened (it may land on the same expert).
    pub redrew: bool,
    /// Probability that a fresh draw happens this round.
    pub redraw_probability: f64,
}

/// The lazy exponential-weights learner.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkingDartboard {
    state: ExpertState,
    log_decay: f64,
}

impl ShrinkingDartboard {
    pub fn new(num_experts: usize, horizon: usize) -> Result<Self> {
        Self::with_eta(num_experts, learning_rate(num_experts, horizon))
    }

    pub fn with_eta(num_experts: usize, eta: f64) -> Result<Self> {
        let state = ExpertState::new(num_experts, eta)?;
        Ok(Self {
            state,
            log_decay: (-eta).ln_1p(),
        })
    }

    pub fn state(&self) -> &ExpertState {
        &self.state
    }

    /// Redraw probability `1 - beta_t` for the upcoming choice.
    pub fn redraw_probability(&self) -> f64 {
        self.state.stay_probability().map_or(1.0, |beta| 1.0 - beta)
    }

    /// Picks `I_t`. At round 1 (or before any choice) this is a single draw from
    /// the uniform `q_1`. Afterwards one uniform decides stay-or-redraw and, on a
    /// redraw, a second uniform samples from `q_t`.
    pub fn choose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Choice> {
        self.state.begin_choice()?;
        let (expert, redrew, redraw_probability) = match self.state.stay_probability() {
            None => (sample_index(&self.state.distribution(), rng), true, 1.0),
            Some(beta) => {
                let u: f64 = rng.gen();
                if u < beta {
                    (self.state.current_expert.unwrap_or(0), false, 1.0 - beta)
                } else {
                    (sample_index(&self.state.distribution(), rng), true, 1.0 - beta)
                }
            }
        };
        let switched = self.state.commit_choice(expert);
        Ok(Choice {
            expert,
            switched,
            redrew,
            redraw_probability,
        })
    }

    /// `w_i <- w_i * (1 - eta)^{c_i}`.
    pub fn update(&mut self, losses: &[f64]) -> Result<()> {
        self.state.apply_losses(losses, self.log_decay)
    }
}

/// The exponentially weighted average forecaster.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialWeights {
    state: ExpertState,
}

impl ExponentialWeights {
    pub fn new(num_experts: usize, horizon: usize) -> Result<Self> {
        Self::with_eta(num_experts, learning_rate(num_experts, horizon))
    }

    pub fn with_eta(num_experts: usize, eta: f64) -> Result<Self> {
        // e^{-eta c} is well defined for any eta >= 0; only the SD form needs eta < 1.
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(invalid("eta", format!("{eta} is not a nonnegative number")));
        }
        let mut state = ExpertState::new(num_experts, 0.0)?;
        state.eta = eta;
        Ok(Self { state })
    }

    pub fn state(&self) -> &ExpertState {
        &self.state
    }

    /// Fresh independent draw from `q_t` using one uniform.
    pub fn choose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Choice> {
        self.state.begin_choice()?;
        let expert = sample_index(&self.state.distribution(), rng);
        let switched = self.state.commit_choice(expert);
        Ok(Choice {
            expert,
            switched,
            redrew: true,
            redraw_probability: 1.0,
        })
    }

    /// `w_i <- w_i * exp(-eta c_i)`.
    pub fn update(&mut self, losses: &[f64]) -> Result<()> {
        let eta = self.state.eta;
        self.state.apply_losses(losses, -eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn learning_rate_examples() {
        assert_eq!(learning_rate(1, 100), 0.0);
        assert!((learning_rate(8, 10_000) - 0.014_420_0).abs() < 5e-7);
        assert_eq!(learning_rate(100, 4), 0.5);
    }

    #[test]
    fn zero_losses_never_redraw() {
        let mut sd = ShrinkingDartboard::new(5, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let first = sd.choose(&mut rng).unwrap();
        assert!(!first.switched);
        for _ in 0..50 {
            sd.update(&[0.0; 5]).unwrap();
            let c = sd.choose(&mut rng).unwrap();
            assert_eq!(c.expert, first.expert);
            assert!(!c.switched && !c.redrew);
            assert_eq!(c.redraw_probability, 0.0);
        }
        assert_eq!(sd.state().switch_count(), 0);
    }

    #[test]
    fn one_step_hand_example() {
        let mut sd = ShrinkingDartboard::with_eta(2, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let first = sd.choose(&mut rng).unwrap().expert;
        let mut losses = [0.0; 2];
        losses[first] = 1.0;
        sd.update(&losses).unwrap();
        assert!((sd.state().stay_probability().unwrap() - 0.5).abs() < 1e-15);
        let q = sd.state().distribution();
        assert!((q[first] - 1.0 / 3.0).abs() < 1e-15);
        assert!((q[1 - first] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn update_forms() {
        let mut sd = ShrinkingDartboard::with_eta(3, 0.2).unwrap();
        sd.update(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(sd.state().log_weights(), &[0.0, 0.0, 0.0]);
        sd.update(&[1.0, 1.0, 1.0]).unwrap();
        for &w in sd.state().log_weights() {
            assert!((w - 0.8f64.ln()).abs() < 1e-15);
        }
        for &p in &sd.state().distribution() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        sd.update(&[0.5, 0.0, 1.0]).unwrap();
        let lw = sd.state().log_weights();
        assert!((lw[0] - 1.5 * 0.8f64.ln()).abs() < 1e-15);
        assert!((lw[2] - 2.0 * 0.8f64.ln()).abs() < 1e-15);

        let mut ewa = ExponentialWeights::with_eta(3, 0.2).unwrap();
        ewa.update(&[0.5, 0.0, 1.0]).unwrap();
        assert_eq!(ewa.state().log_weights(), &[-0.1, 0.0, -0.2]);
    }

    #[test]
    fn ewa_hand_example() {
        let mut ewa = ExponentialWeights::with_eta(2, 1.0).unwrap();
        ewa.update(&[1.0, 0.0]).unwrap();
        let q = ewa.state().distribution();
        let e = (-1.0f64).exp();
        assert!((q[0] - e / (1.0 + e)).abs() < 1e-15);
        assert!((q[0] - 0.2689).abs() < 1e-4);
        assert!((q[1] - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn ewa_constant_losses_stay_uniform() {
        let mut ewa = ExponentialWeights::with_eta(4, 0.3).unwrap();
        for _ in 0..20 {
            ewa.update(&[0.7; 4]).unwrap();
        }
        for &p in &ewa.state().distribution() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn loss_validation() {
        let mut sd = ShrinkingDartboard::with_eta(2, 0.1).unwrap();
        assert!(matches!(
            sd.update(&[0.5, 1.5]),
            Err(Error::LossOutOfRange { index: 1, .. })
        ));
        assert!(sd.update(&[0.5]).is_err());
        let mut ewa = ExponentialWeights::with_eta(2, 0.1).unwrap();
        assert!(ewa.update(&[-0.1, 0.0]).is_err());
    }

    #[test]
    fn choosing_twice_in_a_round_fails() {
        let mut sd = ShrinkingDartboard::with_eta(2, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        sd.choose(&mut rng).unwrap();
        assert!(matches!(sd.choose(&mut rng), Err(Error::AlreadyChosen { round: 1 })));
        sd.update(&[0.0, 0.0]).unwrap();
        assert!(sd.choose(&mut rng).is_ok());
    }

    #[test]
    fn bad_construction() {
        assert!(ShrinkingDartboard::with_eta(0, 0.1).is_err());
        assert!(ShrinkingDartboard::with_eta(2, 1.0).is_err());
        assert!(ExponentialWeights::with_eta(2, f64::NAN).is_err());
    }

    #[test]
    fn redraw_probability_never_exceeds_eta() {
        let mut sd = ShrinkingDartboard::new(6, 500).unwrap();
        let eta = sd.state().eta();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let c = sd.choose(&mut rng).unwrap();
            if sd.state().round() > 1 {
                assert!(c.redraw_probability <= eta + 1e-12);
            }
            let losses: Vec<f64> = (0..6).map(|_| rng.gen()).collect();
            sd.update(&losses).unwrap();
        }
    }
}
