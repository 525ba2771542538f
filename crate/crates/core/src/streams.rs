//! Synthetic oblivious loss streams for expert benchmarks.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StreamKind {
    /// Bernoulli losses; expert 0 has mean `0.5 - gap/2`, the rest `0.5 + gap/2`.
    FixedGap { gap: f64 },
    /// Phase-shifted sinusoids per expert plus a full unit of loss on whichever
    /// expert leads the stream's own cumulative totals.
    PhaseShiftedPunisher { period: usize },
    /// Independent uniform losses.
    Random,
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamKind::FixedGap { .. } => f.write_str("fixed-gap"),
            StreamKind::PhaseShiftedPunisher { .. } => f.write_str("phase-shifted-punisher"),
            StreamKind::Random => f.write_str("random"),
        }
    }
}

impl FromStr for StreamKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-gap" => Ok(StreamKind::FixedGap { gap: 0.2 }),
            "phase-shifted-punisher" | "punisher" => {
                Ok(StreamKind::PhaseShiftedPunisher { period: 200 })
            }
            "random" => Ok(StreamKind::Random),
            other => Err(invalid("loss stream", format!("unknown kind {other:?}"))),
        }
    }
}

/// A loss sequence fixed by `(kind, num_experts, seed)` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossStream {
    pub kind: StreamKind,
    pub num_experts: usize,
    pub seed: u64,
}

impl LossStream {
    pub fn new(kind: StreamKind, num_experts: usize, seed: u64) -> Result<Self> {
        if num_experts == 0 {
            return Err(invalid("loss stream", "need at least one expert"));
        }
        match kind {
            StreamKind::FixedGap { gap } if !(0.0..=1.0).contains(&gap) => {
                return Err(invalid("gap", format!("{gap} not in [0, 1]")))
            }
            StreamKind::PhaseShiftedPunisher { period: 0 } => {
                return Err(invalid("period", "must be positive"))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            num_experts,
            seed,
        })
    }

    /// Materializes rounds `1..=horizon`; row `t - 1` holds `c_t`.
    pub fn generate(&self, horizon: usize) -> Vec<Vec<f64>> {
        let n = self.num_experts;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut totals = vec![0.0; n];
        let mut rows = Vec::with_capacity(horizon);
        for t in 1..=horizon {
            let row: Vec<f64> = match self.kind {
                StreamKind::FixedGap { gap } => (0..n)
                    .map(|i| {
                        let mean = if i == 0 { 0.5 - gap / 2.0 } else { 0.5 + gap / 2.0 };
                        if rng.gen::<f64>() < mean {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect(),
                StreamKind::PhaseShiftedPunisher { period } => {
                    let leader = argmin(&totals);
                    (0..n)
                        .map(|i| {
                            if i == leader {
                                1.0
                            } else {
                                let angle = TAU * (t as f64 / period as f64 + i as f64 / n as f64);
                                0.25 * (1.0 + angle.sin())
                            }
                        })
                        .collect()
                }
                StreamKind::Random => (0..n).map(|_| rng.gen::<f64>()).collect(),
            };
            for (s, c) in totals.iter_mut().zip(&row) {
                *s += c;
            }
            rows.push(row);
        }
        rows
    }
}

/// Index of the smallest entry, ties to the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}
