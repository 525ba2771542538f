//! Finite eps-covers of the policy space under `||.||_{inf,1}` and the
//! Lipschitz behaviour of policy values.
//!
//! The cover is a product grid: in every state the action distribution has
//! entries that are multiples of `1/k`, with `k = ceil(2|A| / eps)`. Rounding
//! any distribution to the grid (floor, then hand the leftover units to the
//! largest fractional parts) moves each coordinate by less than `1/k`, so
//! every policy lies within `|A|/k <= eps/2` of the cover.

use std::collections::HashMap;

use crate::adversary::AdversarySequence;
use crate::error::{invalid, Error, Result};
use crate::mdp::{
    expected_loss_unchecked, l1_distance, policy_distance, Policy, ProblemShape, StateDistribution,
};
use crate::sdmdp::PolicyClass;

pub const DEFAULT_COVER_CAP: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct CoverSpec {
    pub epsilon: f64,
    pub shape: ProblemShape,
    /// Grid resolution `k`.
    pub resolution: usize,
    pub class: PolicyClass,
    /// `ln((|A|/eps)^{|A||X|})`.
    pub ln_paper_bound: f64,
    /// The grid is larger than `(|A|/eps)^{|A||X|}` while `eps <= 1`.
    pub exceeds_paper_bound: bool,
    grid_index: HashMap<Vec<usize>, usize>,
    per_state: usize,
}

/// `ceil(2|A| / eps)`, guarded against `4.0 / 0.2 = 20.000000000000004` style noise.
pub fn grid_resolution(num_actions: usize, epsilon: f64) -> usize {
    let raw = 2.0 * num_actions as f64 / epsilon;
    let nearest = raw.round();
    if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        raw.ceil() as usize
    }
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative integers,
/// lexicographic.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first);
            rec(remaining - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Grid point (in units of `1/k`) nearest to `row` by largest-remainder rounding.
pub fn round_row_to_grid(row: &[f64], k: usize) -> Vec<usize> {
    let scaled: Vec<f64> = row.iter().map(|p| p * k as f64).collect();
    let mut units: Vec<usize> = scaled.iter().map(|s| s.floor().max(0.0) as usize).collect();
    let assigned: usize = units.iter().sum();
    let leftover = k.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().take(leftover) {
        units[i] += 1;
    }
    // Floors can overshoot only through rounding noise in `p * k`.
    let mut excess = units.iter().sum::<usize>().saturating_sub(k);
    for u in units.iter_mut().rev() {
        let take = excess.min(*u);
        *u -= take;
        excess -= take;
    }
    units
}

fn cover_size(shape: ProblemShape, k: usize) -> Option<usize> {
    let per_state = binomial(k + shape.num_actions() - 1, shape.num_actions() - 1)?;
    per_state.checked_pow(u32::try_from(shape.num_states()).ok()?)
}

/// `target` if its cover fits under `cap`, else the smallest epsilon whose
/// grid does.
pub fn epsilon_within_cap(shape: ProblemShape, target: f64, cap: usize) -> Result<f64> {
    if !(target > 0.0 && target <= 2.0) {
        return Err(invalid("epsilon", format!("{target} not in (0, 2]")));
    }
    let mut k = grid_resolution(shape.num_actions(), target);
    if cover_size(shape, k).is_some_and(|s| s <= cap) {
        return Ok(target);
    }
    // Sizes grow with k, so bisect for the largest k that fits.
    let (mut lo, mut hi) = (0usize, k);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if cover_size(shape, mid).is_some_and(|s| s <= cap) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    k = lo;
    if k == 0 {
        return Err(Error::CapExceeded {
            what: "cover policy",
            requested: format!("{}^{}", shape.num_actions(), shape.num_states()),
            cap,
        });
    }
    Ok((2.0 * shape.num_actions() as f64 / k as f64).min(2.0))
}

pub fn build_cover(shape: ProblemShape, epsilon: f64, cap: usize) -> Result<CoverSpec> {
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        return Err(invalid("epsilon", format!("{epsilon} not in (0, 2]")));
    }
    let num_actions = shape.num_actions();
    let k = grid_resolution(num_actions, epsilon);
    let per_state = binomial(k + num_actions - 1, num_actions - 1);
    let total = cover_size(shape, k);
    let (per_state, total) = match (per_state, total) {
        (Some(p), Some(t)) if t <= cap => (p, t),
        _ => {
            return Err(Error::CapExceeded {
                what: "cover policy",
                requested: match (per_state, total) {
                    (_, Some(t)) => t.to_string(),
                    (Some(p), None) => format!("{p}^{}", shape.num_states()),
                    _ => "overflow".to_string(),
                },
                cap,
            })
        }
    };

    let grid = compositions(k, num_actions);
    debug_assert_eq!(grid.len(), per_state);
    let rows: Vec<Vec<f64>> = grid
        .iter()
        .map(|c| c.iter().map(|&u| u as f64 / k as f64).collect())
        .collect();
    let grid_index = grid.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();

    let n = shape.num_states();
    let mut policies = Vec::with_capacity(total);
    let mut digits = vec![0usize; n];
    for _ in 0..total {
        let probs: Vec<f64> = digits.iter().flat_map(|&d| rows[d].iter().copied()).collect();
        policies.push(Policy::new(shape, probs)?);
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < per_state {
                break;
            }
            *d = 0;
        }
    }

    let ln_paper_bound = (num_actions * n) as f64 * (num_actions as f64 / epsilon).ln();
    let exceeds_paper_bound = epsilon <= 1.0 && (total as f64).ln() > ln_paper_bound + 1e-12;
    Ok(CoverSpec {
        epsilon,
        shape,
        resolution: k,
        class: PolicyClass::new(policies)?,
        ln_paper_bound,
        exceeds_paper_bound,
        grid_index,
        per_state,
    })
}

impl CoverSpec {
    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    /// Index of the cover element obtained by rounding `policy` state by state.
    pub fn nearest_index(&self, policy: &Policy) -> Result<usize> {
        if policy.shape() != self.shape {
            return Err(Error::ShapeMismatch("policy shape differs from the cover's".into()));
        }
        let mut index = 0;
        for x in 0..self.shape.num_states() {
            let units = round_row_to_grid(policy.row(x), self.resolution);
            let digit = *self
                .grid_index
                .get(&units)
                .ok_or_else(|| invalid("grid rounding", format!("{units:?} not on the grid")))?;
            index = index * self.per_state + digit;
        }
        Ok(index)
    }

    /// `(index, distance)` of the rounded cover element.
    pub fn nearest(&self, policy: &Policy) -> Result<(usize, f64)> {
        let i = self.nearest_index(policy)?;
        Ok((i, policy_distance(policy, self.class.get(i))?))
    }

    /// One-line summary: eps, k, size and the covering-number bound.
    pub fn summary(&self) -> String {
        format!(
            "epsilon={} k={} size={} ln_size={:.6} ln_bound={:.6} exceeds_bound={}",
            self.epsilon,
            self.resolution,
            self.len(),
            (self.len() as f64).ln(),
            self.ln_paper_bound,
            self.exceeds_paper_bound
        )
    }
}

fn state_laws(policy: &Policy, sequence: &AdversarySequence, x0: usize) -> Result<Vec<StateDistribution>> {
    if policy.shape() != sequence.shape() {
        return Err(Error::ShapeMismatch("policy and adversary shapes differ".into()));
    }
    let mut law = StateDistribution::point_mass(policy.shape().num_states(), x0)?;
    let mut laws = Vec::with_capacity(sequence.len());
    let mut scratch = Vec::new();
    for round in sequence.rounds() {
        laws.push(law.clone());
        law.push_forward_in_place(policy, &round.model, &mut scratch);
    }
    Ok(laws)
}

/// `L_T(pi) = sum_t E[l_t(x_t^pi, pi)]`.
pub fn policy_value(policy: &Policy, sequence: &AdversarySequence, x0: usize) -> Result<f64> {
    let laws = state_laws(policy, sequence, x0)?;
    Ok(laws
        .iter()
        .zip(sequence.rounds())
        .map(|(law, round)| expected_loss_unchecked(law.as_slice(), policy, &round.loss))
        .sum())
}

/// `||u_{p1,t} - u_{p2,t}||_1` for `t = 1..=T`.
pub fn state_law_gaps(p1: &Policy, p2: &Policy, sequence: &AdversarySequence, x0: usize) -> Result<Vec<f64>> {
    let a = state_laws(p1, sequence, x0)?;
    let b = state_laws(p2, sequence, x0)?;
    a.iter().zip(&b).map(|(u, v)| l1_distance(u, v)).collect()
}

/// Provable per-step constant: `sum_k exp(-k/tau) = 1 / (1 - exp(-1/tau))`,
/// which is 1 for `tau = 0` and always at least `tau`.
pub fn lipschitz_constant(tau: f64) -> f64 {
    if tau <= 0.0 {
        1.0
    } else {
        1.0 / (1.0 - (-1.0 / tau).exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzCheck {
    /// `|L_T(p1) - L_T(p2)|`.
    pub lhs: f64,
    /// `lipschitz_constant(tau) * T * ||p1 - p2||`.
    pub rhs: f64,
    /// `tau * T * ||p1 - p2||`.
    pub tau_rhs: f64,
    pub ok: bool,
    pub tau_ok: bool,
}

pub fn lipschitz_check(
    p1: &Policy,
    p2: &Policy,
    sequence: &AdversarySequence,
    x0: usize,
    tau: f64,
) -> Result<LipschitzCheck> {
    let lhs = (policy_value(p1, sequence, x0)? - policy_value(p2, sequence, x0)?).abs();
    let scale = sequence.len() as f64 * policy_distance(p1, p2)?;
    let rhs = lipschitz_constant(tau) * scale;
    let tau_rhs = tau * scale;
    Ok(LipschitzCheck {
        lhs,
        rhs,
        tau_rhs,
        ok: lhs <= rhs + 1e-9,
        tau_ok: lhs <= tau_rhs + 1e-9,
    })
}
