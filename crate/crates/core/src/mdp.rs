//! Finite MDP primitives: policies, transition kernels, induced state-to-state
//! matrices, state distributions, the two norms used throughout, and
//! inverse-CDF sampling.
//!
//! Everything is stored as dense row-major `f64` buffers. Desk-scale problems
//! (a few dozen states) never benefit from sparsity.

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Tolerance for row sums of stochastic objects.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Default cap on the number of deterministic policies enumerated.
pub const DEFAULT_POLICY_CAP: usize = 4096;

/// Numbers of states and actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemShape {
    num_states: usize,
    num_actions: usize,
}

impl ProblemShape {
    pub fn new(num_states: usize, num_actions: usize) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(invalid(
                "shape",
                format!("need at least one state and one action, got {num_states}x{num_actions}"),
            ));
        }
        Ok(Self {
            num_states,
            num_actions,
        })
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn check_state(&self, x: usize) -> Result<()> {
        if x >= self.num_states {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: x,
                size: self.num_states,
            });
        }
        Ok(())
    }

    fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.num_actions {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: a,
                size: self.num_actions,
            });
        }
        Ok(())
    }

    fn ensure_same(&self, other: &ProblemShape, ctx: &str) -> Result<()> {
        if self != other {
            return Err(Error::ShapeMismatch(format!(
                "{ctx}: {}x{} vs {}x{}",
                self.num_states, self.num_actions, other.num_states, other.num_actions
            )));
        }
        Ok(())
    }
}

fn check_distribution(row: &[f64], what: &'static str) -> Result<()> {
    let mut sum = 0.0;
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(invalid(what, format!("entry {p} is not a nonnegative number")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(invalid(what, format!("row sums to {sum}, expected 1")));
    }
    Ok(())
}

/// A stationary stochastic policy: row `x` holds `pi(.|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    shape: ProblemShape,
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(shape: ProblemShape, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != shape.num_states * shape.num_actions {
            return Err(Error::ShapeMismatch(format!(
                "policy needs {} entries, got {}",
                shape.num_states * shape.num_actions,
                probs.len()
            )));
        }
        for row in probs.chunks(shape.num_actions) {
            check_distribution(row, "policy")?;
        }
        Ok(Self { shape, probs })
    }

    /// Point-mass policy choosing `actions[x]` in state `x`.
    pub fn deterministic(shape: ProblemShape, actions: &[usize]) -> Result<Self> {
        if actions.len() != shape.num_states {
            return Err(Error::ShapeMismatch(format!(
                "deterministic policy needs {} actions, got {}",
                shape.num_states,
                actions.len()
            )));
        }
        let mut probs = vec![0.0; shape.num_states * shape.num_actions];
        for (x, &a) in actions.iter().enumerate() {
            shape.check_action(a)?;
            probs[x * shape.num_actions + a] = 1.0;
        }
        Ok(Self { shape, probs })
    }

    pub fn uniform(shape: ProblemShape) -> Self {
        let p = 1.0 / shape.num_actions as f64;
        Self {
            shape,
            probs: vec![p; shape.num_states * shape.num_actions],
        }
    }

    #[inline]
    pub fn shape(&self) -> ProblemShape {
        self.shape
    }

    #[inline]
    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[state * self.shape.num_actions + action]
    }

    #[inline]
    pub fn row(&self, state: usize) -> &[f64] {
        let k = self.shape.num_actions;
        &self.probs[state * k..(state + 1) * k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// The chosen action in each state if the policy is deterministic.
    pub fn deterministic_actions(&self) -> Option<Vec<usize>> {
        (0..self.shape.num_states)
            .map(|x| self.row(x).iter().position(|&p| p == 1.0))
            .collect()
    }
}

/// Per-(state, action) next-state distributions `m(x'|x,a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    shape: ProblemShape,
    kernel: Vec<f64>,
}

impl TransitionModel {
    /// `kernel` is laid out as `[x][a][x']`.
    pub fn new(shape: ProblemShape, kernel: Vec<f64>) -> Result<Self> {
        let n = shape.num_states;
        if kernel.len() != n * shape.num_actions * n {
            return Err(Error::ShapeMismatch(format!(
                "kernel needs {} entries, got {}",
                n * shape.num_actions * n,
                kernel.len()
            )));
        }
        for row in kernel.chunks(n) {
            check_distribution(row, "transition kernel")?;
        }
        Ok(Self { shape, kernel })
    }

    /// The kernel that ignores `(x, a)` and jumps uniformly.
    pub fn uniform(shape: ProblemShape) -> Self {
        let n = shape.num_states;
        Self {
            shape,
            kernel: vec![1.0 / n as f64; n * shape.num_actions * n],
        }
    }

    /// Deterministic kernel sending `(x, a)` to `targets[x * |A| + a]`.
    pub fn deterministic(shape: ProblemShape, targets: &[usize]) -> Result<Self> {
        let n = shape.num_states;
        if targets.len() != n * shape.num_actions {
            return Err(Error::ShapeMismatch(format!(
                "deterministic kernel needs {} targets, got {}",
                n * shape.num_actions,
                targets.len()
            )));
        }
        let mut kernel = vec![0.0; n * shape.num_actions * n];
        for (row, &y) in targets.iter().enumerate() {
            shape.check_state(y)?;
            kernel[row * n + y] = 1.0;
        }
        Ok(Self { shape, kernel })
    }

    pub(crate) fn from_raw_unchecked(shape: ProblemShape, kernel: Vec<f64>) -> Self {
        Self { shape, kernel }
    }

    #[inline]
    pub fn shape(&self) -> ProblemShape {
        self.shape
    }

    /// `m(.|x, a)`.
    #[inline]
    pub fn row(&self, state: usize, action: usize) -> &[f64] {
        let n = self.shape.num_states;
        let start = (state * self.shape.num_actions + action) * n;
        &self.kernel[start..start + n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.kernel
    }
}

/// Row-stochastic `|X| x |X|` matrix `P(pi, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    rows: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(size: usize, rows: Vec<f64>) -> Result<Self> {
        if size == 0 || rows.len() != size * size {
            return Err(Error::ShapeMismatch(format!(
                "matrix of size {size} needs {} entries, got {}",
                size * size,
                rows.len()
            )));
        }
        for row in rows.chunks(size) {
            check_distribution(row, "transition matrix")?;
        }
        Ok(Self { size, rows })
    }

    pub fn identity(size: usize) -> Self {
        let mut rows = vec![0.0; size * size];
        for i in 0..size {
            rows[i * size + i] = 1.0;
        }
        Self { size, rows }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.size..(i + 1) * self.size]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.size + j]
    }
}

/// Per-(state, action) losses in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossFunction {
    shape: ProblemShape,
    values: Vec<f64>,
}

impl LossFunction {
    pub fn new(shape: ProblemShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.num_states * shape.num_actions {
            return Err(Error::ShapeMismatch(format!(
                "loss needs {} entries, got {}",
                shape.num_states * shape.num_actions,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid("loss", format!("value {v} outside [0, 1]")));
        }
        Ok(Self { shape, values })
    }

    pub fn constant(shape: ProblemShape, c: f64) -> Result<Self> {
        Self::new(shape, vec![c; shape.num_states * shape.num_actions])
    }

    #[inline]
    pub fn shape(&self) -> ProblemShape {
        self.shape
    }

    #[inline]
    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.shape.num_actions + action]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Probability vector over states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    mass: Vec<f64>,
}

impl StateDistribution {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(invalid("state distribution", "empty"));
        }
        check_distribution(&mass, "state distribution")?;
        Ok(Self { mass })
    }

    pub fn point_mass(num_states: usize, state: usize) -> Result<Self> {
        if state >= num_states {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: state,
                size: num_states,
            });
        }
        let mut mass = vec![0.0; num_states];
        mass[state] = 1.0;
        Ok(Self { mass })
    }

    pub fn uniform(num_states: usize) -> Self {
        Self {
            mass: vec![1.0 / num_states as f64; num_states],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mass
    }

    /// Builds from a nonnegative vector whose sum may have drifted.
    fn from_drifted(mass: Vec<f64>) -> Self {
        let mut d = Self { mass };
        d.renormalize_if_drifted();
        d
    }

    /// Clamps negatives and rescales to sum 1 once drift exceeds tolerance.
    fn renormalize_if_drifted(&mut self) {
        let sum: f64 = self.mass.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL || self.mass.iter().any(|&p| p < 0.0) {
            for p in self.mass.iter_mut() {
                *p = p.max(0.0);
            }
            let sum: f64 = self.mass.iter().sum();
            for p in self.mass.iter_mut() {
                *p /= sum;
            }
        }
    }

    /// One step of the chain driven by `policy` under `model`, without forming
    /// `P(policy, model)`. Equivalent to `propagate(self, induce(policy, model))`.
    pub fn push_forward(&self, policy: &Policy, model: &TransitionModel) -> Result<Self> {
        policy.shape.ensure_same(&model.shape, "push_forward")?;
        if self.len() != policy.shape.num_states {
            return Err(Error::ShapeMismatch(format!(
                "distribution over {} states, policy over {}",
                self.len(),
                policy.shape.num_states
            )));
        }
        let mut next = vec![0.0; self.len()];
        push_forward_into(&self.mass, policy, model, &mut next);
        Ok(Self::from_drifted(next))
    }

    /// In-place variant used by the per-round counterfactual trackers.
    pub(crate) fn push_forward_in_place(
        &mut self,
        policy: &Policy,
        model: &TransitionModel,
        scratch: &mut Vec<f64>,
    ) {
        scratch.clear();
        scratch.resize(self.mass.len(), 0.0);
        push_forward_into(&self.mass, policy, model, scratch);
        std::mem::swap(&mut self.mass, scratch);
        self.renormalize_if_drifted();
    }
}

fn push_forward_into(mass: &[f64], policy: &Policy, model: &TransitionModel, out: &mut [f64]) {
    let k = policy.shape.num_actions;
    for (x, &dx) in mass.iter().enumerate() {
        if dx == 0.0 {
            continue;
        }
        for a in 0..k {
            let w = dx * policy.prob(x, a);
            if w == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(model.row(x, a)) {
                *o += w * m;
            }
        }
    }
}

/// `P(pi, m)(x, x') = sum_a pi(a|x) m(x'|x, a)`.
pub fn induce_transition_matrix(policy: &Policy, model: &TransitionModel) -> Result<TransitionMatrix> {
    policy.shape.ensure_same(&model.shape, "induce_transition_matrix")?;
    let n = policy.shape.num_states;
    let mut rows = vec![0.0; n * n];
    for x in 0..n {
        let out = &mut rows[x * n..(x + 1) * n];
        for (a, &p) in policy.row(x).iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(model.row(x, a)) {
                *o += p * m;
            }
        }
    }
    Ok(TransitionMatrix { size: n, rows })
}

/// Row vector times matrix, renormalized if the sum drifts past tolerance.
pub fn propagate(dist: &StateDistribution, matrix: &TransitionMatrix) -> Result<StateDistribution> {
    if dist.len() != matrix.size {
        return Err(Error::ShapeMismatch(format!(
            "distribution over {} states, matrix of size {}",
            dist.len(),
            matrix.size
        )));
    }
    let n = matrix.size;
    let mut next = vec![0.0; n];
    for (i, &di) in dist.mass.iter().enumerate() {
        if di == 0.0 {
            continue;
        }
        for (o, &p) in next.iter_mut().zip(matrix.row(i)) {
            *o += di * p;
        }
    }
    Ok(StateDistribution::from_drifted(next))
}

/// `sum_x d(x) sum_a pi(a|x) l(x, a)`.
pub fn expected_loss(dist: &StateDistribution, policy: &Policy, loss: &LossFunction) -> Result<f64> {
    policy.shape.ensure_same(&loss.shape, "expected_loss")?;
    if dist.len() != policy.shape.num_states {
        return Err(Error::ShapeMismatch(format!(
            "distribution over {} states, policy over {}",
            dist.len(),
            policy.shape.num_states
        )));
    }
    Ok(expected_loss_unchecked(dist.as_slice(), policy, loss))
}

pub(crate) fn expected_loss_unchecked(mass: &[f64], policy: &Policy, loss: &LossFunction) -> f64 {
    let k = policy.shape.num_actions;
    let mut total = 0.0;
    for (x, &dx) in mass.iter().enumerate() {
        if dx == 0.0 {
            continue;
        }
        let inner: f64 = policy.probs[x * k..(x + 1) * k]
            .iter()
            .zip(&loss.values[x * k..(x + 1) * k])
            .map(|(p, l)| p * l)
            .sum();
        total += dx * inner;
    }
    total.clamp(0.0, 1.0)
}

/// `||d - d2||_1`.
pub fn l1_distance(d: &StateDistribution, d2: &StateDistribution) -> Result<f64> {
    if d.len() != d2.len() {
        return Err(Error::ShapeMismatch(format!(
            "distributions of length {} and {}",
            d.len(),
            d2.len()
        )));
    }
    Ok(d.mass.iter().zip(&d2.mass).map(|(a, b)| (a - b).abs()).sum())
}

/// `||p1 - p2||_{inf,1}`: the largest per-state l1 distance between action rows.
pub fn policy_distance(p1: &Policy, p2: &Policy) -> Result<f64> {
    p1.shape.ensure_same(&p2.shape, "policy_distance")?;
    Ok((0..p1.shape.num_states)
        .map(|x| {
            p1.row(x)
                .iter()
                .zip(p2.row(x))
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max))
}

/// Inverse-CDF draw from `probs` using exactly one uniform from `rng`.
///
/// Indices are scanned in ascending order. If rounding leaves `u` past the
/// final cumulative sum, the last index with positive mass is returned.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

pub fn sample_action<R: Rng + ?Sized>(policy: &Policy, state: usize, rng: &mut R) -> Result<usize> {
    policy.shape.check_state(state)?;
    Ok(sample_index(policy.row(state), rng))
}

pub fn sample_next_state<R: Rng + ?Sized>(
    model: &TransitionModel,
    state: usize,
    action: usize,
    rng: &mut R,
) -> Result<usize> {
    model.shape.check_state(state)?;
    model.shape.check_action(action)?;
    Ok(sample_index(model.row(state, action), rng))
}

/// Number of deterministic policies, `|A|^|X|`, or `None` on overflow.
pub fn deterministic_policy_count(shape: ProblemShape) -> Option<usize> {
    u32::try_from(shape.num_states)
        .ok()
        .and_then(|n| shape.num_actions.checked_pow(n))
}

/// Actions of the deterministic policy at `index` in lexicographic order:
/// state 0 is the most significant digit.
pub fn deterministic_actions_at(shape: ProblemShape, mut index: usize) -> Vec<usize> {
    let mut actions = vec![0; shape.num_states];
    for slot in actions.iter_mut().rev() {
        *slot = index % shape.num_actions;
        index /= shape.num_actions;
    }
    actions
}

/// All `|A|^|X|` deterministic policies, lexicographic by (action in state 0,
/// action in state 1, ...).
pub fn enumerate_deterministic_policies(shape: ProblemShape, cap: usize) -> Result<Vec<Policy>> {
    let count = match deterministic_policy_count(shape) {
        Some(c) if c <= cap => c,
        Some(c) => {
            return Err(Error::CapExceeded {
                what: "deterministic policy",
                requested: c.to_string(),
                cap,
            })
        }
        None => {
            return Err(Error::CapExceeded {
                what: "deterministic policy",
                requested: format!("{}^{}", shape.num_actions, shape.num_states),
                cap,
            })
        }
    };
    (0..count)
        .map(|i| Policy::deterministic(shape, &deterministic_actions_at(shape, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape(n: usize, k: usize) -> ProblemShape {
        ProblemShape::new(n, k).unwrap()
    }

    fn two_by_two_matrix() -> TransitionMatrix {
        TransitionMatrix::new(2, vec![0.9, 0.1, 0.2, 0.8]).unwrap()
    }

    #[test]
    fn rejects_empty_shape() {
        assert!(ProblemShape::new(0, 2).is_err());
        assert!(ProblemShape::new(2, 0).is_err());
    }

    #[test]
    fn rejects_bad_rows() {
        let s = shape(2, 2);
        assert!(Policy::new(s, vec![0.5, 0.5, 0.6, 0.5]).is_err());
        assert!(Policy::new(s, vec![1.5, -0.5, 0.5, 0.5]).is_err());
        assert!(Policy::new(s, vec![1.0, 0.0]).is_err());
        assert!(LossFunction::new(s, vec![0.0, 1.1, 0.0, 0.0]).is_err());
        assert!(StateDistribution::new(vec![0.4, 0.4]).is_err());
    }

    #[test]
    fn deterministic_policy_selects_kernel_slice() {
        let s = shape(3, 2);
        let kernel: Vec<f64> = (0..6)
            .flat_map(|row| {
                let mut r = vec![0.1, 0.2, 0.7];
                r.rotate_left(row % 3);
                r
            })
            .collect();
        let model = TransitionModel::new(s, kernel).unwrap();
        let pi = Policy::deterministic(s, &[0, 0, 0]).unwrap();
        let p = induce_transition_matrix(&pi, &model).unwrap();
        for x in 0..3 {
            assert_eq!(p.row(x), model.row(x, 0));
        }
    }

    #[test]
    fn uniform_policy_mixes_two_kernels() {
        let s = shape(2, 2);
        let model = TransitionModel::deterministic(s, &[0, 1, 0, 1]).unwrap();
        let p = induce_transition_matrix(&Policy::uniform(s), &model).unwrap();
        for x in 0..2 {
            assert_eq!(p.row(x), &[0.5, 0.5]);
        }
    }

    #[test]
    fn uniform_kernel_gives_uniform_rows() {
        let s = shape(4, 3);
        let pi = Policy::deterministic(s, &[0, 2, 1, 1]).unwrap();
        let p = induce_transition_matrix(&pi, &TransitionModel::uniform(s)).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                assert!((p.get(x, y) - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn induce_rejects_mismatched_shapes() {
        let pi = Policy::uniform(shape(2, 2));
        let model = TransitionModel::uniform(shape(3, 2));
        assert!(matches!(
            induce_transition_matrix(&pi, &model),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn propagate_examples() {
        let d = StateDistribution::point_mass(3, 1).unwrap();
        let out = propagate(&d, &TransitionMatrix::identity(3)).unwrap();
        assert_eq!(out, d);

        let doubly = TransitionMatrix::new(3, vec![0.2, 0.3, 0.5, 0.5, 0.2, 0.3, 0.3, 0.5, 0.2]).unwrap();
        let out = propagate(&StateDistribution::uniform(3), &doubly).unwrap();
        for &p in out.as_slice() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }

        let d = StateDistribution::new(vec![0.3, 0.7]).unwrap();
        let out = propagate(&d, &two_by_two_matrix()).unwrap();
        assert!((out.as_slice()[0] - 0.41).abs() < 1e-15);
        assert!((out.as_slice()[1] - 0.59).abs() < 1e-15);

        assert!(propagate(&StateDistribution::uniform(3), &two_by_two_matrix()).is_err());
    }

    #[test]
    fn push_forward_matches_propagate_of_induced() {
        let s = shape(2, 2);
        let model = TransitionModel::new(s, vec![0.9, 0.1, 0.3, 0.7, 0.2, 0.8, 0.6, 0.4]).unwrap();
        let pi = Policy::new(s, vec![0.25, 0.75, 0.5, 0.5]).unwrap();
        let d = StateDistribution::new(vec![0.3, 0.7]).unwrap();
        let a = d.push_forward(&pi, &model).unwrap();
        let b = propagate(&d, &induce_transition_matrix(&pi, &model).unwrap()).unwrap();
        assert!(l1_distance(&a, &b).unwrap() < 1e-15);
    }

    #[test]
    fn expected_loss_examples() {
        let s = shape(2, 2);
        let loss = LossFunction::new(s, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let d = StateDistribution::point_mass(2, 1).unwrap();
        let pi = Policy::deterministic(s, &[0, 0]).unwrap();
        assert_eq!(expected_loss(&d, &pi, &loss).unwrap(), 1.0);

        let c = LossFunction::constant(s, 0.37).unwrap();
        let mixed = Policy::new(s, vec![0.2, 0.8, 0.6, 0.4]).unwrap();
        let d = StateDistribution::new(vec![0.35, 0.65]).unwrap();
        assert!((expected_loss(&d, &mixed, &c).unwrap() - 0.37).abs() < 1e-15);

        let v = expected_loss(&StateDistribution::uniform(2), &Policy::uniform(s), &loss).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn distances() {
        let d = StateDistribution::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(l1_distance(&d, &d).unwrap(), 0.0);
        let a = StateDistribution::point_mass(3, 0).unwrap();
        let b = StateDistribution::point_mass(3, 2).unwrap();
        assert_eq!(l1_distance(&a, &b).unwrap(), 2.0);
        let u = StateDistribution::uniform(2);
        assert!((l1_distance(&d, &u).unwrap() - 0.4).abs() < 1e-15);
        assert!(l1_distance(&a, &u).is_err());

        let s = shape(2, 2);
        let p = Policy::new(s, vec![0.6, 0.4, 0.3, 0.7]).unwrap();
        let q = Policy::new(s, vec![0.5, 0.5, 0.3, 0.7]).unwrap();
        assert_eq!(policy_distance(&p, &p).unwrap(), 0.0);
        assert!((policy_distance(&p, &q).unwrap() - 0.2).abs() < 1e-15);
        let d1 = Policy::deterministic(s, &[0, 1]).unwrap();
        let d2 = Policy::deterministic(s, &[0, 0]).unwrap();
        assert_eq!(policy_distance(&d1, &d2).unwrap(), 2.0);
    }

    #[test]
    fn deterministic_sampling_ignores_rng() {
        let s = shape(3, 3);
        let pi = Policy::deterministic(s, &[2, 0, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            assert_eq!(sample_action(&pi, 0, &mut rng).unwrap(), 2);
            assert_eq!(sample_action(&pi, 2, &mut rng).unwrap(), 1);
        }
        let model = TransitionModel::deterministic(s, &[1, 2, 0, 0, 0, 0, 2, 2, 2]).unwrap();
        assert_eq!(sample_next_state(&model, 0, 1, &mut rng).unwrap(), 2);
        assert!(sample_action(&pi, 3, &mut rng).is_err());
        assert!(sample_next_state(&model, 0, 3, &mut rng).is_err());
    }

    #[test]
    fn sampling_is_reproducible_and_consumes_one_draw() {
        let s = shape(2, 4);
        let pi = Policy::uniform(s);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| sample_action(&pi, 1, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));

        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        sample_action(&pi, 0, &mut a).unwrap();
        let _: f64 = b.gen();
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    // Binomial 3-sigma check on 10^6 draws per category.
    fn frequencies_within_three_sigma(counts: &[usize], draws: usize) {
        let p = 1.0 / counts.len() as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for &c in counts {
            assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn uniform_action_frequencies() {
        let s = shape(1, 4);
        let pi = Policy::uniform(s);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 1_000_000;
        let mut counts = vec![0; 4];
        for _ in 0..draws {
            counts[sample_action(&pi, 0, &mut rng).unwrap()] += 1;
        }
        frequencies_within_three_sigma(&counts, draws);
    }

    #[test]
    fn uniform_next_state_frequencies() {
        let s = shape(5, 1);
        let model = TransitionModel::uniform(s);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let draws = 1_000_000;
        let mut counts = vec![0; 5];
        for _ in 0..draws {
            counts[sample_next_state(&model, 2, 0, &mut rng).unwrap()] += 1;
        }
        frequencies_within_three_sigma(&counts, draws);
    }

    #[test]
    fn enumeration_count_order_and_cap() {
        assert_eq!(enumerate_deterministic_policies(shape(1, 3), 4096).unwrap().len(), 3);

        let all = enumerate_deterministic_policies(shape(4, 2), 4096).unwrap();
        assert_eq!(all.len(), 16);
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }

        let two = enumerate_deterministic_policies(shape(2, 2), 4096).unwrap();
        assert_eq!(two[0].deterministic_actions().unwrap(), vec![0, 0]);
        assert_eq!(two[1].deterministic_actions().unwrap(), vec![0, 1]);
        assert_eq!(two[2].deterministic_actions().unwrap(), vec![1, 0]);

        assert!(matches!(
            enumerate_deterministic_policies(shape(13, 2), DEFAULT_POLICY_CAP),
            Err(Error::CapExceeded { .. })
        ));
        assert!(enumerate_deterministic_policies(shape(200, 3), DEFAULT_POLICY_CAP).is_err());
    }
}
