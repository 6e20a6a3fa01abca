//! First-order comparison optimizers: plain SGD (constant or decaying steps,
//! with or without averaging on the reporting side), SAG for finite training
//! sets, and Adagrad diagonal scaling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::iterate::IterateState;
use crate::lms::StepSchedule;
use crate::losses::Loss;
use crate::stream::{ObsStream, Observation};

/// One SGD step: theta <- theta - gamma l'(y, <x, theta>) x; average folded.
pub fn sgd_step(state: &mut IterateState, obs: &Observation, gamma: f64, loss: Loss) {
    let yhat = obs.x.dot_dense(state.theta());
    let g = loss.d1(obs.y, yhat);
    obs.x.axpy_into(-gamma * g, state.theta_mut());
    state.fold_average();
}

/// Runs n SGD steps from theta0 under the given schedule, reporting the
/// state at each checkpoint index (0 = before any step). The running average
/// is always maintained; callers choose whether to read theta or theta_bar.
pub fn run_sgd<S: ObsStream>(
    theta0: Vec<f64>,
    stream: &mut S,
    schedule: StepSchedule,
    n: u64,
    loss: Loss,
    checkpoints: &[u64],
    mut on_checkpoint: impl FnMut(u64, &IterateState),
) -> Result<IterateState> {
    let mut state = IterateState::new(theta0);
    let mut next_cp = checkpoints.iter().copied().peekable();
    if next_cp.peek() == Some(&0) {
        on_checkpoint(0, &state);
        next_cp.next();
    }
    for k in 1..=n {
        let obs = stream
            .next_obs()
            .ok_or(Error::StreamExhausted { at_step: k })?;
        sgd_step(&mut state, obs, schedule.gamma_at(k), loss);
        if next_cp.peek() == Some(&k) {
            on_checkpoint(k, &state);
            next_cp.next();
        }
    }
    Ok(state)
}

/// SAG bookkeeping: one stored scalar gradient per example (the gradient of
/// example i is l'_i x_i, so only l'_i needs storing) and the running sum
/// of the reconstructed gradients.
#[derive(Debug, Clone)]
pub struct SagState {
    stored: Vec<f64>,
    grad_sum: Vec<f64>,
    theta: Vec<f64>,
    seen: Vec<bool>,
    seen_count: usize,
}

impl SagState {
    pub fn new(n_examples: usize, dim: usize) -> Self {
        SagState {
            stored: vec![0.0; n_examples],
            grad_sum: vec![0.0; dim],
            theta: vec![0.0; dim],
            seen: vec![false; n_examples],
            seen_count: 0,
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn gradient_sum(&self) -> &[f64] {
        &self.grad_sum
    }

    /// Distinct examples whose stored gradient has been refreshed.
    pub fn seen_count(&self) -> usize {
        self.seen_count
    }

    /// Rebuilds the gradient sum from the stored scalars; audit oracle for
    /// the incremental bookkeeping.
    pub fn recompute_gradient_sum(&self, data: &[Observation]) -> Vec<f64> {
        let mut sum = vec![0.0; self.grad_sum.len()];
        for (obs, &g) in data.iter().zip(&self.stored) {
            obs.x.axpy_into(g, &mut sum);
        }
        sum
    }

    /// Refreshes the stored gradient of example `i` and takes one step.
    /// Stored gradients start at zero; the sum is divided by the full
    /// example count from the first step on.
    pub fn step(&mut self, data: &[Observation], i: usize, gamma: f64, loss: Loss) {
        let obs = &data[i];
        let yhat = obs.x.dot_dense(&self.theta);
        let g_new = loss.d1(obs.y, yhat);
        let delta = g_new - self.stored[i];
        self.stored[i] = g_new;
        if !self.seen[i] {
            self.seen[i] = true;
            self.seen_count += 1;
        }
        obs.x.axpy_into(delta, &mut self.grad_sum);
        let scale = -gamma / data.len() as f64;
        for (t, &s) in self.theta.iter_mut().zip(&self.grad_sum) {
            *t += scale * s;
        }
    }
}

/// Runs SAG for `steps` uniform-with-replacement draws over the dataset.
/// The conventional step size is 1/(16 R^2) with R^2 the average radius.
pub fn run_sag(
    data: &[Observation],
    gamma: f64,
    steps: u64,
    loss: Loss,
    rng: &mut ChaCha8Rng,
    checkpoints: &[u64],
    mut on_checkpoint: impl FnMut(u64, &[f64]),
) -> Result<SagState> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dim = data[0].x.dim();
    let mut state = SagState::new(data.len(), dim);
    let mut next_cp = checkpoints.iter().copied().peekable();
    if next_cp.peek() == Some(&0) {
        on_checkpoint(0, state.theta());
        next_cp.next();
    }
    for k in 1..=steps {
        let i = rng.random_range(0..data.len());
        state.step(data, i, gamma, loss);
        if next_cp.peek() == Some(&k) {
            on_checkpoint(k, state.theta());
            next_cp.next();
        }
    }
    Ok(state)
}

/// Adagrad iterate and per-coordinate accumulated squared gradients.
#[derive(Debug, Clone)]
pub struct AdagradState {
    theta: Vec<f64>,
    accum: Vec<f64>,
}

pub const ADAGRAD_EPS: f64 = 1e-10;

impl AdagradState {
    pub fn new(theta0: Vec<f64>) -> Self {
        AdagradState {
            accum: vec![0.0; theta0.len()],
            theta: theta0,
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn accumulators(&self) -> &[f64] {
        &self.accum
    }

    /// Accumulates the squared gradient coordinates, then steps
    /// theta_j -= base * g_j / sqrt(accum_j + eps). Only coordinates in the
    /// gradient's sparsity pattern are touched.
    pub fn step(&mut self, obs: &Observation, base_step: f64, loss: Loss) {
        let yhat = obs.x.dot_dense(&self.theta);
        let d1 = loss.d1(obs.y, yhat);
        if d1 == 0.0 {
            return;
        }
        for (j, xj) in obs.x.entries() {
            let g = d1 * xj;
            if g == 0.0 {
                continue;
            }
            self.accum[j] += g * g;
            self.theta[j] -= base_step * g / (self.accum[j] + ADAGRAD_EPS).sqrt();
        }
    }
}

/// Runs Adagrad for n steps. No averaging: the iterate itself is reported.
pub fn run_adagrad<S: ObsStream>(
    theta0: Vec<f64>,
    stream: &mut S,
    base_step: f64,
    n: u64,
    loss: Loss,
    checkpoints: &[u64],
    mut on_checkpoint: impl FnMut(u64, &[f64]),
) -> Result<AdagradState> {
    if base_step <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "adagrad base step {base_step} must be > 0"
        )));
    }
    let mut state = AdagradState::new(theta0);
    let mut next_cp = checkpoints.iter().copied().peekable();
    if next_cp.peek() == Some(&0) {
        on_checkpoint(0, state.theta());
        next_cp.next();
    }
    for k in 1..=n {
        let obs = stream
            .next_obs()
            .ok_or(Error::StreamExhausted { at_step: k })?;
        state.step(obs, base_step, loss);
        if next_cp.peek() == Some(&k) {
            on_checkpoint(k, state.theta());
            next_cp.next();
        }
    }
    Ok(state)
}
