//! Constant-step-size averaged least-mean-squares: the recursion, a decaying
//! variant via `StepSchedule`, closed-form risk-bound calculators, and the
//! semi-stochastic recursion used as a testing oracle.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::iterate::IterateState;
use crate::stream::{ObsStream, Observation};
use crate::vector::Vector;

/// Step-size rule: constant gamma, or gamma_n = C / (R^2 sqrt(n)) with the
/// step index n starting at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    Decaying { c: f64, r2: f64 },
}

impl StepSchedule {
    pub fn constant(gamma: f64) -> Result<Self> {
        if gamma <= 0.0 {
            return Err(Error::InvalidConfig(format!("step size {gamma} must be > 0")));
        }
        Ok(StepSchedule::Constant(gamma))
    }

    pub fn decaying(c: f64, r2: f64) -> Result<Self> {
        if c <= 0.0 || r2 <= 0.0 {
            return Err(Error::InvalidConfig(
                "decaying schedule requires C > 0 and R^2 > 0".into(),
            ));
        }
        Ok(StepSchedule::Decaying { c, r2 })
    }

    /// Step size at 1-based step index n.
    #[inline]
    pub fn gamma_at(self, n: u64) -> f64 {
        match self {
            StepSchedule::Constant(g) => g,
            StepSchedule::Decaying { c, r2 } => c / (r2 * (n as f64).sqrt()),
        }
    }
}

/// Problem constants feeding the non-asymptotic bound calculators.
#[derive(Debug, Clone, Copy)]
pub struct BoundParams {
    /// Radius bound R (R^2 bounds the covariate second moments).
    pub r: f64,
    /// Noise scale sigma.
    pub sigma: f64,
    /// p-moment noise scale tau >= sigma.
    pub tau: f64,
    /// Kurtosis constant kappa >= 1.
    pub kappa: f64,
    /// Ambient dimension.
    pub d: usize,
    /// Distance of the starting point to the optimum.
    pub dist0: f64,
}

impl BoundParams {
    pub fn new(r: f64, sigma: f64, tau: f64, kappa: f64, d: usize, dist0: f64) -> Result<Self> {
        if r < 0.0 || sigma < 0.0 || tau < 0.0 || dist0 < 0.0 {
            return Err(Error::InvalidConfig("bound parameters must be nonnegative".into()));
        }
        if tau < sigma {
            return Err(Error::InvalidConfig(format!("tau {tau} < sigma {sigma}")));
        }
        if kappa < 1.0 {
            return Err(Error::InvalidConfig(format!("kappa {kappa} < 1")));
        }
        Ok(BoundParams {
            r,
            sigma,
            tau,
            kappa,
            d,
            dist0,
        })
    }
}

/// One LMS step on a general pair (x, z):
/// theta <- theta - gamma (<theta, x> x - z); average folded in.
pub fn lms_step_xz(state: &mut IterateState, x: &Vector, z: &Vector, gamma: f64) {
    debug_assert!(gamma >= 0.0);
    let s = x.dot_dense(state.theta());
    x.axpy_into(-gamma * s, state.theta_mut());
    z.axpy_into(gamma, state.theta_mut());
    state.fold_average();
}

/// One LMS step on a supervised observation, with z = y x:
/// theta <- theta - gamma (<theta, x> - y) x; average folded in.
///
/// Cost is O(stored(x)) for the step plus O(d) for the average.
pub fn lms_step(state: &mut IterateState, obs: &Observation, gamma: f64) {
    let s = obs.x.dot_dense(state.theta());
    obs.x.axpy_into(-gamma * (s - obs.y), state.theta_mut());
    state.fold_average();
}

fn check_sorted(checkpoints: &[u64]) {
    debug_assert!(
        checkpoints.windows(2).all(|w| w[0] < w[1]),
        "checkpoints must be strictly increasing"
    );
}

/// Runs n averaged LMS steps from theta0, reporting the state at each
/// checkpoint index (0 = before any step).
pub fn run_averaged_lms<S: ObsStream>(
    theta0: Vec<f64>,
    stream: &mut S,
    gamma: f64,
    n: u64,
    checkpoints: &[u64],
    mut on_checkpoint: impl FnMut(u64, &IterateState),
) -> Result<IterateState> {
    check_sorted(checkpoints);
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
        lms_step(&mut state, obs, gamma);
        if next_cp.peek() == Some(&k) {
            on_checkpoint(k, &state);
            next_cp.next();
        }
    }
    Ok(state)
}

/// Expected excess-risk bound for the averaged iterate over n iterates
/// (theta_0 through theta_{n-1}, i.e. n - 1 steps) at constant step size:
///
/// (1 / 2n) * ( sigma sqrt(d) / (1 - sqrt(gamma R^2))
///            + R dist0 / sqrt(gamma R^2) )^2
///
/// Requires gamma R^2 < 1. At gamma = 1/(4 R^2) this reduces to
/// (2/n) (sigma sqrt(d) + R dist0)^2.
pub fn theorem1_bound(p: &BoundParams, gamma: f64, n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Hypothesis("n must be >= 1".into()));
    }
    if gamma <= 0.0 {
        return Err(Error::Hypothesis(format!("gamma {gamma} must be > 0")));
    }
    let gr2 = gamma * p.r * p.r;
    if gr2 >= 1.0 {
        return Err(Error::Hypothesis(format!(
            "gamma R^2 = {gr2} violates gamma R^2 < 1"
        )));
    }
    let root = gr2.sqrt();
    let term = p.sigma * (p.d as f64).sqrt() / (1.0 - root) + p.r * p.dist0 / root;
    Ok(term * term / (2.0 * n as f64))
}

/// p-th moment excess-risk bound for the averaged iterate:
///
/// (p / 2n) * ( 7 tau sqrt(d) + R dist0 sqrt(3 + 2/(gamma p R^2)) )^2
///
/// Requires p >= 1 and gamma <= 1/(12 p kappa R^2).
pub fn theorem2_pmoment_bound(params: &BoundParams, p: f64, gamma: f64, n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Hypothesis("n must be >= 1".into()));
    }
    if p < 1.0 {
        return Err(Error::Hypothesis(format!("p {p} must be >= 1")));
    }
    let gamma_max = 1.0 / (12.0 * p * params.kappa * params.r * params.r);
    if gamma <= 0.0 || gamma > gamma_max * (1.0 + 1e-12) {
        return Err(Error::Hypothesis(format!(
            "gamma {gamma} violates gamma <= 1/(12 p kappa R^2) = {gamma_max}"
        )));
    }
    let inner = 7.0 * params.tau * (params.d as f64).sqrt()
        + params.r * params.dist0 * (3.0 + 2.0 / (gamma * p * params.r * params.r)).sqrt();
    Ok(p * inner * inner / (2.0 * n as f64))
}

/// The closed form quoted for gamma = 1/(12 p kappa R^2):
/// (p / 2n) (7 tau sqrt(d) + 6 sqrt(kappa) R dist0)^2.
///
/// At that step size the general formula gives sqrt(3 + 24 kappa) in place of
/// 6 sqrt(kappa), so this form upper-bounds it whenever kappa >= 1/4; the two
/// coincide when dist0 = 0.
pub fn theorem2_special_case(params: &BoundParams, p: f64, n: u64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Hypothesis("n must be >= 1".into()));
    }
    if p < 1.0 {
        return Err(Error::Hypothesis(format!("p {p} must be >= 1")));
    }
    let inner = 7.0 * params.tau * (params.d as f64).sqrt()
        + 6.0 * params.kappa.sqrt() * params.r * params.dist0;
    Ok(p * inner * inner / (2.0 * n as f64))
}

/// High-probability threshold t with P(excess risk of the averaged iterate
/// >= t) <= delta:
///
/// t = [7 tau sqrt(d) + R dist0 (sqrt(3) + sqrt(24 kappa))]^2
///     / (24 gamma kappa R^2 n delta^{12 gamma kappa R^2})
///
/// Requires gamma <= 1/(12 kappa R^2) and 0 < delta <= 1.
pub fn corollary_tail_threshold(
    params: &BoundParams,
    gamma: f64,
    delta: f64,
    n: u64,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::Hypothesis("n must be >= 1".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Hypothesis(format!("delta {delta} must be in (0, 1]")));
    }
    let r2 = params.r * params.r;
    let gamma_max = 1.0 / (12.0 * params.kappa * r2);
    if gamma <= 0.0 || gamma > gamma_max * (1.0 + 1e-12) {
        return Err(Error::Hypothesis(format!(
            "gamma {gamma} violates gamma <= 1/(12 kappa R^2) = {gamma_max}"
        )));
    }
    let inner = 7.0 * params.tau * (params.d as f64).sqrt()
        + params.r * params.dist0 * (3.0f64.sqrt() + (24.0 * params.kappa).sqrt());
    let exponent = 12.0 * gamma * params.kappa * r2;
    Ok(inner * inner / (24.0 * gamma * params.kappa * r2 * n as f64 * delta.powf(exponent)))
}

/// Runs the semi-stochastic recursion alpha_k = (I - gamma H) alpha_{k-1} +
/// gamma xi_k and returns the average of the first n iterates, alpha_0
/// through alpha_{n-1}; that is n - 1 steps and noise draws.
///
/// Requires H symmetric positive definite with gamma * lambda_max(H) <= 1.
/// With noise covariance E[xi xi^T] <= C the averaged iterate satisfies
/// E <abar, H abar> <= |alpha0|^2 / (n gamma) + tr(C H^{-1}) / n, which is
/// what tests check against.
pub fn run_semistochastic(
    h: &DMatrix<f64>,
    mut xi_stream: impl FnMut() -> Option<DVector<f64>>,
    gamma: f64,
    n: u64,
    alpha0: &[f64],
) -> Result<Vec<f64>> {
    let d = alpha0.len();
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: h.nrows(),
        });
    }
    if n < 1 {
        return Err(Error::Hypothesis("n must be >= 1".into()));
    }
    let eig = h.clone().symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l));
    let lam_min = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &l| m.min(l));
    if lam_min <= 0.0 {
        return Err(Error::Singular(
            "H must be symmetric positive definite".into(),
        ));
    }
    if gamma < 0.0 || gamma * lam_max > 1.0 + 1e-12 {
        return Err(Error::Hypothesis(format!(
            "gamma lambda_max(H) = {} violates <= 1",
            gamma * lam_max
        )));
    }

    let mut alpha = DVector::from_column_slice(alpha0);
    let mut bar = alpha.clone();
    for k in 1..n {
        let xi = xi_stream().ok_or(Error::StreamExhausted { at_step: k })?;
        alpha -= h * &alpha * gamma;
        alpha.axpy(gamma, &xi, 1.0);
        let w = 1.0 / (k as f64 + 1.0);
        // bar += (alpha - bar) / (k + 1)
        bar.zip_apply(&alpha, |b, a| *b += (a - *b) * w);
    }
    Ok(bar.as_slice().to_vec())
}
