//! Stochastic quadratic-approximation (online Newton) schemes for smooth
//! losses. Each step linearizes the gradient around a support point; the
//! per-example second derivative is rank one, so a step costs two inner
//! products and one axpy, never materializing a matrix. Variants differ only
//! in how the support point is chosen.

use crate::baselines::sgd_step;
use crate::error::{Error, Result};
use crate::iterate::IterateState;
use crate::losses::Loss;
use crate::stream::ObsStream;

/// How the quadratic-approximation support point evolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportPolicy {
    /// Averaged decaying-rate SGD for the first half of the budget, then
    /// averaged LMS on the quadratic approximation around its output.
    TwoStep,
    /// The two-step procedure restarted on dyadic blocks, warm-starting each
    /// block from the previous block's output.
    TwoStepDoubling,
    /// Constant-step surrogate run with the support refreshed to the current
    /// averaged iterate at every power-of-two step index.
    DoublingApprox,
    /// The support is the running average before each step, re-read every
    /// step (never a stale copy).
    CurrentAverage,
}

/// Constants feeding the two-step excess-risk bound.
#[derive(Debug, Clone, Copy)]
pub struct NewtonBoundParams {
    pub kappa: f64,
    pub rho: f64,
    pub d: usize,
    pub r: f64,
    pub dist0: f64,
}

impl NewtonBoundParams {
    pub fn new(kappa: f64, rho: f64, d: usize, r: f64, dist0: f64) -> Result<Self> {
        if kappa < 1.0 {
            return Err(Error::InvalidConfig(format!("kappa {kappa} < 1")));
        }
        if rho < 4.0 {
            return Err(Error::InvalidConfig(format!("rho {rho} < 4")));
        }
        if r < 0.0 || dist0 < 0.0 {
            return Err(Error::InvalidConfig("R and dist0 must be nonnegative".into()));
        }
        Ok(NewtonBoundParams {
            kappa,
            rho,
            d,
            r,
            dist0,
        })
    }
}

/// One step of constant-step LMS on the quadratic approximation of the loss
/// around `support`:
///
/// theta <- theta - gamma [ l'(y, <x, support>)
///                        + l''(y, <x, support>) (<x, theta> - <x, support>) ] x
///
/// Two inner products and one axpy; the rank-one second derivative is never
/// materialized. The average is folded in.
pub fn surrogate_step(
    state: &mut IterateState,
    support: &[f64],
    x: &crate::vector::Vector,
    y: f64,
    gamma: f64,
    loss: Loss,
) {
    let s_support = x.dot_dense(support);
    let s_theta = x.dot_dense(state.theta());
    let (d1, d2) = loss.d1_d2(y, s_support);
    let coeff = d1 + d2 * (s_theta - s_support);
    x.axpy_into(-gamma * coeff, state.theta_mut());
    state.fold_average();
}

/// Internal: fires the checkpoint callback against a global step counter.
struct Checkpointer<'a> {
    remaining: std::iter::Peekable<std::iter::Copied<std::slice::Iter<'a, u64>>>,
}

impl<'a> Checkpointer<'a> {
    fn new(checkpoints: &'a [u64]) -> Self {
        Checkpointer {
            remaining: checkpoints.iter().copied().peekable(),
        }
    }

    fn fire_if_due(&mut self, step: u64, mut f: impl FnMut(u64)) {
        while self.remaining.peek() == Some(&step) {
            f(step);
            self.remaining.next();
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn two_step_phases<S: ObsStream>(
    theta0: Vec<f64>,
    stream: &mut S,
    n1: u64,
    n2: u64,
    loss: Loss,
    r2: f64,
    step_offset: u64,
    cp: &mut Checkpointer,
    on_checkpoint: &mut impl FnMut(u64, &IterateState),
) -> Result<IterateState> {
    // phase 1: averaged SGD at the constant step 1/(2 R^2 sqrt(n1))
    let mut state = IterateState::new(theta0);
    let mut global = step_offset;
    cp.fire_if_due(global, |k| on_checkpoint(k, &state));
    if n1 > 0 {
        let gamma1 = 1.0 / (2.0 * r2 * (n1 as f64).sqrt());
        for k in 1..=n1 {
            let obs = stream.next_obs().ok_or(Error::StreamExhausted {
                at_step: step_offset + k,
            })?;
            sgd_step(&mut state, obs, gamma1, loss);
            global = step_offset + k;
            cp.fire_if_due(global, |k| on_checkpoint(k, &state));
        }
    }

    // phase 2: averaged LMS on the quadratic approximation around the
    // phase-1 average, started at that average
    let support = state.theta_bar().to_vec();
    let mut state = IterateState::new(support.clone());
    let gamma2 = 1.0 / r2;
    for k in 1..=n2 {
        let obs = stream.next_obs().ok_or(Error::StreamExhausted {
            at_step: global + k,
        })?;
        surrogate_step(&mut state, &support, &obs.x, obs.y, gamma2, loss);
        cp.fire_if_due(global + k, |j| on_checkpoint(j, &state));
    }
    Ok(state)
}

/// Theorem-style two-step procedure: n steps of averaged SGD at step size
/// 1/(2 R^2 sqrt(n)) produce the support point, then n steps of averaged LMS
/// at step size 1/R^2 on the quadratic approximation around it. Consumes 2n
/// observations and returns the phase-2 state (its average is the output).
pub fn run_two_step<S: ObsStream>(
    theta0: Vec<f64>,
    stream: &mut S,
    n: u64,
    loss: Loss,
    r2: f64,
    checkpoints: &[u64],
    mut on_checkpoint: impl FnMut(u64, &IterateState),
) -> Result<IterateState> {
    let mut cp = Checkpointer::new(checkpoints);
    two_step_phases(
        theta0,
        stream,
        n,
        n,
        loss,
        r2,
        0,
        &mut cp,
        &mut on_checkpoint,
    )
}

/// Runs the online Newton scheme for n steps under the given support policy.
///
/// `gamma` applies to the `CurrentAverage` and `DoublingApprox` policies; the
/// two-step policies derive their phase step sizes from `r2` and the phase
/// lengths. Checkpoints are global observation counts.
#[allow(clippy::too_many_arguments)]
pub fn run_online_newton<S: ObsStream>(
    theta0: Vec<f64>,
    stream: &mut S,
    gamma: f64,
    n: u64,
    policy: SupportPolicy,
    loss: Loss,
    r2: f64,
    checkpoints: &[u64],
    mut on_checkpoint: impl FnMut(u64, &IterateState),
) -> Result<IterateState> {
    let mut cp = Checkpointer::new(checkpoints);
    match policy {
        SupportPolicy::TwoStep => two_step_phases(
            theta0,
            stream,
            n / 2,
            n - n / 2,
            loss,
            r2,
            0,
            &mut cp,
            &mut on_checkpoint,
        ),
        SupportPolicy::TwoStepDoubling => {
            // dyadic blocks of sizes 2, 4, 8, ... (last one truncated),
            // each a fresh two-step run warm-started from the previous output
            let mut current = IterateState::new(theta0);
            cp.fire_if_due(0, |k| on_checkpoint(k, &current));
            let mut done = 0u64;
            let mut block = 2u64;
            while done < n {
                let budget = block.min(n - done);
                let n1 = budget / 2;
                let n2 = budget - n1;
                current = two_step_phases(
                    current.theta_bar().to_vec(),
                    stream,
                    n1,
                    n2,
                    loss,
                    r2,
                    done,
                    &mut cp,
                    &mut on_checkpoint,
                )?;
                done += budget;
                block *= 2;
            }
            Ok(current)
        }
        SupportPolicy::DoublingApprox => {
            let mut state = IterateState::new(theta0);
            cp.fire_if_due(0, |k| on_checkpoint(k, &state));
            let mut support = state.theta_bar().to_vec();
            for k in 1..=n {
                if k.is_power_of_two() {
                    support.copy_from_slice(state.theta_bar());
                }
                let obs = stream
                    .next_obs()
                    .ok_or(Error::StreamExhausted { at_step: k })?;
                surrogate_step(&mut state, &support, &obs.x, obs.y, gamma, loss);
                cp.fire_if_due(k, |j| on_checkpoint(j, &state));
            }
            Ok(state)
        }
        SupportPolicy::CurrentAverage => {
            let mut state = IterateState::new(theta0);
            cp.fire_if_due(0, |k| on_checkpoint(k, &state));
            for k in 1..=n {
                let obs = stream
                    .next_obs()
                    .ok_or(Error::StreamExhausted { at_step: k })?;
                // support = the running average before this step, read in place
                let s_support = obs.x.dot_dense(state.theta_bar());
                let s_theta = obs.x.dot_dense(state.theta());
                let (d1, d2) = loss.d1_d2(obs.y, s_support);
                let coeff = d1 + d2 * (s_theta - s_support);
                obs.x.axpy_into(-gamma * coeff, state.theta_mut());
                state.fold_average();
                cp.fire_if_due(k, |j| on_checkpoint(j, &state));
            }
            Ok(state)
        }
    }
}

/// Excess-risk bound of the two-step output after n phase steps
/// (2n observations):
///
/// bound = kappa^{3/2} rho^3 d (16 R dist0 + 19)^4 / n
///
/// `valid` reports whether n satisfies the hypothesis
/// n >= (19 + 9 R dist0)^4.
pub fn theorem3_bound(p: &NewtonBoundParams, n: u64) -> (f64, bool) {
    let rd = p.r * p.dist0;
    let bound =
        p.kappa.powf(1.5) * p.rho.powi(3) * p.d as f64 * (16.0 * rd + 19.0).powi(4) / n as f64;
    let valid = n as f64 >= (19.0 + 9.0 * rd).powi(4);
    (bound, valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lms::{lms_step, run_averaged_lms};
    use crate::stream::{FnStream, Observation};
    use crate::vector::Vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn stdn(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn rand_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        (0..d).map(|_| stdn(rng)).collect()
    }

    #[test]
    fn support_at_current_iterate_reduces_to_sgd_step_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let theta = rand_vec(&mut rng, 3);
            let x = Vector::dense(rand_vec(&mut rng, 3));
            let y = if stdn(&mut rng) > 0.0 { 1.0 } else { -1.0 };
            let obs = Observation::new(x.clone(), y);

            let mut a = IterateState::new(theta.clone());
            surrogate_step(&mut a, &theta.clone(), &x, y, 0.4, Loss::Logistic);

            let mut b = IterateState::new(theta);
            sgd_step(&mut b, &obs, 0.4, Loss::Logistic);
            // the linear-correction term is exactly zero, so the arithmetic
            // is identical, not merely close
            assert_eq!(a.theta(), b.theta());
        }
    }

    #[test]
    fn square_loss_surrogate_step_equals_lms_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let theta = rand_vec(&mut rng, 4);
            let support = rand_vec(&mut rng, 4);
            let x = Vector::dense(rand_vec(&mut rng, 4));
            let y = stdn(&mut rng);
            let obs = Observation::new(x.clone(), y);

            let mut a = IterateState::new(theta.clone());
            surrogate_step(&mut a, &support, &x, y, 0.2, Loss::Square);

            let mut b = IterateState::new(theta);
            lms_step(&mut b, &obs, 0.2);
            for (u, v) in a.theta().iter().zip(b.theta()) {
                assert!((u - v).abs() <= 1e-14, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn surrogate_step_matches_dense_hessian_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = 5;
        for _ in 0..30 {
            let theta = rand_vec(&mut rng, d);
            let support = rand_vec(&mut rng, d);
            let x = rand_vec(&mut rng, d);
            let y = if stdn(&mut rng) > 0.0 { 1.0 } else { -1.0 };
            let gamma = 0.15;

            let mut state = IterateState::new(theta.clone());
            surrogate_step(
                &mut state,
                &support,
                &Vector::dense(x.clone()),
                y,
                gamma,
                Loss::Logistic,
            );

            // dense oracle: theta - gamma [ f'(support) + F (theta - support) ]
            // with F = l'' x x^T materialized as a full matrix
            let s_sup: f64 = x.iter().zip(&support).map(|(a, b)| a * b).sum();
            let (d1, d2) = Loss::Logistic.d1_d2(y, s_sup);
            let mut f = vec![vec![0.0; d]; d];
            for i in 0..d {
                for j in 0..d {
                    f[i][j] = d2 * x[i] * x[j];
                }
            }
            let mut expected = theta.clone();
            for i in 0..d {
                let mut corr = d1 * x[i];
                for j in 0..d {
                    corr += f[i][j] * (theta[j] - support[j]);
                }
                expected[i] -= gamma * corr;
            }
            for i in 0..d {
                assert!((state.theta()[i] - expected[i]).abs() <= 1e-14);
            }
        }
    }

    /// Per-step cost: the surrogate step runs exactly two inner products and
    /// one axpy against the observation, twice the inner-product count of a
    /// plain SGD step with the same axpy count.
    #[test]
    fn surrogate_step_costs_two_dots_one_axpy() {
        let x = Vector::dense(vec![1.0, 2.0]);
        let support = vec![0.1, 0.2];
        let mut state = IterateState::new(vec![0.0, 0.0]);
        crate::vector::reset_op_counts();
        surrogate_step(&mut state, &support, &x, 1.0, 0.1, Loss::Logistic);
        let (dots_surrogate, axpys_surrogate) = crate::vector::op_counts();

        let obs = Observation::new(x, 1.0);
        let mut state = IterateState::new(vec![0.0, 0.0]);
        crate::vector::reset_op_counts();
        sgd_step(&mut state, &obs, 0.1, Loss::Logistic);
        let (dots_sgd, axpys_sgd) = crate::vector::op_counts();

        assert_eq!((dots_sgd, axpys_sgd), (1, 1));
        assert_eq!((dots_surrogate, axpys_surrogate), (2, 1));
        assert!(dots_surrogate <= 2 * dots_sgd && axpys_surrogate <= axpys_sgd);
    }

    fn lsq_stream(seed: u64, d: usize) -> FnStream<impl FnMut() -> Option<Observation>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta_star: Vec<f64> = (0..d).map(|i| ((i + 1) as f64).recip()).collect();
        FnStream::new(move || {
            let x: Vec<f64> = (0..d).map(|_| stdn(&mut rng)).collect();
            let y = x
                .iter()
                .zip(&theta_star)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + 0.5 * stdn(&mut rng);
            Some(Observation::new(Vector::dense(x), y))
        })
    }

    #[test]
    fn square_loss_constant_policies_reproduce_averaged_lms() {
        let d = 4;
        let n = 2000u64;
        let gamma = 0.05;
        for policy in [SupportPolicy::CurrentAverage, SupportPolicy::DoublingApprox] {
            let mut newton_stream = lsq_stream(77, d);
            let newton = run_online_newton(
                vec![0.0; d],
                &mut newton_stream,
                gamma,
                n,
                policy,
                Loss::Square,
                1.0,
                &[],
                |_, _| {},
            )
            .unwrap();

            let mut lms_stream = lsq_stream(77, d);
            let lms = run_averaged_lms(vec![0.0; d], &mut lms_stream, gamma, n, &[], |_, _| {})
                .unwrap();

            for (a, b) in newton.theta().iter().zip(lms.theta()) {
                assert!((a - b).abs() <= 1e-12, "{policy:?}: {a} vs {b}");
            }
            for (a, b) in newton.theta_bar().iter().zip(lms.theta_bar()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn square_loss_two_step_equals_lms_restarted_at_phase_one_average() {
        let d = 3;
        let n = 500u64;
        let r2 = 3.0;
        let mut stream = run_stream(91, d);
        let two_step =
            run_two_step(vec![0.0; d], &mut stream, n, Loss::Square, r2, &[], |_, _| {})
                .unwrap();

        // reference: averaged SGD phase (= LMS at gamma1 for square loss),
        // then plain averaged LMS restarted at its average
        let mut stream = run_stream(91, d);
        let gamma1 = 1.0 / (2.0 * r2 * (n as f64).sqrt());
        let phase1 =
            run_averaged_lms(vec![0.0; d], &mut stream, gamma1, n, &[], |_, _| {}).unwrap();
        let phase2 = run_averaged_lms(
            phase1.theta_bar().to_vec(),
            &mut stream,
            1.0 / r2,
            n,
            &[],
            |_, _| {},
        )
        .unwrap();

        for (a, b) in two_step.theta_bar().iter().zip(phase2.theta_bar()) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    fn run_stream(seed: u64, d: usize) -> FnStream<impl FnMut() -> Option<Observation>> {
        lsq_stream(seed, d)
    }

    #[test]
    fn two_step_n1_hand_trace() {
        // d=1, n=1: phase 1 does one SGD step at gamma1 = 1/(2 R^2), then
        // phase 2 does one surrogate step at 1/R^2 around the phase-1 average.
        let r2 = 2.0;
        let x = 1.5f64;
        let y = 1.0f64;
        let data = vec![
            Observation::new(Vector::dense(vec![x]), y),
            Observation::new(Vector::dense(vec![x]), y),
        ];
        let mut stream = crate::stream::SliceStream::new(&data);
        let out = run_two_step(vec![0.0], &mut stream, 1, Loss::Logistic, r2, &[], |_, _| {})
            .unwrap();

        let gamma1 = 1.0 / (2.0 * r2);
        let t1 = -gamma1 * Loss::Logistic.d1(y, 0.0) * x;
        let support = 0.5 * (0.0 + t1); // average includes theta_0
        let gamma2 = 1.0 / r2;
        let (d1, d2) = Loss::Logistic.d1_d2(y, support * x);
        // phase-2 iterate starts at the support, so the correction vanishes
        let t2 = support - gamma2 * (d1 + d2 * (support * x - support * x)) * x;
        let expected = 0.5 * (support + t2);
        assert!((out.theta_bar()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_step_size_keeps_trajectory_constant() {
        let mut stream = lsq_stream(5, 3);
        let out = run_online_newton(
            vec![0.2; 3],
            &mut stream,
            0.0,
            100,
            SupportPolicy::CurrentAverage,
            Loss::Logistic,
            1.0,
            &[],
            |_, _| {},
        )
        .unwrap();
        assert_eq!(out.theta(), &[0.2; 3]);
        assert_eq!(out.theta_bar(), &[0.2; 3]);
    }

    #[test]
    fn exhausted_stream_is_reported_per_policy() {
        let data = vec![Observation::new(Vector::dense(vec![1.0]), 1.0)];
        for policy in [
            SupportPolicy::TwoStep,
            SupportPolicy::TwoStepDoubling,
            SupportPolicy::DoublingApprox,
            SupportPolicy::CurrentAverage,
        ] {
            let mut stream = crate::stream::SliceStream::new(&data);
            let err = run_online_newton(
                vec![0.0],
                &mut stream,
                0.1,
                10,
                policy,
                Loss::Logistic,
                1.0,
                &[],
                |_, _| {},
            )
            .unwrap_err();
            match err {
                Error::StreamExhausted { at_step } => assert_eq!(at_step, 2, "{policy:?}"),
                other => panic!("unexpected error {other}"),
            }
        }
    }

    #[test]
    fn theorem3_bound_values() {
        let p = NewtonBoundParams::new(1.0, 4.0, 2, 1.0, 0.0).unwrap();
        let (bound, valid) = theorem3_bound(&p, 1_000_000);
        // 64 * 2 * 19^4 / 1e6
        let expected = 64.0 * 2.0 * 19.0f64.powi(4) / 1e6;
        assert!((bound - expected).abs() < 1e-12 * expected);
        assert!(valid, "1e6 >= 19^4 = 130321");

        let (_, valid) = theorem3_bound(&p, 130_320);
        assert!(!valid);
        let (_, valid) = theorem3_bound(&p, 130_321);
        assert!(valid);
    }

    #[test]
    fn theorem3_bound_halves_when_n_doubles() {
        let p = NewtonBoundParams::new(2.0, 5.0, 7, 1.3, 0.4).unwrap();
        let (b1, _) = theorem3_bound(&p, 400_000);
        let (b2, _) = theorem3_bound(&p, 800_000);
        assert_eq!(b1 / 2.0, b2);
    }

    #[test]
    fn newton_bound_params_enforce_ranges() {
        assert!(NewtonBoundParams::new(0.5, 4.0, 1, 1.0, 0.0).is_err());
        assert!(NewtonBoundParams::new(1.0, 3.9, 1, 1.0, 0.0).is_err());
    }
}
