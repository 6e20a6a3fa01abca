//! Iterate bookkeeping: current point and Polyak-Ruppert running average.

/// Current iterate, running average over all iterates so far, and step count.
///
/// The average includes the starting point: after n completed steps,
/// `theta_bar` equals the arithmetic mean of the n+1 iterates seen so far.
#[derive(Debug, Clone)]
pub struct IterateState {
    theta: Vec<f64>,
    theta_bar: Vec<f64>,
    n: u64,
}

impl IterateState {
    pub fn new(theta0: Vec<f64>) -> Self {
        IterateState {
            theta_bar: theta0.clone(),
            theta: theta0,
            n: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_bar(&self) -> &[f64] {
        &self.theta_bar
    }

    /// Completed steps. The average currently spans n+1 iterates.
    pub fn steps(&self) -> u64 {
        self.n
    }

    /// Replaces the iterate and folds it into the running average.
    pub fn update_average(&mut self, new_theta: &[f64]) {
        assert_eq!(
            self.theta.len(),
            new_theta.len(),
            "update_average: dimension mismatch"
        );
        self.theta.copy_from_slice(new_theta);
        self.fold_average();
    }

    /// Mutable access for in-place step kernels; call `fold_average` after.
    pub(crate) fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// Folds the current iterate into the running average and bumps the count.
    ///
    /// Incremental form: theta_bar += (theta - theta_bar) / (n + 1) with the
    /// incremented n, so history never needs to be stored.
    pub(crate) fn fold_average(&mut self) {
        self.n += 1;
        let inv = 1.0 / (self.n as f64 + 1.0);
        for (b, &t) in self.theta_bar.iter_mut().zip(self.theta.iter()) {
            *b += (t - *b) * inv;
        }
    }

    /// Restarts the average (and count) at the current iterate.
    pub fn restart_average(&mut self) {
        self.theta_bar.copy_from_slice(&self.theta);
        self.n = 0;
    }
}
