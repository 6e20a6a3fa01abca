//! Synthetic problem instances: Gaussian covariates with covariance made of
//! random eigenvectors and eigenvalues 1/k, linear outputs with unit
//! signal-to-noise ratio (least squares) or labels from the logistic model.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::haar_orthogonal;
use crate::rng::{model_rng, stream_rng, StreamRole};
use crate::stream::Observation;
use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Lsq,
    Logistic,
}

/// Parameters of a synthetic draw.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticSpec {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub model: ModelKind,
}

/// Ground truth of a synthetic problem: covariance eigendecomposition,
/// optimum theta*, and (for least squares) the noise level.
#[derive(Debug, Clone)]
pub struct SyntheticModel {
    kind: ModelKind,
    d: usize,
    /// Columns of the eigenvector matrix U.
    eigvecs: Vec<Vec<f64>>,
    /// Eigenvalues 1/k, k = 1..d.
    eigvals: Vec<f64>,
    /// Rows of A = U diag(sqrt(lambda)); x = A g densifies a standard normal g.
    a_rows: Vec<Vec<f64>>,
    theta_star: Vec<f64>,
    /// Noise standard deviation (least squares; zero for logistic).
    sigma: f64,
}

impl SyntheticModel {
    /// Draws the problem instance deterministically from the seed.
    pub fn new(kind: ModelKind, d: usize, seed: u64) -> Self {
        assert!(d >= 1);
        let mut rng = model_rng(seed);
        let u = haar_orthogonal(d, &mut rng);
        let eigvals: Vec<f64> = (1..=d).map(|k| 1.0 / k as f64).collect();

        let mut eigvecs = Vec::with_capacity(d);
        for j in 0..d {
            eigvecs.push(u.column(j).iter().copied().collect::<Vec<f64>>());
        }
        let mut a_rows = vec![vec![0.0; d]; d];
        for (i, row) in a_rows.iter_mut().enumerate() {
            for (j, a) in row.iter_mut().enumerate() {
                *a = u[(i, j)] * eigvals[j].sqrt();
            }
        }

        // theta* uniform on the unit sphere
        let g: Vec<f64> = (0..d).map(|_| stdn(&mut rng)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let theta_star: Vec<f64> = g.iter().map(|v| v / norm).collect();

        // unit signal-to-noise ratio: sigma^2 = E <theta*, x>^2
        let sigma = match kind {
            ModelKind::Lsq => {
                let signal = {
                    let mut s = 0.0;
                    for (l, uk) in eigvals.iter().zip(&eigvecs) {
                        let proj: f64 = uk.iter().zip(&theta_star).map(|(a, b)| a * b).sum();
                        s += l * proj * proj;
                    }
                    s
                };
                signal.sqrt()
            }
            ModelKind::Logistic => 0.0,
        };

        SyntheticModel {
            kind,
            d,
            eigvecs,
            eigvals,
            a_rows,
            theta_star,
            sigma,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigvals
    }

    /// tr H, the population average radius.
    pub fn r2(&self) -> f64 {
        self.eigvals.iter().sum()
    }

    /// <u, H v> for the population covariance H.
    pub fn cov_bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (l, uk) in self.eigvals.iter().zip(&self.eigvecs) {
            let pu: f64 = uk.iter().zip(u).map(|(a, b)| a * b).sum();
            let pv: f64 = uk.iter().zip(v).map(|(a, b)| a * b).sum();
            acc += l * pu * pv;
        }
        acc
    }

    /// <v, H v>.
    pub fn cov_quadform(&self, v: &[f64]) -> f64 {
        self.cov_bilinear(v, v)
    }

    /// Least-squares excess risk in closed form:
    /// f(theta) - f(theta*) = <theta - theta*, H (theta - theta*)> / 2.
    pub fn excess_risk_square(&self, theta: &[f64]) -> f64 {
        let delta: Vec<f64> = theta
            .iter()
            .zip(&self.theta_star)
            .map(|(a, b)| a - b)
            .collect();
        0.5 * self.cov_quadform(&delta)
    }

    /// E |x|^4 = (tr H)^2 + 2 tr(H^2) for Gaussian covariates.
    pub fn fourth_moment_norm(&self) -> f64 {
        let tr: f64 = self.eigvals.iter().sum();
        let tr2: f64 = self.eigvals.iter().map(|l| l * l).sum();
        tr * tr + 2.0 * tr2
    }

    /// Draws one covariate x ~ N(0, H).
    pub fn sample_x(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let g: Vec<f64> = (0..self.d).map(|_| stdn(rng)).collect();
        self.a_rows
            .iter()
            .map(|row| row.iter().zip(&g).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Draws one observation.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Observation {
        let x = self.sample_x(rng);
        let signal: f64 = x
            .iter()
            .zip(&self.theta_star)
            .map(|(a, b)| a * b)
            .sum();
        let y = match self.kind {
            ModelKind::Lsq => signal + self.sigma * stdn(rng),
            ModelKind::Logistic => {
                let p = 1.0 / (1.0 + (-signal).exp());
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        Observation::new(Vector::dense(x), y)
    }

    /// The observation stream of one replication.
    pub fn replication_rng(&self, seed: u64, replication: u64) -> ChaCha8Rng {
        stream_rng(seed, replication, StreamRole::Observations)
    }
}

fn stdn(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn generate(spec: SyntheticSpec) -> Result<Dataset> {
    if spec.d < 1 || spec.n < 1 {
        return Err(Error::InvalidConfig("need d >= 1 and n >= 1".into()));
    }
    let model = SyntheticModel::new(spec.model, spec.d, spec.seed);
    let mut rng = stream_rng(spec.seed, 0, StreamRole::Observations);
    let observations = (0..spec.n).map(|_| model.sample(&mut rng)).collect();
    Ok(Dataset::with_ground_truth(observations, spec.d, model))
}

/// Least-squares dataset with recorded ground truth (theta*, H, sigma).
pub fn generate_lsq(spec: SyntheticSpec) -> Result<Dataset> {
    if spec.model != ModelKind::Lsq {
        return Err(Error::InvalidConfig("spec.model must be lsq".into()));
    }
    generate(spec)
}

/// Logistic dataset; the generative model is well-specified, so the recorded
/// theta* is the population optimum.
pub fn generate_logistic(spec: SyntheticSpec) -> Result<Dataset> {
    if spec.model != ModelKind::Logistic {
        return Err(Error::InvalidConfig("spec.model must be logistic".into()));
    }
    generate(spec)
}
