//! Datasets: synthetic generators, libsvm-format I/O, and the benchmark
//! preprocessing protocol (outlier filter, split, bootstrap pass sampling).

mod libsvm;
mod protocol;
mod synthetic;

pub use libsvm::{parse_libsvm, parse_libsvm_reader, write_libsvm};
pub use protocol::{prepare_protocol, PassSampler};
pub use synthetic::{generate_logistic, generate_lsq, ModelKind, SyntheticModel, SyntheticSpec};

use crate::error::{Error, Result};
use crate::stream::Observation;

/// An immutable collection of observations sharing one ambient dimension.
#[derive(Debug, Clone)]
pub struct Dataset {
    observations: Vec<Observation>,
    dim: usize,
    /// Present iff the data came from a synthetic generator.
    ground_truth: Option<SyntheticModel>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>, dim: usize) -> Result<Self> {
        for obs in &observations {
            if obs.x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: obs.x.dim(),
                });
            }
        }
        Ok(Dataset {
            observations,
            dim,
            ground_truth: None,
        })
    }

    pub(crate) fn with_ground_truth(
        observations: Vec<Observation>,
        dim: usize,
        model: SyntheticModel,
    ) -> Self {
        Dataset {
            observations,
            dim,
            ground_truth: Some(model),
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Fraction of stored nonzeros over n * d.
    pub fn sparsity(&self) -> f64 {
        if self.observations.is_empty() || self.dim == 0 {
            return 0.0;
        }
        let nnz: usize = self.observations.iter().map(|o| o.x.nnz()).sum();
        nnz as f64 / (self.len() as f64 * self.dim as f64)
    }

    pub fn ground_truth(&self) -> Option<&SyntheticModel> {
        self.ground_truth.as_ref()
    }

    /// Mean squared covariate norm (the average radius R^2 of this data).
    pub fn average_radius_sq(&self) -> Result<f64> {
        if self.observations.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(self
            .observations
            .iter()
            .map(|o| o.x.norm_sq())
            .sum::<f64>()
            / self.len() as f64)
    }

    /// Largest covariate infinity-norm; sets the Adagrad base step.
    pub fn max_inf_norm(&self) -> Result<f64> {
        if self.observations.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(self
            .observations
            .iter()
            .map(|o| o.x.inf_norm())
            .fold(0.0, f64::max))
    }
}
