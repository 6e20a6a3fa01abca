//! Benchmark preprocessing: (1) drop covariates whose norm exceeds 5x the
//! average norm, (2) shuffle and split 50/50 into train and test, (3) sample
//! training indices i.i.d. with replacement for 100 effective passes.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRole};

/// Factory for the with-replacement index streams into the training set.
/// Each replication gets its own deterministic stream; the budget is
/// `passes * train_len` draws.
#[derive(Debug, Clone)]
pub struct PassSampler {
    train_len: usize,
    seed: u64,
    passes: u64,
}

impl PassSampler {
    pub fn budget(&self) -> u64 {
        self.passes * self.train_len as u64
    }

    pub fn train_len(&self) -> usize {
        self.train_len
    }

    /// The index stream for one replication.
    pub fn stream(&self, replication: u64) -> PassStream {
        PassStream {
            rng: stream_rng(self.seed, replication, StreamRole::PassSampler),
            remaining: self.budget(),
            len: self.train_len,
        }
    }
}

pub struct PassStream {
    rng: ChaCha8Rng,
    remaining: u64,
    len: usize,
}

impl Iterator for PassStream {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(self.rng.random_range(0..self.len))
    }
}

/// Applies the preprocessing protocol. The outlier threshold uses the mean
/// norm of the original (unfiltered) data, in a single pass; filtering
/// precedes the split. The odd leftover observation goes to the test half.
pub fn prepare_protocol(
    data: &Dataset,
    seed: u64,
    passes: u64,
) -> Result<(Dataset, Dataset, PassSampler)> {
    if data.len() < 4 {
        return Err(Error::InvalidConfig(format!(
            "protocol needs >= 4 observations, got {}",
            data.len()
        )));
    }
    let mean_norm: f64 = data
        .observations()
        .iter()
        .map(|o| o.x.norm())
        .sum::<f64>()
        / data.len() as f64;
    let kept: Vec<_> = data
        .observations()
        .iter()
        .filter(|o| o.x.norm() <= 5.0 * mean_norm)
        .cloned()
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }

    let mut order: Vec<usize> = (0..kept.len()).collect();
    let mut rng = stream_rng(seed, 0, StreamRole::Split);
    order.shuffle(&mut rng);

    let half = kept.len() / 2;
    let train: Vec<_> = order[..half].iter().map(|&i| kept[i].clone()).collect();
    let test: Vec<_> = order[half..].iter().map(|&i| kept[i].clone()).collect();

    let sampler = PassSampler {
        train_len: train.len(),
        seed,
        passes,
    };
    Ok((
        Dataset::new(train, data.dim())?,
        Dataset::new(test, data.dim())?,
        sampler,
    ))
}
