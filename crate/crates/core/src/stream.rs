//! Supervised observations and the stream abstraction feeding the recursions.

use crate::error::{Error, Result};
use crate::vector::Vector;

/// One data pair (x, y).
///
/// For least squares the gradient target is z = y·x; for logistic regression
/// y is the class label in {-1, +1}.
#[derive(Debug, Clone)]
pub struct Observation {
    pub x: Vector,
    pub y: f64,
}

impl Observation {
    pub fn new(x: Vector, y: f64) -> Self {
        Observation { x, y }
    }

    /// Validates the label for logistic use.
    pub fn check_label(&self) -> Result<()> {
        if self.y == 1.0 || self.y == -1.0 {
            Ok(())
        } else {
            Err(Error::InvalidLabel(self.y))
        }
    }
}

/// A source of observations consumed sequentially by one optimizer run.
pub trait ObsStream {
    /// Next observation, or `None` when exhausted.
    fn next_obs(&mut self) -> Option<&Observation>;
}

/// Stream over a finite dataset in index order (cycles if `cycle` is set).
pub struct SliceStream<'a> {
    data: &'a [Observation],
    pos: usize,
    cycle: bool,
}

impl<'a> SliceStream<'a> {
    pub fn new(data: &'a [Observation]) -> Self {
        SliceStream {
            data,
            pos: 0,
            cycle: false,
        }
    }

    pub fn cycling(data: &'a [Observation]) -> Self {
        SliceStream {
            data,
            pos: 0,
            cycle: true,
        }
    }
}

impl ObsStream for SliceStream<'_> {
    fn next_obs(&mut self) -> Option<&Observation> {
        if self.pos >= self.data.len() {
            if !self.cycle || self.data.is_empty() {
                return None;
            }
            self.pos = 0;
        }
        let obs = &self.data[self.pos];
        self.pos += 1;
        Some(obs)
    }
}

/// Stream drawing observations from a generator closure.
pub struct FnStream<F: FnMut() -> Option<Observation>> {
    gen: F,
    current: Option<Observation>,
}

impl<F: FnMut() -> Option<Observation>> FnStream<F> {
    pub fn new(gen: F) -> Self {
        FnStream { gen, current: None }
    }
}

impl<F: FnMut() -> Option<Observation>> ObsStream for FnStream<F> {
    fn next_obs(&mut self) -> Option<&Observation> {
        self.current = (self.gen)();
        self.current.as_ref()
    }
}

/// Stream over a dataset driven by an index sequence (sampling with replacement).
pub struct IndexedStream<'a, I: Iterator<Item = usize>> {
    data: &'a [Observation],
    indices: I,
}

impl<'a, I: Iterator<Item = usize>> IndexedStream<'a, I> {
    pub fn new(data: &'a [Observation], indices: I) -> Self {
        IndexedStream { data, indices }
    }
}

impl<I: Iterator<Item = usize>> ObsStream for IndexedStream<'_, I> {
    fn next_obs(&mut self) -> Option<&Observation> {
        self.indices.next().map(|i| &self.data[i])
    }
}
