//! Dense and sparse vectors over f64.
//!
//! Covariates may be dense or sparse; optimizer iterates are always dense
//! (a gradient step against sparse data densifies the iterate in general).
//! Sparse vectors are immutable index-sorted arrays.

use crate::error::{Error, Result};

#[cfg(test)]
use std::cell::Cell;

#[cfg(test)]
thread_local! {
    static DOT_COUNT: Cell<u64> = const { Cell::new(0) };
    static AXPY_COUNT: Cell<u64> = const { Cell::new(0) };
}

/// Resets and reads the per-thread dot/axpy counters (flop accounting in tests).
#[cfg(test)]
pub(crate) fn reset_op_counts() {
    DOT_COUNT.with(|c| c.set(0));
    AXPY_COUNT.with(|c| c.set(0));
}

#[cfg(test)]
pub(crate) fn op_counts() -> (u64, u64) {
    (DOT_COUNT.with(|c| c.get()), AXPY_COUNT.with(|c| c.get()))
}

#[inline]
fn count_dot() {
    #[cfg(test)]
    DOT_COUNT.with(|c| c.set(c.get() + 1));
}

#[inline]
fn count_axpy() {
    #[cfg(test)]
    AXPY_COUNT.with(|c| c.set(c.get() + 1));
}

/// A d-dimensional real vector, dense or sparse.
#[derive(Debug, Clone, PartialEq)]
pub enum Vector {
    Dense(Vec<f64>),
    Sparse {
        dim: usize,
        /// Strictly increasing, all < dim.
        indices: Vec<u32>,
        /// Same length as `indices`, all nonzero.
        values: Vec<f64>,
    },
}

impl Vector {
    pub fn dense(values: Vec<f64>) -> Self {
        Vector::Dense(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector::Dense(vec![0.0; dim])
    }

    /// Builds a sparse vector from (index, value) pairs.
    ///
    /// Indices must be strictly increasing and < `dim`; values must be nonzero.
    pub fn sparse(dim: usize, pairs: &[(u32, f64)]) -> Result<Self> {
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values = Vec::with_capacity(pairs.len());
        let mut last: Option<u32> = None;
        for &(i, v) in pairs {
            if (i as usize) >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: i as usize + 1,
                });
            }
            if let Some(p) = last {
                if i <= p {
                    return Err(Error::InvalidConfig(format!(
                        "sparse indices not strictly increasing: {p} then {i}"
                    )));
                }
            }
            if v == 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "sparse value at index {i} is zero"
                )));
            }
            indices.push(i);
            values.push(v);
            last = Some(i);
        }
        Ok(Vector::Sparse {
            dim,
            indices,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Vector::Dense(v) => v.len(),
            Vector::Sparse { dim, .. } => *dim,
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            Vector::Dense(v) => v.iter().filter(|&&x| x != 0.0).count(),
            Vector::Sparse { values, .. } => values.len(),
        }
    }

    /// Number of stored entries (dense length, or sparse pattern size).
    pub fn stored(&self) -> usize {
        match self {
            Vector::Dense(v) => v.len(),
            Vector::Sparse { values, .. } => values.len(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Vector::Sparse { .. })
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            Vector::Dense(v) => v.clone(),
            Vector::Sparse {
                dim,
                indices,
                values,
            } => {
                let mut out = vec![0.0; *dim];
                for (&i, &v) in indices.iter().zip(values) {
                    out[i as usize] = v;
                }
                out
            }
        }
    }

    /// Inner product against a dense slice. Iterates only stored entries.
    ///
    /// Panics on dimension mismatch (programming error at this level; data
    /// dimensions are validated when datasets are constructed).
    pub fn dot_dense(&self, other: &[f64]) -> f64 {
        assert_eq!(
            self.dim(),
            other.len(),
            "dot: dimension mismatch ({} vs {})",
            self.dim(),
            other.len()
        );
        count_dot();
        match self {
            Vector::Dense(v) => v.iter().zip(other).map(|(a, b)| a * b).sum(),
            Vector::Sparse {
                indices, values, ..
            } => indices
                .iter()
                .zip(values)
                .map(|(&i, &v)| v * other[i as usize])
                .sum(),
        }
    }

    /// Inner product between two vectors of equal dimension.
    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(
            self.dim(),
            other.dim(),
            "dot: dimension mismatch ({} vs {})",
            self.dim(),
            other.dim()
        );
        match (self, other) {
            (Vector::Dense(a), _) => other.dot_dense(a),
            (_, Vector::Dense(b)) => self.dot_dense(b),
            (
                Vector::Sparse {
                    indices: ia,
                    values: va,
                    ..
                },
                Vector::Sparse {
                    indices: ib,
                    values: vb,
                    ..
                },
            ) => {
                count_dot();
                // merge walk over the two sorted patterns
                let (mut p, mut q, mut acc) = (0usize, 0usize, 0.0);
                while p < ia.len() && q < ib.len() {
                    match ia[p].cmp(&ib[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            acc += va[p] * vb[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                acc
            }
        }
    }

    /// `out += c * self`, touching only stored entries.
    pub fn axpy_into(&self, c: f64, out: &mut [f64]) {
        assert_eq!(
            self.dim(),
            out.len(),
            "axpy: dimension mismatch ({} vs {})",
            self.dim(),
            out.len()
        );
        count_axpy();
        match self {
            Vector::Dense(v) => {
                for (o, &x) in out.iter_mut().zip(v) {
                    *o += c * x;
                }
            }
            Vector::Sparse {
                indices, values, ..
            } => {
                for (&i, &v) in indices.iter().zip(values) {
                    out[i as usize] += c * v;
                }
            }
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            Vector::Dense(v) => v.iter().map(|x| x * x).sum(),
            Vector::Sparse { values, .. } => values.iter().map(|x| x * x).sum(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        match self {
            Vector::Dense(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Vector::Sparse { values, .. } => values.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// Iterates the stored (index, value) entries.
    pub fn entries(&self) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match self {
            Vector::Dense(v) => Box::new(v.iter().copied().enumerate()),
            Vector::Sparse {
                indices, values, ..
            } => Box::new(
                indices
                    .iter()
                    .zip(values)
                    .map(|(&i, &v)| (i as usize, v)),
            ),
        }
    }

    pub fn scale(&self, c: f64) -> Vector {
        match self {
            Vector::Dense(v) => Vector::Dense(v.iter().map(|x| c * x).collect()),
            Vector::Sparse {
                dim,
                indices,
                values,
            } => Vector::Sparse {
                dim: *dim,
                indices: indices.clone(),
                values: values.iter().map(|x| c * x).collect(),
            },
        }
    }
}

/// Free-function form of the inner product.
pub fn dot(a: &Vector, b: &Vector) -> f64 {
    a.dot(b)
}
