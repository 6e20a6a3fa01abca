//! Stochastic approximation for least-squares and logistic regression:
//! averaged constant-step-size LMS, a streaming quadratic-approximation
//! (online Newton) scheme, the usual first-order baselines, estimators for
//! the problem constants that drive theoretical step sizes, and an
//! experiment harness producing excess-risk curves.

pub mod baselines;
pub mod constants;
pub mod data;
pub mod error;
pub mod iterate;
mod linalg;
pub mod lms;
pub mod losses;
pub mod newton;
pub mod rng;
pub mod stream;
pub mod vector;

pub use error::{Error, Result};
pub use iterate::IterateState;
pub use losses::Loss;
pub use stream::Observation;
pub use vector::Vector;
