//! Preconditioned proximal point iterations `x+ = (Q + A)^{-1} Q x` where the
//! metric `Q` is only positive semidefinite.

pub mod error;
pub mod iteration;
pub mod metric;
pub mod operator;
pub mod resolvent;
pub mod sampling;
pub mod splitting;
pub mod verify;

pub use error::{Error, Result};
pub use metric::Metric;
