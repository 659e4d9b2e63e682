//! Kernels for experiments on affine lattices and their applications:
//! elliptical billiards with a barrier, periodic Eaton lens arrays and the
//! gap statistics of fractional parts of square roots.
//!
//! All operations are pure functions of their inputs. Randomised routines
//! take an explicit [`rng::Stream`] so that results do not depend on how work
//! is scheduled.

pub mod billiards;
pub mod error;
pub mod gaps;
pub mod homogeneous;
pub mod lenses;
pub mod quad;
pub mod rng;
pub mod stats;

pub use error::{LabError, Result};
