//! Discrete-time super-martingale calculus relative to convex sets of
//! equivalent measures on finite filtered spaces.

pub mod calculus;
pub mod cli;
pub mod decomposition;
pub mod error;
pub mod hedging;
pub mod lp;
pub mod measure;
pub mod pricing;
pub mod space;
pub mod tol;

pub use error::{Error, Result};
pub use measure::{Measure, MeasureSet};
pub use space::{AdaptedProcess, FilteredSpace, PredictableProcess};
