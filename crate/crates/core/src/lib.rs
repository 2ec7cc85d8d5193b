//! Physical reconstruction of quantum states and one-qubit channel process
//! matrices from photon-count tomography data.
//!
//! The library provides:
//! - linear-inversion baselines that are exact on clean data but can
//!   produce matrices with negative eigenvalues,
//! - convex reconstruction by projected gradient descent over the
//!   unit-trace PSD set, which always lands in the physical region,
//! - evaluation metrics (process fidelity, state deviation, residual
//!   distributions) and Monte-Carlo error bars from Poisson-resampled
//!   counts,
//! - a JSON/CSV data pipeline with a synthetic-data generator for
//!   reproducible experiments.

pub mod counts;
pub mod error;
pub mod inversion;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod solver;

pub use error::{PhyschanError, Result};
