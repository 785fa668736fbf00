//! Certification of the restricted isometry property for random design
//! matrices, together with the planted dense subgraph machinery and the
//! graph-to-matrix reduction that links the two.
//!
//! Module map:
//!
//! * [`rip`]: Gram deviations, exact and sampled RIP margins, incoherence.
//! * [`distributions`]: the sub-Gaussian entry laws and their median halves.
//! * [`graphs`]: Erdős–Rényi and planted graphs, spectral statistic.
//! * [`certifiers`]: sparse operator norm and incoherence certifiers.
//! * [`reduction`]: the reduction, its trace and the witness diagnostic.
//! * [`harness`]: seeded Monte Carlo experiments with JSON output.

pub mod certifiers;
pub mod distributions;
pub mod eigen;
pub mod error;
pub mod graphs;
pub mod harness;
pub mod io;
pub mod matrix;
pub mod reduction;
pub mod rip;
pub mod rng;
pub mod stats;
pub mod subsets;

pub use error::{Error, Result};
pub use matrix::{DesignMatrix, SymmetricMatrix};
