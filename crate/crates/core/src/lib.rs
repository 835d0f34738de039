//! Solver library and benchmark harness for the two-vehicle highway
//! platooning matching problem.
//!
//! The pipeline: load or generate an [`model::Instance`], build the
//! surfer-breaker [`matching::WeightMatrix`], lift it to a penalized
//! [`qubo::Qubo`] (and its [`ising::IsingModel`]), run any of the exact,
//! metaheuristic or exactly-simulated quantum solvers on it, and score the
//! resulting sample batches with [`metrics`] and [`savings`]. The [`bench`]
//! module orchestrates whole solver-zoo sweeps and writes the CSV/JSON
//! tables.

pub mod bench;
pub mod error;
pub mod exact;
pub mod heuristics;
pub mod ising;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod npy;
pub mod qaoa;
pub mod qubo;
pub mod rng;
pub mod savings;

pub use error::{Error, Result};
