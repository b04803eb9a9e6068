//! Simulation and exact theory for networks whose vertices alternate between
//! online and hidden states.
//!
//! * [`graph`] and [`generators`] build the static initial topology.
//! * [`process`] runs the exact event-driven online/hidden dynamics on it.
//! * [`theory`] gives the closed-form stationary law of the online count and
//!   an independent rate-matrix solver.
//! * [`stats`] turns observations into histograms, KL divergences,
//!   skewness and topology metrics.
//! * [`experiment`] wires these into reproducible, replica-parallel runs.

pub mod experiment;
pub mod generators;
pub mod graph;
pub mod process;
pub mod rng;
pub mod stats;
pub mod theory;

pub use generators::{GeneratorKind, GeneratorSpec};
pub use graph::{Graph, GraphError};
pub use process::{InitialOnline, NohParams, NohProcess, OnlineSnapshot, Phase, SizeSeries};
pub use stats::{FitReport, Histogram};
pub use theory::{StationaryPmf, TheoryParams};
