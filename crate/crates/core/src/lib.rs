//! Spatial preferential attachment on the circle with a choice-based edge
//! step.
//!
//! [`model`] grows the graph, [`theory`] computes the limiting objects
//! (regime, fixed points of the normalized maximal degrees) and [`harness`]
//! runs replica ensembles and compares them with the theory.

pub mod error;
pub mod harness;
pub mod io;
pub mod model;
pub mod params;
pub mod plot;
pub mod registry;
pub mod rng;
pub mod samplers;
pub mod theory;
pub mod torus;

pub use error::{EstimateError, IoError, ParamError, TheoryError};
pub use model::{run, GraphState, Observer, StepReport, TimeSeries, TimeSeriesRow};
pub use params::ModelParams;
pub use rng::{derive_stream, RngStream};
pub use theory::{classify_regime, solve_fixed_point, Regime, TheoryResult};
