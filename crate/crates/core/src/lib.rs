//! Discrete-choice estimation, survey raking, scenario simulation and
//! emission accounting for shared autonomous micro-mobility demand.
//!
//! Conventions: times are in hours and costs in tens of USD inside every
//! utility; raw inputs are converted once at ingestion.

pub mod attributes;
pub mod bikeability;
pub mod error;
pub mod estimation;
pub mod impacts;
pub mod io;
pub mod metrics;
pub mod mode;
pub mod params;
pub mod simulation;
pub mod synth;
pub mod utility;
pub mod weighting;

pub use error::{Error, Result};
pub use mode::{Availability, ModeId};
pub use params::{Parameter, ParameterSet, Role};
