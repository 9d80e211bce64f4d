//! Pose description synthesis, pose-set sampling, frame retrieval and
//! benchmark scoring for human-centric video.

pub mod defaults;
pub mod describer;
pub mod error;
pub mod interval;
pub mod io;
pub mod kinematics;
pub mod metrics;
pub mod mix;
pub mod posecode;
pub mod pres3;
pub mod retrieval;
pub mod sampler;

pub use error::{Error, Result};
