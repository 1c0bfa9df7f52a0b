//! Runtime shielding of reinforcement-learning agents with signal temporal
//! logic task specifications over moving regions.

pub mod cbf;
pub mod experiment;
pub mod error;
pub mod filter;
pub mod geometry;
pub mod learner;
pub mod sequencer;
pub mod stl;
pub mod world;

pub use error::{Error, Result};
pub use geometry::{sup_inf_distance, DistanceSample, Shape, Vec2};
