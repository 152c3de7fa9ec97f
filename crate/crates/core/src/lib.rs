//! Uniform white-noise sampling of implicit surfaces by random line casting.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod field;
pub mod geometry;
pub mod io;
pub mod moments;
pub mod postprocess;
pub mod rays;
pub mod sampler;
pub mod scene;
pub mod tracer;

pub use error::{Error, Result};
pub use geometry::{BoundingBox, BoundingVolume, Vec3};
