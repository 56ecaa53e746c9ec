//! Synthetic rigid-body RGB-D-flow sequences and metrics for judging whether
//! generated video is consistent as a 4D world.

pub mod chamfer;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod kdtree;
pub mod metrics;
pub mod noveltime;
pub mod raster;
pub mod synth;
pub mod warp;
pub mod worldline;

pub use error::{Error, Result};
