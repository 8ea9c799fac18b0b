//! Spatial partitioning and parallel execution of raster/vector summaries.
//!
//! Workloads are split into chunks (regular, quantile, merged or balanced
//! grids, attribute hierarchies, or one chunk per raster file), executed on a
//! worker pool, and merged in a fixed order so that the output does not
//! depend on the number of workers.

pub mod bench;
pub mod dataio;
pub mod error;
pub mod executor;
pub mod geom;
pub mod geoops;
pub mod partition;
pub mod raster;

pub use error::{Error, Result};
