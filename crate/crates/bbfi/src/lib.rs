//! IO, file formats, process plumbing, and plotting around `bbfi-core`.
//!
//! This crate carries everything that needs the standard library: CSV
//! ingestion and exports, the versioned model file, the external-process
//! predictor and its line protocol, SVG rendering, and thread-fanned runners
//! whose outputs are bit-identical to the sequential ones in core.

pub mod csvio;
pub mod error;
pub mod external;
pub mod model_file;
pub mod parallel;
pub mod report;
pub mod svg;

pub use error::{Error, Result};
