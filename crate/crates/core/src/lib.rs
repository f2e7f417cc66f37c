//! Finite-scale coarse geometry: covers and their dimension at a scale,
//! coarsely n-to-1 maps, decomposition trees and metric sparsification.
//!
//! Every routine works on finite metric spaces given by a dense distance
//! matrix. Asymptotic notions are replaced by statements with explicit scales
//! and mesh caps, and every construction returns data that can be re-checked
//! independently.

pub mod covers;
pub mod error;
pub mod metric;
pub mod util;

pub use error::{Error, Result};
pub use metric::{Label, PointSet, Space, SpaceDescriptor};
pub mod maps;
pub mod dimension;
pub mod msp;
pub mod trees;
pub mod fixtures;
pub mod gen;
pub mod oracles;
pub mod suites;
pub mod io;
