//! Whitney-cube machinery for nonlocal trace spaces: decompositions of open
//! sets, reflected cubes across the boundary, a smooth partition of unity,
//! the induced extension operator from the complement, and Monte Carlo
//! estimators for the associated singular-kernel seminorms.
//!
//! The crate ships a CLI (`nltrace`) with `decompose`, `extend`, `seminorm`
//! and `verify` subcommands; see the README for the config schema and file
//! formats.

pub mod battery;
pub mod cli;
pub mod config;
pub mod domain;
pub mod extend;
pub mod geom;
pub mod quad;
pub mod reflect;
pub mod sampling;
pub mod seminorm;
pub mod unity;
pub mod verify;
pub mod whitney;

pub use domain::{Domain, RegionSpec, SobolevParams};
