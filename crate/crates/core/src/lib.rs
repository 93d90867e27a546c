//! Stencil-aware rank reordering for Cartesian process grids.
//!
//! Given a process grid, the stencil each process communicates over and the
//! number of processes per compute node, the mappers in [`mappers`] compute a
//! new grid position for every rank so that less communication crosses node
//! boundaries. [`evalcost`] scores a mapping and [`oracle`] solves tiny
//! instances exactly.

pub mod cli;
pub mod error;
pub mod evalcost;
pub mod grid;
pub mod mappers;
pub mod oracle;
pub mod stencil;

pub use error::{Error, Result};
pub use evalcost::{evaluate, reduction, CostReport, Reduction};
pub use grid::{dims_create, prime_factors, Grid};
pub use mappers::{Aggregate, Algorithm, NodeConfig, RankMapping};
pub use stencil::{Builtin, Stencil};
