//! Genetic-algorithm autotuner for compiler flag selection.
//!
//! A flag catalog maps binary genomes to compiler argument lists, a
//! measurement harness turns an argument list into a wall-clock fitness,
//! and the engine in [`ga`] searches the genome space. [`meta`] tunes the
//! engine's own parameters and [`importance`] ranks individual flags by
//! their one-hot speedup contribution.

pub mod error;
pub mod flagspace;
pub mod ga;
pub mod harness;
pub mod importance;
pub mod meta;
pub mod report;

pub use error::{Error, Result};
pub use flagspace::{FlagCatalog, FlagSpec, Genome, OptLevel};
