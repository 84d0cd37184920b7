//! Trace-driven simulator of a heterogeneous SoC's shared last-level cache.
//!
//! Cores and a systolic-array accelerator share one LLC. Accelerator reuse is
//! learnt offline by clustering per-line reuse intervals and reuse counts
//! ([`lern`]), loaded at run time into a tagless predictor table
//! ([`predictors`]), and combined with an accelerator progress monitor to
//! decide which accelerator accesses bypass the LLC ([`policy`]).

pub mod error;
pub mod harness;
pub mod lern;
pub mod memsys;
pub mod policy;
pub mod predictors;
pub mod trace;

pub use error::{Error, Result};
