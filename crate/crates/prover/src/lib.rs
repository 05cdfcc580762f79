//! File formats, solver driver, prover pipeline and command line on top of
//! `ptrs-core`.

pub mod cert;
pub mod cli;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod smt;
pub mod solver;
pub mod wst;
