//! Core of a termination prover for probabilistic term rewrite systems.
//!
//! Everything here is pure and exact: probabilities, interpretation
//! coefficients and margins are arbitrary-precision rationals. The crate is
//! `no_std` and only needs an allocator; process handling, file formats and
//! the command line live in the companion `ptrs` crate.
#![no_std]

extern crate alloc;

pub mod constraint;
pub mod families;
pub mod form;
pub mod interp;
pub mod multidist;
pub mod rewriting;
pub mod simulate;
pub mod term;

pub use interp::{check_certificate, Certificate, Interpretation};
pub use multidist::{FiniteDistribution, MultiDistribution, Rational};
pub use rewriting::{Pars, ProbRule, Ptrs, Strategy};
pub use term::{Position, Signature, Substitution, Term};
