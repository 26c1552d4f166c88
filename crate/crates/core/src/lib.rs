//! Three-valued CSL model checking for Markov population models.
//!
//! A Markov population model (MPM) is an infinite-state continuous-time
//! Markov chain over population vectors in ℕ^d whose transitions are given by
//! polynomial-rate transition classes. This crate decides CSL state formulae
//! on such chains by exploring a finite truncation of the state space,
//! labelling every state outside the explored window as unknown, and
//! computing safe lower and upper probability bounds. Steady-state operators
//! are handled with a Lyapunov drift certificate that yields a finite window
//! carrying all but ε of the stationary mass, together with Courtois–Semal
//! state-wise bounds on that window.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and reporting live in the companion `mpmc` crate.
//!
//! Pipeline:
//!
//! 1. [`mpm::ModelSpec`] describes the model; [`csl::parse_formula`] reads a
//!    property.
//! 2. [`explore::truncate_for`] builds a [`trunc::Truncation`] sufficient for
//!    the formula, obtaining a [`steady::LyapunovCertificate`] for every
//!    steady-state sub-formula.
//! 3. [`checker::Checker`] evaluates the formula bottom-up over the
//!    truncation and reports a [`ternary::Ternary`] verdict with a
//!    [`checker::ProbInterval`].

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod checker;
pub mod csl;
pub mod explore;
pub mod mpm;
pub mod poly;
pub mod sparse;
pub mod steady;
pub mod ternary;
pub mod transient;
pub mod trunc;

mod error;
mod lexer;

pub use error::Error;
pub use ternary::Ternary;

pub type Result<T, E = Error> = core::result::Result<T, E>;
