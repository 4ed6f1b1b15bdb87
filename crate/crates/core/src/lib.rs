//! Grid-based solver for constrained POMDPs.
//!
//! The pipeline: build a belief [`grid`], compute grid transition tensors and
//! value tables ([`dynamics`]), solve an occupancy-measure LP or MIP
//! ([`itlp`]), then evaluate the policy by simulation ([`simulator`]) or
//! bracket the unconstrained value ([`bounds`]).

pub mod dynamics;
pub mod grid;
pub mod interpolation;
pub mod model;
pub mod parser;
pub mod problems;
pub mod itlp;
pub mod bounds;
pub mod simulator;
pub mod cli;
