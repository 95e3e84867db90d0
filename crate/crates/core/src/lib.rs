//! Whole-body Cartesian impedance control for quadrupedal manipulators.
//!
//! The crate bundles everything needed to reproduce the closed-loop
//! experiments: floating-base dynamics ([`dynamics`]), the double-mass
//! spring-damper reference ([`template`]), a dense QP solver ([`qp`]), the
//! controller itself ([`wbc`]), a penalty-contact plant ([`sim`]), the trot
//! scheduler ([`gait`]) and the scenario runner ([`experiment`]).

// Validation negates comparisons on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod template;
pub mod qp;
pub mod gait;
pub mod wbc;
pub mod sim;
pub mod experiment;
