//! Desk-scale laboratory for certified lower bounds on measurement-induced
//! entanglement (MIE) in shallow two-dimensional circuits.
//!
//! The pipeline runs from lattices and their duals ([`lattice`]), through
//! self-avoiding-walk partition functions ([`saw`]) and the closed-form
//! inequality chain ([`bounds`]), to the simulators that check every link of
//! that chain numerically: dense state vectors ([`statevec`]), replica
//! Ising enumeration ([`quasientropy`]), stabilizer tableaux ([`stabilizer`])
//! and boundary-MPS contraction ([`bmps`]). [`cli`] wires them into
//! reproducible experiments.
//!
//! All entropies are natural-log (nats) unless a field name says otherwise.

pub mod bmps;
pub mod bounds;
pub mod cli;
pub mod lattice;
pub mod linalg;
pub mod quasientropy;
pub mod rng;
pub mod saw;
pub mod stabilizer;
pub mod statevec;

pub use num_complex::Complex64 as C64;
