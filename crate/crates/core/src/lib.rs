//! Reactive synthesis for safety specifications given as AIGER circuits.
//!
//! The crate decides whether a controller exists that keeps the circuit's
//! single output low forever, whatever the uncontrollable inputs do, and
//! if so synthesises one as an AIGER circuit.

pub mod bdd;
pub mod aiger;
pub mod sim;
pub mod game;
pub mod extract;
pub mod learn;
pub mod verify;
pub mod bench;
pub mod pipeline;
