//! Compiler and discrete-event simulator for early fault-tolerant
//! neutral-atom architectures.

// Negated float comparisons are how validation rejects NaN alongside
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod circuit;
pub mod config;
pub mod error;
pub mod extractor;
pub mod factory;
pub mod hamiltonian;
pub mod hybrid;
pub mod layout;
pub mod pauli;
pub mod pipeline;
pub mod resources;
pub mod sim;
pub mod sweep;
pub mod synthesis;
pub mod trace;
pub mod transversal;

pub use error::{Error, Result};
