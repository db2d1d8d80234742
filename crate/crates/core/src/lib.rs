//! Simulation engine for photon-mediated remote entanglement between spins.
//!
//! The crate is layered: [`tensor`] holds named-mode density matrices,
//! [`channels`] the physical building blocks as quantum channels, [`cavity`]
//! the cavity-QED derivations feeding channel parameters, [`protocols`] the
//! composed entanglement protocols and [`sweep`] grid execution.

pub mod cavity;
pub mod channels;
pub mod error;
pub mod linear_optics;
pub mod ops;
pub mod protocols;
pub mod sweep;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{
    apply, bell_fidelity, partial_trace, success_probability, tensor_product, BellFidelities,
    BellState, ModeKind, ModeLabel, NamedObject, NamedOperator, NamedState, Tolerances,
};
