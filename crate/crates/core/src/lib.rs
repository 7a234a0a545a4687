//! Numerical toolkit for digital simulation of the quantum Rabi model through
//! phase-controlled Trotterization of Jaynes-Cummings interactions.
//!
//! All public frequencies are cyclic (MHz) and times are in μs; the 2π
//! conversion to angular units happens inside the Hamiltonian builders.
//!
//! The numerical core is generic over the real scalar type ([`Real`], `f32` or
//! `f64`); the aliases at the crate root fix it to `f64`.

pub mod chevron;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod hilbert;
pub mod linalg;
pub mod measure;
pub mod models;
pub mod predistort;
pub mod scalar;
pub mod tomo;
pub mod trotter;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

pub type Operator = hilbert::QuantumOperator<f64>;
pub type State = hilbert::QuantumState<f64>;
pub type Complex64 = Cx<f64>;
