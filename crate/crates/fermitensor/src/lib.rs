//! Finite-dimensional Z2-graded *-algebras, their Fermi tensor products, and
//! desk-scale analysis of symmetric states on finite tensor powers.
//!
//! The crate realizes graded algebras concretely as matrix subalgebras with
//! an implementing grading unitary, builds the twisted (Koszul-signed) tensor
//! product both by structure constants and by a Klein matrix model, and
//! provides states, GNS representations, the signed permutation action on
//! finite powers, clustering diagnostics, and the decomposition of symmetric
//! states into mixtures of even product states.
//!
//! Start with the runnable examples (`cargo run --example algebra_basics`)
//! or the `fermitensor` binary (`fermitensor verify all`).

pub mod linalg;
pub mod json;
pub mod graded;
pub mod state;
pub mod gns;
pub mod fermi;
pub mod power;
pub mod nnls;
pub mod analysis;
pub mod verify;
pub mod cli;

pub use fermi::{epsilon, FermiProduct};
pub use graded::{Element, Grade, GradedAlgebra};
pub use gns::{gns, gns_norm, GnsData};
pub use power::{ergodic_mean, FermiPower, Permutation, PowerElement, PowerState};
pub use state::{State, StateError};
