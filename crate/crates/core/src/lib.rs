//! Computational toolkit for spread-out lattice trees and lattice animals.
//!
//! The crate is organised by subsystem:
//!
//! * [`kernel`]: the uniform spread-out step distribution `D` and its Fourier side.
//! * [`fields`]: real-valued fields on centred boxes of `Z^d` and on discrete tori,
//!   with `Z^d` and torus convolutions.
//! * [`greens`]: random-walk two-point functions, masses and the
//!   nearest-neighbour decomposition of the spread-out walk.
//! * [`enumerate`]: exact enumeration of lattice trees and animals and the
//!   generating-function observables built from the counts.
//! * [`torus`]: torus polymers, the lift to `Z^d`, and exact checks of the
//!   torus/`Z^d` comparison inequalities.
//! * [`diagrams`]: bubble, triangle and square diagram functionals.
//! * [`profile`]: the finite-size-scaling profile integral and window exponents.

// Tabulated quadrature and Gamma constants keep their published digits, and
// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod diagrams;
pub mod enumerate;
mod error;
mod fft;
pub mod fields;
pub mod greens;
pub mod kernel;
pub mod profile;
pub mod quadrature;
pub mod rational;
pub mod series;
mod search;
pub mod torus;

pub use error::{Error, Result};
pub use kernel::StepKernel;
