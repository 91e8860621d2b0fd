//! Gabor frames on a periodic grid, Fourier integral operators with tame
//! phases, and their approximation by sums of shifted, warped Gabor
//! multipliers.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod dft;
pub mod diagnostics;
pub mod dilation;
pub mod error;
pub mod fio;
pub mod frame;
pub mod grid;
pub mod lattice;
pub mod multiplier;
pub mod phase;
pub mod signal;
pub mod tf;
pub mod weight;
pub mod window;

pub use canonical::CanonicalMap;
pub use error::{Error, Result};
pub use fio::{FioOperator, GaborMatrix, SymbolTable};
pub use frame::{FrameBounds, GaborFrameSpec};
pub use grid::{bracket, Grid, PhasePoint};
pub use lattice::Lattice;
pub use multiplier::{GaborMultiplier, MultiplierSymbolTable};
pub use phase::{BuiltinPhase, TamePhase};
pub use signal::Signal;
pub use weight::Weight;
