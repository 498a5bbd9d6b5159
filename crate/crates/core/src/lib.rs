//! Smooth max-divergences, the hypothesis-testing divergence and numerical
//! checks of the one-shot relations that connect them.
//!
//! All logarithms are base 2.

pub mod divergences;
pub mod error;
pub mod io;
pub mod matcore;
pub mod sdpsolve;
pub mod smoothing;
pub mod verify;

pub use error::{Error, Result};
