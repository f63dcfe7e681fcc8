//! Workbench for multicast key dissemination over noiseless coded networks.
//!
//! The crate models network-coding instances with eavesdroppers, evaluates
//! network codes exactly, verifies key-dissemination / secure-multicast /
//! two-stage feasibility with integer arithmetic, runs the constructive
//! code rewrites (source pre-encoding, key-matrix column zeroing, the
//! secure-to-key instance reduction), and certifies fixed-blocklength rate
//! maxima on small instances by exhaustive search.

pub mod analysis;
pub mod code;
pub mod constructions;
pub mod error;
pub mod gf2;
pub mod io;
pub mod limits;
pub mod model;
pub mod rational;
pub mod search;
pub mod transforms;

pub use error::{Error, Result};
pub use limits::Limits;

/// Exact rational type used for capacities and rates throughout.
pub use num_rational::Rational64;
