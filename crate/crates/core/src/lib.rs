//! Secret-key rate analysis for measurement-device-independent QKD.
//!
//! The crate covers both families of relay-based protocols:
//!
//! * [`dv`]: polarisation-encoded qubits with weak coherent pulses,
//!   threshold detectors and infinite decoy states, plus the intensity
//!   optimisation on top of it.
//! * [`cv`]: Gaussian-modulated coherent states with a CV Bell detection
//!   at the relay, attacked by the most general two-mode Gaussian
//!   environment in normal form.
//!
//! [`gaussian`] holds the covariance-matrix machinery the CV rate is built
//! from, [`mc`] is a Monte Carlo model of the DV relay that is used as an
//! independent check of the analytic DV formulas, and [`sweep`] /
//! [`output`] turn all of it into distance sweeps and data files.

// Negated float comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cv;
pub mod dv;
pub mod error;
pub mod gaussian;
pub mod mc;
pub mod output;
pub mod presets;
pub mod rng;
pub mod simplex;
pub mod sweep;

pub use error::{Error, Result};
