//! Differentially private zeroth-order gradient descent with a hidden-state
//! Renyi accountant.
//!
//! The crate has three layers:
//!
//! * [`params`], [`rdp`] and [`concentration`] hold the scalar machinery;
//! * [`accountant`] turns a [`ProblemParams`] into `(epsilon, delta)` under the
//!   hidden-state analysis and the public-state baselines;
//! * [`zogd`] and [`verify`] simulate the algorithm and test, by Monte Carlo,
//!   the probabilistic facts the accountant relies on.
//!
//! [`cli`] wires everything to JSON configs and CSV/JSONL artifacts.

pub mod accountant;
pub mod cli;
pub mod concentration;
pub mod config;
pub mod error;
pub mod params;
mod quad;
pub mod rdp;
pub mod stats;
pub mod verify;
pub mod zogd;

pub use error::{Error, Result};
pub use params::{ConvexityClass, DerivedConstants, ProblemParams};
pub use rdp::{RdpCurve, RenyiOrder};
