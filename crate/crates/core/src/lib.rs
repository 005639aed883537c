//! Joint radio-access-technology (RAT) selection and transceiver design for
//! over-the-air aggregation of MapReduce intermediate values in a cell served
//! by one 5G gNB and several WiFi access points.
//!
//! The crate is organised bottom-up:
//!
//! - [`params`] and [`scenario`]: system knobs, topology, channels, coverage
//!   (type-I / type-II devices, D2D relaying) and synthetic IVAs.
//! - [`metrics`]: effective vectors, MSE, cost, delay, transmit power and the
//!   weighted objective.
//! - [`receiver`]: closed-form LMMSE receive aggregation vectors.
//! - [`optimizer`]: the dual-decomposition solver (transmit stationarity,
//!   relaxed RAT selection, rounding, dual updates).
//! - [`baselines`]: only-5G, only-WiFi, digital 16-QAM and exhaustive search.
//! - [`experiments`]: config parsing, Monte-Carlo trials, sweeps and CSV.

pub mod baselines;
pub mod cvec;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod optimizer;
pub mod params;
pub mod receiver;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use num_complex::Complex64;
