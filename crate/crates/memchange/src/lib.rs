// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detection of multiple changes in the long-memory parameter of a
//! univariate time series, by minimizing a penalized local Whittle
//! contrast over segmentations.
//!
//! The crate provides:
//! - simulation of piecewise long-range dependent linear processes
//!   ([`synthesis`]),
//! - segment periodograms at global Fourier frequencies via prefix sums
//!   ([`spectral`]),
//! - local Whittle estimation of the memory parameter on a segment
//!   ([`whittle`]),
//! - dynamic-programming segmentation with fixed-penalty, BIC and
//!   slope-heuristic selection of the number of changes ([`segment`]),
//! - a replicated Monte-Carlo harness producing RMSE and recognition
//!   tables ([`montecarlo`]).

#![forbid(unsafe_code)]

pub mod error;
pub mod montecarlo;
pub mod segment;
pub mod series_io;
pub mod spectral;
pub mod synthesis;
pub mod whittle;

pub use error::{McError, McResult};
