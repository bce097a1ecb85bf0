//! Time-varying vector autoregression and market-efficiency measures.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It covers:
//!
//! - [`timeseries`]: monthly price/return panels and descriptive statistics
//! - [`unitroot`]: ADF-GLS with modified-BIC lag selection
//! - [`var`]: constant-coefficient VAR, Newey-West errors, Hansen's `L_c`
//! - [`tvvar`]: random-walk-coefficient VAR solved as one stacked least squares
//! - [`efficiency`]: joint and individual degrees of market efficiency
//! - [`irf`]: reduced-form impulse responses, static and time-varying
//! - [`bootstrap`]: efficient-market-null residual bootstrap bands
//! - [`synth`]: simulated panels with known coefficient paths

// `!(x > tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![no_std]

extern crate alloc;

pub mod bootstrap;
pub mod efficiency;
pub mod error;
pub mod irf;
mod linalg;
pub mod synth;
pub mod timeseries;
pub mod tvvar;
pub mod unitroot;
pub mod var;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use timeseries::{PricePanel, ReturnPanel, YearMonth};
