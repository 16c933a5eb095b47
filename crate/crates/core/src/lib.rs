//! Waiting-time analytics for renewal-driven rate series.
//!
//! A published rate that only moves when the market leaves a band of
//! half-width ε around the last published value updates at renewal times.
//! A customer who looks at the rate at a random moment waits `s = τ - t` for
//! the next update, where `τ` is the current duration and `t` the offset of
//! the observation within it. This crate computes the law of `s` and its
//! moments analytically, checks them against seeded Monte Carlo draws, fits
//! Weibull laws to observed durations, and turns raw ticks into durations.
//!
//! Modules:
//! - [`special`]: gamma functions and adaptive quadrature.
//! - [`distributions`]: duration and observation laws, selectable by name.
//! - [`analytics`]: Ω(s), moments, δₙ and the inspection paradox.
//! - [`simulate`]: sampling schemes and Kolmogorov-Smirnov distance.
//! - [`ratefilter`]: tick ingestion and the first-exit filter.
//! - [`fit`]: Weibull maximum likelihood and sample-moment estimates.
//! - [`cli`]: the `renewal` command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cli;
pub mod distributions;
pub mod error;
pub mod fit;
pub mod ratefilter;
pub mod simulate;
pub mod special;

pub use error::{Error, IngestErrorKind, Result};
