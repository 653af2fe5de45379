//! Scheduling and market-impact analysis for a single energy storage unit.
//!
//! The crate covers four jobs that share one dispatch model:
//!
//! * [`schedule`]: profit-maximal charge/discharge plans over a price
//!   horizon, either taking prices as given or accounting for the unit's own
//!   price impact, with closed-form two-interval policies and a general
//!   horizon solver that returns optimality certificates.
//! * [`bid`]: single-interval affine supply bids, market clearing against an
//!   aggregate rest-of-system curve, and the quantity gap between
//!   price-taking and price-making bids.
//! * [`sim`]: end-to-end scenario pipeline that derives price-sensitivity
//!   coefficients from a competitive price day, re-prices the market around
//!   the strategic unit, and reports profits for the strategic unit and a
//!   free-riding price taker.
//! * [`monitor`]: an ex-post audit of observed dispatch and prices that
//!   counts withheld intervals and checks price-decision consistency,
//!   flagging windows that cannot be certified as competitive behaviour.
//!
//! Everything is deterministic: identical inputs produce bit-identical
//! outputs. The crate is `no_std` + `alloc`; enable the `std` feature (on by
//! default) for `std::error::Error` impls.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod bid;
mod dense;
pub mod model;
pub mod monitor;
pub mod schedule;
pub mod sim;
pub mod solver;

pub use model::{
    classify_intervals, validate_profile, AlphaSeries, DispatchProfile, IntervalClass,
    KktCertificate, ModelError, PriceKind, PriceSeries, ProfileViolation, StorageSpec,
};
