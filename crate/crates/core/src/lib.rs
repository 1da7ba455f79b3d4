//! Equilibrium dynamics of a broker call money market.
//!
//! A stock index follows geometric Brownian motion, a representative
//! continuous-time Kelly gambler borrows from a pool of call money that is
//! supplied inelastically and reinvests all interest, and the margin rate
//! clears the market at every instant. This crate holds the pure parts:
//!
//! * [`params`] and [`model`]: closed-form pricing, policy and growth formulas.
//! * [`rng`] and [`path`]: seeded, replayable sample-path generation.
//! * [`stats`] and [`ensemble`]: streaming cross-path moments with a
//!   deterministic merge order.
//! * [`analysis`]: theoretical bounds, realized-growth diagnostics, kernel
//!   density estimation and the theorem report suite.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod ensemble;
pub mod error;
mod math;
pub mod model;
pub mod params;
pub mod path;
pub mod rng;
pub mod stats;

pub use crate::{
    analysis::{
        doob_majorant, epanechnikov_kde, realized_growth, relative_growth_factor,
        relative_std_bounds, theorem_suite, DensityEstimate, RealizedGrowth, SuiteOptions,
        TheoremReport,
    },
    ensemble::{run_ensemble, run_hit_tally, EnsembleSpec},
    error::ModelError,
    params::{derive_params, Domain, ModelParams},
    path::{
        pathwise_envelope_margin, simulate_path, step, MarketState, Path, RecordPoint,
        ShockCoupling, SimConfig,
    },
    rng::RngStream,
    stats::{EnsembleStats, HitTally, Moments, Observable},
};
