//! Persistence analytics for game-achievement telemetry.
//!
//! The crate turns per-game achievement unlock counts into persistence
//! measures (fraction of completists, completed fraction), fits log-normal
//! and competing families to per-game totals, fits fixed-intercept
//! exponential decays to the player fraction along achievements, aggregates
//! games into cohorts, and generates synthetic datasets with known ground
//! truth.
//!
//! The numerical modules are generic over [`Real`] (`f32` or `f64`); the
//! aliases below pin the common `f64` and `f32` instantiations.

// `!(x > 0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cohort;
pub mod decay;
pub mod distfit;
pub mod domain;
pub mod ingest;
pub mod report;
pub mod scalar;
mod special;
pub mod synth;

pub use scalar::Real;

pub use domain::{CompletistClass, GameRecord};

pub type GameMetrics64 = domain::GameMetrics<f64>;
pub type FractionSeries64 = domain::FractionSeries<f64>;
pub type LogNormalParams64 = distfit::LogNormalParams<f64>;
pub type DistFit64 = distfit::DistFit<f64>;
pub type Histogram64 = distfit::Histogram<f64>;
pub type DecayFit64 = decay::DecayFit<f64>;
pub type RankingEntry64 = decay::RankingEntry<f64>;
pub type CohortSummary64 = cohort::CohortSummary<f64>;
pub type GameProfile64 = cohort::GameProfile<f64>;

pub type GameMetrics32 = domain::GameMetrics<f32>;
pub type FractionSeries32 = domain::FractionSeries<f32>;
pub type LogNormalParams32 = distfit::LogNormalParams<f32>;
pub type DistFit32 = distfit::DistFit<f32>;
pub type Histogram32 = distfit::Histogram<f32>;
pub type DecayFit32 = decay::DecayFit<f32>;
pub type RankingEntry32 = decay::RankingEntry<f32>;
pub type CohortSummary32 = cohort::CohortSummary<f32>;
pub type GameProfile32 = cohort::GameProfile<f32>;
