//! Location-data requirements for indoor localization functions.
//!
//! A localization function decides whether an entity is inside an Interest
//! Space. Given the geometry (Interest Space, Motion Space, Safety Margin)
//! and the entity's dynamics, this crate derives the per-axis accuracy,
//! update-rate and latency requirements a localization system must meet,
//! checks candidate systems against them, and validates the guarantee with a
//! Monte-Carlo simulation of the presence detector.
//!
//! Units are SI throughout: meters, radians, seconds, hertz.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod fixtures;
pub mod normal;
pub mod report;
pub mod requirements;
pub mod simulate;
pub mod spatial;
pub mod uncertainty;

/// Slack below zero that is still treated as zero in feasibility decisions,
/// absorbing floating-point rounding in sums such as `0.25 + 0.5 * 0.1`.
pub const NUMERIC_TOLERANCE: f64 = 1e-12;
