//! Underwater acoustic localization of a submerged beacon from surface anchors.
//!
//! The pipeline: a layered [`environment::WaterColumn`] gives per-layer sound
//! speed and absorption; [`propagation`] traces direct rays and synthesizes
//! pings; [`multilateration`] recovers the beacon position with a genetic
//! algorithm; [`fusion`] smooths fixes with pressure depth in a Kalman
//! filter; [`harness`] drives scenario files end to end.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod environment;
pub mod fusion;
pub mod geodesy;
pub mod harness;
pub mod multilateration;
pub mod propagation;
