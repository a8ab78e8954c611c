//! Low-speed lateral-velocity modelling and dead reckoning for parking.
//!
//! The crate bundles everything needed to study the rear-axle side-slip that
//! shows up in parking manoeuvres:
//!
//! - [`types`]: vehicle/tyre parameters, sensor and ground-truth records and
//!   planar rigid-body helpers shared by every other module.
//! - [`lateral`]: the zero-slip, δ-β and ω-v lateral velocity models and the
//!   `k_rho <-> x_rho` parameter algebra.
//! - [`sim`]: kinematic and two-track simulators with turn slip and Ackermann
//!   deviation, plus sensor synthesis and scenario playback.
//! - [`ekf`]: strapdown mechanization with an extended Kalman filter fed by
//!   wheel-speed and lateral-model pseudo-measurements.
//! - [`calibration`]: per-direction regression of the model parameter.
//! - [`disturbance`]: closed-form position error under a parameter error.
//! - [`evaluation`] and [`report`]: trajectory errors, percentile summaries and
//!   comparison reports.
//! - [`config`] and [`io`]: run configuration and the CSV file formats.
//!
//! Conventions: body frame x forward, y left, z up; yaw counter-clockwise
//! positive; all quantities SI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod disturbance;
pub mod ekf;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod lateral;
pub mod report;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
pub use lateral::{LateralModelKind, LateralModelParams};
pub use types::{
    driving_direction_sign, transfer_planar_velocity, AckermannDeviationMap, Direction, Gear,
    GroundTruthSample, LogMetadata, ManeuverLog, SensorSample, TireParams, VehicleParams,
};
