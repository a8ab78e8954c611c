//! Full-state strapdown EKF with velocity pseudo-measurements.
//!
//! The state `[v, q, p]` lives at the IMU. Each sensor sample first drives a
//! prediction over the interval that ends at it and then three scalar
//! velocity updates: `v_x` from the rear encoders, `v_y` from the configured
//! lateral model and `v_z = 0`. Position and heading are unobservable, so
//! their drift is unbounded by design.

mod nav;

pub use nav::{
    gravity, mechanize, state_derivative, state_jacobian, NavState, StateMatrix, StateVector,
    STATE_DIM,
};

use nalgebra::{Matrix3, SMatrix, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lateral::LateralModelKind;
use crate::types::{interpolate_truth, transfer_planar_velocity, ManeuverLog, SensorSample};

/// Noise, initial uncertainty and gating settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterTuning {
    /// Accelerometer white-noise density [m/s²/√Hz].
    pub accel_noise_density: f64,
    /// Gyro white-noise density [rad/s/√Hz].
    pub gyro_noise_density: f64,
    pub sigma_vx: f64,
    pub sigma_vy: f64,
    pub sigma_vz: f64,
    pub initial_sigma_velocity: f64,
    pub initial_sigma_attitude: f64,
    pub initial_sigma_position: f64,
    /// χ² threshold (1 dof) above which an innovation is rejected.
    pub gate_chi2: f64,
}

impl Default for FilterTuning {
    fn default() -> Self {
        Self {
            accel_noise_density: 0.05,
            gyro_noise_density: 0.005,
            sigma_vx: 0.03,
            sigma_vy: 0.02,
            sigma_vz: 0.1,
            initial_sigma_velocity: 0.1,
            initial_sigma_attitude: 0.01,
            initial_sigma_position: 0.01,
            gate_chi2: 6.635,
        }
    }
}

impl FilterTuning {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("filter.sigma_vx", self.sigma_vx),
            ("filter.sigma_vy", self.sigma_vy),
            ("filter.sigma_vz", self.sigma_vz),
            ("filter.initial_sigma_velocity", self.initial_sigma_velocity),
            ("filter.initial_sigma_attitude", self.initial_sigma_attitude),
            ("filter.initial_sigma_position", self.initial_sigma_position),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [
            ("filter.accel_noise_density", self.accel_noise_density),
            ("filter.gyro_noise_density", self.gyro_noise_density),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.gate_chi2 > 0.0) {
            return Err(Error::param("filter.gate_chi2", format!("must be > 0, got {}", self.gate_chi2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub tuning: FilterTuning,
    pub lateral_model: LateralModelKind,
    /// Rear axle to IMU `(l_x, l_y)` [m].
    pub imu_lever: (f64, f64),
}

impl FilterConfig {
    pub fn new(lateral_model: LateralModelKind, imu_lever: (f64, f64)) -> Self {
        Self {
            tuning: FilterTuning::default(),
            lateral_model,
            imu_lever,
        }
    }
}

/// Velocity pseudo-measurement channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Vx,
    Vy,
    Vz,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Vx => "vx",
            Channel::Vy => "vy",
            Channel::Vz => "vz",
        }
    }

    fn index(self) -> usize {
        match self {
            Channel::Vx => 0,
            Channel::Vy => 1,
            Channel::Vz => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnovationRecord {
    pub t: f64,
    pub channel: Channel,
    pub measurement: f64,
    pub innovation: f64,
    /// Innovation variance `H P Hᵀ + R`.
    pub variance: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterRecord {
    pub t: f64,
    pub state: NavState,
    /// Yaw rate used for the interval ending here [rad/s].
    pub yaw_rate: f64,
    pub covariance_diagonal: [f64; STATE_DIM],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub records: Vec<FilterRecord>,
    pub innovations: Vec<InnovationRecord>,
    pub imu_lever: (f64, f64),
}

/// Estimated rear-axle pose and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RearAxleEstimate {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub vx: f64,
    pub vy: f64,
}

impl FilterOutput {
    /// Filter track moved from the IMU back to the rear-axle centre.
    pub fn rear_axle_track(&self) -> Vec<RearAxleEstimate> {
        let (lx, ly) = self.imu_lever;
        let lever = Vector3::new(lx, ly, 0.0);
        self.records
            .iter()
            .map(|r| {
                let p = r.state.p - r.state.q.transform_vector(&lever);
                let (vx, vy) = transfer_planar_velocity((r.state.v.x, r.state.v.y), r.yaw_rate, (-lx, -ly));
                RearAxleEstimate {
                    t: r.t,
                    x: p.x,
                    y: p.y,
                    yaw: r.state.yaw(),
                    vx,
                    vy,
                }
            })
            .collect()
    }
}

/// Velocity pseudo-measurements at the IMU for one sample. Neutral gear
/// yields only the `v_z` channel.
pub fn velocity_measurements(sample: &SensorSample, config: &FilterConfig) -> Result<Vec<(Channel, f64)>> {
    let direction = sample.gear.direction();
    let mut out = Vec::with_capacity(3);
    if direction.is_moving() {
        let w = sample.yaw_rate();
        let vx = sample.rear_axle_speed();
        let vy = config
            .lateral_model
            .rear_lateral_velocity(direction, w, vx, sample.steering.tan())?;
        let (vx_imu, vy_imu) = transfer_planar_velocity((vx, vy), w, config.imu_lever);
        out.push((Channel::Vx, vx_imu));
        out.push((Channel::Vy, vy_imu));
    }
    out.push((Channel::Vz, 0.0));
    Ok(out)
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Floor added to every diagonal of the process noise per second.
const PROCESS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Filter {
    config: FilterConfig,
    state: NavState,
    covariance: StateMatrix,
}

impl Filter {
    pub fn new(config: FilterConfig, initial: NavState) -> Result<Self> {
        config.tuning.validate()?;
        let t = &config.tuning;
        let mut diag = [0.0; STATE_DIM];
        diag[..3].fill(t.initial_sigma_velocity.powi(2));
        diag[3..7].fill(t.initial_sigma_attitude.powi(2));
        diag[7..].fill(t.initial_sigma_position.powi(2));
        Ok(Self {
            config,
            state: initial,
            covariance: StateMatrix::from_diagonal(&diag.into()),
        })
    }

    pub fn state(&self) -> &NavState {
        &self.state
    }

    pub fn covariance(&self) -> &StateMatrix {
        &self.covariance
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    fn process_noise(&self, dt: f64) -> StateMatrix {
        let t = &self.config.tuning;
        let x = self.state.to_vector();
        let q = Vector4::new(x[3], x[4], x[5], x[6]);
        let mut g_w = SMatrix::<f64, STATE_DIM, 3>::zeros();
        g_w.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&self.state.v));
        g_w.fixed_view_mut::<4, 3>(3, 0).copy_from(&(0.5 * nav::xi_matrix(&q)));
        let mut qd = g_w * g_w.transpose() * t.gyro_noise_density.powi(2);
        for i in 0..3 {
            qd[(i, i)] += t.accel_noise_density.powi(2);
        }
        for i in 0..STATE_DIM {
            qd[(i, i)] += PROCESS_FLOOR;
        }
        qd * dt
    }

    fn check_covariance(&mut self) -> Result<()> {
        self.covariance = 0.5 * (self.covariance + self.covariance.transpose());
        if self.covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::Covariance("non-finite entries".into()));
        }
        if self.covariance.cholesky().is_none() {
            return Err(Error::Covariance("Cholesky factorization failed".into()));
        }
        Ok(())
    }

    /// Mechanize over `dt` with the sample's IMU readings and propagate the
    /// covariance with the second-order transition `I + F·dt + ½(F·dt)²`.
    pub fn predict(&mut self, imu: &SensorSample, dt: f64) -> Result<()> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be finite and >= 0, got {dt}")));
        }
        if dt == 0.0 {
            return Ok(());
        }
        let accel = Vector3::from(imu.accel);
        let gyro = Vector3::from(imu.gyro);
        let fdt = state_jacobian(&self.state.to_vector(), &gyro) * dt;
        let phi = StateMatrix::identity() + fdt + 0.5 * fdt * fdt;
        let noise = self.process_noise(dt);
        self.state = mechanize(&self.state, &accel, &gyro, dt);
        self.covariance = phi * self.covariance * phi.transpose() + noise;
        self.check_covariance()
    }

    /// One scalar update of a velocity component with Joseph-form covariance.
    pub fn update_channel(&mut self, t: f64, channel: Channel, measurement: f64) -> Result<InnovationRecord> {
        let tune = &self.config.tuning;
        let r = match channel {
            Channel::Vx => tune.sigma_vx,
            Channel::Vy => tune.sigma_vy,
            Channel::Vz => tune.sigma_vz,
        }
        .powi(2);
        let i = channel.index();
        let x = self.state.to_vector();
        let innovation = measurement - x[i];
        let variance = self.covariance[(i, i)] + r;
        let accepted = innovation * innovation / variance <= tune.gate_chi2;
        if accepted {
            let gain = self.covariance.column(i) / variance;
            let mut ikh = StateMatrix::identity();
            for row in 0..STATE_DIM {
                ikh[(row, i)] -= gain[row];
            }
            self.state = NavState::from_vector(&(x + gain * innovation));
            self.covariance = ikh * self.covariance * ikh.transpose() + gain * gain.transpose() * r;
            self.check_covariance()?;
        }
        Ok(InnovationRecord {
            t,
            channel,
            measurement,
            innovation,
            variance,
            accepted,
        })
    }

    /// The velocity updates for one sample.
    pub fn measure_velocity(&mut self, sample: &SensorSample) -> Result<Vec<InnovationRecord>> {
        velocity_measurements(sample, &self.config)?
            .into_iter()
            .map(|(channel, z)| self.update_channel(sample.t, channel, z))
            .collect()
    }

    fn record(&self, t: f64, yaw_rate: f64) -> FilterRecord {
        let mut diag = [0.0; STATE_DIM];
        for (i, d) in diag.iter_mut().enumerate() {
            *d = self.covariance[(i, i)];
        }
        FilterRecord {
            t,
            state: self.state,
            yaw_rate,
            covariance_diagonal: diag,
        }
    }
}

/// Run the filter over a log, starting at the first truth pose (or the
/// origin when the log has no truth).
pub fn run_filter(log: &ManeuverLog, config: &FilterConfig) -> Result<FilterOutput> {
    let first = log.sensors.first().ok_or(Error::Empty("sensor samples"))?;
    let (x, y, yaw) = match &log.truth {
        Some(truth) if !truth.is_empty() => {
            let s = interpolate_truth(truth, first.t);
            (s.x, s.y, s.yaw)
        }
        _ => (0.0, 0.0, 0.0),
    };
    run_filter_from(log, config, (x, y, yaw))
}

/// Run the filter from a rear-axle pose `(x, y, yaw)`. The initial velocity
/// comes from the first sample's pseudo-measurements.
pub fn run_filter_from(log: &ManeuverLog, config: &FilterConfig, rear_pose: (f64, f64, f64)) -> Result<FilterOutput> {
    log.validate()?;
    let first = log.sensors.first().ok_or(Error::Empty("sensor samples"))?;
    let mut v0 = Vector3::zeros();
    for (channel, z) in velocity_measurements(first, config)? {
        v0[channel.index()] = z;
    }
    let (x, y, yaw) = rear_pose;
    let mut initial = NavState::planar(x, y, yaw, v0);
    let (lx, ly) = config.imu_lever;
    initial.p += initial.q.transform_vector(&Vector3::new(lx, ly, 0.0));

    let mut filter = Filter::new(*config, initial)?;
    let mut innovations = Vec::with_capacity(3 * log.sensors.len());
    let mut records = Vec::with_capacity(log.sensors.len());
    innovations.extend(filter.measure_velocity(first)?);
    records.push(filter.record(first.t, first.yaw_rate()));
    for pair in log.sensors.windows(2) {
        let sample = &pair[1];
        filter.predict(sample, sample.t - pair[0].t)?;
        innovations.extend(filter.measure_velocity(sample)?);
        records.push(filter.record(sample.t, sample.yaw_rate()));
    }
    Ok(FilterOutput {
        records,
        innovations,
        imu_lever: config.imu_lever,
    })
}
