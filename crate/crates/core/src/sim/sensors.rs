use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ackermann_angles, SimInputs};
use crate::error::{Error, Result};
use crate::types::{
    transfer_planar_velocity, AckermannDeviationMap, GroundTruthSample, LogMetadata,
    ManeuverLog, SensorSample, VehicleParams, GRAVITY,
};

/// Sensor error model. All defaults are zero, i.e. perfect sensors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorNoise {
    /// Constant yaw-rate bias [rad/s].
    pub gyro_bias: f64,
    /// White noise on every gyro axis [rad/s].
    pub gyro_sigma: f64,
    /// Constant bias on the horizontal accelerometer axes [m/s²].
    pub accel_bias: f64,
    /// White noise on every accelerometer axis [m/s²].
    pub accel_sigma: f64,
    /// Encoder speed resolution [m/s]; 0 disables quantization.
    pub encoder_quantization: f64,
    /// Constant offset of the steering-angle sensor [rad].
    pub steering_offset: f64,
    pub seed: u64,
}

impl SensorNoise {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise.gyro_sigma", self.gyro_sigma),
            ("noise.accel_sigma", self.accel_sigma),
            ("noise.encoder_quantization", self.encoder_quantization),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("noise.gyro_bias", self.gyro_bias),
            ("noise.accel_bias", self.accel_bias),
            ("noise.steering_offset", self.steering_offset),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Derivative of a uniformly sampled series by central differences,
/// one-sided at the ends.
fn derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (values[1] - values[0]) / dt
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / dt
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * dt)
            }
        })
        .collect()
}

/// Synthesize IMU, wheel-speed and steering signals along a truth track.
///
/// `commands[k]` is the speed/steering command in force at `truth[k]`; it
/// supplies the gear and the true steering angle. Accelerations are the
/// specific force at the IMU (kinematic acceleration minus gravity, so a level
/// vehicle at rest reads `a_z = -g`); their time derivatives come from central
/// differences of the truth series. Wheel speeds are the unsigned
/// longitudinal contact-patch speeds, front wheels projected on ideal
/// Ackermann angles.
pub fn synthesize_sensors(
    truth: &[GroundTruthSample],
    commands: &[SimInputs],
    params: &VehicleParams,
    noise: &SensorNoise,
) -> Result<ManeuverLog> {
    if truth.is_empty() {
        return Err(Error::Empty("truth"));
    }
    if commands.len() != truth.len() {
        return Err(Error::InvalidLog(format!(
            "{} commands for {} truth samples",
            commands.len(),
            truth.len()
        )));
    }
    noise.validate()?;
    let dt = if truth.len() > 1 {
        (truth[truth.len() - 1].t - truth[0].t) / (truth.len() - 1) as f64
    } else {
        0.01
    };
    let times: Vec<f64> = truth.iter().map(|s| s.t).collect();
    for pair in times.windows(2) {
        let step = pair[1] - pair[0];
        if !(step > 0.0) || (step - dt).abs() > ManeuverLog::MAX_JITTER * dt {
            return Err(Error::InvalidLog(format!(
                "truth is not uniformly sampled near t={}",
                pair[0]
            )));
        }
    }

    let vx_dot = derivative(&truth.iter().map(|s| s.vx).collect::<Vec<_>>(), dt);
    let vy_dot = derivative(&truth.iter().map(|s| s.vy).collect::<Vec<_>>(), dt);
    let yaw_accel = derivative(&truth.iter().map(|s| s.yaw_rate).collect::<Vec<_>>(), dt);

    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let gyro_noise = Normal::new(0.0, noise.gyro_sigma).map_err(|e| Error::param("noise.gyro_sigma", e.to_string()))?;
    let accel_noise = Normal::new(0.0, noise.accel_sigma).map_err(|e| Error::param("noise.accel_sigma", e.to_string()))?;

    let (lx, ly) = params.imu_lever();
    let wheelbase = params.wheelbase();
    let half_track = 0.5 * params.track_front;
    let quantize = |v: f64| {
        if noise.encoder_quantization > 0.0 {
            (v / noise.encoder_quantization).round() * noise.encoder_quantization
        } else {
            v
        }
    };

    let mut sensors = Vec::with_capacity(truth.len());
    for (k, (s, cmd)) in truth.iter().zip(commands).enumerate() {
        let w = s.yaw_rate;
        let (vix, viy) = transfer_planar_velocity((s.vx, s.vy), w, (lx, ly));
        let dvix = vx_dot[k] - yaw_accel[k] * ly;
        let dviy = vy_dot[k] + yaw_accel[k] * lx;
        let accel = [
            dvix - w * viy + noise.accel_bias + accel_noise.sample(&mut rng),
            dviy + w * vix + noise.accel_bias + accel_noise.sample(&mut rng),
            -GRAVITY + accel_noise.sample(&mut rng),
        ];
        let gyro = [
            gyro_noise.sample(&mut rng),
            gyro_noise.sample(&mut rng),
            w + noise.gyro_bias + gyro_noise.sample(&mut rng),
        ];

        let (left, right) = ackermann_angles(cmd.steering, params, &AckermannDeviationMap::IDEAL);
        let front = |angle: f64, wy: f64| {
            let (cx, cy) = transfer_planar_velocity((s.vx, s.vy), w, (wheelbase, wy));
            (angle.cos() * cx + angle.sin() * cy).abs()
        };
        let rear = |wy: f64| transfer_planar_velocity((s.vx, s.vy), w, (0.0, wy)).0.abs();
        let wheel_speeds = [
            quantize(front(left, half_track)),
            quantize(front(right, -half_track)),
            quantize(rear(half_track)),
            quantize(rear(-half_track)),
        ];

        let gear = gear_for(cmd.vx);
        sensors.push(SensorSample {
            t: s.t,
            accel,
            gyro,
            wheel_speeds,
            steering: cmd.steering + noise.steering_offset,
            gear,
        });
    }

    let metadata = LogMetadata {
        maneuver_id: String::new(),
        description: String::new(),
        sample_rate: 1.0 / dt,
    };
    ManeuverLog::new(sensors, Some(truth.to_vec()), metadata)
}

/// Gear that matches a signed speed, neutral at exactly zero.
pub(crate) fn gear_for(vx: f64) -> crate::types::Gear {
    crate::types::driving_direction_sign(vx, 0.0).gear()
}
