//! Ground-truth generation for low-speed manoeuvres.
//!
//! The kinematic model places the zero-side-slip point at a configurable
//! offset from the rear axle, which is exactly the behaviour the ω-v model
//! describes. The two-track model produces that behaviour from first
//! principles: linear tyres with a turn-slip shift and a steering linkage with
//! an Ackermann deviation.

mod kinematic;
mod scenario;
mod sensors;
mod steering;
mod tire;
mod two_track;

pub use kinematic::{kinematic_bicycle_step, kinematic_step_with_offset};
pub use scenario::{Scenario, ScenarioModel, ScenarioRun, Segment};
pub use sensors::{synthesize_sensors, SensorNoise};
pub use steering::ackermann_angles;
pub use tire::{turn_slip, turn_slip_shift};
pub use two_track::{steady_state_beta_r, two_track_step, TwoTrack};

use serde::{Deserialize, Serialize};

use crate::types::{wrap_angle, GroundTruthSample};

/// Planar state of the rear-axle centre.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
}

impl SimState {
    pub fn at_rest() -> Self {
        Self::default()
    }

    pub fn to_truth(&self, t: f64) -> GroundTruthSample {
        GroundTruthSample {
            t,
            x: self.x,
            y: self.y,
            yaw: self.yaw,
            vx: self.vx,
            vy: self.vy,
            yaw_rate: self.yaw_rate,
        }
    }

    pub(crate) fn with_wrapped_yaw(mut self) -> Self {
        self.yaw = wrap_angle(self.yaw);
        self
    }
}

/// Commanded longitudinal speed and mean front steering angle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimInputs {
    pub vx: f64,
    pub steering: f64,
}

/// One classic fourth-order Runge-Kutta step.
pub(crate) fn rk4<const N: usize>(
    y: &[f64; N],
    dt: f64,
    mut f: impl FnMut(&[f64; N]) -> [f64; N],
) -> [f64; N] {
    let shifted = |base: &[f64; N], k: &[f64; N], h: f64| {
        let mut out = *base;
        for (o, k) in out.iter_mut().zip(k) {
            *o += h * k;
        }
        out
    };
    let k1 = f(y);
    let k2 = f(&shifted(y, &k1, 0.5 * dt));
    let k3 = f(&shifted(y, &k2, 0.5 * dt));
    let k4 = f(&shifted(y, &k3, dt));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Planar pose kinematics for body velocities given at the tracked point.
pub(crate) fn pose_rates(yaw: f64, vx: f64, vy: f64, yaw_rate: f64) -> [f64; 3] {
    let (s, c) = yaw.sin_cos();
    [vx * c - vy * s, vx * s + vy * c, yaw_rate]
}
