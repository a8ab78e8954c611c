use super::{pose_rates, rk4, SimInputs, SimState};
use crate::error::{Error, Result};
use crate::types::{transfer_planar_velocity, AckermannDeviationMap, TireParams, VehicleParams};

use super::{ackermann_angles, turn_slip_shift};

/// Minimum |v_x| for the dynamic model [m/s].
pub const MIN_DYNAMIC_SPEED: f64 = 0.05;
/// Largest step accepted by [`two_track_step`] [s].
pub const MAX_DYNAMIC_STEP: f64 = 0.005;

/// Step used by [`steady_state_beta_r`] [s].
const SETTLE_STEP: f64 = 0.001;
/// Window over which the state must stay put to count as settled [s].
const SETTLE_WINDOW: f64 = 1.0;
const SETTLE_TOLERANCE: f64 = 1e-9;
const SETTLE_TIMEOUT: f64 = 60.0;

/// Nonlinear planar two-track model with linear tyres.
///
/// Longitudinal dynamics are not modelled: `v_x` at the rear axle follows the
/// command and the traction forces needed for that are assumed to act evenly
/// on the rear wheels. Each wheel carries half of its axle's cornering
/// stiffness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTrack {
    pub params: VehicleParams,
    pub tire: TireParams,
    pub deviation: AckermannDeviationMap,
}

impl TwoTrack {
    pub fn new(params: VehicleParams, tire: TireParams, deviation: AckermannDeviationMap) -> Self {
        Self {
            params,
            tire,
            deviation,
        }
    }

    /// Time derivative of `[v_y, ω_z]` at the rear axle.
    fn lateral_rates(&self, vx: f64, vy: f64, yaw_rate: f64, steering: f64) -> Result<[f64; 2]> {
        let p = &self.params;
        let wheelbase = p.wheelbase();
        let half_track = 0.5 * p.track_front;
        let (left, right) = ackermann_angles(steering, p, &self.deviation);
        // (x from rear axle, y, wheel angle, wheel stiffness)
        let wheels = [
            (wheelbase, half_track, left, 0.5 * p.stiffness_front),
            (wheelbase, -half_track, right, 0.5 * p.stiffness_front),
            (0.0, half_track, 0.0, 0.5 * p.stiffness_rear),
            (0.0, -half_track, 0.0, 0.5 * p.stiffness_rear),
        ];

        let mut force_y = 0.0;
        let mut moment = 0.0;
        for (wx, wy, angle, stiffness) in wheels {
            let (cvx, cvy) = transfer_planar_velocity((vx, vy), yaw_rate, (wx, wy));
            let (s, c) = angle.sin_cos();
            let v_long = c * cvx + s * cvy;
            let v_lat = -s * cvx + c * cvy;
            if v_long.abs() < 1e-6 {
                return Err(Error::Standstill { speed: v_long });
            }
            let mut slip = (-v_lat / v_long.abs()).atan();
            if self.tire.turn_slip_enabled {
                slip += turn_slip_shift(yaw_rate, v_long, &self.tire)?;
            }
            let lateral = stiffness * slip;
            let (fx, fy) = (-s * lateral, c * lateral);
            force_y += fy;
            // Moment about the centre of gravity, which sits l_r ahead of the rear axle.
            moment += (wx - p.lever_rear) * fy - wy * fx;
        }

        let yaw_accel = moment / p.yaw_inertia;
        // v_y at the CG is v_y,r + l_r·ω; lateral balance m·(v̇_y,cg + v_x·ω) = ΣF_y.
        let vy_dot = force_y / p.mass - vx * yaw_rate - p.lever_rear * yaw_accel;
        Ok([vy_dot, yaw_accel])
    }

    pub fn step(&self, state: &SimState, inputs: &SimInputs, dt: f64) -> Result<SimState> {
        if !(dt > 0.0 && dt <= MAX_DYNAMIC_STEP) {
            return Err(Error::param(
                "dt",
                format!("two-track step needs 0 < dt <= {MAX_DYNAMIC_STEP} s, got {dt}"),
            ));
        }
        let vx = inputs.vx;
        if vx.abs() < MIN_DYNAMIC_SPEED {
            return Err(Error::Standstill { speed: vx });
        }
        // Evaluate once up front so tyre errors surface as Results; rk4 needs
        // an infallible closure.
        self.lateral_rates(vx, state.vy, state.yaw_rate, inputs.steering)?;
        let mut failure = None;
        let y = [state.x, state.y, state.yaw, state.vy, state.yaw_rate];
        let next = rk4(&y, dt, |y| {
            let [vy_dot, yaw_accel] = match self.lateral_rates(vx, y[3], y[4], inputs.steering) {
                Ok(r) => r,
                Err(e) => {
                    failure.get_or_insert(e.to_string());
                    [0.0, 0.0]
                }
            };
            let [x_dot, y_dot, yaw_dot] = pose_rates(y[2], vx, y[3], y[4]);
            [x_dot, y_dot, yaw_dot, vy_dot, yaw_accel]
        });
        if let Some(msg) = failure {
            return Err(Error::InvalidParameter {
                name: "two_track",
                reason: msg,
            });
        }
        Ok(SimState {
            x: next[0],
            y: next[1],
            yaw: next[2],
            vx,
            vy: next[3],
            yaw_rate: next[4],
        }
        .with_wrapped_yaw())
    }

    /// Settled signed rear side-slip `atan(v_y,r / v_x)` for constant inputs.
    pub fn steady_state_beta_r(&self, vx: f64, steering: f64) -> Result<f64> {
        let settled = self.settle(vx, steering)?;
        Ok((settled.vy / settled.vx).atan())
    }

    /// Run at constant inputs until `(v_y, ω_z)` move less than 1e-9 over one
    /// second of simulated time.
    pub fn settle(&self, vx: f64, steering: f64) -> Result<SimState> {
        if vx.abs() < MIN_DYNAMIC_SPEED {
            return Err(Error::Standstill { speed: vx });
        }
        let inputs = SimInputs { vx, steering };
        let mut state = SimState {
            vx,
            yaw_rate: vx * steering.tan() / self.params.wheelbase(),
            ..SimState::default()
        };
        let window = (SETTLE_WINDOW / SETTLE_STEP).round() as usize;
        let windows = (SETTLE_TIMEOUT / SETTLE_WINDOW).round() as usize;
        for _ in 0..windows {
            let start = state;
            for _ in 0..window {
                state = self.step(&state, &inputs, SETTLE_STEP)?;
            }
            let change = (state.vy - start.vy)
                .abs()
                .max((state.yaw_rate - start.yaw_rate).abs());
            if change < SETTLE_TOLERANCE {
                return Ok(state);
            }
        }
        Err(Error::NoConvergence {
            seconds: SETTLE_TIMEOUT,
        })
    }
}

/// One RK4 step of the two-track model.
pub fn two_track_step(
    state: &SimState,
    inputs: &SimInputs,
    params: &VehicleParams,
    tire: &TireParams,
    deviation: &AckermannDeviationMap,
    dt: f64,
) -> Result<SimState> {
    TwoTrack::new(*params, *tire, *deviation).step(state, inputs, dt)
}

/// Settled signed rear side-slip angle for constant speed and steering.
pub fn steady_state_beta_r(
    vx: f64,
    steering: f64,
    params: &VehicleParams,
    tire: &TireParams,
    deviation: &AckermannDeviationMap,
) -> Result<f64> {
    TwoTrack::new(*params, *tire, *deviation).steady_state_beta_r(vx, steering)
}
