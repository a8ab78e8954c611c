use super::{pose_rates, rk4, SimInputs, SimState};
use crate::types::VehicleParams;

/// Kinematic bicycle: no side slip at the rear axle, `ω = v_x·tan δ / L`.
pub fn kinematic_bicycle_step(
    state: &SimState,
    inputs: &SimInputs,
    params: &VehicleParams,
    dt: f64,
) -> SimState {
    kinematic_step_with_offset(state, inputs, params, 0.0, dt)
}

/// Kinematic bicycle whose zero-side-slip point sits `x_rho` ahead of the
/// rear axle: `tan δ = (L - x_rho)·ω / v_x` and `v_y,r = -x_rho·ω`.
///
/// The returned state carries the velocities used over the step.
pub fn kinematic_step_with_offset(
    state: &SimState,
    inputs: &SimInputs,
    params: &VehicleParams,
    x_rho: f64,
    dt: f64,
) -> SimState {
    debug_assert!(dt > 0.0 && dt <= 0.01, "kinematic step expects 0 < dt <= 10 ms");
    let vx = inputs.vx;
    let yaw_rate = vx * inputs.steering.tan() / (params.wheelbase() - x_rho);
    let vy = crate::lateral::vy_omega_model(yaw_rate, x_rho);
    let pose = rk4(&[state.x, state.y, state.yaw], dt, |p| {
        pose_rates(p[2], vx, vy, yaw_rate)
    });
    SimState {
        x: pose[0],
        y: pose[1],
        yaw: pose[2],
        vx,
        vy,
        yaw_rate,
    }
    .with_wrapped_yaw()
}
