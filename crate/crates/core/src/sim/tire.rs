use crate::error::{Error, Result};
use crate::types::TireParams;

/// Minimum contact speed for which turn slip is evaluated [m/s].
pub const MIN_TURN_SLIP_SPEED: f64 = 0.01;

/// Horizontal shift of the lateral slip curve caused by turn slip [rad].
///
/// Turn slip is `φ = -ω_z / |v|` and the shift is
/// `(K_yRφ0 / K_yα0)·R_0·φ·sgn(v)`, with `v` the signed longitudinal
/// contact-patch speed. The result is added to the slip angle before the
/// stiffness is applied. It flips sign with `v` at a fixed yaw rate; since the
/// yaw rate itself flips when the same steering angle is driven in reverse, the
/// shift for a given steering angle is the same in both directions.
pub fn turn_slip_shift(yaw_rate: f64, v_contact: f64, tire: &TireParams) -> Result<f64> {
    if !(v_contact.abs() > MIN_TURN_SLIP_SPEED) {
        return Err(Error::SingularTurnSlip { speed: v_contact });
    }
    let phi = -yaw_rate / v_contact.abs();
    Ok(tire.camber_stiffness_ratio * tire.unloaded_radius * phi * v_contact.signum())
}

/// Turn slip `-ω_z / |v|` on its own [1/m].
pub fn turn_slip(yaw_rate: f64, v_contact: f64) -> Result<f64> {
    if !(v_contact.abs() > MIN_TURN_SLIP_SPEED) {
        return Err(Error::SingularTurnSlip { speed: v_contact });
    }
    Ok(-yaw_rate / v_contact.abs())
}
