//! Position error caused by a wrong zero-side-slip offset on a steady circle.
//!
//! A circle driven at `v_x`, `ω_z` with the lateral velocity off by
//! `Δx·ω_z` drifts from the nominal track by `(Δx(cos φ − 1), Δx sin φ)`
//! at phase `φ = ω_z t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_rate(yaw_rate: f64) -> Result<()> {
    if yaw_rate == 0.0 || !yaw_rate.is_finite() {
        return Err(Error::param("yaw_rate", format!("must be finite and non-zero, got {yaw_rate}")));
    }
    Ok(())
}

/// Position on the undisturbed circle starting at the origin heading along +X.
pub fn nominal_circle(vx: f64, yaw_rate: f64, t: f64) -> Result<(f64, f64)> {
    check_rate(yaw_rate)?;
    let radius = vx / yaw_rate;
    let (s, c) = (yaw_rate * t).sin_cos();
    Ok((radius * s, radius * (1.0 - c)))
}

/// Position when the lateral velocity is perturbed by `Δx·ω_z`.
pub fn perturbed_circle(vx: f64, yaw_rate: f64, delta_x: f64, t: f64) -> Result<(f64, f64)> {
    let (x, y) = nominal_circle(vx, yaw_rate, t)?;
    if delta_x == 0.0 {
        return Ok((x, y));
    }
    let (s, c) = (yaw_rate * t).sin_cos();
    Ok((x + delta_x * (c - 1.0), y + delta_x * s))
}

/// Euclidean drift `|Δx|·√(2(1 − cos φ))` at phase `φ = ω_z t`.
pub fn position_error(delta_x: f64, phase: f64) -> f64 {
    delta_x.abs() * (2.0 * (1.0 - phase.cos())).max(0.0).sqrt()
}

/// Largest drift over a circle, reached at half a turn.
pub fn max_error(delta_x: f64) -> f64 {
    2.0 * delta_x.abs()
}

/// Drift after a quarter turn, the typical parking manoeuvre.
pub fn error_at_90(delta_x: f64) -> f64 {
    std::f64::consts::SQRT_2 * delta_x.abs()
}

/// Perturbed steady circle to analyse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirclePerturbationSpec {
    pub vx: f64,
    pub yaw_rate: f64,
    pub delta_x: f64,
    /// Heading change covered [deg].
    pub turn_angle_deg: f64,
}

impl CirclePerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        check_rate(self.yaw_rate)?;
        for (name, v) in [
            ("vx", self.vx),
            ("delta_x", self.delta_x),
            ("turn_angle_deg", self.turn_angle_deg),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSample {
    /// `ω_z t` [rad].
    pub phase: f64,
    pub dx: f64,
    pub dy: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceReport {
    pub spec: CirclePerturbationSpec,
    pub samples: Vec<DisturbanceSample>,
    pub e_max: f64,
    pub e_90: f64,
}

/// Sample the drift at `steps + 1` evenly spaced phases over the turn.
pub fn analyze(spec: &CirclePerturbationSpec, steps: usize) -> Result<DisturbanceReport> {
    spec.validate()?;
    let steps = steps.max(1);
    let total = spec.turn_angle_deg.to_radians();
    let samples = (0..=steps)
        .map(|i| {
            let phase = total * i as f64 / steps as f64;
            let t = phase / spec.yaw_rate;
            let nominal = nominal_circle(spec.vx, spec.yaw_rate, t)?;
            let perturbed = perturbed_circle(spec.vx, spec.yaw_rate, spec.delta_x, t)?;
            Ok(DisturbanceSample {
                phase,
                dx: perturbed.0 - nominal.0,
                dy: perturbed.1 - nominal.1,
                error: position_error(spec.delta_x, phase),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DisturbanceReport {
        spec: *spec,
        samples,
        e_max: max_error(spec.delta_x),
        e_90: error_at_90(spec.delta_x),
    })
}
