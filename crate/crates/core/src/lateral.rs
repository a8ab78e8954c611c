//! Lateral-velocity pseudo-measurement models.
//!
//! Three models are supported:
//!
//! - zero slip: `v_y,r = 0` at the rear axle;
//! - δ-β: `β_r = -k_rho · tan δ_f`, driven by the steering angle;
//! - ω-v: `v_y,r = -x_rho · ω_z`, where `x_rho` is the distance from the rear
//!   axle to the point `P_0` that really has zero side slip (positive forward).
//!
//! The two parameters are linked by `k_rho = x_rho / (L - x_rho)`. Side-slip
//! angles here are signed, `β = v_y / v_x`, so both models keep the same form
//! in forward and reverse driving.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Direction;

/// ω-v model: rear-axle lateral velocity for a yaw rate.
pub fn vy_omega_model(yaw_rate: f64, x_rho: f64) -> f64 {
    -x_rho * yaw_rate
}

/// δ-β model: rear-axle side-slip angle for a steering tangent.
pub fn beta_delta_model(tan_steer: f64, k_rho: f64) -> f64 {
    -k_rho * tan_steer
}

/// `k = x / (L - x)`.
pub fn k_from_x(x: f64, wheelbase: f64) -> Result<f64> {
    check_wheelbase(wheelbase)?;
    let denom = wheelbase - x;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateParameter(format!(
            "x_rho = {x} equals the wheelbase, k_rho is unbounded"
        )));
    }
    Ok(x / denom)
}

/// `x = k·L / (1 + k)`.
pub fn x_from_k(k: f64, wheelbase: f64) -> Result<f64> {
    check_wheelbase(wheelbase)?;
    let denom = 1.0 + k;
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateParameter(format!(
            "k_rho = {k} has no finite x_rho"
        )));
    }
    Ok(k * wheelbase / denom)
}

fn check_wheelbase(wheelbase: f64) -> Result<()> {
    if wheelbase.is_finite() && wheelbase > 0.0 {
        Ok(())
    } else {
        Err(Error::param("wheelbase", format!("must be > 0, got {wheelbase}")))
    }
}

/// Per-direction zero-side-slip offsets of the ω-v model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LateralModelParams {
    x_rho_forward: f64,
    x_rho_reverse: f64,
    wheelbase: f64,
}

impl LateralModelParams {
    pub fn new(x_rho_forward: f64, x_rho_reverse: f64, wheelbase: f64) -> Result<Self> {
        check_wheelbase(wheelbase)?;
        for (name, x) in [
            ("lateral_model.x_rho_forward", x_rho_forward),
            ("lateral_model.x_rho_reverse", x_rho_reverse),
        ] {
            if !x.is_finite() || x.abs() >= wheelbase {
                return Err(Error::param(
                    name,
                    format!("|x_rho| must stay below the wheelbase {wheelbase} m, got {x}"),
                ));
            }
        }
        Ok(Self {
            x_rho_forward,
            x_rho_reverse,
            wheelbase,
        })
    }

    pub fn zero(wheelbase: f64) -> Result<Self> {
        Self::new(0.0, 0.0, wheelbase)
    }

    pub fn x_rho_forward(&self) -> f64 {
        self.x_rho_forward
    }

    pub fn x_rho_reverse(&self) -> f64 {
        self.x_rho_reverse
    }

    pub fn wheelbase(&self) -> f64 {
        self.wheelbase
    }

    /// Offset for a driving direction. Standstill is rejected.
    pub fn select_parameter(&self, direction: Direction) -> Result<f64> {
        match direction {
            Direction::Forward => Ok(self.x_rho_forward),
            Direction::Reverse => Ok(self.x_rho_reverse),
            Direction::Standstill => Err(Error::NeutralDirection),
        }
    }

    pub fn k_rho(&self, direction: Direction) -> Result<f64> {
        k_from_x(self.select_parameter(direction)?, self.wheelbase)
    }
}

/// Which lateral model feeds the filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LateralModelKind {
    ZeroSlip,
    DeltaBeta { k_forward: f64, k_reverse: f64 },
    OmegaVy(LateralModelParams),
}

impl LateralModelKind {
    /// δ-β model with `k_rho` derived from the given offsets.
    pub fn delta_beta_from(params: &LateralModelParams) -> Result<Self> {
        Ok(LateralModelKind::DeltaBeta {
            k_forward: params.k_rho(Direction::Forward)?,
            k_reverse: params.k_rho(Direction::Reverse)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LateralModelKind::ZeroSlip => "zero-slip",
            LateralModelKind::DeltaBeta { .. } => "delta-beta",
            LateralModelKind::OmegaVy(_) => "omega-vy",
        }
    }

    /// Lateral velocity at the rear-axle centre.
    ///
    /// `vx` is the signed rear-axle speed and only used by the δ-β model.
    pub fn rear_lateral_velocity(
        &self,
        direction: Direction,
        yaw_rate: f64,
        vx: f64,
        tan_steer: f64,
    ) -> Result<f64> {
        match self {
            LateralModelKind::ZeroSlip => {
                if direction.is_moving() {
                    Ok(vy_omega_model(yaw_rate, 0.0))
                } else {
                    Err(Error::NeutralDirection)
                }
            }
            LateralModelKind::DeltaBeta {
                k_forward,
                k_reverse,
            } => {
                let k = match direction {
                    Direction::Forward => *k_forward,
                    Direction::Reverse => *k_reverse,
                    Direction::Standstill => return Err(Error::NeutralDirection),
                };
                Ok(beta_delta_model(tan_steer, k) * vx)
            }
            LateralModelKind::OmegaVy(params) => {
                Ok(vy_omega_model(yaw_rate, params.select_parameter(direction)?))
            }
        }
    }
}
