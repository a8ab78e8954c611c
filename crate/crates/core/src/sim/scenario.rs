use serde::{Deserialize, Serialize};

use super::{kinematic_step_with_offset, synthesize_sensors, SensorNoise, SimInputs, SimState, TwoTrack};
use crate::error::{Error, Result};
use crate::types::{
    driving_direction_sign, AckermannDeviationMap, Direction, GroundTruthSample, LogMetadata,
    ManeuverLog, TireParams, VehicleParams,
};

/// One constant-command piece of a manoeuvre.
///
/// Exactly one of `steering` / `yaw_rate` may be given (neither means
/// straight), and exactly one of `duration` / `turn_angle_deg`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    /// Signed rear-axle speed [m/s].
    pub vx: f64,
    /// Mean front steering angle [rad].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steering: Option<f64>,
    /// Target yaw rate [rad/s], converted to a steering angle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Heading change that ends the segment [deg].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_angle_deg: Option<f64>,
}

/// How truth is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioModel {
    /// Kinematic motion with the zero-side-slip point at `x_rho` per direction.
    Kinematic {
        #[serde(default)]
        x_rho_forward: f64,
        #[serde(default)]
        x_rho_reverse: f64,
    },
    /// Two-track dynamics with tyre and steering effects.
    TwoTrack {
        #[serde(default)]
        ackermann_coefficient: f64,
    },
}

impl Default for ScenarioModel {
    fn default() -> Self {
        ScenarioModel::Kinematic {
            x_rho_forward: 0.0,
            x_rho_reverse: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub id: String,
    #[serde(default)]
    pub description: String,
    /// Sample and integration interval [s].
    #[serde(default = "Scenario::default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub model: ScenarioModel,
    #[serde(default)]
    pub initial_x: f64,
    #[serde(default)]
    pub initial_y: f64,
    #[serde(default)]
    pub initial_yaw: f64,
    pub segments: Vec<Segment>,
}

/// Truth track together with the command in force at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub truth: Vec<GroundTruthSample>,
    pub commands: Vec<SimInputs>,
}

impl Scenario {
    fn default_dt() -> f64 {
        0.01
    }

    /// A reverse perpendicular parking manoeuvre: straight, a 90° left turn at
    /// a 4 m radius, straight again, all at 0.5 m/s in reverse.
    pub fn perpendicular_reverse_90(x_rho_reverse: f64) -> Self {
        Self {
            id: "perpendicular_reverse_90".into(),
            description: "reverse perpendicular parking, 90 deg heading change".into(),
            dt: 0.01,
            model: ScenarioModel::Kinematic {
                x_rho_forward: 0.0,
                x_rho_reverse,
            },
            initial_x: 0.0,
            initial_y: 0.0,
            initial_yaw: 0.0,
            segments: vec![
                Segment {
                    vx: -0.5,
                    duration: Some(1.0),
                    ..Segment::default()
                },
                Segment {
                    vx: -0.5,
                    yaw_rate: Some(0.125),
                    turn_angle_deg: Some(90.0),
                    ..Segment::default()
                },
                Segment {
                    vx: -0.5,
                    duration: Some(1.0),
                    ..Segment::default()
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(Error::param("scenario.dt", format!("must be in (0, 0.01] s, got {}", self.dt)));
        }
        if self.segments.is_empty() {
            return Err(Error::param("scenario.segments", "at least one segment is required"));
        }
        if let ScenarioModel::TwoTrack { .. } = self.model {
            if self.dt > super::two_track::MAX_DYNAMIC_STEP {
                return Err(Error::param("scenario.dt", "two-track scenarios need dt <= 5 ms"));
            }
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let bad = |reason: &str| {
                Err(Error::param("scenario.segments", format!("segment {i}: {reason}")))
            };
            if !seg.vx.is_finite() {
                return bad("vx must be finite");
            }
            if seg.steering.is_some() && seg.yaw_rate.is_some() {
                return bad("give either steering or yaw_rate, not both");
            }
            if seg.duration.is_some() == seg.turn_angle_deg.is_some() {
                return bad("give exactly one of duration or turn_angle_deg");
            }
            if let Some(s) = seg.steering {
                if !(s.abs() < std::f64::consts::FRAC_PI_2) {
                    return bad("|steering| must be below pi/2");
                }
            }
            if seg.yaw_rate.is_some() && seg.vx == 0.0 {
                return bad("a yaw-rate target needs a non-zero speed");
            }
            if let Some(d) = seg.duration {
                if !(d > 0.0 && d.is_finite()) {
                    return bad("duration must be positive");
                }
            }
            if let ScenarioModel::TwoTrack { .. } = self.model {
                if seg.vx.abs() < super::two_track::MIN_DYNAMIC_SPEED {
                    return bad("two-track scenarios cannot stand still");
                }
            }
        }
        Ok(())
    }

    fn x_rho(&self, vx: f64) -> f64 {
        match self.model {
            ScenarioModel::Kinematic {
                x_rho_forward,
                x_rho_reverse,
            } => match driving_direction_sign(vx, 0.0) {
                Direction::Forward => x_rho_forward,
                Direction::Reverse => x_rho_reverse,
                Direction::Standstill => 0.0,
            },
            ScenarioModel::TwoTrack { .. } => 0.0,
        }
    }

    /// Steering command and number of steps for a segment.
    fn resolve(&self, seg: &Segment, wheelbase: f64) -> Result<(SimInputs, usize)> {
        let effective = wheelbase - self.x_rho(seg.vx);
        let steering = match (seg.steering, seg.yaw_rate) {
            (Some(s), _) => s,
            (None, Some(w)) => (w * effective / seg.vx).atan(),
            (None, None) => 0.0,
        };
        let duration = match (seg.duration, seg.turn_angle_deg) {
            (Some(d), _) => d,
            (None, Some(angle)) => {
                let yaw_rate = seg.vx * steering.tan() / effective;
                if yaw_rate == 0.0 {
                    return Err(Error::param(
                        "scenario.segments",
                        "turn_angle_deg needs a non-zero yaw rate",
                    ));
                }
                (angle.to_radians() / yaw_rate).abs()
            }
            (None, None) => unreachable!("validated"),
        };
        let steps = (duration / self.dt).round().max(1.0) as usize;
        Ok((SimInputs { vx: seg.vx, steering }, steps))
    }

    /// Generate the truth track. Sample 0 sits at the initial pose; sample `k`
    /// carries the velocities used over the interval that ends at it.
    pub fn run(&self, params: &VehicleParams, tire: &TireParams) -> Result<ScenarioRun> {
        self.validate()?;
        params.validate()?;
        let wheelbase = params.wheelbase();
        let plan = self
            .segments
            .iter()
            .map(|s| self.resolve(s, wheelbase))
            .collect::<Result<Vec<_>>>()?;

        let first = plan[0].0;
        let dynamic = match self.model {
            ScenarioModel::TwoTrack {
                ackermann_coefficient,
            } => Some(TwoTrack::new(
                *params,
                *tire,
                AckermannDeviationMap::new(ackermann_coefficient)?,
            )),
            ScenarioModel::Kinematic { .. } => None,
        };

        let x_rho0 = self.x_rho(first.vx);
        let yaw_rate0 = first.vx * first.steering.tan() / (wheelbase - x_rho0);
        let mut state = SimState {
            x: self.initial_x,
            y: self.initial_y,
            yaw: self.initial_yaw,
            vx: first.vx,
            vy: if dynamic.is_some() { 0.0 } else { -x_rho0 * yaw_rate0 },
            yaw_rate: yaw_rate0,
        };
        let mut truth = vec![state.to_truth(0.0)];
        let mut commands = vec![first];
        let mut k = 0usize;
        for (inputs, steps) in plan {
            for _ in 0..steps {
                state = match &dynamic {
                    Some(model) => model.step(&state, &inputs, self.dt)?,
                    None => kinematic_step_with_offset(&state, &inputs, params, self.x_rho(inputs.vx), self.dt),
                };
                k += 1;
                truth.push(state.to_truth(k as f64 * self.dt));
                commands.push(inputs);
            }
        }
        Ok(ScenarioRun { truth, commands })
    }

    /// Truth plus synthesized sensors.
    pub fn simulate(
        &self,
        params: &VehicleParams,
        tire: &TireParams,
        noise: &SensorNoise,
    ) -> Result<ManeuverLog> {
        let run = self.run(params, tire)?;
        let mut log = synthesize_sensors(&run.truth, &run.commands, params, noise)?;
        log.metadata = LogMetadata {
            maneuver_id: self.id.clone(),
            description: self.description.clone(),
            sample_rate: 1.0 / self.dt,
        };
        Ok(log)
    }
}
