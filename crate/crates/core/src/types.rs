//! Shared domain types and planar rigid-body helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default velocity deadband used for driving-direction decisions [m/s].
pub const DIRECTION_DEADBAND: f64 = 0.1;

/// Standard gravity used throughout [m/s²].
pub const GRAVITY: f64 = 9.81;

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {value}")))
    }
}

/// Chassis parameters of the planar vehicle model.
///
/// Lengths are measured from the centre of gravity (`lever_front`,
/// `lever_rear`) or from the rear-axle centre (`imu_lever_*`). Tyre
/// stiffnesses are per axle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    /// Vehicle mass [kg].
    pub mass: f64,
    /// Yaw inertia about the centre of gravity [kg·m²].
    pub yaw_inertia: f64,
    /// Centre of gravity to front axle [m].
    pub lever_front: f64,
    /// Centre of gravity to rear axle [m].
    pub lever_rear: f64,
    /// Front track width [m]. The rear axle uses the same track.
    pub track_front: f64,
    /// Front axle cornering stiffness [N/rad].
    pub stiffness_front: f64,
    /// Rear axle cornering stiffness [N/rad].
    pub stiffness_rear: f64,
    /// Rear axle to IMU, positive forward [m].
    pub imu_lever_x: f64,
    /// Rear axle to IMU, positive left [m].
    #[serde(default)]
    pub imu_lever_y: f64,
}

impl VehicleParams {
    /// A mid-size passenger car, handy for tests and examples.
    pub fn mid_size_sedan() -> Self {
        Self {
            mass: 1800.0,
            yaw_inertia: 3000.0,
            lever_front: 1.3,
            lever_rear: 1.6,
            track_front: 1.6,
            stiffness_front: 100_000.0,
            stiffness_rear: 100_000.0,
            imu_lever_x: 1.5,
            imu_lever_y: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("vehicle.mass", self.mass)?;
        positive("vehicle.yaw_inertia", self.yaw_inertia)?;
        positive("vehicle.lever_front", self.lever_front)?;
        positive("vehicle.lever_rear", self.lever_rear)?;
        positive("vehicle.track_front", self.track_front)?;
        positive("vehicle.stiffness_front", self.stiffness_front)?;
        positive("vehicle.stiffness_rear", self.stiffness_rear)?;
        if !self.imu_lever_x.is_finite() || !self.imu_lever_y.is_finite() {
            return Err(Error::param("vehicle.imu_lever", "must be finite"));
        }
        let gradient = self.side_slip_gradient();
        if !(gradient.is_finite() && gradient > 0.0) {
            return Err(Error::param(
                "vehicle",
                format!("side-slip gradient must be finite and positive, got {gradient}"),
            ));
        }
        Ok(())
    }

    /// Wheelbase `L = l_f + l_r` [m].
    pub fn wheelbase(&self) -> f64 {
        self.lever_front + self.lever_rear
    }

    /// Side-slip gradient `m·l_f / (c_r·L)` [rad·s²/m].
    pub fn side_slip_gradient(&self) -> f64 {
        self.mass * self.lever_front / (self.stiffness_rear * self.wheelbase())
    }

    /// IMU position relative to the rear-axle centre.
    pub fn imu_lever(&self) -> (f64, f64) {
        (self.imu_lever_x, self.imu_lever_y)
    }
}

/// Low-speed tyre properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TireParams {
    /// Unloaded tyre radius R_0 [m].
    #[serde(default = "TireParams::default_radius")]
    pub unloaded_radius: f64,
    /// Ratio of the turn-slip (camber) stiffness to the cornering stiffness.
    #[serde(default = "TireParams::default_ratio")]
    pub camber_stiffness_ratio: f64,
    #[serde(default = "TireParams::default_enabled")]
    pub turn_slip_enabled: bool,
}

impl TireParams {
    fn default_radius() -> f64 {
        0.35
    }
    fn default_ratio() -> f64 {
        0.8
    }
    fn default_enabled() -> bool {
        true
    }

    pub fn validate(&self) -> Result<()> {
        positive("tire.unloaded_radius", self.unloaded_radius)?;
        if !(self.camber_stiffness_ratio.is_finite() && self.camber_stiffness_ratio >= 0.0) {
            return Err(Error::param(
                "tire.camber_stiffness_ratio",
                format!("must be finite and >= 0, got {}", self.camber_stiffness_ratio),
            ));
        }
        Ok(())
    }

    pub fn without_turn_slip(self) -> Self {
        Self {
            turn_slip_enabled: false,
            ..self
        }
    }
}

impl Default for TireParams {
    fn default() -> Self {
        Self {
            unloaded_radius: Self::default_radius(),
            camber_stiffness_ratio: Self::default_ratio(),
            turn_slip_enabled: Self::default_enabled(),
        }
    }
}

/// Linear map from the inside-wheel steering angle to the Ackermann deviation.
///
/// A negative coefficient models the less-than-Ackermann geometry of most
/// passenger cars: the inside wheel steers `|coefficient|·|δ_inside|` less
/// than the ideal geometry requires.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AckermannDeviationMap {
    pub coefficient: f64,
}

impl AckermannDeviationMap {
    pub const IDEAL: Self = Self { coefficient: 0.0 };

    pub fn new(coefficient: f64) -> Result<Self> {
        if !coefficient.is_finite() || coefficient <= -1.0 {
            return Err(Error::param(
                "ackermann.coefficient",
                format!("must be finite and > -1, got {coefficient}"),
            ));
        }
        Ok(Self { coefficient })
    }

    /// Ackermann deviation Δδ_A for a given inside-wheel angle. Odd in the angle.
    pub fn deviation(&self, inside_angle: f64) -> f64 {
        self.coefficient * inside_angle
    }
}

/// Gear selector state; wheel encoders are unsigned so direction comes from here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gear {
    #[serde(rename = "F")]
    Forward,
    #[serde(rename = "R")]
    Reverse,
    #[serde(rename = "N")]
    Neutral,
}

impl Gear {
    pub fn direction(self) -> Direction {
        match self {
            Gear::Forward => Direction::Forward,
            Gear::Reverse => Direction::Reverse,
            Gear::Neutral => Direction::Standstill,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Gear::Forward => 'F',
            Gear::Reverse => 'R',
            Gear::Neutral => 'N',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'F' => Some(Gear::Forward),
            'R' => Some(Gear::Reverse),
            'N' => Some(Gear::Neutral),
            _ => None,
        }
    }
}

/// Driving direction with a neutral band around standstill.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Reverse,
    Standstill,
    Forward,
}

impl Direction {
    /// -1, 0 or +1.
    pub fn signum(self) -> i8 {
        match self {
            Direction::Reverse => -1,
            Direction::Standstill => 0,
            Direction::Forward => 1,
        }
    }

    pub fn sign(self) -> f64 {
        f64::from(self.signum())
    }

    pub fn is_moving(self) -> bool {
        self != Direction::Standstill
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::Reverse => Direction::Forward,
            Direction::Standstill => Direction::Standstill,
            Direction::Forward => Direction::Reverse,
        }
    }

    pub fn gear(self) -> Gear {
        match self {
            Direction::Reverse => Gear::Reverse,
            Direction::Standstill => Gear::Neutral,
            Direction::Forward => Gear::Forward,
        }
    }
}

/// Direction of travel for a longitudinal velocity, with a symmetric deadband.
pub fn driving_direction_sign(vx: f64, deadband: f64) -> Direction {
    debug_assert!(deadband >= 0.0);
    if vx > deadband {
        Direction::Forward
    } else if vx < -deadband {
        Direction::Reverse
    } else {
        Direction::Standstill
    }
}

/// Velocity of body point B given the velocity at A, the yaw rate and the
/// lever arm from A to B (planar rigid body, `v_B = v_A + ω × r_AB`).
pub fn transfer_planar_velocity(v_at_a: (f64, f64), yaw_rate: f64, lever_ab: (f64, f64)) -> (f64, f64) {
    (v_at_a.0 - yaw_rate * lever_ab.1, v_at_a.1 + yaw_rate * lever_ab.0)
}

/// Wrap an angle to (-π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut a = angle % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// One time-stamped record of the vehicle's proprioceptive sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub t: f64,
    /// Specific force in the body frame [m/s²]; level standstill reads `(0, 0, -g)`.
    pub accel: [f64; 3],
    /// Angular rate in the body frame [rad/s].
    pub gyro: [f64; 3],
    /// Unsigned contact-point speeds `[fl, fr, rl, rr]` [m/s].
    pub wheel_speeds: [f64; 4],
    /// Mean front steering angle [rad].
    pub steering: f64,
    pub gear: Gear,
}

impl SensorSample {
    pub fn yaw_rate(&self) -> f64 {
        self.gyro[2]
    }

    /// Signed rear-axle speed from the mean of the rear encoders and the gear.
    pub fn rear_axle_speed(&self) -> f64 {
        0.5 * (self.wheel_speeds[2] + self.wheel_speeds[3]) * self.gear.direction().sign()
    }
}

/// Reference motion of the rear-axle centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
}

impl GroundTruthSample {
    pub fn is_finite(&self) -> bool {
        [self.t, self.x, self.y, self.yaw, self.vx, self.vy, self.yaw_rate]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Linear interpolation between two samples. Yaw is interpolated along the
    /// shorter arc.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        let span = other.t - self.t;
        let s = if span > 0.0 { (t - self.t) / span } else { 0.0 };
        let mix = |a: f64, b: f64| a + s * (b - a);
        Self {
            t,
            x: mix(self.x, other.x),
            y: mix(self.y, other.y),
            yaw: self.yaw + s * wrap_angle(other.yaw - self.yaw),
            vx: mix(self.vx, other.vx),
            vy: mix(self.vy, other.vy),
            yaw_rate: mix(self.yaw_rate, other.yaw_rate),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LogMetadata {
    pub maneuver_id: String,
    pub description: String,
    /// Nominal sample rate [Hz].
    pub sample_rate: f64,
}

/// Sensor log of one manoeuvre, optionally with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverLog {
    pub sensors: Vec<SensorSample>,
    pub truth: Option<Vec<GroundTruthSample>>,
    pub metadata: LogMetadata,
}

impl ManeuverLog {
    /// Relative jitter allowed around the nominal sample interval.
    pub const MAX_JITTER: f64 = 0.01;

    pub fn new(
        sensors: Vec<SensorSample>,
        truth: Option<Vec<GroundTruthSample>>,
        metadata: LogMetadata,
    ) -> Result<Self> {
        let log = Self {
            sensors,
            truth,
            metadata,
        };
        log.validate()?;
        Ok(log)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensors.is_empty() {
            return Err(Error::InvalidLog("no sensor samples".into()));
        }
        check_times(self.sensors.iter().map(|s| s.t), "sensor")?;
        check_uniform(self.sensors.iter().map(|s| s.t).collect::<Vec<_>>().as_slice(), "sensor")?;
        for s in &self.sensors {
            if s.wheel_speeds.iter().any(|w| *w < 0.0) {
                return Err(Error::InvalidLog(format!(
                    "negative wheel speed at t={}",
                    s.t
                )));
            }
            let finite = s
                .accel
                .iter()
                .chain(&s.gyro)
                .chain(&s.wheel_speeds)
                .chain(std::iter::once(&s.steering))
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidLog(format!("non-finite sensor value at t={}", s.t)));
            }
        }
        if let Some(truth) = &self.truth {
            if truth.is_empty() {
                return Err(Error::InvalidLog("empty ground truth".into()));
            }
            check_times(truth.iter().map(|s| s.t), "truth")?;
            if let Some(bad) = truth.iter().find(|s| !s.is_finite()) {
                return Err(Error::InvalidLog(format!("non-finite truth at t={}", bad.t)));
            }
            let (s0, s1) = (self.sensors[0].t, self.sensors[self.sensors.len() - 1].t);
            let (g0, g1) = (truth[0].t, truth[truth.len() - 1].t);
            if g1 < s0 || s1 < g0 {
                return Err(Error::InvalidLog(
                    "sensor and truth time ranges do not overlap".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.sensors[self.sensors.len() - 1].t - self.sensors[0].t
    }

    /// Ground truth resampled at each sensor timestamp (clamped at the ends).
    pub fn truth_at_sensor_times(&self) -> Option<Vec<GroundTruthSample>> {
        let truth = self.truth.as_ref()?;
        Some(
            self.sensors
                .iter()
                .map(|s| interpolate_truth(truth, s.t))
                .collect(),
        )
    }
}

/// Piecewise-linear interpolation of a truth series, clamped at both ends.
pub fn interpolate_truth(truth: &[GroundTruthSample], t: f64) -> GroundTruthSample {
    let idx = truth.partition_point(|s| s.t <= t);
    if idx == 0 {
        GroundTruthSample { t, ..truth[0] }
    } else if idx == truth.len() {
        GroundTruthSample {
            t,
            ..truth[truth.len() - 1]
        }
    } else {
        truth[idx - 1].lerp(&truth[idx], t)
    }
}

fn check_times(times: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut previous: Option<f64> = None;
    for t in times {
        if !t.is_finite() {
            return Err(Error::InvalidLog(format!("{what} timestamp is not finite")));
        }
        if let Some(p) = previous {
            if t <= p {
                return Err(Error::InvalidLog(format!(
                    "{what} timestamps not strictly increasing at t={t}"
                )));
            }
        }
        previous = Some(t);
    }
    Ok(())
}

fn check_uniform(times: &[f64], what: &str) -> Result<()> {
    if times.len() < 2 {
        return Ok(());
    }
    let nominal = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for pair in times.windows(2) {
        let dt = pair[1] - pair[0];
        if (dt - nominal).abs() > ManeuverLog::MAX_JITTER * nominal {
            return Err(Error::InvalidLog(format!(
                "{what} interval {dt} s at t={} deviates from nominal {nominal} s",
                pair[0]
            )));
        }
    }
    Ok(())
}
