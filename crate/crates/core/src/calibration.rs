//! Per-direction regression of the zero-side-slip offset from logs with truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lateral::{k_from_x, x_from_k};
use crate::types::{driving_direction_sign, Direction, GroundTruthSample, ManeuverLog, DIRECTION_DEADBAND};

/// Minimum number of gated samples for a per-direction fit.
pub const MIN_SAMPLES: usize = 50;

/// Which regression to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationVariant {
    /// `v_y,r` on `ω_z`.
    OmegaVy,
    /// `β_r` on `tan δ_f`.
    DeltaBeta,
}

/// Contiguous run of samples driven in one direction, `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionSegment {
    pub direction: Direction,
    pub start: usize,
    pub end: usize,
}

impl DirectionSegment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Maximal runs of constant, non-zero driving direction. Samples inside the
/// deadband split runs and belong to none.
pub fn segment_truth(truth: &[GroundTruthSample], deadband: f64) -> Vec<DirectionSegment> {
    let mut out: Vec<DirectionSegment> = Vec::new();
    let mut open: Option<DirectionSegment> = None;
    for (i, s) in truth.iter().enumerate() {
        let d = driving_direction_sign(s.vx, deadband);
        match open.as_mut() {
            Some(seg) if seg.direction == d => seg.end = i + 1,
            _ => {
                out.extend(open.take());
                if d.is_moving() {
                    open = Some(DirectionSegment {
                        direction: d,
                        start: i,
                        end: i + 1,
                    });
                }
            }
        }
    }
    out.extend(open);
    out
}

/// Direction segments of a log, indexed by sensor sample.
pub fn segment_by_direction(log: &ManeuverLog) -> Result<Vec<DirectionSegment>> {
    let truth = log
        .truth_at_sensor_times()
        .ok_or_else(|| Error::InvalidLog("calibration needs ground truth".into()))?;
    Ok(segment_truth(&truth, DIRECTION_DEADBAND))
}

/// Reference quantities for one sensor sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub t: f64,
    pub vx: f64,
    pub vy: f64,
    pub yaw_rate: f64,
    /// Tangent of the measured steering angle.
    pub tan_steer: f64,
    pub direction: Direction,
}

/// Rows for every sample inside a direction segment.
pub fn calibration_rows(log: &ManeuverLog) -> Result<Vec<CalibrationRow>> {
    let truth = log
        .truth_at_sensor_times()
        .ok_or_else(|| Error::InvalidLog("calibration needs ground truth".into()))?;
    let mut rows = Vec::new();
    for seg in segment_truth(&truth, DIRECTION_DEADBAND) {
        for (g, s) in truth[seg.start..seg.end].iter().zip(&log.sensors[seg.start..seg.end]) {
            rows.push(CalibrationRow {
                t: g.t,
                vx: g.vx,
                vy: g.vy,
                yaw_rate: g.yaw_rate,
                tan_steer: s.steering.tan(),
                direction: seg.direction,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateThresholds {
    /// Minimum |v_x| [m/s].
    pub min_speed: f64,
    /// Minimum |ω_z| for the ω-v variant [rad/s].
    pub min_yaw_rate: f64,
    /// Maximum |v_x·ω_z| [m/s²].
    pub max_lateral_accel: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        Self {
            min_speed: 0.3,
            min_yaw_rate: 0.05,
            max_lateral_accel: 1.0,
        }
    }
}

impl GateThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("calibration.min_speed", self.min_speed),
            ("calibration.min_yaw_rate", self.min_yaw_rate),
            ("calibration.max_lateral_accel", self.max_lateral_accel),
        ] {
            if !(v > 0.0) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// One regression point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub x: f64,
    pub y: f64,
    pub direction: Direction,
    pub weight: f64,
}

/// Keep the rows inside the parking regime and turn them into regression
/// points: `(ω_z, v_y,r)` or `(tan δ_f, β_r = v_y,r / v_x)`.
pub fn gate_samples(
    rows: &[CalibrationRow],
    variant: CalibrationVariant,
    thresholds: &GateThresholds,
) -> Result<Vec<CalibrationSample>> {
    thresholds.validate()?;
    Ok(rows
        .iter()
        .filter(|r| r.direction.is_moving())
        .filter(|r| r.vx.abs() >= thresholds.min_speed)
        .filter(|r| (r.vx * r.yaw_rate).abs() <= thresholds.max_lateral_accel)
        .filter(|r| variant == CalibrationVariant::DeltaBeta || r.yaw_rate.abs() >= thresholds.min_yaw_rate)
        .filter(|r| [r.vx, r.vy, r.yaw_rate, r.tan_steer].iter().all(|v| v.is_finite()))
        .map(|r| {
            let (x, y) = match variant {
                CalibrationVariant::OmegaVy => (r.yaw_rate, r.vy),
                CalibrationVariant::DeltaBeta => (r.tan_steer, r.vy / r.vx),
            };
            CalibrationSample {
                x,
                y,
                direction: r.direction,
                weight: 1.0,
            }
        })
        .collect())
}

/// Zero-intercept fit for one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionFit {
    pub x_rho: f64,
    pub k_rho: f64,
    pub slope: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub n: usize,
    /// Root-mean-square residual.
    pub rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GatingStats {
    pub total: usize,
    pub kept: usize,
    pub rejected_fraction: f64,
}

impl GatingStats {
    pub fn new(total: usize, kept: usize) -> Self {
        let rejected_fraction = if total == 0 {
            0.0
        } else {
            (total - kept) as f64 / total as f64
        };
        Self {
            total,
            kept,
            rejected_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub variant: CalibrationVariant,
    pub wheelbase: f64,
    pub forward: Option<DirectionFit>,
    pub reverse: Option<DirectionFit>,
    pub gating: GatingStats,
}

impl CalibrationResult {
    pub fn fit(&self, direction: Direction) -> Option<&DirectionFit> {
        match direction {
            Direction::Forward => self.forward.as_ref(),
            Direction::Reverse => self.reverse.as_ref(),
            Direction::Standstill => None,
        }
    }
}

/// Weighted least-squares slope through the origin.
fn slope_through_origin(samples: &[&CalibrationSample]) -> Result<(f64, f64, f64)> {
    let sxx: f64 = samples.iter().map(|s| s.weight * s.x * s.x).sum();
    let sxy: f64 = samples.iter().map(|s| s.weight * s.x * s.y).sum();
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.x), hi.max(s.x)));
    let scale = lo.abs().max(hi.abs());
    if !(sxx > 0.0) || hi - lo <= 1e-9 * scale {
        return Err(Error::RankDeficient(format!(
            "regressor spans [{lo}, {hi}], slope and offset cannot be separated"
        )));
    }
    let slope = sxy / sxx;
    let n = samples.len() as f64;
    let ssr: f64 = samples.iter().map(|s| s.weight * (s.y - slope * s.x).powi(2)).sum();
    let stderr = (ssr / (n - 1.0) / sxx).sqrt();
    let rms = (ssr / samples.iter().map(|s| s.weight).sum::<f64>()).sqrt();
    Ok((slope, stderr, rms))
}

fn estimate(samples: &[CalibrationSample], wheelbase: f64, variant: CalibrationVariant) -> Result<CalibrationResult> {
    if !(wheelbase > 0.0 && wheelbase.is_finite()) {
        return Err(Error::param("wheelbase", format!("must be > 0, got {wheelbase}")));
    }
    if let Some(bad) = samples.iter().find(|s| !(s.weight > 0.0 && s.x.is_finite() && s.y.is_finite())) {
        return Err(Error::param("samples", format!("non-finite value or non-positive weight: {bad:?}")));
    }
    let mut fits = [None, None];
    let mut largest = 0;
    for (slot, direction) in [Direction::Forward, Direction::Reverse].into_iter().enumerate() {
        let subset: Vec<_> = samples.iter().filter(|s| s.direction == direction).collect();
        largest = largest.max(subset.len());
        if subset.len() < MIN_SAMPLES {
            continue;
        }
        let (slope, stderr, rms) = slope_through_origin(&subset)?;
        let (x_rho, k_rho) = match variant {
            CalibrationVariant::OmegaVy => {
                let x = -slope;
                (x, k_from_x(x, wheelbase)?)
            }
            CalibrationVariant::DeltaBeta => {
                let k = -slope;
                (x_from_k(k, wheelbase)?, k)
            }
        };
        fits[slot] = Some(DirectionFit {
            x_rho,
            k_rho,
            slope,
            stderr,
            n: subset.len(),
            rms,
        });
    }
    if fits.iter().all(Option::is_none) {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            got: largest,
        });
    }
    Ok(CalibrationResult {
        variant,
        wheelbase,
        forward: fits[0],
        reverse: fits[1],
        gating: GatingStats::new(samples.len(), samples.len()),
    })
}

/// Fit `v_y,r = -x_rho·ω_z` per direction.
pub fn estimate_omega_vy(samples: &[CalibrationSample], wheelbase: f64) -> Result<CalibrationResult> {
    estimate(samples, wheelbase, CalibrationVariant::OmegaVy)
}

/// Fit `β_r = -k_rho·tan δ_f` per direction.
pub fn estimate_delta_beta(samples: &[CalibrationSample], wheelbase: f64) -> Result<CalibrationResult> {
    estimate(samples, wheelbase, CalibrationVariant::DeltaBeta)
}

/// Gate a log and run one estimator, returning the points used as well.
pub fn calibrate(
    log: &ManeuverLog,
    variant: CalibrationVariant,
    thresholds: &GateThresholds,
    wheelbase: f64,
) -> Result<(CalibrationResult, Vec<CalibrationSample>)> {
    let rows = calibration_rows(log)?;
    let samples = gate_samples(&rows, variant, thresholds)?;
    let mut result = estimate(&samples, wheelbase, variant)?;
    result.gating = GatingStats::new(log.sensors.len(), samples.len());
    Ok((result, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn truth(vx: &[f64]) -> Vec<GroundTruthSample> {
        vx.iter()
            .enumerate()
            .map(|(i, &v)| GroundTruthSample {
                t: i as f64 * 0.01,
                x: 0.0,
                y: 0.0,
                yaw: 0.0,
                vx: v,
                vy: 0.0,
                yaw_rate: 0.0,
            })
            .collect()
    }

    fn row(vx: f64, yaw_rate: f64) -> CalibrationRow {
        CalibrationRow {
            t: 0.0,
            vx,
            vy: 0.0,
            yaw_rate,
            tan_steer: 0.1,
            direction: driving_direction_sign(vx, DIRECTION_DEADBAND),
        }
    }

    fn synthetic(slope: f64, sigma: f64, n: usize, seed: u64) -> Vec<CalibrationSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        (0..n)
            .map(|i| {
                let x: f64 = rng.random_range(0.05..0.5) * if i % 2 == 0 { 1.0 } else { -1.0 };
                CalibrationSample {
                    x,
                    y: slope * x + noise.sample(&mut rng),
                    direction: Direction::Forward,
                    weight: 1.0,
                }
            })
            .collect()
    }

    #[test]
    fn segmentation_examples() {
        let fwd = segment_truth(&truth(&[0.5; 20]), DIRECTION_DEADBAND);
        assert_eq!(fwd, vec![DirectionSegment { direction: Direction::Forward, start: 0, end: 20 }]);

        let mut v = vec![0.5; 10];
        v.extend([0.05, 0.0, -0.02]);
        v.extend([-0.4; 10]);
        let segs = segment_truth(&truth(&v), DIRECTION_DEADBAND);
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].direction, segs[0].end), (Direction::Forward, 10));
        assert_eq!((segs[1].direction, segs[1].start, segs[1].end), (Direction::Reverse, 13, 23));

        assert!(segment_truth(&truth(&[0.05, -0.05, 0.0]), DIRECTION_DEADBAND).is_empty());
    }

    #[test]
    fn gating_examples() {
        let t = GateThresholds::default();
        assert!(gate_samples(&[row(0.05, 0.2)], CalibrationVariant::OmegaVy, &t).unwrap().is_empty());
        assert_eq!(gate_samples(&[row(1.0, 0.2)], CalibrationVariant::OmegaVy, &t).unwrap().len(), 1);
        assert!(gate_samples(&[], CalibrationVariant::OmegaVy, &t).unwrap().is_empty());
        // Straight driving has no ω-v information but still informs δ-β.
        assert!(gate_samples(&[row(1.0, 0.0)], CalibrationVariant::OmegaVy, &t).unwrap().is_empty());
        assert_eq!(gate_samples(&[row(1.0, 0.0)], CalibrationVariant::DeltaBeta, &t).unwrap().len(), 1);
        assert!(gate_samples(&[row(2.0, 0.6)], CalibrationVariant::OmegaVy, &t).unwrap().is_empty());
        assert!(gate_samples(&[], CalibrationVariant::OmegaVy, &GateThresholds { min_speed: 0.0, ..t }).is_err());
    }

    #[test]
    fn noise_free_slope_is_exact() {
        let samples = synthetic(0.15, 0.0, 200, 1);
        let r = estimate_omega_vy(&samples, 2.9).unwrap();
        let f = r.forward.unwrap();
        assert!((f.slope - 0.15).abs() < 1e-12);
        assert!((f.x_rho + 0.15).abs() < 1e-12);
        assert!(r.reverse.is_none());
    }

    #[test]
    fn noisy_slope_within_three_sigma() {
        let samples = synthetic(0.15, 0.005, 10_000, 2);
        let f = estimate_omega_vy(&samples, 2.9).unwrap().forward.unwrap();
        let rms_x = (samples.iter().map(|s| s.x * s.x).sum::<f64>() / samples.len() as f64).sqrt();
        let bound = 3.0 * 0.005 / ((samples.len() as f64).sqrt() * rms_x);
        assert!((f.slope - 0.15).abs() <= bound, "{} vs bound {bound}", f.slope);
        assert!((f.stderr - 0.005 / ((samples.len() as f64).sqrt() * rms_x)).abs() < 1e-4);
    }

    #[test]
    fn error_shrinks_like_inverse_sqrt_n() {
        // Average |error| over many seeds at each N; ratios between decades
        // should be close to √10.
        let mean_err = |n: usize| {
            (0..200)
                .map(|seed| {
                    let s = synthetic(0.15, 0.01, n, 1000 + seed);
                    (estimate_omega_vy(&s, 2.9).unwrap().forward.unwrap().slope - 0.15).abs()
                })
                .sum::<f64>()
                / 200.0
        };
        let (e2, e3, e4) = (mean_err(100), mean_err(1000), mean_err(10_000));
        for ratio in [e2 / e3, e3 / e4] {
            assert!((ratio / 10f64.sqrt() - 1.0).abs() < 0.25, "{ratio}");
        }
    }

    #[test]
    fn too_few_or_degenerate_samples() {
        let few = synthetic(0.1, 0.0, 10, 3);
        assert!(matches!(estimate_omega_vy(&few, 2.9), Err(Error::InsufficientSamples { needed: 50, got: 10 })));
        let flat: Vec<_> = (0..100)
            .map(|_| CalibrationSample { x: 0.0, y: 0.1, direction: Direction::Reverse, weight: 1.0 })
            .collect();
        assert!(matches!(estimate_omega_vy(&flat, 2.9), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn delta_beta_from_simulated_sweep() {
        use crate::sim::{Scenario, ScenarioModel, Segment, SensorNoise};
        use crate::types::{TireParams, VehicleParams};
        let p = VehicleParams::mid_size_sedan();
        let segments = [0.25, 0.35, -0.3, 0.45]
            .iter()
            .flat_map(|&s| {
                [0.8, -0.8].map(|vx| Segment { vx, steering: Some(s), duration: Some(1.0), ..Segment::default() })
            })
            .collect();
        let sc = Scenario {
            id: "sweep".into(),
            description: String::new(),
            dt: 0.01,
            model: ScenarioModel::Kinematic { x_rho_forward: 0.12, x_rho_reverse: -0.21 },
            initial_x: 0.0,
            initial_y: 0.0,
            initial_yaw: 0.0,
            segments,
        };
        let log = sc.simulate(&p, &TireParams::default(), &SensorNoise::default()).unwrap();
        let (r, _) = calibrate(&log, CalibrationVariant::DeltaBeta, &GateThresholds::default(), p.wheelbase()).unwrap();
        let (f, b) = (r.forward.unwrap(), r.reverse.unwrap());
        assert!((f.k_rho - k_from_x(0.12, p.wheelbase()).unwrap()).abs() < 1e-10, "{f:?}");
        assert!((b.k_rho - k_from_x(-0.21, p.wheelbase()).unwrap()).abs() < 1e-10, "{b:?}");
        let (r, _) = calibrate(&log, CalibrationVariant::OmegaVy, &GateThresholds::default(), p.wheelbase()).unwrap();
        assert!((r.reverse.unwrap().x_rho + 0.21).abs() < 1e-10);
        assert_eq!(r.gating.total, log.sensors.len());
        assert_eq!(r.gating.kept, r.forward.unwrap().n + r.reverse.unwrap().n);
    }

    proptest! {
        #[test]
        fn scale_equivariant_and_consistent(scale in 0.1..10.0f64, seed in 0u64..50) {
            let samples = synthetic(-0.08, 0.003, 120, seed);
            let scaled: Vec<_> = samples
                .iter()
                .map(|s| CalibrationSample { x: s.x * scale, y: s.y * scale, ..*s })
                .collect();
            for est in [estimate_omega_vy, estimate_delta_beta] {
                let a = est(&samples, 2.9).unwrap().forward.unwrap();
                let b = est(&scaled, 2.9).unwrap().forward.unwrap();
                prop_assert!((a.slope - b.slope).abs() < 1e-12);
                prop_assert!((k_from_x(a.x_rho, 2.9).unwrap() - a.k_rho).abs() < 1e-12);
            }
        }
    }
}
