//! Trajectory-error metrics and model comparison.

use serde::{Deserialize, Serialize};

use crate::ekf::{run_filter, FilterConfig, RearAxleEstimate};
use crate::error::{Error, Result};
use crate::types::{interpolate_truth, GroundTruthSample, ManeuverLog};

/// How the estimate is registered to the reference before differencing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    /// Compare positions as given.
    #[default]
    None,
    /// Rigidly move the estimate so its first pose equals the reference pose
    /// at the same time.
    StartPose,
}

/// Empirical quantiles with the nearest-rank rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub p63: f64,
    pub p95: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryErrorReport {
    pub maneuver_id: String,
    pub times: Vec<f64>,
    /// Planar Euclidean error at each time [m].
    pub errors: Vec<f64>,
    pub summary: ErrorSummary,
}

impl TrajectoryErrorReport {
    pub fn final_error(&self) -> f64 {
        *self.errors.last().expect("report has at least one sample")
    }

    pub fn mean_error(&self) -> f64 {
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }
}

/// Smallest sample such that at least a fraction `p` of all samples are less
/// than or equal to it.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

pub fn summarize(errors: &[f64]) -> Result<ErrorSummary> {
    if errors.is_empty() {
        return Err(Error::Empty("error series"));
    }
    if let Some(bad) = errors.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::param("errors", format!("must be finite and >= 0, got {bad}")));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ErrorSummary {
        p63: nearest_rank(&sorted, 0.63),
        p95: nearest_rank(&sorted, 0.95),
        max: sorted[sorted.len() - 1],
    })
}

fn rigid_alignment(first: &RearAxleEstimate, anchor: &GroundTruthSample) -> impl Fn(f64, f64) -> (f64, f64) {
    let rot = anchor.yaw - first.yaw;
    let (s, c) = rot.sin_cos();
    let (ex, ey, ax, ay) = (first.x, first.y, anchor.x, anchor.y);
    move |x, y| {
        let (dx, dy) = (x - ex, y - ey);
        (ax + c * dx - s * dy, ay + s * dx + c * dy)
    }
}

/// Per-sample planar distance between an estimate and the reference,
/// interpolated to the estimate's timestamps. Estimate samples outside the
/// reference time range are skipped.
pub fn trajectory_error(
    estimate: &[RearAxleEstimate],
    reference: &[GroundTruthSample],
    alignment: Alignment,
    maneuver_id: &str,
) -> Result<TrajectoryErrorReport> {
    let (Some(first_ref), Some(last_ref)) = (reference.first(), reference.last()) else {
        return Err(Error::Empty("reference"));
    };
    let inside: Vec<_> = estimate
        .iter()
        .filter(|e| e.t >= first_ref.t && e.t <= last_ref.t)
        .collect();
    let Some(first) = inside.first() else {
        return Err(Error::NoOverlap);
    };
    let anchor = interpolate_truth(reference, first.t);
    let align = rigid_alignment(first, &anchor);
    let mut times = Vec::with_capacity(inside.len());
    let mut errors = Vec::with_capacity(inside.len());
    for e in inside {
        let (x, y) = match alignment {
            Alignment::None => (e.x, e.y),
            Alignment::StartPose => align(e.x, e.y),
        };
        let r = interpolate_truth(reference, e.t);
        times.push(e.t);
        errors.push((x - r.x).hypot(y - r.y));
    }
    let summary = summarize(&errors)?;
    Ok(TrajectoryErrorReport {
        maneuver_id: maneuver_id.to_string(),
        times,
        errors,
        summary,
    })
}

/// Scalar that represents one manoeuvre in a comparison.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorReduction {
    /// Error at the end of the manoeuvre.
    #[default]
    Final,
    Max,
    Mean,
}

impl ErrorReduction {
    pub fn apply(self, report: &TrajectoryErrorReport) -> f64 {
        match self {
            ErrorReduction::Final => report.final_error(),
            ErrorReduction::Max => report.summary.max,
            ErrorReduction::Mean => report.mean_error(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub maneuver_id: String,
    /// One value per model, in model order [m].
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub models: Vec<String>,
    pub reduction: ErrorReduction,
    pub rows: Vec<ComparisonRow>,
    /// Quantiles over every sample of every manoeuvre, per model.
    pub pooled: Vec<ErrorSummary>,
}

impl ModelComparison {
    /// Manoeuvres where `candidate` beats `baseline`, with the gain in metres.
    pub fn improvements(&self, baseline: usize, candidate: usize) -> Vec<(String, f64)> {
        self.rows
            .iter()
            .filter(|r| r.values[candidate] < r.values[baseline])
            .map(|r| (r.maneuver_id.clone(), r.values[baseline] - r.values[candidate]))
            .collect()
    }
}

/// Build a comparison from already evaluated reports; `reports[m][j]` is
/// model `m` on manoeuvre `j`.
pub fn comparison_from_reports(
    models: Vec<String>,
    reports: &[Vec<TrajectoryErrorReport>],
    reduction: ErrorReduction,
) -> Result<ModelComparison> {
    if models.is_empty() || models.len() != reports.len() {
        return Err(Error::param("models", "need one report list per model"));
    }
    let count = reports[0].len();
    if count == 0 {
        return Err(Error::Empty("maneuvers"));
    }
    if reports.iter().any(|r| r.len() != count) {
        return Err(Error::param("models", "every model needs a report per maneuver"));
    }
    let rows = (0..count)
        .map(|j| ComparisonRow {
            maneuver_id: reports[0][j].maneuver_id.clone(),
            values: reports.iter().map(|m| reduction.apply(&m[j])).collect(),
        })
        .collect();
    let pooled = reports
        .iter()
        .map(|m| summarize(&m.iter().flat_map(|r| r.errors.iter().copied()).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelComparison {
        models,
        reduction,
        rows,
        pooled,
    })
}

/// Run every named configuration over every log and tabulate the errors.
pub fn compare_models(
    logs: &[ManeuverLog],
    configs: &[(String, FilterConfig)],
    reduction: ErrorReduction,
) -> Result<ModelComparison> {
    let reports = configs
        .iter()
        .map(|(_, cfg)| {
            logs.iter()
                .map(|log| {
                    let truth = log.truth.as_deref().ok_or_else(|| {
                        Error::InvalidLog(format!("maneuver `{}` has no truth", log.metadata.maneuver_id))
                    })?;
                    let out = run_filter(log, cfg)?;
                    trajectory_error(&out.rear_axle_track(), truth, Alignment::StartPose, &log.metadata.maneuver_id)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    comparison_from_reports(configs.iter().map(|(n, _)| n.clone()).collect(), &reports, reduction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference(n: usize) -> Vec<GroundTruthSample> {
        (0..n)
            .map(|i| {
                let t = i as f64 * 0.1;
                GroundTruthSample {
                    t,
                    x: 2.0 * t.sin(),
                    y: t * 0.5,
                    yaw: 0.3 * t,
                    vx: 1.0,
                    vy: 0.0,
                    yaw_rate: 0.3,
                }
            })
            .collect()
    }

    fn as_estimate(truth: &[GroundTruthSample], dx: f64, dy: f64) -> Vec<RearAxleEstimate> {
        truth
            .iter()
            .map(|g| RearAxleEstimate {
                t: g.t,
                x: g.x + dx,
                y: g.y + dy,
                yaw: g.yaw,
                vx: g.vx,
                vy: g.vy,
            })
            .collect()
    }

    #[test]
    fn identical_and_offset_trajectories() {
        let r = reference(50);
        let same = trajectory_error(&as_estimate(&r, 0.0, 0.0), &r, Alignment::None, "m").unwrap();
        assert!(same.errors.iter().all(|&e| e == 0.0));
        let off = trajectory_error(&as_estimate(&r, 0.3, 0.4), &r, Alignment::None, "m").unwrap();
        assert!(off.errors.iter().all(|&e| (e - 0.5).abs() < 1e-12));
        let aligned = trajectory_error(&as_estimate(&r, 0.3, 0.4), &r, Alignment::StartPose, "m").unwrap();
        assert!(aligned.summary.max < 1e-12);
    }

    #[test]
    fn no_overlap_is_an_error() {
        let r = reference(10);
        let mut est = as_estimate(&r, 0.0, 0.0);
        for e in &mut est {
            e.t += 100.0;
        }
        assert!(matches!(trajectory_error(&est, &r, Alignment::None, "m"), Err(Error::NoOverlap)));
    }

    #[test]
    fn nearest_rank_examples() {
        let ramp: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(summarize(&ramp).unwrap(), ErrorSummary { p63: 63.0, p95: 95.0, max: 100.0 });
        assert_eq!(summarize(&[0.2]).unwrap(), ErrorSummary { p63: 0.2, p95: 0.2, max: 0.2 });
        assert!(summarize(&[]).is_err());
        for n in 1..=300usize {
            let ramp: Vec<f64> = (1..=n).map(|v| v as f64).collect();
            let s = summarize(&ramp).unwrap();
            assert_eq!(s.p63, (63 * n).div_ceil(100) as f64);
            assert_eq!(s.p95, (95 * n).div_ceil(100) as f64);
        }
    }

    #[test]
    fn reductions_pick_expected_values() {
        let errors = vec![0.0, 0.4, 0.1, 0.2];
        let report = TrajectoryErrorReport {
            maneuver_id: "m".into(),
            times: vec![0.0, 1.0, 2.0, 3.0],
            summary: summarize(&errors).unwrap(),
            errors,
        };
        assert_eq!(ErrorReduction::Final.apply(&report), 0.2);
        assert_eq!(ErrorReduction::Max.apply(&report), 0.4);
        assert!((ErrorReduction::Mean.apply(&report) - 0.175).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn summary_monotone(mut errors in prop::collection::vec(0.0..10.0f64, 1..200), extra in 0.0..5.0f64) {
            let before = summarize(&errors).unwrap();
            prop_assert!(before.p63 <= before.p95 && before.p95 <= before.max);
            errors.push(before.max + extra);
            let after = summarize(&errors).unwrap();
            prop_assert!(after.p63 >= before.p63 && after.p95 >= before.p95 && after.max >= before.max);
        }

        #[test]
        fn rigid_transform_invariance(rot in -3.0..3.0f64, tx in -50.0..50.0f64, ty in -50.0..50.0f64,
                                      dx in -1.0..1.0f64, dy in -1.0..1.0f64) {
            let r = reference(40);
            let mut est = as_estimate(&r, dx, dy);
            for (i, e) in est.iter_mut().enumerate() {
                e.x += 0.01 * i as f64;
                e.yaw += 0.02;
            }
            let (s, c) = rot.sin_cos();
            let move_truth = |g: &GroundTruthSample| GroundTruthSample {
                x: tx + c * g.x - s * g.y,
                y: ty + s * g.x + c * g.y,
                yaw: g.yaw + rot,
                ..*g
            };
            let r2: Vec<_> = r.iter().map(move_truth).collect();
            let est2: Vec<_> = est
                .iter()
                .map(|e| RearAxleEstimate { x: tx + c * e.x - s * e.y, y: ty + s * e.x + c * e.y, yaw: e.yaw + rot, ..*e })
                .collect();
            for align in [Alignment::None, Alignment::StartPose] {
                let a = trajectory_error(&est, &r, align, "m").unwrap();
                let b = trajectory_error(&est2, &r2, align, "m").unwrap();
                for (ea, eb) in a.errors.iter().zip(&b.errors) {
                    prop_assert!((ea - eb).abs() < 1e-9);
                }
            }
        }
    }
}
