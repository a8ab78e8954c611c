//! File formats.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value bit for bit.
//!
//! | file | columns |
//! |---|---|
//! | sensor log | `t,ax,ay,az,wx,wy,wz,ws_fl,ws_fr,ws_rl,ws_rr,delta_f,gear` |
//! | truth | `t,X,Y,psi,vx,vy,wz` |
//! | filter output | `t,vx,vy,vz,qw,qx,qy,qz,X,Y,Z,P_vx,…,P_Z` |
//! | innovations | `t,channel,measurement,innovation,variance,accepted` |
//! | calibration scatter | `x,y,direction` |
//! | disturbance | `phase,dX,dY,e` |
//! | trajectory error | `t,error` |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationResult, CalibrationSample};
use crate::disturbance::DisturbanceReport;
use crate::ekf::{FilterOutput, STATE_DIM};
use crate::error::{Error, Result};
use crate::evaluation::TrajectoryErrorReport;
use crate::types::{Direction, Gear, GroundTruthSample, LogMetadata, ManeuverLog, SensorSample};

pub const SENSOR_FILE: &str = "sensors.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Serialize, Deserialize)]
struct SensorRow {
    t: f64,
    ax: f64,
    ay: f64,
    az: f64,
    wx: f64,
    wy: f64,
    wz: f64,
    ws_fl: f64,
    ws_fr: f64,
    ws_rl: f64,
    ws_rr: f64,
    delta_f: f64,
    gear: Gear,
}

impl From<&SensorSample> for SensorRow {
    fn from(s: &SensorSample) -> Self {
        Self {
            t: s.t,
            ax: s.accel[0],
            ay: s.accel[1],
            az: s.accel[2],
            wx: s.gyro[0],
            wy: s.gyro[1],
            wz: s.gyro[2],
            ws_fl: s.wheel_speeds[0],
            ws_fr: s.wheel_speeds[1],
            ws_rl: s.wheel_speeds[2],
            ws_rr: s.wheel_speeds[3],
            delta_f: s.steering,
            gear: s.gear,
        }
    }
}

impl From<SensorRow> for SensorSample {
    fn from(r: SensorRow) -> Self {
        Self {
            t: r.t,
            accel: [r.ax, r.ay, r.az],
            gyro: [r.wx, r.wy, r.wz],
            wheel_speeds: [r.ws_fl, r.ws_fr, r.ws_rl, r.ws_rr],
            steering: r.delta_f,
            gear: r.gear,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TruthRow {
    t: f64,
    #[serde(rename = "X")]
    x: f64,
    #[serde(rename = "Y")]
    y: f64,
    psi: f64,
    vx: f64,
    vy: f64,
    wz: f64,
}

impl From<&GroundTruthSample> for TruthRow {
    fn from(g: &GroundTruthSample) -> Self {
        Self {
            t: g.t,
            x: g.x,
            y: g.y,
            psi: g.yaw,
            vx: g.vx,
            vy: g.vy,
            wz: g.yaw_rate,
        }
    }
}

impl From<TruthRow> for GroundTruthSample {
    fn from(r: TruthRow) -> Self {
        Self {
            t: r.t,
            x: r.x,
            y: r.y,
            yaw: r.psi,
            vx: r.vx,
            vy: r.vy,
            yaw_rate: r.wz,
        }
    }
}

fn write_rows<W: Write, T: Serialize>(writer: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(reader: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn write_sensors<W: Write>(writer: W, sensors: &[SensorSample]) -> Result<()> {
    write_rows(writer, sensors.iter().map(SensorRow::from))
}

pub fn read_sensors<R: Read>(reader: R) -> Result<Vec<SensorSample>> {
    Ok(read_rows::<_, SensorRow>(reader)?.into_iter().map(Into::into).collect())
}

pub fn write_truth<W: Write>(writer: W, truth: &[GroundTruthSample]) -> Result<()> {
    write_rows(writer, truth.iter().map(TruthRow::from))
}

pub fn read_truth<R: Read>(reader: R) -> Result<Vec<GroundTruthSample>> {
    Ok(read_rows::<_, TruthRow>(reader)?.into_iter().map(Into::into).collect())
}

/// Write a log as `sensors.csv`, `truth.csv` (when present) and
/// `metadata.json` inside `dir`.
pub fn write_log(dir: &Path, log: &ManeuverLog) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_sensors(create(&dir.join(SENSOR_FILE))?, &log.sensors)?;
    if let Some(truth) = &log.truth {
        write_truth(create(&dir.join(TRUTH_FILE))?, truth)?;
    }
    write_json(&dir.join(METADATA_FILE), &log.metadata)
}

/// Read a log written by [`write_log`]; truth and metadata are optional.
pub fn read_log(dir: &Path) -> Result<ManeuverLog> {
    let sensors = read_sensors(open(&dir.join(SENSOR_FILE))?)?;
    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.exists() {
        Some(read_truth(open(&truth_path)?)?)
    } else {
        None
    };
    let meta_path = dir.join(METADATA_FILE);
    let metadata = if meta_path.exists() {
        serde_json::from_reader(open(&meta_path)?)?
    } else {
        LogMetadata::default()
    };
    ManeuverLog::new(sensors, truth, metadata)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

const STATE_NAMES: [&str; STATE_DIM] = ["vx", "vy", "vz", "qw", "qx", "qy", "qz", "X", "Y", "Z"];

pub fn write_filter_output<W: Write>(writer: W, output: &FilterOutput) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = std::iter::once("t".to_string())
        .chain(STATE_NAMES.iter().map(|s| s.to_string()))
        .collect();
    header.extend(STATE_NAMES.iter().map(|s| format!("P_{s}")));
    w.write_record(&header)?;
    for r in &output.records {
        let x = r.state.to_vector();
        let fields: Vec<String> = std::iter::once(r.t)
            .chain(x.iter().copied())
            .chain(r.covariance_diagonal.iter().copied())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_innovations<W: Write>(writer: W, output: &FilterOutput) -> Result<()> {
    write_rows(writer, &output.innovations)
}

/// Per-direction `{x_rho, k_rho, stderr, n, rms}` plus variant and gating.
pub fn calibration_json(result: &CalibrationResult) -> Result<String> {
    let mut s = serde_json::to_string_pretty(result)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct ScatterRow {
    x: f64,
    y: f64,
    direction: Direction,
}

pub fn write_scatter<W: Write>(writer: W, samples: &[CalibrationSample]) -> Result<()> {
    write_rows(
        writer,
        samples.iter().map(|s| ScatterRow {
            x: s.x,
            y: s.y,
            direction: s.direction,
        }),
    )
}

#[derive(Serialize)]
struct DisturbanceRow {
    phase: f64,
    #[serde(rename = "dX")]
    dx: f64,
    #[serde(rename = "dY")]
    dy: f64,
    e: f64,
}

pub fn write_disturbance<W: Write>(writer: W, report: &DisturbanceReport) -> Result<()> {
    write_rows(
        writer,
        report.samples.iter().map(|s| DisturbanceRow {
            phase: s.phase,
            dx: s.dx,
            dy: s.dy,
            e: s.error,
        }),
    )
}

#[derive(Serialize)]
struct ErrorRow {
    t: f64,
    error: f64,
}

pub fn write_trajectory_error<W: Write>(writer: W, report: &TrajectoryErrorReport) -> Result<()> {
    write_rows(
        writer,
        report.times.iter().zip(&report.errors).map(|(&t, &error)| ErrorRow { t, error }),
    )
}
