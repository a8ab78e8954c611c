use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use parkodo_core::calibration::{calibrate, CalibrationVariant};
use parkodo_core::config::{load_scenario, ModelName, RunConfig};
use parkodo_core::disturbance::{analyze, CirclePerturbationSpec};
use parkodo_core::ekf::run_filter;
use parkodo_core::evaluation::{comparison_from_reports, trajectory_error, Alignment, ModelComparison, TrajectoryErrorReport};
use parkodo_core::io;
use parkodo_core::report;
use parkodo_core::{Error, ManeuverLog, Result};

use crate::manifest::Manifest;
use crate::{Cli, Command, VariantArg};

pub const COMPARISON_FILE: &str = "comparison.json";

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config <path>".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.noise.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> Result<PathBuf> {
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.paths.out.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn log_dir(arg: &Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    arg.clone()
        .or_else(|| cfg.paths.log.clone())
        .ok_or_else(|| Error::Config("no log directory: pass --log or set paths.log".into()))
}

fn log_files(dir: &Path) -> Vec<PathBuf> {
    [io::SENSOR_FILE, io::TRUTH_FILE, io::METADATA_FILE]
        .iter()
        .map(|f| dir.join(f))
        .filter(|p| p.exists())
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { scenario } => simulate(cli, scenario.as_deref()),
        Command::Calibrate { log, variant } => calibrate_cmd(cli, log, *variant),
        Command::Filter { log } => filter(cli, log),
        Command::Disturb {
            delta_x,
            vx,
            yaw_rate,
            turn_angle_deg,
            steps,
        } => disturb(
            cli,
            CirclePerturbationSpec {
                vx: *vx,
                yaw_rate: *yaw_rate,
                delta_x: *delta_x,
                turn_angle_deg: *turn_angle_deg,
            },
            *steps,
        ),
        Command::Evaluate { logs } => evaluate(cli, logs),
        Command::Report {
            input,
            baseline,
            candidate,
        } => report_cmd(cli, input, baseline, candidate),
    }
}

fn simulate(cli: &Cli, scenario_path: Option<&Path>) -> Result<()> {
    let mut cfg = load_config(cli)?;
    let scenario = match scenario_path {
        Some(p) => load_scenario(p)?,
        None => cfg
            .scenario
            .clone()
            .ok_or_else(|| Error::Config("no scenario: pass --scenario or add a [scenario] section".into()))?,
    };
    let out = out_dir(cli, Some(&cfg))?;
    let log = scenario.simulate(&cfg.vehicle, &cfg.tire, &cfg.noise)?;
    io::write_log(&out, &log)?;
    cfg.scenario = Some(scenario);
    let outputs = log_files(&out);
    Manifest::write(&out, "simulate", Some(cfg.noise.seed), Some(cfg.to_toml_string()?), &[], &outputs)?;
    let last = log.truth.as_ref().and_then(|t| t.last()).expect("simulated logs carry truth");
    println!(
        "simulated {} samples over {:.2} s, final pose ({:.3}, {:.3}, {:.2} deg) -> {}",
        log.sensors.len(),
        log.duration(),
        last.x,
        last.y,
        last.yaw.to_degrees(),
        out.display()
    );
    Ok(())
}

fn calibrate_cmd(cli: &Cli, log_arg: &Option<PathBuf>, variant: VariantArg) -> Result<()> {
    let cfg = load_config(cli)?;
    let dir = log_dir(log_arg, &cfg)?;
    let log = io::read_log(&dir)?;
    let out = out_dir(cli, Some(&cfg))?;
    let variants: &[CalibrationVariant] = match variant {
        VariantArg::OmegaVy => &[CalibrationVariant::OmegaVy],
        VariantArg::DeltaBeta => &[CalibrationVariant::DeltaBeta],
        VariantArg::Both => &[CalibrationVariant::OmegaVy, CalibrationVariant::DeltaBeta],
    };
    let mut outputs = Vec::new();
    for &v in variants {
        let (result, samples) = calibrate(&log, v, &cfg.calibration, cfg.vehicle.wheelbase())?;
        let name = match v {
            CalibrationVariant::OmegaVy => "omega-vy",
            CalibrationVariant::DeltaBeta => "delta-beta",
        };
        let json = out.join(format!("calibration.{name}.json"));
        std::fs::write(&json, io::calibration_json(&result)?)?;
        let scatter = out.join(format!("scatter.{name}.csv"));
        io::write_scatter(create(&scatter)?, &samples)?;
        outputs.extend([json, scatter]);
        for (label, fit) in [("forward", result.forward), ("reverse", result.reverse)] {
            match fit {
                Some(f) => println!(
                    "{name} {label}: x_rho = {:.4} m, k_rho = {:.4}, stderr = {:.2e}, n = {}",
                    f.x_rho, f.k_rho, f.stderr, f.n
                ),
                None => println!("{name} {label}: not enough samples"),
            }
        }
    }
    Manifest::write(&out, "calibrate", None, Some(cfg.to_toml_string()?), &log_files(&dir), &outputs)?;
    Ok(())
}

fn filter(cli: &Cli, log_arg: &Option<PathBuf>) -> Result<()> {
    let cfg = load_config(cli)?;
    let dir = log_dir(log_arg, &cfg)?;
    let log = io::read_log(&dir)?;
    let out = out_dir(cli, Some(&cfg))?;
    let model = cli.model.unwrap_or(cfg.lateral_model.kind);
    let output = run_filter(&log, &cfg.filter_config(model)?)?;
    let name = model.as_str();
    let states = out.join(format!("filter.{name}.csv"));
    io::write_filter_output(create(&states)?, &output)?;
    let innovations = out.join(format!("innovations.{name}.csv"));
    io::write_innovations(create(&innovations)?, &output)?;
    let mut outputs = vec![states, innovations];
    let rejected = output.innovations.iter().filter(|r| !r.accepted).count();
    println!("{name}: {} steps, {rejected} gated measurements", output.records.len());
    if let Some(truth) = &log.truth {
        let report = trajectory_error(&output.rear_axle_track(), truth, Alignment::StartPose, &log.metadata.maneuver_id)?;
        let errors = out.join(format!("error.{name}.csv"));
        io::write_trajectory_error(create(&errors)?, &report)?;
        outputs.push(errors);
        println!(
            "{name}: final error {:.4} m, p63 {:.4} m, p95 {:.4} m, max {:.4} m",
            report.final_error(),
            report.summary.p63,
            report.summary.p95,
            report.summary.max
        );
    }
    Manifest::write(&out, "filter", None, Some(cfg.to_toml_string()?), &log_files(&dir), &outputs)?;
    Ok(())
}

fn disturb(cli: &Cli, spec: CirclePerturbationSpec, steps: usize) -> Result<()> {
    let out = out_dir(cli, None)?;
    let report = analyze(&spec, steps)?;
    let csv = out.join("disturbance.csv");
    io::write_disturbance(create(&csv)?, &report)?;
    let json = out.join("disturbance.json");
    io::write_json(&json, &report)?;
    Manifest::write(&out, "disturb", None, None, &[], &[csv, json])?;
    println!("e_max = {:.4} m, e_90 = {:.4} m", report.e_max, report.e_90);
    Ok(())
}

fn evaluate_log(dir: &Path, cfg: &RunConfig, models: &[ModelName]) -> Result<Vec<TrajectoryErrorReport>> {
    let mut log: ManeuverLog = io::read_log(dir)?;
    if log.metadata.maneuver_id.is_empty() {
        log.metadata.maneuver_id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    let truth = log
        .truth
        .clone()
        .ok_or_else(|| Error::InvalidLog(format!("{} has no truth", dir.display())))?;
    models
        .iter()
        .map(|&m| {
            let out = run_filter(&log, &cfg.filter_config(m)?)?;
            trajectory_error(&out.rear_axle_track(), &truth, Alignment::StartPose, &log.metadata.maneuver_id)
        })
        .collect()
}

fn evaluate(cli: &Cli, logs: &[PathBuf]) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = out_dir(cli, Some(&cfg))?;
    let candidate = cli.model.unwrap_or(ModelName::OmegaVy);
    let mut models = vec![ModelName::ZeroSlip];
    if candidate != ModelName::ZeroSlip {
        models.push(candidate);
    }
    let per_log: Vec<Result<Vec<TrajectoryErrorReport>>> = std::thread::scope(|s| {
        let handles: Vec<_> = logs
            .iter()
            .map(|dir| {
                let (cfg, models) = (&cfg, &models);
                s.spawn(move || evaluate_log(dir, cfg, models))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("evaluation thread panicked")).collect()
    });
    let per_log = per_log.into_iter().collect::<Result<Vec<_>>>()?;
    let by_model: Vec<Vec<TrajectoryErrorReport>> = (0..models.len())
        .map(|m| per_log.iter().map(|reports| reports[m].clone()).collect())
        .collect();
    let comparison = comparison_from_reports(
        models.iter().map(|m| m.as_str().to_string()).collect(),
        &by_model,
        cfg.evaluation.reduction,
    )?;
    let mut outputs = Vec::new();
    for (m, reports) in models.iter().zip(&by_model) {
        for r in reports {
            let path = out.join(format!("error.{}.{}.csv", r.maneuver_id, m.as_str()));
            io::write_trajectory_error(create(&path)?, r)?;
            outputs.push(path);
        }
    }
    let path = out.join(COMPARISON_FILE);
    std::fs::write(&path, report::comparison_json(&comparison)?)?;
    outputs.push(path);
    let inputs: Vec<PathBuf> = logs.iter().flat_map(|d| log_files(d)).collect();
    Manifest::write(&out, "evaluate", None, Some(cfg.to_toml_string()?), &inputs, &outputs)?;
    print!("{}", report::maneuver_markdown(&comparison, 0, models.len() - 1)?);
    Ok(())
}

fn load_comparison(input: &Path) -> Result<ModelComparison> {
    let file = if input.is_dir() {
        let manifest = input.join(Manifest::file_name("evaluate"));
        if manifest.exists() {
            Manifest::read(&manifest)?.verify_outputs(input)?;
        }
        input.join(COMPARISON_FILE)
    } else {
        input.to_path_buf()
    };
    let text = std::fs::read_to_string(&file)?;
    Ok(serde_json::from_str(&text)?)
}

fn report_cmd(cli: &Cli, input: &Path, baseline: &str, candidate: &str) -> Result<()> {
    let comparison = load_comparison(input)?;
    let index = |name: &str| {
        comparison
            .models
            .iter()
            .position(|m| m == name)
            .ok_or_else(|| Error::Config(format!("model `{name}` is not in the comparison")))
    };
    let (b, c) = (index(baseline)?, index(candidate)?);
    let out = out_dir(cli, None)?;
    let files = [
        ("summary.md", report::summary_markdown(&comparison)?),
        ("summary.csv", report::summary_csv(&comparison)?),
        ("maneuvers.md", report::maneuver_markdown(&comparison, b, c)?),
        ("maneuvers.csv", report::maneuver_csv(&comparison)?),
        ("maneuvers.svg", report::maneuver_bars_svg(&comparison)?),
        ("report.json", report::comparison_json(&comparison)?),
    ];
    let mut outputs = Vec::new();
    for (name, body) in files {
        let path = out.join(name);
        std::fs::write(&path, body)?;
        outputs.push(path);
    }
    let source = if input.is_dir() { input.join(COMPARISON_FILE) } else { input.to_path_buf() };
    Manifest::write(&out, "report", None, None, &[source], &outputs)?;
    print!("{}", report::summary_markdown(&comparison)?);
    Ok(())
}
