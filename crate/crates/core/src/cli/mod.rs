// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: configuration, commands and artifacts.

mod config;
mod output;

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

pub use config::{parse_config, serialize_config, AnalysisConfig, ConfigError, InitConfig, RunConfig};
pub use output::{
    commit_files, fmt_g12, line_chart, sweep_csv, trajectory_csv, Series, SWEEP_HEADER, TRAJECTORY_HEADER,
};

use crate::analysis::{
    averaging_order, default_window, demodulate_populations, fd_jacobian12, labframe_report, linearized12,
    linearized12_eigenvalues, lyapunov_check, predicted_times, AveragingSetup, LinearizedParams,
};
use crate::observers::Gains12;
use crate::qmat::{rot12, PureState};
use crate::sim::{monte_carlo, run_two_step, TwoStepRun};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] crate::Error),
    #[error("check failed: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Check(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "trilevel",
    version,
    about = "Two-step estimation of Rabi amplitudes in a three-level system"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one two-step estimation.
    Estimate(CommonArgs),
    /// Run a Monte Carlo sweep over noise seeds.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of runs.
        #[arg(short = 'n', long, default_value_t = 20)]
        runs: usize,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run one of the analysis checks.
    Analyze {
        which: Check,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Same as `analyze rwa`.
    ValidateRwa(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Averaging,
    Linearization,
    Lyapunov,
    Demodulation,
    Rwa,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Averaging => "averaging",
            Check::Linearization => "linearization",
            Check::Lyapunov => "lyapunov",
            Check::Demodulation => "demodulation",
            Check::Rwa => "rwa",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Configuration file (dotted `section.key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Noise seed (first seed for `sweep`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Standard deviation of the output noise.
    #[arg(long)]
    pub noise_output: Option<f64>,
    /// Standard deviation of the input noise.
    #[arg(long)]
    pub noise_input: Option<f64>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plots: bool,
}

/// Reads the configuration and applies command-line overrides.
pub fn load_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigError::Parse {
            line: 0,
            message: format!("cannot read {}: {e}", p.display()),
        })?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.noise.seed = seed;
    }
    if let Some(s) = args.noise_output {
        cfg.noise.output_std = s;
    }
    if let Some(s) = args.noise_input {
        cfg.noise.input_std = s;
    }
    cfg.emit_plots |= args.plots;
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a parsed command line; returns the paths written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match cli.command {
        Command::Estimate(a) => cmd_estimate(&load_config(&a)?),
        Command::Sweep { common, runs, jobs } => {
            let cfg = load_config(&common)?;
            cmd_sweep(&cfg, runs, cfg.noise.seed, jobs)
        }
        Command::Analyze { which, common } => cmd_analyze(&load_config(&common)?, which),
        Command::ValidateRwa(a) => cmd_analyze(&load_config(&a)?, Check::Rwa),
    }
}

fn to_json(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s.into_bytes()
}

fn estimates_svg(cfg: &RunConfig, run: &TwoStepRun) -> String {
    let traj = &run.trajectory;
    let (t0, t1) = (0.0, cfg.sim.t2_end);
    line_chart(
        "Parameter estimates",
        "t",
        &[
            Series {
                label: "Ω̂12",
                color: "#1f77b4",
                points: traj.omega12_series(),
                dashed: false,
            },
            Series {
                label: "Ω̂23",
                color: "#d62728",
                points: traj.omega23_series(),
                dashed: false,
            },
            Series {
                label: "Ω12",
                color: "#1f77b4",
                points: vec![(t0, cfg.plant.omega12), (t1, cfg.plant.omega12)],
                dashed: true,
            },
            Series {
                label: "Ω23",
                color: "#d62728",
                points: vec![(t0, cfg.plant.omega23), (t1, cfg.plant.omega23)],
                dashed: true,
            },
        ],
    )
}

/// Single two-step run: `trajectory.csv`, `summary.json` and optionally
/// `estimates.svg`.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let sc = cfg.scenario()?;
    let run = run_two_step(&sc)?;
    let (p12, p23) = predicted_times(&sc.gains12, &sc.gains23, &sc.plant);
    let summary = json!({
        "result": run.result,
        "omega12_true": sc.plant.omega12,
        "omega23_true": sc.plant.omega23,
        "predicted_tconv12": p12,
        "predicted_tconv23": p23,
        "samples": run.trajectory.len(),
        "config": serialize_config(cfg),
    });
    let mut files = vec![
        ("trajectory.csv", trajectory_csv(&run.trajectory).into_bytes()),
        ("summary.json", to_json(&summary)),
    ];
    if cfg.emit_plots {
        files.push(("estimates.svg", estimates_svg(cfg, &run).into_bytes()));
    }
    Ok(commit_files(&cfg.output_dir, &files)?)
}

/// Monte Carlo sweep: `sweep.csv` and `sweep_summary.json`.
pub fn cmd_sweep(cfg: &RunConfig, n: usize, seed0: u64, jobs: usize) -> Result<Vec<PathBuf>, CliError> {
    let sc = cfg.scenario()?;
    let report = monte_carlo(&sc, n, seed0, jobs.max(1))?;
    let summary = json!({
        "seed0": seed0,
        "noisy": sc.noise.is_some(),
        "summary": report.summary,
    });
    let mut files = vec![
        ("sweep.csv", sweep_csv(&report.runs).into_bytes()),
        ("sweep_summary.json", to_json(&summary)),
    ];
    let errs23: Vec<(f64, f64)> = report
        .runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|e| (r.seed as f64, e.rel_err23)))
        .collect();
    if cfg.emit_plots {
        let chart = line_chart(
            "Relative error of Ω̂23 per seed",
            "seed",
            &[Series {
                label: "rel_err23",
                color: "#d62728",
                points: errs23,
                dashed: false,
            }],
        );
        files.push(("sweep.svg", chart.into_bytes()));
    }
    Ok(commit_files(&cfg.output_dir, &files)?)
}

fn check_outcome(passed: bool, mut report: serde_json::Value, which: Check) -> (bool, serde_json::Value) {
    report["check"] = json!(which.name());
    report["passed"] = json!(passed);
    (passed, report)
}

fn analysis_report(cfg: &RunConfig, which: Check) -> Result<(bool, serde_json::Value), CliError> {
    let g12: Gains12 = cfg.gains12;
    let out = match which {
        Check::Averaging => {
            let setup = AveragingSetup {
                omega12: cfg.plant.omega12,
                gamma_big: g12.gamma_big,
                gamma_small: g12.gamma_small,
                ..AveragingSetup::default()
            };
            let r = averaging_order(&setup, &[0.1, 0.05, 0.025, 0.0125])?;
            let pass = (r.slope - 1.0).abs() <= 0.15;
            check_outcome(pass, json!({ "averaging": r, "slope_tolerance": 0.15 }), which)
        }
        Check::Linearization => {
            let lp = LinearizedParams {
                gamma_big: g12.gamma_big,
                gamma_small: g12.gamma_small,
                epsilon: g12.epsilon,
                a: cfg.analysis.a,
            };
            lp.validate()?;
            let exact = linearized12(&lp);
            let fd = fd_jacobian12(&lp, 1e-5)?;
            let mut fd_err: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    fd_err = fd_err.max((exact[i][j] - fd[i][j]).abs());
                }
            }
            let evs = linearized12_eigenvalues(&lp);
            let stable = evs.iter().all(|e| e.re < 0.0);
            let pass = stable && fd_err <= 1e-5;
            check_outcome(
                pass,
                json!({
                    "params": lp,
                    "jacobian": exact,
                    "fd_max_abs_error": fd_err,
                    "eigenvalues": evs.iter().map(|e| [e.re, e.im]).collect::<Vec<_>>(),
                    "stable": stable,
                }),
                which,
            )
        }
        Check::Lyapunov => {
            let a = cfg.analysis;
            let r = lyapunov_check(&g12, a.lyapunov_trajectories, a.seed, a.lyapunov_horizon, a.lyapunov_dt)?;
            let pass = r.passed;
            check_outcome(pass, json!({ "lyapunov": r, "nonincreasing": pass }), which)
        }
        Check::Demodulation => {
            let rate = cfg.plant.omega12;
            let xi = PureState::from_amplitudes([0.6, 0.5, 0.3])?;
            let dt = 0.01;
            let window = default_window(rate);
            let n = ((2.0 * window) / dt).ceil() as usize;
            let (y, theta): (Vec<_>, Vec<_>) = (0..=n)
                .map(|k| {
                    let t = k as f64 * dt;
                    let th = rate * t;
                    ((t, rot12(th).conjugate_sym(xi.matrix()).get(0, 0)), (t, th))
                })
                .unzip();
            let (p1, p2) = demodulate_populations(&y, &theta, window)?;
            let (x1, x2) = (xi.population(1)?, xi.population(2)?);
            let err1 = p1.iter().fold(0.0f64, |m, &(_, v)| m.max((v - x1).abs()));
            let err2 = p2.iter().fold(0.0f64, |m, &(_, v)| m.max((v - x2).abs()));
            let pass = err1 <= 1e-3 && err2 <= 1e-3;
            check_outcome(
                pass,
                json!({
                    "window": window,
                    "population1": x1,
                    "population2": x2,
                    "max_error1": err1,
                    "max_error2": err2,
                    "tolerance": 1e-3,
                }),
                which,
            )
        }
        Check::Rwa => {
            let horizon = 2.0 * PI / cfg.lab.rabi12().abs();
            let r = labframe_report(&cfg.lab, 1.0, 0.0, horizon)?;
            let pass = r.population_gap <= 0.05;
            check_outcome(pass, json!({ "rwa": r, "horizon": horizon, "tolerance": 0.05 }), which)
        }
    };
    Ok(out)
}

/// Runs one analysis check and writes `analysis_<check>.json`. The report
/// is written whether or not the check passes.
pub fn cmd_analyze(cfg: &RunConfig, which: Check) -> Result<Vec<PathBuf>, CliError> {
    let (passed, report) = analysis_report(cfg, which)?;
    let name = format!("analysis_{}.json", which.name());
    let written = commit_files(&cfg.output_dir, &[(name.as_str(), to_json(&report))])?;
    if passed {
        Ok(written)
    } else {
        Err(CliError::Check(format!(
            "{} check outside tolerance; see {}",
            which.name(),
            cfg.output_dir.join(&name).display()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn quick(dir: &Path) -> RunConfig {
        let mut c = parse_config("sim.t1_end = 2.0\nsim.t2_end = 4.0\nsim.sample_stride = 50").unwrap();
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn estimate_writes_schema_and_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = quick(dir.path());
        cfg.emit_plots = true;
        let files = cmd_estimate(&cfg).unwrap();
        assert_eq!(files.len(), 3);
        let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), TRAJECTORY_HEADER);
        // 4000 steps, stride 50
        assert_eq!(lines.count(), 4000 / 50 + 1);
        let svg = std::fs::read_to_string(dir.path().join("estimates.svg")).unwrap();
        assert!(svg.contains("<polyline") || svg.contains("<path"));
    }

    #[test]
    fn analyze_linearization_reports_triple_root() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick(dir.path());
        cmd_analyze(&cfg, Check::Linearization).unwrap();
        let v: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("analysis_linearization.json")).unwrap()).unwrap();
        assert_eq!(v["passed"], true);
        for ev in v["eigenvalues"].as_array().unwrap() {
            assert!((ev[0].as_f64().unwrap() + 1.0 / 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            CliError::Config(ConfigError::Parse {
                line: 1,
                message: String::new()
            })
            .exit_code(),
            2
        );
        assert_eq!(CliError::Numerical(crate::Error::EmptySeries).exit_code(), 3);
        assert_eq!(CliError::Check(String::new()).exit_code(), 4);
    }

    #[test]
    fn overrides_apply() {
        let args = CommonArgs {
            seed: Some(5),
            noise_output: Some(0.2),
            out: Some(PathBuf::from("x")),
            plots: true,
            ..Default::default()
        };
        let c = load_config(&args).unwrap();
        assert_eq!(c.noise.seed, 5);
        assert_eq!(c.noise.output_std, 0.2);
        assert!(c.emit_plots);
        assert!(c.scenario().unwrap().noise.is_some());
        let bad = CommonArgs {
            noise_input: Some(-1.0),
            ..Default::default()
        };
        assert_eq!(load_config(&bad).unwrap_err().exit_code(), 2);
    }
}
