// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a TOML document of dotted keys such as
//! `plant.omega23 = 0.8`. Missing keys take the reference values.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::LabFrameParams;
use crate::error::Error as CoreError;
use crate::observers::{Gains12, Gains23};
use crate::plant::{NoiseSpec, PlantParams};
use crate::qmat::PureState;
use crate::sim::{InitialConditions, Scenario, SimConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitConfig {
    /// Amplitudes of `ρ(0)`; normalized on use.
    pub rho: [f64; 3],
    pub rho_hat: [f64; 3],
    /// Defaults to `Ω12 / 1.5`.
    pub omega12_hat: Option<f64>,
    /// Defaults to `1.5 Ω23`.
    pub omega23_hat: Option<f64>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            rho: [1.0, 0.0, 0.0],
            rho_hat: [1.0, 0.0, 0.0],
            omega12_hat: None,
            omega23_hat: None,
        }
    }
}

/// Settings for `analyze`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Equilibrium population used by the linearization check.
    pub a: f64,
    pub seed: u64,
    pub lyapunov_trajectories: usize,
    pub lyapunov_horizon: f64,
    pub lyapunov_dt: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            a: 0.5,
            seed: 0,
            lyapunov_trajectories: 50,
            lyapunov_horizon: 60.0,
            lyapunov_dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plant: PlantParams,
    pub gains12: Gains12,
    /// `omega12_known` is replaced by the phase-one estimate at run time.
    pub gains23: Gains23,
    pub init: InitConfig,
    /// Silent when both standard deviations are zero.
    pub noise: NoiseSpec,
    pub sim: SimConfig,
    pub lab: LabFrameParams,
    pub analysis: AnalysisConfig,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let plant = PlantParams::reference();
        Self {
            plant,
            gains12: Gains12::reference(),
            gains23: Gains23::reference(plant.omega12),
            init: InitConfig::default(),
            noise: NoiseSpec {
                output_std: 0.0,
                input_std: 0.0,
                ..NoiseSpec::reference(0)
            },
            sim: SimConfig::default(),
            lab: LabFrameParams::default(),
            analysis: AnalysisConfig::default(),
            output_dir: PathBuf::from("out"),
            emit_plots: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        section("plant", self.plant.validate())?;
        section("gains12", self.gains12.validate())?;
        section("gains23", self.gains23.validate())?;
        section("noise", self.noise.validate())?;
        section("sim", self.sim.validate())?;
        section("lab", self.lab.validate())?;
        let a = self.analysis;
        if !(a.a > 0.0 && a.a < 1.0) {
            return Err(validation("analysis.a", "must lie in (0, 1)"));
        }
        if a.lyapunov_trajectories == 0 {
            return Err(validation("analysis.lyapunov_trajectories", "must be >= 1"));
        }
        if !(a.lyapunov_horizon > 0.0 && a.lyapunov_dt > 0.0 && a.lyapunov_dt.is_finite()) {
            return Err(validation("analysis.lyapunov_dt", "horizon and step must be positive"));
        }
        for (name, v) in [("init.rho", self.init.rho), ("init.rho_hat", self.init.rho_hat)] {
            PureState::from_amplitudes(v).map_err(|e| validation(name, e.to_string()))?;
        }
        for (name, v) in [
            ("init.omega12_hat", self.init.omega12_hat),
            ("init.omega23_hat", self.init.omega23_hat),
        ] {
            if v.is_some_and(|x| !x.is_finite()) {
                return Err(validation(name, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn initial_conditions(&self) -> Result<InitialConditions, ConfigError> {
        let state = |name, v| PureState::from_amplitudes(v).map_err(|e| validation(name, e.to_string()));
        Ok(InitialConditions {
            rho: state("init.rho", self.init.rho)?,
            rho_hat: state("init.rho_hat", self.init.rho_hat)?,
            omega12_hat: self.init.omega12_hat.unwrap_or(self.plant.omega12 / 1.5),
            omega23_hat: self.init.omega23_hat.unwrap_or(1.5 * self.plant.omega23),
        })
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        self.validate()?;
        Ok(Scenario {
            plant: self.plant,
            gains12: self.gains12,
            gains23: self.gains23,
            noise: (!self.noise.is_silent()).then_some(self.noise),
            sim: self.sim,
            init: self.initial_conditions()?,
        })
    }
}

fn validation(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn section(prefix: &str, r: crate::Result<()>) -> Result<(), ConfigError> {
    r.map_err(|e| match e {
        CoreError::InvalidParameter { name, reason } => validation(&format!("{prefix}.{name}"), reason),
        other => validation(prefix, other.to_string()),
    })
}

// On-disk shape: every key optional, unknown keys rejected.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plant: Option<PlantDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gains12: Option<Gains12Doc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gains23: Option<Gains23Doc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    init: Option<InitDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<NoiseDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sim: Option<SimDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lab: Option<LabDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    analysis: Option<AnalysisDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<OutputDoc>,
}

macro_rules! doc_struct {
    ($name:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Default, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        struct $name {
            $(
                #[serde(default, skip_serializing_if = "Option::is_none")]
                $field: Option<$ty>,
            )*
        }
    };
}

doc_struct!(PlantDoc {
    omega12: f64,
    omega23: f64
});
doc_struct!(Gains12Doc {
    gamma_big: f64,
    gamma_small: f64,
    epsilon: f64
});
doc_struct!(Gains23Doc {
    gamma_big: f64,
    gamma_small: f64,
    epsilon: f64,
    eta: f64
});
doc_struct!(InitDoc {
    rho: [f64; 3],
    rho_hat: [f64; 3],
    omega12_hat: f64,
    omega23_hat: f64
});
doc_struct!(NoiseDoc {
    output_std: f64,
    input_std: f64,
    hold_interval: f64,
    seed: u64
});
doc_struct!(SimDoc {
    dt: f64,
    t1_end: f64,
    t2_end: f64,
    sample_stride: usize,
    reproject_stride: usize,
    measurement_hold: f64,
    theta0: f64,
    band12: f64,
    band23: f64,
});
doc_struct!(LabDoc {
    energies: [f64; 3],
    a_bar12: f64,
    a_bar23: f64,
    mu12: f64,
    mu23: f64
});
doc_struct!(AnalysisDoc {
    a: f64,
    seed: u64,
    lyapunov_trajectories: usize,
    lyapunov_horizon: f64,
    lyapunov_dt: f64,
});
doc_struct!(OutputDoc {
    dir: String,
    plots: bool
});

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc: Doc = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e
            .span()
            .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1),
        message: e.message().to_string(),
    })?;
    let mut c = RunConfig::default();
    if let Some(d) = doc.plant {
        set(&mut c.plant.omega12, d.omega12);
        set(&mut c.plant.omega23, d.omega23);
    }
    c.gains23.omega12_known = c.plant.omega12;
    if let Some(d) = doc.gains12 {
        set(&mut c.gains12.gamma_big, d.gamma_big);
        set(&mut c.gains12.gamma_small, d.gamma_small);
        set(&mut c.gains12.epsilon, d.epsilon);
    }
    if let Some(d) = doc.gains23 {
        set(&mut c.gains23.gamma_big, d.gamma_big);
        set(&mut c.gains23.gamma_small, d.gamma_small);
        set(&mut c.gains23.epsilon, d.epsilon);
        set(&mut c.gains23.eta, d.eta);
    }
    if let Some(d) = doc.init {
        set(&mut c.init.rho, d.rho);
        set(&mut c.init.rho_hat, d.rho_hat);
        c.init.omega12_hat = d.omega12_hat;
        c.init.omega23_hat = d.omega23_hat;
    }
    if let Some(d) = doc.noise {
        set(&mut c.noise.output_std, d.output_std);
        set(&mut c.noise.input_std, d.input_std);
        set(&mut c.noise.hold_interval, d.hold_interval);
        set(&mut c.noise.seed, d.seed);
    }
    if let Some(d) = doc.sim {
        set(&mut c.sim.dt, d.dt);
        set(&mut c.sim.t1_end, d.t1_end);
        set(&mut c.sim.t2_end, d.t2_end);
        set(&mut c.sim.sample_stride, d.sample_stride);
        set(&mut c.sim.reproject_stride, d.reproject_stride);
        c.sim.measurement_hold = d.measurement_hold;
        c.sim.theta0 = d.theta0;
        set(&mut c.sim.band12, d.band12);
        set(&mut c.sim.band23, d.band23);
    }
    if let Some(d) = doc.lab {
        set(&mut c.lab.energies, d.energies);
        set(&mut c.lab.a_bar12, d.a_bar12);
        set(&mut c.lab.a_bar23, d.a_bar23);
        set(&mut c.lab.mu12, d.mu12);
        set(&mut c.lab.mu23, d.mu23);
    }
    if let Some(d) = doc.analysis {
        set(&mut c.analysis.a, d.a);
        set(&mut c.analysis.seed, d.seed);
        set(&mut c.analysis.lyapunov_trajectories, d.lyapunov_trajectories);
        set(&mut c.analysis.lyapunov_horizon, d.lyapunov_horizon);
        set(&mut c.analysis.lyapunov_dt, d.lyapunov_dt);
    }
    if let Some(d) = doc.output {
        set(&mut c.output_dir, d.dir.map(PathBuf::from));
        set(&mut c.emit_plots, d.plots);
    }
    c.validate()?;
    Ok(c)
}

/// Writes every setting as one `section.key = value` line.
pub fn serialize_config(c: &RunConfig) -> String {
    let doc = Doc {
        plant: Some(PlantDoc {
            omega12: Some(c.plant.omega12),
            omega23: Some(c.plant.omega23),
        }),
        gains12: Some(Gains12Doc {
            gamma_big: Some(c.gains12.gamma_big),
            gamma_small: Some(c.gains12.gamma_small),
            epsilon: Some(c.gains12.epsilon),
        }),
        gains23: Some(Gains23Doc {
            gamma_big: Some(c.gains23.gamma_big),
            gamma_small: Some(c.gains23.gamma_small),
            epsilon: Some(c.gains23.epsilon),
            eta: Some(c.gains23.eta),
        }),
        init: Some(InitDoc {
            rho: Some(c.init.rho),
            rho_hat: Some(c.init.rho_hat),
            omega12_hat: c.init.omega12_hat,
            omega23_hat: c.init.omega23_hat,
        }),
        noise: Some(NoiseDoc {
            output_std: Some(c.noise.output_std),
            input_std: Some(c.noise.input_std),
            hold_interval: Some(c.noise.hold_interval),
            seed: Some(c.noise.seed),
        }),
        sim: Some(SimDoc {
            dt: Some(c.sim.dt),
            t1_end: Some(c.sim.t1_end),
            t2_end: Some(c.sim.t2_end),
            sample_stride: Some(c.sim.sample_stride),
            reproject_stride: Some(c.sim.reproject_stride),
            measurement_hold: c.sim.measurement_hold,
            theta0: c.sim.theta0,
            band12: Some(c.sim.band12),
            band23: Some(c.sim.band23),
        }),
        lab: Some(LabDoc {
            energies: Some(c.lab.energies),
            a_bar12: Some(c.lab.a_bar12),
            a_bar23: Some(c.lab.a_bar23),
            mu12: Some(c.lab.mu12),
            mu23: Some(c.lab.mu23),
        }),
        analysis: Some(AnalysisDoc {
            a: Some(c.analysis.a),
            seed: Some(c.analysis.seed),
            lyapunov_trajectories: Some(c.analysis.lyapunov_trajectories),
            lyapunov_horizon: Some(c.analysis.lyapunov_horizon),
            lyapunov_dt: Some(c.analysis.lyapunov_dt),
        }),
        output: Some(OutputDoc {
            dir: Some(c.output_dir.to_string_lossy().into_owned()),
            plots: Some(c.emit_plots),
        }),
    };
    let value = toml::Value::try_from(&doc).expect("config document is representable");
    let mut out = String::new();
    if let toml::Value::Table(sections) = value {
        for (name, body) in sections {
            if let toml::Value::Table(keys) = body {
                for (k, v) in keys {
                    out.push_str(&format!("{name}.{k} = {v}\n"));
                }
            }
        }
    }
    out
}
