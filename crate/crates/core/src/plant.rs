// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! The true system: interaction-frame projector dynamics under the two-phase
//! control law, the population output and the measurement/actuator noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qmat::{commutator, ops, PureState, RealSym3};

/// Rabi amplitudes of the two driven transitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    pub omega12: f64,
    pub omega23: f64,
}

impl PlantParams {
    pub fn new(omega12: f64, omega23: f64) -> Result<Self> {
        let p = Self { omega12, omega23 };
        p.validate()?;
        Ok(p)
    }

    /// `Ω12 = 1.0`, `Ω23 = 0.8`.
    pub fn reference() -> Self {
        Self {
            omega12: 1.0,
            omega23: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("omega12", self.omega12), ("omega23", self.omega23)] {
            if !v.is_finite() || v == 0.0 {
                return Err(invalid(name, format!("must be finite and nonzero, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Only the 1–2 transition is driven.
    One,
    /// The 2–3 transition is additionally driven by `η cos θ`.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlLaw {
    pub phase: Phase,
    pub eta: f64,
    /// Rate of `θ` in phase two (the current knowledge of `Ω12`).
    pub omega12_for_theta: f64,
    pub t_phase_start: f64,
    pub theta0: f64,
}

impl ControlLaw {
    pub fn phase1() -> Self {
        Self {
            phase: Phase::One,
            eta: 0.0,
            omega12_for_theta: 0.0,
            t_phase_start: 0.0,
            theta0: 0.0,
        }
    }

    pub fn phase2(eta: f64, omega12_for_theta: f64, t_phase_start: f64) -> Self {
        Self {
            phase: Phase::Two,
            eta,
            omega12_for_theta,
            t_phase_start,
            theta0: 0.0,
        }
    }

    pub fn with_theta0(mut self, theta0: f64) -> Self {
        self.theta0 = theta0;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub u12: f64,
    pub u23: f64,
    pub theta: f64,
}

pub fn control_signals(law: &ControlLaw, t: f64) -> Controls {
    match law.phase {
        Phase::One => Controls {
            u12: 1.0,
            u23: 0.0,
            theta: 0.0,
        },
        Phase::Two => {
            let theta = law.omega12_for_theta * (t - law.t_phase_start) + law.theta0;
            Controls {
                u12: 1.0,
                u23: law.eta * theta.cos(),
                theta,
            }
        }
    }
}

/// `u12 Ω12 [σ12, ρ] + u23 Ω23 [σ23, ρ]` on an arbitrary symmetric matrix.
pub fn plant_rhs_sym(rho: &RealSym3, u12: f64, u23: f64, p: &PlantParams) -> RealSym3 {
    commutator(&ops::SIGMA12, rho).scaled(u12 * p.omega12) + commutator(&ops::SIGMA23, rho).scaled(u23 * p.omega23)
}

pub fn plant_rhs(rho: &PureState, u12: f64, u23: f64, p: &PlantParams) -> RealSym3 {
    plant_rhs_sym(rho.matrix(), u12, u23, p)
}

/// `y = Tr(P1 ρ)`, clamped to `[0, 1]`.
pub fn output_sym(rho: &RealSym3) -> f64 {
    rho.get(0, 0).clamp(0.0, 1.0)
}

pub fn output(rho: &PureState) -> f64 {
    output_sym(rho.matrix())
}

/// Gaussian noise held constant over windows of length `hold_interval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Absolute standard deviation added to `y`.
    pub output_std: f64,
    /// Absolute standard deviation added to each of `u12`, `u23`.
    pub input_std: f64,
    pub hold_interval: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(output_std: f64, input_std: f64, hold_interval: f64, seed: u64) -> Result<Self> {
        let s = Self {
            output_std,
            input_std,
            hold_interval,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    /// 20% of full scale on the output, 10% on the inputs, 0.05 hold.
    pub fn reference(seed: u64) -> Self {
        Self {
            output_std: 0.2,
            input_std: 0.1,
            hold_interval: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.output_std.is_finite() && self.output_std >= 0.0) {
            return Err(invalid("output_std", "must be finite and >= 0"));
        }
        if !(self.input_std.is_finite() && self.input_std >= 0.0) {
            return Err(invalid("input_std", "must be finite and >= 0"));
        }
        if !(self.hold_interval.is_finite() && self.hold_interval > 0.0) {
            return Err(invalid("hold_interval", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn is_silent(&self) -> bool {
        self.output_std == 0.0 && self.input_std == 0.0
    }

    pub fn window(&self, t: f64) -> u64 {
        (t / self.hold_interval).floor().max(0.0) as u64
    }

    /// Standard-normal triple `(ν_y, ν_u12, ν_u23)` of a hold window.
    pub fn window_draws(&self, window: u64) -> [f64; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(window);
        [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ]
    }
}

/// Output and inputs at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signals {
    pub y: f64,
    pub u12: f64,
    pub u23: f64,
}

fn perturb(spec: &NoiseSpec, draws: [f64; 3], clean: Signals) -> Signals {
    Signals {
        y: clean.y + spec.output_std * draws[0],
        u12: clean.u12 + spec.input_std * draws[1],
        u23: clean.u23 + spec.input_std * draws[2],
    }
}

/// Measured output and actually applied inputs at time `t`.
pub fn apply_noise(spec: &NoiseSpec, t: f64, clean: Signals) -> Signals {
    if spec.is_silent() {
        return clean;
    }
    perturb(spec, spec.window_draws(spec.window(t)), clean)
}

/// Caches the draws of the current hold window so the integrator does not
/// reseed for every stage.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    spec: NoiseSpec,
    cached: Option<(u64, [f64; 3])>,
}

impl NoiseSampler {
    pub fn new(spec: NoiseSpec) -> Self {
        Self { spec, cached: None }
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    /// Additive offsets `(ν_y, ν_u12, ν_u23)` in effect at time `t`.
    pub fn offsets(&mut self, t: f64) -> [f64; 3] {
        if self.spec.is_silent() {
            return [0.0; 3];
        }
        let w = self.spec.window(t);
        let draws = match self.cached {
            Some((cw, d)) if cw == w => d,
            _ => {
                let d = self.spec.window_draws(w);
                self.cached = Some((w, d));
                d
            }
        };
        [
            self.spec.output_std * draws[0],
            self.spec.input_std * draws[1],
            self.spec.input_std * draws[2],
        ]
    }

    pub fn apply(&mut self, t: f64, clean: Signals) -> Signals {
        let [dy, du12, du23] = self.offsets(t);
        Signals {
            y: clean.y + dy,
            u12: clean.u12 + du12,
            u23: clean.u23 + du23,
        }
    }
}
