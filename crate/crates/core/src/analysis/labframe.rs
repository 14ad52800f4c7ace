// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Lab-frame Schrödinger simulation used to validate the rotating-wave
//! model of the plant.
//!
//! With `A(t) = u12 Ā12 sin(ω12 t) + u23 Ā23 sin(ω23 t)` the interaction
//! frame `|Φ⟩ = e^{i H0 t}|Ψ⟩` follows, after dropping terms at `2ω` and
//! `ω12 ± ω23`, the real flow `dΦ/dt = −(u12 Ω12 σ12 + u23 Ω23 σ23) Φ`.
//! Flipping the sign of level 2 turns this into the plant model, leaving
//! populations untouched.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::rk4_step;

/// Smallest gap-to-Rabi ratio accepted by [`labframe_compare`].
pub const MIN_REGIME_RATIO: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabFrameParams {
    /// Level energies with ħ = 1.
    pub energies: [f64; 3],
    pub a_bar12: f64,
    pub a_bar23: f64,
    pub mu12: f64,
    pub mu23: f64,
}

impl Default for LabFrameParams {
    fn default() -> Self {
        Self {
            energies: [0.0, 10.0, 25.0],
            a_bar12: 0.2,
            a_bar23: 0.2,
            mu12: 1.0,
            mu23: 1.0,
        }
    }
}

impl LabFrameParams {
    pub fn gap12(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    pub fn gap23(&self) -> f64 {
        self.energies[2] - self.energies[1]
    }

    pub fn rabi12(&self) -> f64 {
        self.a_bar12 * self.mu12 / 2.0
    }

    pub fn rabi23(&self) -> f64 {
        self.a_bar23 * self.mu23 / 2.0
    }

    pub fn min_gap(&self) -> f64 {
        self.gap12().abs().min(self.gap23().abs())
    }

    /// `min gap / max |Ω|`; infinite without drive.
    pub fn regime_ratio(&self) -> f64 {
        let rabi = self.rabi12().abs().max(self.rabi23().abs());
        if rabi == 0.0 {
            f64::INFINITY
        } else {
            self.min_gap() / rabi
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.energies[0],
            self.energies[1],
            self.energies[2],
            self.a_bar12,
            self.a_bar23,
            self.mu12,
            self.mu23,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("lab", "parameters must be finite"));
        }
        if self.min_gap() == 0.0 {
            return Err(invalid("energies", "transition gaps must be nonzero"));
        }
        if (self.gap12().abs() - self.gap23().abs()).abs() <= 1e-12 * self.min_gap() {
            return Err(invalid("energies", "|E2 - E1| must differ from |E3 - E2|"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexState3 {
    amps: [Complex64; 3],
}

impl ComplexState3 {
    pub fn new(amps: [Complex64; 3]) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotPure {
                reason: format!("state norm {norm} is not 1"),
            });
        }
        Ok(Self { amps })
    }

    pub fn basis(l: usize) -> Result<Self> {
        if !(1..=3).contains(&l) {
            return Err(Error::IndexOutOfRange { index: l });
        }
        let mut amps = [Complex64::new(0.0, 0.0); 3];
        amps[l - 1] = Complex64::new(1.0, 0.0);
        Ok(Self { amps })
    }

    pub fn amplitudes(&self) -> &[Complex64; 3] {
        &self.amps
    }

    pub fn populations(&self) -> [f64; 3] {
        self.amps.map(|a| a.norm_sqr())
    }

    /// `e^{i H0 t}|Ψ⟩` for `H0 = diag(energies)`.
    pub fn to_interaction_frame(&self, energies: &[f64; 3], t: f64) -> ComplexState3 {
        let amps = std::array::from_fn(|k| self.amps[k] * Complex64::from_polar(1.0, energies[k] * t));
        ComplexState3 { amps }
    }

    fn pack(&self) -> [f64; 6] {
        let a = &self.amps;
        [a[0].re, a[1].re, a[2].re, a[0].im, a[1].im, a[2].im]
    }

    fn unpack(x: &[f64; 6]) -> Self {
        Self {
            amps: std::array::from_fn(|k| Complex64::new(x[k], x[k + 3])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwaReport {
    pub regime_ratio: f64,
    pub steps: usize,
    pub dt: f64,
    /// Sup over time and levels of the population difference.
    pub population_gap: f64,
    /// Sup over time of `|y_lab − y_model|`.
    pub output_gap: f64,
    /// Sup over time of the interaction-frame amplitude error.
    pub amplitude_gap: f64,
}

/// Runs the lab-frame and rotating-wave models side by side from `|1⟩`.
pub fn labframe_report(lp: &LabFrameParams, u12: f64, u23: f64, horizon: f64) -> Result<RwaReport> {
    lp.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", format!("{horizon} must be positive")));
    }
    let ratio = lp.regime_ratio();
    if ratio < MIN_REGIME_RATIO {
        return Err(Error::RegimeViolation {
            ratio,
            required: MIN_REGIME_RATIO,
        });
    }
    let e = lp.energies;
    let (w12, w23) = (lp.gap12(), lp.gap23());
    let steps = (horizon * lp.min_gap() * 100.0).ceil() as usize;
    let dt = horizon / steps as f64;

    let lab_rhs = |t: f64, x: &[f64; 6]| -> [f64; 6] {
        let a12 = u12 * lp.a_bar12 * (w12 * t).sin() * lp.mu12;
        let a23 = u23 * lp.a_bar23 * (w23 * t).sin() * lp.mu23;
        // H = diag(E) + couplings; dRe = H Im, dIm = −H Re
        let h = |v: &[f64]| {
            [
                e[0] * v[0] + a12 * v[1],
                a12 * v[0] + e[1] * v[1] + a23 * v[2],
                a23 * v[1] + e[2] * v[2],
            ]
        };
        let hr = h(&x[0..3]);
        let hi = h(&x[3..6]);
        [hi[0], hi[1], hi[2], -hr[0], -hr[1], -hr[2]]
    };
    let (o12, o23) = (u12 * lp.rabi12(), u23 * lp.rabi23());
    let model_rhs = |_: f64, v: &[f64; 3]| -> [f64; 3] { [o12 * v[1], -o12 * v[0] + o23 * v[2], -o23 * v[1]] };

    let mut lab = ComplexState3::basis(1)?.pack();
    let mut model = [1.0, 0.0, 0.0];
    let (mut pop_gap, mut out_gap, mut amp_gap) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..steps {
        let t = k as f64 * dt;
        lab = rk4_step(lab_rhs, &lab, t, dt)?;
        model = rk4_step(model_rhs, &model, t, dt)?;
        let t1 = (k + 1) as f64 * dt;
        let phi = ComplexState3::unpack(&lab).to_interaction_frame(&e, t1);
        let pops = phi.populations();
        let flipped = [model[0], -model[1], model[2]];
        for l in 0..3 {
            pop_gap = pop_gap.max((pops[l] - model[l] * model[l]).abs());
            amp_gap = amp_gap.max((phi.amps[l] - Complex64::new(flipped[l], 0.0)).norm());
        }
        out_gap = out_gap.max((pops[0] - model[0] * model[0]).abs());
    }
    Ok(RwaReport {
        regime_ratio: ratio,
        steps,
        dt,
        population_gap: pop_gap,
        output_gap: out_gap,
        amplitude_gap: amp_gap,
    })
}

/// Sup-norm population gap between the lab-frame and rotating-wave models.
pub fn labframe_compare(lp: &LabFrameParams, u12: f64, u23: f64, horizon: f64) -> Result<f64> {
    labframe_report(lp, u12, u23, horizon).map(|r| r.population_gap)
}
