// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Invariant nonlinear observers for the two estimation phases.
//!
//! Both observers copy the plant dynamics and add a correction driven by the
//! innovation `y − Tr(P1 ρ̂)`. The correction has the form
//! `M ρ̂ + ρ̂ M − 2 Tr(M ρ̂) ρ̂` with `M` symmetric, which is tangent to the
//! manifold of real rank-one projectors.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qmat::{commutator, ops, rot12, trace_prod, PureState, RealSkew3, RealSym3};

/// Tuning of the phase-one observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains12 {
    /// `Γ12`, state correction gain.
    pub gamma_big: f64,
    /// `γ12`, parameter adaptation gain.
    pub gamma_small: f64,
    pub epsilon: f64,
}

impl Gains12 {
    pub fn reference() -> Self {
        Self {
            gamma_big: 4.0,
            gamma_small: 1.0,
            epsilon: 1.0 / 3.0,
        }
    }

    /// Strict check: every gain positive, `ε ∈ (0, 1)`.
    pub fn validate(&self) -> Result<()> {
        positive("gamma_big", self.gamma_big)?;
        positive("gamma_small", self.gamma_small)?;
        unit_open("epsilon", self.epsilon)
    }
}

/// Tuning of the phase-two observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains23 {
    /// `Γ23`
    pub gamma_big: f64,
    /// `γ23`
    pub gamma_small: f64,
    pub epsilon: f64,
    /// Modulation depth of `u23 = η cos θ`.
    pub eta: f64,
    /// `Ω12` as identified in phase one; used for the drift and for `θ`.
    pub omega12_known: f64,
}

impl Gains23 {
    pub fn reference(omega12_known: f64) -> Self {
        Self {
            gamma_big: 4.0,
            gamma_small: 1.0,
            epsilon: 1.0 / 3.0,
            eta: 1.0 / 3.0,
            omega12_known,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("gamma_big", self.gamma_big)?;
        positive("gamma_small", self.gamma_small)?;
        unit_open("epsilon", self.epsilon)?;
        unit_open("eta", self.eta)?;
        positive("omega12_known", self.omega12_known)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive, got {v}")))
    }
}

fn unit_open(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in (0, 1), got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observer12State {
    pub rho_hat: PureState,
    pub omega12_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observer23State {
    pub rho_hat: PureState,
    pub omega23_hat: f64,
}

/// `y − Tr(P1 ρ̂)`.
pub fn innovation(y_meas: f64, rho_hat: &PureState) -> f64 {
    y_meas - rho_hat.matrix().get(0, 0)
}

/// `M ρ + ρ M − 2 Tr(M ρ) ρ`.
pub fn correction_direction(m: &RealSym3, rho: &RealSym3) -> RealSym3 {
    m.anticommutator(rho) - rho.scaled(2.0 * trace_prod(m, rho))
}

/// Phase-one observer vector field on raw symmetric matrices.
pub fn obs12_rhs_sym(rho_hat: &RealSym3, omega12_hat: f64, y_meas: f64, g: &Gains12) -> (RealSym3, f64) {
    let innov = y_meas - rho_hat.get(0, 0);
    let drift = commutator(&ops::SIGMA12, rho_hat);
    let d_rho = drift.scaled(omega12_hat)
        + correction_direction(&ops::SIGMA_Z12, rho_hat).scaled(g.epsilon * g.gamma_big * innov);
    let d_omega = g.epsilon * g.epsilon * g.gamma_small * trace_prod(&ops::SIGMA_Z12, &drift) * innov;
    (d_rho, d_omega)
}

pub fn obs12_rhs(s: &Observer12State, y_meas: f64, g: &Gains12) -> (RealSym3, f64) {
    obs12_rhs_sym(s.rho_hat.matrix(), s.omega12_hat, y_meas, g)
}

/// `(Σ^{23}, Σz^{23}) = (U σ^{23} Uᵀ, U σz^{23} Uᵀ)` with `U = exp(θ σ^{12})`.
pub fn frame_ops(theta: f64) -> (RealSkew3, RealSym3) {
    let u = rot12(theta);
    (u.conjugate_skew(&ops::SIGMA23), u.conjugate_sym(&ops::SIGMA_Z23))
}

/// `1 − 2 cos 2θ`, the reference waveform selecting `Tr(P2 ξ)` on average.
pub fn demodulation_factor(theta: f64) -> f64 {
    1.0 - 2.0 * (2.0 * theta).cos()
}

/// Phase-two observer vector field on raw symmetric matrices.
pub fn obs23_rhs_sym(rho_hat: &RealSym3, omega23_hat: f64, y_meas: f64, theta: f64, g: &Gains23) -> (RealSym3, f64) {
    let innov = (y_meas - rho_hat.get(0, 0)) * demodulation_factor(theta);
    let (big_sigma, big_sigma_z) = frame_ops(theta);
    let drift = commutator(&ops::SIGMA12, rho_hat).scaled(g.omega12_known)
        + commutator(&ops::SIGMA23, rho_hat).scaled(g.eta * theta.cos() * omega23_hat);
    let d_rho = drift + correction_direction(&big_sigma_z, rho_hat).scaled(g.epsilon * g.eta * g.gamma_big * innov);
    let d_omega = g.epsilon
        * g.epsilon
        * g.eta
        * g.gamma_small
        * innov
        * trace_prod(&big_sigma_z, &commutator(&big_sigma, rho_hat));
    (d_rho, d_omega)
}

pub fn obs23_rhs(s: &Observer23State, y_meas: f64, theta: f64, g: &Gains23) -> (RealSym3, f64) {
    obs23_rhs_sym(s.rho_hat.matrix(), s.omega23_hat, y_meas, theta, g)
}
