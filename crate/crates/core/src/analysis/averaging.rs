// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Averaged observer dynamics in the frame rotating with `exp(θ σ^{12})`.
//!
//! In that frame `ξ = Uᵀ ρ U` is constant during phase one and the observer
//! error is driven only through `θ`-periodic coefficients. Averaging over
//! `θ` gives closed-form systems; the `frame_averaged_*` functions compute
//! the same averages by quadrature of the full observer fields and serve as
//! an independent route.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::observers::{correction_direction, obs12_rhs_sym, obs23_rhs_sym, Gains12, Gains23};
use crate::plant::{output_sym, plant_rhs_sym, PlantParams};
use crate::qmat::{commutator, ops, rot12, trace_prod, PureState, RealSym3};
use crate::sim::rk4_step;

/// Averaged phase-one error system in `(ξ̂, Ω̃12)`, with
/// `ε Ω̃12 = Ω̂12 − Ω12` and the plant frozen at `ξ`.
pub fn averaged_obs12_rhs_sym(xi_hat: &RealSym3, omega_tilde: f64, xi: &RealSym3, g: &Gains12) -> (RealSym3, f64) {
    let diff = *xi - *xi_hat;
    let z_err = trace_prod(&ops::SIGMA_Z12, &diff);
    let x_err = trace_prod(&ops::SIGMA_X12, &diff);
    let k = g.epsilon * g.gamma_big / 4.0;
    let d_xi_hat = commutator(&ops::SIGMA12, xi_hat).scaled(g.epsilon * omega_tilde)
        + correction_direction(&ops::SIGMA_Z12, xi_hat).scaled(k * z_err)
        + correction_direction(&ops::SIGMA_X12, xi_hat).scaled(k * x_err);
    let d_omega = g.epsilon * g.gamma_small / 2.0
        * (-trace_prod(&ops::SIGMA_Z12, xi_hat) * x_err + trace_prod(&ops::SIGMA_X12, xi_hat) * z_err);
    (d_xi_hat, d_omega)
}

pub fn averaged_obs12_rhs(xi_hat: &PureState, omega_tilde: f64, xi: &PureState, g: &Gains12) -> (RealSym3, f64) {
    averaged_obs12_rhs_sym(xi_hat.matrix(), omega_tilde, xi.matrix(), g)
}

/// Averaged phase-two system `(dξ, dξ̂, dΩ̂23)`, assuming `θ̇ = Ω12` exactly.
///
/// The demodulated innovation `(y − ŷ)(1 − 2 cos 2θ)` averages to
/// `Tr(P2 (ξ − ξ̂))`, and `η cos θ σ^{23}` averages to `(η/2) σ^{23}` in the
/// rotating frame.
pub fn averaged_obs23_rhs(
    xi: &RealSym3,
    xi_hat: &RealSym3,
    omega23_hat: f64,
    g: &Gains23,
    p: &PlantParams,
) -> (RealSym3, RealSym3, f64) {
    let innov = trace_prod(&ops::P2, &(*xi - *xi_hat));
    let d_xi = commutator(&ops::SIGMA23, xi).scaled(0.5 * g.eta * p.omega23);
    let drift_hat = commutator(&ops::SIGMA23, xi_hat);
    let d_xi_hat = drift_hat.scaled(0.5 * g.eta * omega23_hat)
        + correction_direction(&ops::SIGMA_Z23, xi_hat).scaled(g.epsilon * g.eta * g.gamma_big * innov);
    let d_omega = g.epsilon * g.epsilon * g.eta * g.gamma_small * innov * trace_prod(&ops::SIGMA_Z23, &drift_hat);
    (d_xi, d_xi_hat, d_omega)
}

/// Average over `θ` of the phase-one observer written in the rotating frame,
/// evaluated by quadrature of [`obs12_rhs_sym`].
pub fn frame_averaged_obs12_rhs(
    xi_hat: &RealSym3,
    omega_tilde: f64,
    xi: &RealSym3,
    g: &Gains12,
    omega12: f64,
    nodes: usize,
) -> (RealSym3, f64) {
    let omega12_hat = omega12 + g.epsilon * omega_tilde;
    let (sum_xi, sum_om) = theta_nodes(nodes)
        .map(|theta| {
            let u = rot12(theta);
            let rho = u.conjugate_sym(xi);
            let rho_hat = u.conjugate_sym(xi_hat);
            let (d_rho_hat, d_om) = obs12_rhs_sym(&rho_hat, omega12_hat, output_sym(&rho), g);
            // d/dt(Uᵀ ρ̂ U) = Uᵀ (dρ̂ − Ω12 [σ12, ρ̂]) U
            let d_frame = d_rho_hat - commutator(&ops::SIGMA12, &rho_hat).scaled(omega12);
            (u.unconjugate_sym(&d_frame), d_om / g.epsilon)
        })
        .fold((RealSym3::ZERO, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = nodes as f64;
    (sum_xi.scaled(1.0 / n), sum_om / n)
}

// Uniform nodes on [0, 2π); the rule is exact for trigonometric polynomials
// of degree below `nodes`.
fn theta_nodes(nodes: usize) -> impl Iterator<Item = f64> {
    (0..nodes).map(move |k| 2.0 * std::f64::consts::PI * k as f64 / nodes as f64)
}

/// Average over `θ` of the full phase-two plant and observer written in the
/// rotating frame, evaluated by quadrature. Returns `(dξ, dξ̂, dΩ̂23)`.
pub fn frame_averaged_obs23_rhs(
    xi: &RealSym3,
    xi_hat: &RealSym3,
    omega23_hat: f64,
    g: &Gains23,
    p: &PlantParams,
    nodes: usize,
) -> (RealSym3, RealSym3, f64) {
    let g = Gains23 {
        omega12_known: p.omega12,
        ..*g
    };
    let sums = theta_nodes(nodes)
        .map(|theta| {
            let u = rot12(theta);
            let rho = u.conjugate_sym(xi);
            let rho_hat = u.conjugate_sym(xi_hat);
            let d_rho = plant_rhs_sym(&rho, 1.0, g.eta * theta.cos(), p);
            let (d_rho_hat, d_om) = obs23_rhs_sym(&rho_hat, omega23_hat, output_sym(&rho), theta, &g);
            let frame =
                |m: &RealSym3, d: RealSym3| u.unconjugate_sym(&(d - commutator(&ops::SIGMA12, m).scaled(p.omega12)));
            (frame(&rho, d_rho), frame(&rho_hat, d_rho_hat), d_om)
        })
        .fold((RealSym3::ZERO, RealSym3::ZERO, 0.0), |a, b| {
            (a.0 + b.0, a.1 + b.1, a.2 + b.2)
        });
    let n = nodes as f64;
    (sums.0.scaled(1.0 / n), sums.1.scaled(1.0 / n), sums.2 / n)
}

/// Relabels levels `(2, 3, 1) → (1, 2, 3)`: `|2⟩ ↦ |1⟩`, `|3⟩ ↦ |2⟩`,
/// `|1⟩ ↦ |3⟩`.
pub fn relabel_231(m: &RealSym3) -> RealSym3 {
    let d = m.to_dense();
    // new index of old level i (0-based)
    let to = [2usize, 0, 1];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[to[i]][to[j]] = d[i][j];
        }
    }
    RealSym3::from_dense(&out)
}

/// Initial data for comparing the full phase-one observer with its average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingSetup {
    pub omega12: f64,
    pub gamma_big: f64,
    pub gamma_small: f64,
    pub xi: PureState,
    pub xi_hat0: PureState,
    pub omega_tilde0: f64,
    pub dt: f64,
}

impl Default for AveragingSetup {
    fn default() -> Self {
        Self {
            omega12: 1.0,
            gamma_big: 4.0,
            gamma_small: 1.0,
            xi: PureState::from_sym_unchecked(RealSym3::outer([0.8, 0.0, 0.6])),
            xi_hat0: PureState::from_amplitudes([0.7, 0.3, 0.64]).expect("nonzero amplitudes"),
            omega_tilde0: 0.5,
            dt: 1e-3,
        }
    }
}

/// Sup-norm distance over one period `2π/Ω12` between the full phase-one
/// observer (mapped to the rotating frame, with `Ω̃ = (Ω̂ − Ω12)/ε`) and the
/// averaged system started from the same point.
pub fn averaging_gap(setup: &AveragingSetup, epsilon: f64) -> Result<f64> {
    let g = Gains12 {
        gamma_big: setup.gamma_big,
        gamma_small: setup.gamma_small,
        epsilon,
    };
    let om = setup.omega12;
    let xi = *setup.xi.matrix();
    let period = 2.0 * std::f64::consts::PI / om.abs();
    let n = (period / setup.dt).ceil() as usize;
    let dt = period / n as f64;

    let pack = |m: &RealSym3, w: f64| -> [f64; 7] {
        let e = m.entries();
        [e[0], e[1], e[2], e[3], e[4], e[5], w]
    };
    let split = |x: &[f64; 7]| (RealSym3::from_entries(std::array::from_fn(|i| x[i])), x[6]);

    let mut full = pack(setup.xi_hat0.matrix(), om + epsilon * setup.omega_tilde0);
    let mut avg = pack(setup.xi_hat0.matrix(), setup.omega_tilde0);
    let mut gap: f64 = 0.0;

    for k in 0..n {
        let t = k as f64 * dt;
        full = rk4_step(
            |ts, x: &[f64; 7]| {
                let (rho_hat, w) = split(x);
                let y = rot12(om * ts).conjugate_sym(&xi).get(0, 0);
                let (d, dw) = obs12_rhs_sym(&rho_hat, w, y, &g);
                pack(&d, dw)
            },
            &full,
            t,
            dt,
        )?;
        avg = rk4_step(
            |_, x: &[f64; 7]| {
                let (xh, w) = split(x);
                let (d, dw) = averaged_obs12_rhs_sym(&xh, w, &xi, &g);
                pack(&d, dw)
            },
            &avg,
            t,
            dt,
        )?;
        let t1 = (k + 1) as f64 * dt;
        let (rho_hat, w_full) = split(&full);
        let xi_hat_full = rot12(om * t1).unconjugate_sym(&rho_hat);
        let (xi_hat_avg, w_avg) = split(&avg);
        let dxi = (xi_hat_full - xi_hat_avg).frobenius_norm();
        let dw = (w_full - om) / epsilon - w_avg;
        gap = gap.max((dxi * dxi + dw * dw).sqrt());
    }
    Ok(gap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingReport {
    pub epsilons: Vec<f64>,
    pub gaps: Vec<f64>,
    /// Least-squares slope of `log gap` against `log ε`.
    pub slope: f64,
    /// Fitted `C` in `gap ≈ C ε`.
    pub constant: f64,
}

pub fn averaging_order(setup: &AveragingSetup, epsilons: &[f64]) -> Result<AveragingReport> {
    let gaps = epsilons
        .iter()
        .map(|&e| averaging_gap(setup, e))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let constant = gaps.iter().zip(epsilons).map(|(g, e)| g / e).sum::<f64>() / n;
    Ok(AveragingReport {
        epsilons: epsilons.to_vec(),
        gaps,
        slope,
        constant,
    })
}
