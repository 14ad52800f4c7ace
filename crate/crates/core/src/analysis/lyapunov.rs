// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Lyapunov function of the averaged phase-one error system,
//! `V = (4/γ) Ω̃² + Tr(σx12 Δ)² + Tr(σz12 Δ)²` with `Δ = ξ − ξ̂`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::averaging::averaged_obs12_rhs_sym;
use crate::error::{invalid, Result};
use crate::observers::Gains12;
use crate::qmat::{ops, trace_prod, PureState, RealSym3};
use crate::sim::rk4_step;

pub fn lyapunov12_sym(xi_hat: &RealSym3, omega_tilde: f64, xi: &RealSym3, g: &Gains12) -> f64 {
    let d = *xi - *xi_hat;
    let x = trace_prod(&ops::SIGMA_X12, &d);
    let z = trace_prod(&ops::SIGMA_Z12, &d);
    4.0 / g.gamma_small * omega_tilde * omega_tilde + x * x + z * z
}

pub fn lyapunov12(xi_hat: &PureState, omega_tilde: f64, xi: &PureState, g: &Gains12) -> f64 {
    lyapunov12_sym(xi_hat.matrix(), omega_tilde, xi.matrix(), g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub trajectories: usize,
    pub steps: usize,
    pub dt: f64,
    /// Largest single-step increase of `V` seen on any trajectory.
    pub max_increase: f64,
    /// Largest `V(end) / V(0)` over trajectories.
    pub max_final_ratio: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn random_pure(rng: &mut ChaCha8Rng) -> Result<PureState> {
    let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
    PureState::from_amplitudes(v)
}

/// Integrates the averaged system from `n_traj` random initial conditions
/// and checks that `V` never increases by more than `1e-9` per step.
pub fn lyapunov_check(g: &Gains12, n_traj: usize, seed: u64, horizon: f64, dt: f64) -> Result<LyapunovReport> {
    g.validate()?;
    if n_traj == 0 {
        return Err(invalid("n_traj", "must be positive"));
    }
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(invalid("dt", "dt and horizon must be positive"));
    }
    let tolerance = 1e-9;
    let steps = (horizon / dt).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega_dist = Uniform::new(-2.0, 2.0).expect("valid range");
    let mut max_increase = f64::NEG_INFINITY;
    let mut max_final_ratio: f64 = 0.0;

    for _ in 0..n_traj {
        let xi = *random_pure(&mut rng)?.matrix();
        let xi_hat0 = random_pure(&mut rng)?;
        let w0 = omega_dist.sample(&mut rng);
        let e = xi_hat0.matrix().entries();
        let mut x = [e[0], e[1], e[2], e[3], e[4], e[5], w0];
        let split = |x: &[f64; 7]| (RealSym3::from_entries(std::array::from_fn(|i| x[i])), x[6]);
        let v0 = lyapunov12_sym(xi_hat0.matrix(), w0, &xi, g);
        let mut v_prev = v0;
        for k in 0..steps {
            x = rk4_step(
                |_, s: &[f64; 7]| {
                    let (m, w) = split(s);
                    let (d, dw) = averaged_obs12_rhs_sym(&m, w, &xi, g);
                    let d = d.entries();
                    [d[0], d[1], d[2], d[3], d[4], d[5], dw]
                },
                &x,
                k as f64 * dt,
                dt,
            )?;
            let (m, w) = split(&x);
            let v = lyapunov12_sym(&m, w, &xi, g);
            max_increase = max_increase.max(v - v_prev);
            v_prev = v;
        }
        if v0 > 0.0 {
            max_final_ratio = max_final_ratio.max(v_prev / v0);
        }
    }
    Ok(LyapunovReport {
        trajectories: n_traj,
        steps,
        dt,
        max_increase,
        max_final_ratio,
        tolerance,
        passed: max_increase <= tolerance,
    })
}
