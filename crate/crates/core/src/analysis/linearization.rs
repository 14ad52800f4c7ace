// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Linearization of the averaged phase-one observer at the equilibrium
//! `ξ = v vᵀ`, `v = (√a, 0, √(1 − a))`, in the coordinates
//! `(x̃, z̃, Ω̃) = (Tr(σx12 ξ̂), ξ̂11 − a, Ω̃12)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::averaging::averaged_obs12_rhs_sym;
use crate::error::{invalid, Result};
use crate::observers::Gains12;
use crate::qmat::{ops, trace_prod, Mat3, PureState, RealSym3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedParams {
    pub gamma_big: f64,
    pub gamma_small: f64,
    pub epsilon: f64,
    /// Equilibrium population `Tr(P1 ξ)`, in `(0, 1)`.
    pub a: f64,
}

impl LinearizedParams {
    pub fn reference() -> Self {
        Self {
            gamma_big: 4.0,
            gamma_small: 1.0,
            epsilon: 1.0 / 3.0,
            a: 0.5,
        }
    }

    pub fn gains(&self) -> Gains12 {
        Gains12 {
            gamma_big: self.gamma_big,
            gamma_small: self.gamma_small,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(invalid("a", format!("{} is outside (0, 1)", self.a)));
        }
        for (name, v) in [
            ("gamma_big", self.gamma_big),
            ("gamma_small", self.gamma_small),
            ("epsilon", self.epsilon),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("{v} must be finite and positive")));
            }
        }
        Ok(())
    }
}

/// Closed-form Jacobian in `(x̃, z̃, Ω̃)` order.
pub fn linearized12(lp: &LinearizedParams) -> Mat3 {
    let LinearizedParams {
        gamma_big: gb,
        gamma_small: gs,
        epsilon: e,
        a,
    } = *lp;
    [
        [-e * a * gb / 2.0, 0.0, -2.0 * e * a],
        [0.0, -e * a * (1.0 - a) * gb / 2.0, 0.0],
        [e * a * gs / 2.0, 0.0, 0.0],
    ]
}

/// Eigenvalues of [`linearized12`]: the `z̃` mode first, then the roots of the
/// `(x̃, Ω̃)` block `λ² + (εaΓ/2) λ + ε² a² γ`.
pub fn linearized12_eigenvalues(lp: &LinearizedParams) -> [Complex64; 3] {
    let LinearizedParams {
        gamma_big: gb,
        gamma_small: gs,
        epsilon: e,
        a,
    } = *lp;
    let z_mode = Complex64::new(-e * a * (1.0 - a) * gb / 2.0, 0.0);
    let half_tr = -e * a * gb / 4.0;
    // discriminant of the block, factored so the double root is exact
    let disc = e * e * a * a * (gb * gb / 4.0 - 4.0 * gs);
    let root = Complex64::new(disc, 0.0).sqrt() / 2.0;
    [
        z_mode,
        Complex64::new(half_tr, 0.0) + root,
        Complex64::new(half_tr, 0.0) - root,
    ]
}

/// Rank-one state with `Tr(P1 ξ̂) = a + z̃`, `Tr(σx12 ξ̂) = x̃` and no
/// component along `|2⟩` beyond what `x̃` requires.
pub fn chart12(a: f64, x_tilde: f64, z_tilde: f64) -> Result<PureState> {
    let z = a + z_tilde;
    if z <= 0.0 {
        return Err(invalid("z_tilde", format!("population {z} is not positive")));
    }
    let w1 = z.sqrt();
    let w2 = x_tilde / (2.0 * w1);
    let rest = 1.0 - z - w2 * w2;
    if rest < 0.0 {
        return Err(invalid("x_tilde", "point lies outside the chart".to_string()));
    }
    Ok(PureState::from_sym_unchecked(RealSym3::outer([w1, w2, rest.sqrt()])))
}

fn coordinate_rates(lp: &LinearizedParams, q: [f64; 3], xi: &RealSym3) -> Result<[f64; 3]> {
    let xi_hat = chart12(lp.a, q[0], q[1])?;
    let (d, dw) = averaged_obs12_rhs_sym(xi_hat.matrix(), q[2], xi, &lp.gains());
    Ok([trace_prod(&ops::SIGMA_X12, &d), trace_prod(&ops::P1, &d), dw])
}

/// Central-difference Jacobian of the averaged system in chart coordinates.
pub fn fd_jacobian12(lp: &LinearizedParams, h: f64) -> Result<Mat3> {
    lp.validate()?;
    let xi = *chart12(lp.a, 0.0, 0.0)?.matrix();
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut qp = [0.0; 3];
        let mut qm = [0.0; 3];
        qp[j] = h;
        qm[j] = -h;
        let fp = coordinate_rates(lp, qp, &xi)?;
        let fm = coordinate_rates(lp, qm, &xi)?;
        for i in 0..3 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn char_poly(m: &Mat3) -> [f64; 3] {
        // λ³ + c2 λ² + c1 λ + c0
        let tr = m[0][0] + m[1][1] + m[2][2];
        let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2]
            - m[1][2] * m[2][1];
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        [-tr, minors, -det]
    }

    #[test]
    fn default_parameters_give_triple_root() {
        let lp = LinearizedParams::reference();
        let c = char_poly(&linearized12(&lp));
        // (λ + 1/6)³
        let want = [0.5, 1.0 / 12.0, 1.0 / 216.0];
        for (a, b) in c.iter().zip(want) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        for ev in linearized12_eigenvalues(&lp) {
            assert!((ev.re + 1.0 / 6.0).abs() < 1e-12);
            assert!(ev.im.abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let lp = LinearizedParams::reference();
        let fd = fd_jacobian12(&lp, 1e-5).unwrap();
        let exact = linearized12(&lp);
        for i in 0..3 {
            for j in 0..3 {
                assert!((fd[i][j] - exact[i][j]).abs() < 1e-5, "{i}{j}");
            }
        }
    }

    #[test]
    fn chart_origin_is_equilibrium() {
        let xi = chart12(0.3, 0.0, 0.0).unwrap();
        assert!((xi.population(1).unwrap() - 0.3).abs() < 1e-15);
        assert!((xi.population(3).unwrap() - 0.7).abs() < 1e-15);
        assert!(chart12(0.3, 0.0, -0.4).is_err());
        assert!(chart12(0.3, 1.9, 0.0).is_err());
    }

    #[test]
    fn rejects_degenerate_population() {
        let lp = LinearizedParams {
            a: 1.0,
            ..LinearizedParams::reference()
        };
        assert!(fd_jacobian12(&lp, 1e-5).is_err());
    }

    proptest! {
        #[test]
        fn eigenvalues_have_negative_real_part(
            gb in 0.1f64..10.0, gs in 0.01f64..5.0, e in 0.01f64..1.0, a in 0.01f64..0.99,
        ) {
            let lp = LinearizedParams { gamma_big: gb, gamma_small: gs, epsilon: e, a };
            let evs = linearized12_eigenvalues(&lp);
            for ev in evs {
                prop_assert!(ev.re < 0.0);
            }
            // closed form agrees with the characteristic polynomial
            let c = char_poly(&linearized12(&lp));
            let scale = 1.0 + c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for ev in evs {
                let p = ev * ev * ev + ev * ev * c[0] + ev * c[1] + c[2];
                prop_assert!(p.norm() < 1e-10 * scale);
            }
        }

        #[test]
        fn fd_jacobian_agrees_away_from_defaults(
            gb in 0.5f64..8.0, gs in 0.1f64..3.0, e in 0.05f64..1.0, a in 0.1f64..0.9,
        ) {
            let lp = LinearizedParams { gamma_big: gb, gamma_small: gs, epsilon: e, a };
            let fd = fd_jacobian12(&lp, 1e-5).unwrap();
            let exact = linearized12(&lp);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((fd[i][j] - exact[i][j]).abs() < 1e-5);
                }
            }
        }
    }
}
