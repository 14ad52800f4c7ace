// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Numerical checks of the convergence machinery: averaged and linearized
//! observer dynamics, the Lyapunov function of the averaged phase-one
//! system, demodulation of hidden populations and a lab-frame simulation
//! that validates the rotating-wave model.

mod averaging;
mod demod;
mod labframe;
mod linearization;
mod lyapunov;

pub use averaging::{
    averaged_obs12_rhs, averaged_obs12_rhs_sym, averaged_obs23_rhs, averaging_gap, averaging_order,
    frame_averaged_obs12_rhs, frame_averaged_obs23_rhs, relabel_231, AveragingReport, AveragingSetup,
};
pub use demod::{default_window, demodulate_populations, moving_average};
pub use labframe::{labframe_compare, labframe_report, ComplexState3, LabFrameParams, RwaReport};
pub use linearization::{chart12, fd_jacobian12, linearized12, linearized12_eigenvalues, LinearizedParams};
pub use lyapunov::{lyapunov12, lyapunov12_sym, lyapunov_check, LyapunovReport};

use crate::observers::{Gains12, Gains23};
use crate::plant::PlantParams;

/// Convergence-time scales `(2π/(ε Ω12), 4π/(ε η Ω23))` of the two phases.
pub fn predicted_times(g12: &Gains12, g23: &Gains23, p: &PlantParams) -> (f64, f64) {
    use std::f64::consts::PI;
    (
        2.0 * PI / (g12.epsilon * p.omega12),
        4.0 * PI / (g23.epsilon * g23.eta * p.omega23),
    )
}
