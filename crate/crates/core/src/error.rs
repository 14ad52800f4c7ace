// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("level index {index} out of range (expected 1, 2 or 3)")]
    IndexOutOfRange { index: usize },

    #[error("operator kind requires distinct levels, got l = k = {level}")]
    InvalidPair { level: usize },

    #[error("degenerate spectrum: top two eigenvalues differ by {gap:e}")]
    DegenerateState { gap: f64 },

    #[error("not a pure state: {reason}")]
    NotPure { reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("integration produced a non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("empty series")]
    EmptySeries,

    #[error("averaging window {window} is shorter than one modulation period {period}")]
    WindowTooShort { window: f64, period: f64 },

    #[error("weak-drive regime violated: gap/Rabi ratio {ratio} < {required}")]
    RegimeViolation { ratio: f64, required: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
