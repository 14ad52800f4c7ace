// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Python bindings for the `trilevel` estimator.

use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use trilevel::analysis::{self, LabFrameParams, LinearizedParams};
use trilevel::cli::{self, ConfigError, RunConfig};
use trilevel::qmat::{self, OperatorKind};
use trilevel::sim::{self, EstimationResult};
use trilevel::Error;

fn core_err(e: Error) -> PyErr {
    match e {
        Error::NonFiniteState { .. } | Error::DegenerateState { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::RegimeViolation { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn config_err(e: ConfigError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn load(config: &str, seed: Option<u64>, noise_output: Option<f64>, noise_input: Option<f64>) -> PyResult<RunConfig> {
    let mut cfg = cli::parse_config(config).map_err(config_err)?;
    if let Some(s) = seed {
        cfg.noise.seed = s;
    }
    if let Some(s) = noise_output {
        cfg.noise.output_std = s;
    }
    if let Some(s) = noise_input {
        cfg.noise.input_std = s;
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

/// Final estimates and convergence times of one run.
#[pyclass(name = "EstimationResult", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyEstimationResult {
    omega12_hat: f64,
    omega23_hat: f64,
    rel_err12: f64,
    rel_err23: f64,
    tconv12: Option<f64>,
    tconv23: Option<f64>,
    seed: u64,
    noisy: bool,
}

impl From<&EstimationResult> for PyEstimationResult {
    fn from(r: &EstimationResult) -> Self {
        Self {
            omega12_hat: r.omega12_hat_final,
            omega23_hat: r.omega23_hat_final,
            rel_err12: r.rel_err12,
            rel_err23: r.rel_err23,
            tconv12: r.tconv12,
            tconv23: r.tconv23,
            seed: r.seed,
            noisy: r.noisy,
        }
    }
}

#[pymethods]
impl PyEstimationResult {
    fn __repr__(&self) -> String {
        format!(
            "EstimationResult(omega12_hat={}, omega23_hat={}, rel_err12={:.3e}, rel_err23={:.3e})",
            self.omega12_hat, self.omega23_hat, self.rel_err12, self.rel_err23
        )
    }
}

/// Real rank-one projector.
#[pyclass(name = "PureState", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPureState(qmat::PureState);

#[pymethods]
impl PyPureState {
    #[new]
    fn new(amplitudes: [f64; 3]) -> PyResult<Self> {
        qmat::PureState::from_amplitudes(amplitudes).map(Self).map_err(core_err)
    }

    #[staticmethod]
    fn nearest(matrix: [[f64; 3]; 3]) -> PyResult<Self> {
        qmat::nearest_projector(&qmat::RealSym3::from_dense(&matrix))
            .map(Self)
            .map_err(core_err)
    }

    fn matrix(&self) -> [[f64; 3]; 3] {
        self.0.matrix().to_dense()
    }

    fn population(&self, level: usize) -> PyResult<f64> {
        self.0.population(level).map_err(core_err)
    }

    fn fidelity(&self, other: &PyPureState) -> f64 {
        self.0.fidelity(&other.0)
    }
}

/// One two-step estimation run.
#[pyclass(name = "Run", frozen)]
struct PyRun {
    result: PyEstimationResult,
    trajectory: sim::Trajectory,
}

#[pymethods]
impl PyRun {
    #[getter]
    fn result(&self) -> PyEstimationResult {
        self.result.clone()
    }

    /// Sampled trajectory as a dict of columns named like the CSV header.
    fn trajectory<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        let samples = &self.trajectory.samples;
        let col = |f: &dyn Fn(&sim::Sample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
        d.set_item("t", col(&|s| s.t))?;
        d.set_item("y_true", col(&|s| s.y_true))?;
        d.set_item("y_meas", col(&|s| s.y_meas))?;
        for (i, name) in ["r11", "r22", "r33", "r12", "r13", "r23"].iter().enumerate() {
            d.set_item(*name, col(&|s| s.rho[i]))?;
        }
        for (i, name) in ["rh11", "rh22", "rh33", "rh12", "rh13", "rh23"].iter().enumerate() {
            d.set_item(*name, col(&|s| s.rho_hat[i]))?;
        }
        d.set_item("omega12_hat", col(&|s| s.omega12_hat))?;
        d.set_item("omega23_hat", col(&|s| s.omega23_hat))?;
        d.set_item("fidelity", col(&|s| s.fidelity))?;
        Ok(d)
    }

    fn __len__(&self) -> usize {
        self.trajectory.len()
    }
}

/// Runs phase one then phase two for the given configuration text.
#[pyfunction]
#[pyo3(signature = (config = "", seed = None, noise_output = None, noise_input = None))]
fn run_two_step(
    py: Python<'_>,
    config: &str,
    seed: Option<u64>,
    noise_output: Option<f64>,
    noise_input: Option<f64>,
) -> PyResult<PyRun> {
    let cfg = load(config, seed, noise_output, noise_input)?;
    let sc = cfg.scenario().map_err(config_err)?;
    let run = py.detach(|| sim::run_two_step(&sc)).map_err(core_err)?;
    Ok(PyRun {
        result: (&run.result).into(),
        trajectory: run.trajectory,
    })
}

/// Seeds `seed0 .. seed0 + n_runs`; failed runs appear as `None`.
#[pyfunction]
#[pyo3(signature = (n_runs, seed0 = 0, config = "", noise_output = None, noise_input = None, jobs = 1))]
fn monte_carlo(
    py: Python<'_>,
    n_runs: usize,
    seed0: u64,
    config: &str,
    noise_output: Option<f64>,
    noise_input: Option<f64>,
    jobs: usize,
) -> PyResult<Vec<Option<PyEstimationResult>>> {
    let cfg = load(config, None, noise_output, noise_input)?;
    let sc = cfg.scenario().map_err(config_err)?;
    let report = py
        .detach(|| sim::monte_carlo(&sc, n_runs, seed0, jobs))
        .map_err(core_err)?;
    Ok(report
        .runs
        .iter()
        .map(|r| r.outcome.as_ref().ok().map(PyEstimationResult::from))
        .collect())
}

/// `(2π/(ε Ω12), 4π/(ε η Ω23))` for the given configuration text.
#[pyfunction]
#[pyo3(signature = (config = ""))]
fn predicted_times(config: &str) -> PyResult<(f64, f64)> {
    let cfg = cli::parse_config(config).map_err(config_err)?;
    Ok(analysis::predicted_times(&cfg.gains12, &cfg.gains23, &cfg.plant))
}

type Linearized = ([[f64; 3]; 3], Vec<(f64, f64)>);

/// Jacobian and eigenvalues of the linearized averaged phase-one observer.
#[pyfunction]
#[pyo3(signature = (a = 0.5, gamma_big = 4.0, gamma_small = 1.0, epsilon = 1.0 / 3.0))]
fn linearized12(a: f64, gamma_big: f64, gamma_small: f64, epsilon: f64) -> PyResult<Linearized> {
    let lp = LinearizedParams {
        gamma_big,
        gamma_small,
        epsilon,
        a,
    };
    lp.validate().map_err(core_err)?;
    let evs = analysis::linearized12_eigenvalues(&lp)
        .iter()
        .map(|e| (e.re, e.im))
        .collect();
    Ok((analysis::linearized12(&lp), evs))
}

/// Population gap between the lab-frame and rotating-wave models.
#[pyfunction]
#[pyo3(signature = (horizon, u12 = 1.0, u23 = 0.0, energies = [0.0, 10.0, 25.0], a_bar12 = 0.2, a_bar23 = 0.2, mu12 = 1.0, mu23 = 1.0))]
#[allow(clippy::too_many_arguments)]
fn labframe_compare(
    py: Python<'_>,
    horizon: f64,
    u12: f64,
    u23: f64,
    energies: [f64; 3],
    a_bar12: f64,
    a_bar23: f64,
    mu12: f64,
    mu23: f64,
) -> PyResult<f64> {
    let lp = LabFrameParams {
        energies,
        a_bar12,
        a_bar23,
        mu12,
        mu23,
    };
    py.detach(|| analysis::labframe_compare(&lp, u12, u23, horizon))
        .map_err(core_err)
}

/// Validates a configuration and returns it in normalized form.
#[pyfunction]
fn parse_config(text: &str) -> PyResult<String> {
    let cfg = cli::parse_config(text).map_err(config_err)?;
    Ok(cli::serialize_config(&cfg))
}

/// Dense matrix of `sigma`, `sigma_x`, `sigma_z` (levels `l`, `k`) or `proj`
/// (level `l`).
#[pyfunction]
#[pyo3(signature = (kind, l, k = 0))]
fn build_operator(kind: &str, l: usize, k: usize) -> PyResult<[[f64; 3]; 3]> {
    let kind = match kind {
        "sigma" => OperatorKind::Sigma,
        "sigma_x" => OperatorKind::SigmaX,
        "sigma_z" => OperatorKind::SigmaZ,
        "proj" => OperatorKind::Proj,
        other => return Err(PyValueError::new_err(format!("unknown operator kind {other:?}"))),
    };
    qmat::build_operator(kind, l, k)
        .map(|op| op.to_dense())
        .map_err(core_err)
}

#[pymodule]
fn pytrilevel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEstimationResult>()?;
    m.add_class::<PyPureState>()?;
    m.add_class::<PyRun>()?;
    m.add_function(wrap_pyfunction!(run_two_step, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_times, m)?)?;
    m.add_function(wrap_pyfunction!(linearized12, m)?)?;
    m.add_function(wrap_pyfunction!(labframe_compare, m)?)?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add_function(wrap_pyfunction!(build_operator, m)?)?;
    Ok(())
}
