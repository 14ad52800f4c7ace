// Copyright 2026 The trilevel Authors
// SPDX-License-Identifier: Apache-2.0

//! Fixed-step co-integration of plant and observers, the two-step
//! estimation pipeline and Monte Carlo sweeps over noise seeds.
//!
//! Time is discretised on a global grid `t_n = n · dt`. Phase one covers
//! `n ∈ [0, n1]` and phase two `n ∈ [n1, n2]`, with `n1 = round(t1_end/dt)`
//! and `n2 = round(t2_end/dt)`. Samples are recorded at every
//! `sample_stride`-th grid point, so a full run yields
//! `floor(n2 / sample_stride) + 1` samples.
//!
//! Noise is evaluated once per step, at the step midpoint, and held across
//! the four RK4 stages. The plant sees the perturbed inputs; the observers
//! see the commanded ones and the perturbed output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::observers::{obs12_rhs_sym, obs23_rhs_sym, Gains12, Gains23};
use crate::plant::{control_signals, output_sym, plant_rhs_sym, ControlLaw, NoiseSampler, NoiseSpec, PlantParams};
use crate::qmat::{nearest_projector, trace_prod, PureState, RealSym3};

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(mut rhs: F, state: &[f64; N], t: f64, dt: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let axpy = |a: f64, k: &[f64; N]| -> [f64; N] { std::array::from_fn(|i| state[i] + a * k[i]) };
    let k1 = rhs(t, state);
    let k2 = rhs(t + 0.5 * dt, &axpy(0.5 * dt, &k1));
    let k3 = rhs(t + 0.5 * dt, &axpy(0.5 * dt, &k2));
    let k4 = rhs(t + dt, &axpy(dt, &k3));
    let out: [f64; N] = std::array::from_fn(|i| state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    if out.iter().all(|x| x.is_finite()) {
        Ok(out)
    } else {
        Err(Error::NonFiniteState { t: t + dt })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t1_end: f64,
    pub t2_end: f64,
    pub sample_stride: usize,
    pub reproject_stride: usize,
    /// Sample-and-hold period for the measurement fed to the observer;
    /// `None` means the observer sees `y` at every stage.
    pub measurement_hold: Option<f64>,
    /// `θ` at the start of phase two; `None` picks the value that balances
    /// the rotating-frame populations of levels 1 and 2 (see
    /// [`balanced_theta0`]).
    pub theta0: Option<f64>,
    /// Relative band used for the `Ω̂12` convergence time.
    pub band12: f64,
    /// Relative band used for the `Ω̂23` convergence time.
    pub band23: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t1_end: 50.0,
            t2_end: 200.0,
            sample_stride: 100,
            reproject_stride: 100,
            measurement_hold: None,
            theta0: None,
            band12: 0.05,
            band23: 0.10,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.t1_end.is_finite() && self.t1_end > 0.0) {
            return Err(invalid("t1_end", "must be positive"));
        }
        if !(self.t2_end.is_finite() && self.t2_end > self.t1_end) {
            return Err(invalid("t2_end", "must exceed t1_end"));
        }
        if self.sample_stride == 0 {
            return Err(invalid("sample_stride", "must be >= 1"));
        }
        if self.reproject_stride == 0 {
            return Err(invalid("reproject_stride", "must be >= 1"));
        }
        if let Some(ts) = self.measurement_hold {
            if !(ts.is_finite() && ts > 0.0) {
                return Err(invalid("measurement_hold", "must be positive"));
            }
        }
        if self.theta0.is_some_and(|t| !t.is_finite()) {
            return Err(invalid("theta0", "must be finite"));
        }
        for (name, b) in [("band12", self.band12), ("band23", self.band23)] {
            if !(b.is_finite() && b > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// Grid indices `(n1, n2)` of the phase boundary and the horizon.
    pub fn step_bounds(&self) -> (usize, usize) {
        (
            (self.t1_end / self.dt).round() as usize,
            (self.t2_end / self.dt).round() as usize,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub y_true: f64,
    pub y_meas: f64,
    /// Plant state `[r11, r22, r33, r12, r13, r23]`.
    pub rho: [f64; 6],
    /// Observer state, same layout.
    pub rho_hat: [f64; 6],
    pub omega12_hat: f64,
    pub omega23_hat: f64,
    /// `Tr(ρ ρ̂)`
    pub fidelity: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn series(&self, f: impl Fn(&Sample) -> f64) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, f(s))).collect()
    }

    pub fn omega12_series(&self) -> Vec<(f64, f64)> {
        self.series(|s| s.omega12_hat)
    }

    pub fn omega23_series(&self) -> Vec<(f64, f64)> {
        self.series(|s| s.omega23_hat)
    }

    /// Appends `next`, dropping its leading samples that do not advance time.
    pub fn extend_continuing(&mut self, next: Trajectory) {
        let last_t = self.samples.last().map(|s| s.t);
        self.samples.extend(
            next.samples
                .into_iter()
                .skip_while(|s| last_t.is_some_and(|lt| s.t <= lt)),
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConditions {
    pub rho: PureState,
    pub rho_hat: PureState,
    pub omega12_hat: f64,
    pub omega23_hat: f64,
}

impl InitialConditions {
    /// `ρ(0) = ρ̂(0) = P1`, `Ω̂12(0) = Ω12/1.5`, `Ω̂23(0) = 1.5 Ω23`.
    pub fn reference(p: &PlantParams) -> Self {
        let p1 = PureState::from_sym_unchecked(crate::qmat::ops::P1);
        Self {
            rho: p1,
            rho_hat: p1,
            omega12_hat: p.omega12 / 1.5,
            omega23_hat: 1.5 * p.omega23,
        }
    }
}

/// Where phase two starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase2Start {
    pub rho: PureState,
    pub rho_hat: PureState,
    pub omega23_hat: f64,
    /// Recorded in the trajectory's `omega12_hat` column; not integrated.
    pub omega12_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRun {
    pub trajectory: Trajectory,
    pub estimate_final: f64,
    pub rho_final: PureState,
    pub rho_hat_final: PureState,
}

#[derive(Clone, Copy)]
enum ObserverMode<'a> {
    Phase1(&'a Gains12),
    Phase2(&'a Gains23),
}

struct Segment<'a> {
    plant: &'a PlantParams,
    law: ControlLaw,
    mode: ObserverMode<'a>,
    noise: Option<NoiseSampler>,
    cfg: &'a SimConfig,
    n_start: usize,
    n_end: usize,
    /// Value recorded for the estimate this segment does not integrate.
    other_estimate: f64,
}

const STATE_LEN: usize = 13;

fn pack(rho: &RealSym3, rho_hat: &RealSym3, estimate: f64) -> [f64; STATE_LEN] {
    let (a, b) = (rho.entries(), rho_hat.entries());
    std::array::from_fn(|i| match i {
        0..=5 => a[i],
        6..=11 => b[i - 6],
        _ => estimate,
    })
}

fn unpack(x: &[f64; STATE_LEN]) -> (RealSym3, RealSym3, f64) {
    (
        RealSym3::from_entries(std::array::from_fn(|i| x[i])),
        RealSym3::from_entries(std::array::from_fn(|i| x[6 + i])),
        x[12],
    )
}

fn ensure_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, "must be finite"))
    }
}

fn run_segment(mut seg: Segment<'_>, rho0: &PureState, rho_hat0: &PureState, estimate0: f64) -> Result<PhaseRun> {
    let cfg = seg.cfg;
    let dt = cfg.dt;
    let mut x = pack(rho0.matrix(), rho_hat0.matrix(), estimate0);
    let mut samples = Vec::with_capacity((seg.n_end - seg.n_start) / cfg.sample_stride + 1);
    let mut held: Option<(u64, f64)> = None;

    for n in seg.n_start..=seg.n_end {
        let t = n as f64 * dt;
        let offsets = match seg.noise.as_mut() {
            Some(s) => s.offsets(t + 0.5 * dt),
            None => [0.0; 3],
        };
        if n % cfg.sample_stride == 0 {
            let (rho, rho_hat, est) = unpack(&x);
            let y_true = output_sym(&rho);
            let (omega12_hat, omega23_hat) = match seg.mode {
                ObserverMode::Phase1(_) => (est, seg.other_estimate),
                ObserverMode::Phase2(_) => (seg.other_estimate, est),
            };
            samples.push(Sample {
                t,
                y_true,
                y_meas: y_true + offsets[0],
                rho: rho.entries(),
                rho_hat: rho_hat.entries(),
                omega12_hat,
                omega23_hat,
                fidelity: trace_prod(&rho, &rho_hat),
            });
        }
        if n == seg.n_end {
            break;
        }

        if let Some(ts) = cfg.measurement_hold {
            let w = (t / ts + 1e-9).floor() as u64;
            if held.map(|(hw, _)| hw) != Some(w) {
                held = Some((w, output_sym(&unpack(&x).0)));
            }
        }
        let held_y = held.map(|(_, y)| y);
        let (plant, law, mode) = (seg.plant, seg.law, seg.mode);

        x = rk4_step(
            |ts, s: &[f64; STATE_LEN]| {
                let (rho, rho_hat, est) = unpack(s);
                let c = control_signals(&law, ts);
                let y = held_y.unwrap_or_else(|| output_sym(&rho)) + offsets[0];
                let d_rho = plant_rhs_sym(&rho, c.u12 + offsets[1], c.u23 + offsets[2], plant);
                let (d_hat, d_est) = match mode {
                    ObserverMode::Phase1(g) => obs12_rhs_sym(&rho_hat, est, y, g),
                    ObserverMode::Phase2(g) => obs23_rhs_sym(&rho_hat, est, y, c.theta, g),
                };
                pack(&d_rho, &d_hat, d_est)
            },
            &x,
            t,
            dt,
        )?;

        let (mut rho, mut rho_hat, est) = unpack(&x);
        rho = rho.scaled(1.0 / rho.trace());
        rho_hat = rho_hat.scaled(1.0 / rho_hat.trace());
        if (n + 1 - seg.n_start).is_multiple_of(cfg.reproject_stride) {
            rho = *nearest_projector(&rho)?.matrix();
            rho_hat = *nearest_projector(&rho_hat)?.matrix();
        }
        x = pack(&rho, &rho_hat, est);
    }

    let (rho, rho_hat, est) = unpack(&x);
    Ok(PhaseRun {
        trajectory: Trajectory { samples },
        estimate_final: est,
        rho_final: PureState::from_sym_unchecked(rho),
        rho_hat_final: PureState::from_sym_unchecked(rho_hat),
    })
}

/// Phase one: `u = (1, 0)`, plant and `Ω12` observer on `[0, t1_end]`.
pub fn run_phase1(
    p: &PlantParams,
    g: &Gains12,
    noise: Option<&NoiseSpec>,
    cfg: &SimConfig,
    init: &InitialConditions,
) -> Result<PhaseRun> {
    p.validate()?;
    cfg.validate()?;
    if let Some(n) = noise {
        n.validate()?;
    }
    for (name, v) in [
        ("gamma_big", g.gamma_big),
        ("gamma_small", g.gamma_small),
        ("epsilon", g.epsilon),
        ("omega12_hat", init.omega12_hat),
    ] {
        ensure_finite(name, v)?;
    }
    let (n1, _) = cfg.step_bounds();
    let seg = Segment {
        plant: p,
        law: ControlLaw::phase1(),
        mode: ObserverMode::Phase1(g),
        noise: noise.copied().map(NoiseSampler::new),
        cfg,
        n_start: 0,
        n_end: n1,
        other_estimate: init.omega23_hat,
    };
    run_segment(seg, &init.rho, &init.rho_hat, init.omega12_hat)
}

/// Initial phase `θ0` for which `ξ̂ = U(θ0)ᵀ ρ̂ U(θ0)` has
/// `Tr(P1 ξ̂) = Tr(P2 ξ̂)`.
///
/// With `θ0` chosen this way the averaged phase-two dynamics start away from
/// `|1⟩`, which the slow `σ^{23}` rotation leaves invariant.
pub fn balanced_theta0(rho_hat: &PureState) -> f64 {
    let m = rho_hat.matrix();
    // Amplitudes in the 1–2 plane, up to a global sign: (v1, v2) ∝ (m11, m12).
    let (v1, v2) = if m.get(0, 0) >= m.get(1, 1) {
        (m.get(0, 0), m.get(0, 1))
    } else {
        (m.get(0, 1), m.get(1, 1))
    };
    (-v2).atan2(v1) - std::f64::consts::FRAC_PI_4
}

/// Phase two: `u = (1, η cos θ)` with `θ` driven by `g.omega12_known`, on
/// `[t1_end, t2_end]`.
pub fn run_phase2(
    p: &PlantParams,
    g: &Gains23,
    noise: Option<&NoiseSpec>,
    cfg: &SimConfig,
    start: &Phase2Start,
) -> Result<PhaseRun> {
    p.validate()?;
    cfg.validate()?;
    if let Some(n) = noise {
        n.validate()?;
    }
    for (name, v) in [
        ("gamma_big", g.gamma_big),
        ("gamma_small", g.gamma_small),
        ("epsilon", g.epsilon),
        ("eta", g.eta),
        ("omega12_known", g.omega12_known),
        ("omega23_hat", start.omega23_hat),
    ] {
        ensure_finite(name, v)?;
    }
    let (n1, n2) = cfg.step_bounds();
    let t_start = n1 as f64 * cfg.dt;
    let seg = Segment {
        plant: p,
        law: ControlLaw::phase2(g.eta, g.omega12_known, t_start)
            .with_theta0(cfg.theta0.unwrap_or_else(|| balanced_theta0(&start.rho_hat))),
        mode: ObserverMode::Phase2(g),
        noise: noise.copied().map(NoiseSampler::new),
        cfg,
        n_start: n1,
        n_end: n2,
        other_estimate: start.omega12_hat,
    };
    run_segment(seg, &start.rho, &start.rho_hat, start.omega23_hat)
}

/// Everything needed for one two-step estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub plant: PlantParams,
    pub gains12: Gains12,
    /// `omega12_known` is overwritten with the phase-one estimate.
    pub gains23: Gains23,
    pub noise: Option<NoiseSpec>,
    pub sim: SimConfig,
    pub init: InitialConditions,
}

impl Scenario {
    pub fn reference() -> Self {
        let plant = PlantParams::reference();
        Self {
            plant,
            gains12: Gains12::reference(),
            gains23: Gains23::reference(plant.omega12),
            noise: None,
            sim: SimConfig::default(),
            init: InitialConditions::reference(&plant),
        }
    }

    pub fn with_noise(mut self, noise: Option<NoiseSpec>) -> Self {
        self.noise = noise;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub omega12_hat_final: f64,
    pub omega23_hat_final: f64,
    pub rel_err12: f64,
    pub rel_err23: f64,
    /// Convergence time of `Ω̂12`, measured from `t = 0`.
    pub tconv12: Option<f64>,
    /// Convergence time of `Ω̂23`, measured from the start of phase two.
    pub tconv23: Option<f64>,
    pub seed: u64,
    pub noisy: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStepRun {
    pub trajectory: Trajectory,
    pub result: EstimationResult,
    pub phase1: PhaseRun,
    pub phase2: PhaseRun,
}

/// Phase one, hand-off of `Ω̂12(t1_end)`, then phase two from the continued
/// plant and observer states.
pub fn run_two_step(sc: &Scenario) -> Result<TwoStepRun> {
    let noise = sc.noise.as_ref().filter(|n| !n.is_silent());
    let phase1 = run_phase1(&sc.plant, &sc.gains12, noise, &sc.sim, &sc.init)?;
    let omega12_hat = phase1.estimate_final;

    let gains23 = Gains23 {
        omega12_known: omega12_hat,
        ..sc.gains23
    };
    let start = Phase2Start {
        rho: phase1.rho_final,
        rho_hat: phase1.rho_hat_final,
        omega23_hat: sc.init.omega23_hat,
        omega12_hat,
    };
    let phase2 = run_phase2(&sc.plant, &gains23, noise, &sc.sim, &start)?;
    let omega23_hat = phase2.estimate_final;

    let t_switch = sc.sim.step_bounds().0 as f64 * sc.sim.dt;
    let tconv12 = convergence_time(&phase1.trajectory.omega12_series(), sc.plant.omega12, sc.sim.band12)?;
    let tconv23 =
        convergence_time(&phase2.trajectory.omega23_series(), sc.plant.omega23, sc.sim.band23)?.map(|t| t - t_switch);

    let result = EstimationResult {
        omega12_hat_final: omega12_hat,
        omega23_hat_final: omega23_hat,
        rel_err12: ((omega12_hat - sc.plant.omega12) / sc.plant.omega12).abs(),
        rel_err23: ((omega23_hat - sc.plant.omega23) / sc.plant.omega23).abs(),
        tconv12,
        tconv23,
        seed: sc.noise.map_or(0, |n| n.seed),
        noisy: noise.is_some(),
    };

    let mut trajectory = phase1.trajectory.clone();
    trajectory.extend_continuing(phase2.trajectory.clone());
    Ok(TwoStepRun {
        trajectory,
        result,
        phase1,
        phase2,
    })
}

/// Earliest sample time after which the series stays within the relative
/// band around `target`; `None` if the final sample is outside the band.
pub fn convergence_time(series: &[(f64, f64)], target: f64, band: f64) -> Result<Option<f64>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(band.is_finite() && band > 0.0) {
        return Err(invalid("band", "must be positive"));
    }
    if !target.is_finite() || target == 0.0 {
        return Err(invalid("target", "must be finite and nonzero"));
    }
    let inside = |v: f64| ((v - target) / target).abs() <= band;
    match series.iter().rposition(|&(_, v)| !inside(v)) {
        None => Ok(Some(series[0].0)),
        Some(i) if i + 1 == series.len() => Ok(None),
        Some(i) => Ok(Some(series[i + 1].0)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub outcome: std::result::Result<EstimationResult, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub count: usize,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
        Some(Self {
            median,
            q1,
            q3,
            iqr: q3 - q1,
            count: v.len(),
        })
    }
}

// Linear interpolation between order statistics of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub n_runs: usize,
    pub n_ok: usize,
    pub rel_err12: Option<Spread>,
    pub rel_err23: Option<Spread>,
    /// Over the runs that converged; see `unconverged12`.
    pub tconv12: Option<Spread>,
    pub tconv23: Option<Spread>,
    /// Successful runs whose estimate ended outside its band.
    pub unconverged12: usize,
    pub unconverged23: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub runs: Vec<RunRecord>,
    pub summary: SweepSummary,
}

/// Runs `n_runs` two-step estimations with noise seeds `seed0, seed0 + 1, …`.
///
/// With `jobs > 1` runs execute on a dedicated thread pool; records are
/// always returned in seed order. A failing run is recorded, not fatal.
pub fn monte_carlo(base: &Scenario, n_runs: usize, seed0: u64, jobs: usize) -> Result<SweepReport> {
    if n_runs == 0 {
        return Err(invalid("n_runs", "must be >= 1"));
    }
    let one = |i: usize| -> RunRecord {
        let seed = seed0.wrapping_add(i as u64);
        let mut sc = *base;
        if let Some(n) = sc.noise.as_mut() {
            n.seed = seed;
        }
        RunRecord {
            seed,
            outcome: run_two_step(&sc)
                .map(|r| EstimationResult { seed, ..r.result })
                .map_err(|e| e.to_string()),
        }
    };
    let runs: Vec<RunRecord> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| invalid("jobs", e.to_string()))?;
        pool.install(|| (0..n_runs).into_par_iter().map(one).collect())
    } else {
        (0..n_runs).map(one).collect()
    };

    let ok: Vec<&EstimationResult> = runs.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let col = |f: &dyn Fn(&EstimationResult) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let summary = SweepSummary {
        n_runs,
        n_ok: ok.len(),
        rel_err12: Spread::of(&col(&|r| Some(r.rel_err12))),
        rel_err23: Spread::of(&col(&|r| Some(r.rel_err23))),
        tconv12: Spread::of(&col(&|r| r.tconv12)),
        tconv23: Spread::of(&col(&|r| r.tconv23)),
        unconverged12: ok.iter().filter(|r| r.tconv12.is_none()).count(),
        unconverged23: ok.iter().filter(|r| r.tconv23.is_none()).count(),
    };
    Ok(SweepReport { runs, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short_cfg() -> SimConfig {
        SimConfig {
            t1_end: 5.0,
            t2_end: 10.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn rk4_exponential_decay() {
        let x = rk4_step(|_, y: &[f64; 1]| [-y[0]], &[1.0], 0.0, 0.01).unwrap();
        assert!((x[0] - (-0.01f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn rk4_reports_non_finite() {
        let r = rk4_step(|_, _: &[f64; 1]| [f64::INFINITY], &[1.0], 0.0, 0.1);
        assert!(matches!(r, Err(Error::NonFiniteState { .. })));
    }

    #[test]
    fn rk4_harmonic_oscillator_energy() {
        let mut x = [1.0, 0.0];
        let dt = 0.01;
        for n in 0..10_000 {
            x = rk4_step(|_, s: &[f64; 2]| [s[1], -s[0]], &x, n as f64 * dt, dt).unwrap();
        }
        let energy = 0.5 * (x[0] * x[0] + x[1] * x[1]);
        assert!(((energy - 0.5) / 0.5).abs() <= 1e-7);
    }

    #[test]
    fn rk4_plant_step_preserves_trace() {
        let p = PlantParams::reference();
        let rho = PureState::from_amplitudes([0.3, 0.5, -0.8]).unwrap();
        let x = rho.matrix().entries();
        let y = rk4_step(
            |_, s: &[f64; 6]| plant_rhs_sym(&RealSym3::from_entries(*s), 1.0, 0.4, &p).entries(),
            &x,
            0.0,
            1e-3,
        )
        .unwrap();
        assert!((RealSym3::from_entries(y).trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn convergence_time_cases() {
        let s = [(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)];
        assert_eq!(convergence_time(&s, 1.0, 0.05).unwrap(), Some(0.0));
        let s = [(0.0, 1.0), (1.0, 1.0), (2.0, 2.0)];
        assert_eq!(convergence_time(&s, 1.0, 0.05).unwrap(), None);
        let s = [(0.0, 2.0), (1.0, 1.01), (2.0, 1.5), (3.0, 0.99), (4.0, 1.0)];
        assert_eq!(convergence_time(&s, 1.0, 0.05).unwrap(), Some(3.0));
        assert_eq!(convergence_time(&s, 1.0, 0.6).unwrap(), Some(1.0));
        assert_eq!(convergence_time(&[], 1.0, 0.1), Err(Error::EmptySeries));
        assert!(convergence_time(&s, 0.0, 0.1).is_err());
        assert!(convergence_time(&s, 1.0, 0.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn convergence_time_monotone_in_band(vals in proptest::collection::vec(0.0f64..2.0, 1..40),
                                             b1 in 0.01f64..1.0, b2 in 0.01f64..1.0) {
            let s: Vec<(f64, f64)> = vals.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect();
            let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
            let t_lo = convergence_time(&s, 1.0, lo).unwrap();
            let t_hi = convergence_time(&s, 1.0, hi).unwrap();
            match (t_lo, t_hi) {
                (Some(a), Some(b)) => proptest::prop_assert!(b <= a),
                (Some(_), None) => proptest::prop_assert!(false),
                _ => {}
            }
        }
    }

    #[test]
    fn phase1_equilibrium_stays_put() {
        let p = PlantParams::reference();
        let mut init = InitialConditions::reference(&p);
        init.omega12_hat = p.omega12;
        let run = run_phase1(&p, &Gains12::reference(), None, &short_cfg(), &init).unwrap();
        for s in &run.trajectory.samples {
            assert!((s.omega12_hat - p.omega12).abs() < 1e-10);
            assert!((s.fidelity - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phase1_zero_gain_freezes_estimate() {
        let p = PlantParams::reference();
        let init = InitialConditions::reference(&p);
        let g = Gains12 {
            gamma_small: 0.0,
            ..Gains12::reference()
        };
        let run = run_phase1(&p, &g, None, &short_cfg(), &init).unwrap();
        assert!(run.trajectory.samples.iter().all(|s| s.omega12_hat == init.omega12_hat));
    }

    #[test]
    fn phase2_equilibrium_stays_put() {
        let p = PlantParams::reference();
        let rho = PureState::from_amplitudes([0.7, 0.6, 0.2]).unwrap();
        let start = Phase2Start {
            rho,
            rho_hat: rho,
            omega23_hat: p.omega23,
            omega12_hat: p.omega12,
        };
        let run = run_phase2(&p, &Gains23::reference(p.omega12), None, &short_cfg(), &start).unwrap();
        for s in &run.trajectory.samples {
            assert!((s.omega23_hat - p.omega23).abs() < 1e-10);
        }
    }

    #[test]
    fn sample_count_and_ordering() {
        let cfg = SimConfig {
            sample_stride: 7,
            ..short_cfg()
        };
        let sc = Scenario {
            sim: cfg,
            ..Scenario::reference()
        };
        let run = run_two_step(&sc).unwrap();
        let (_, n2) = cfg.step_bounds();
        assert_eq!(run.trajectory.len(), n2 / 7 + 1);
        assert!(run.trajectory.samples.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn handoff_continues_states() {
        let sc = Scenario {
            sim: short_cfg(),
            ..Scenario::reference()
        };
        let run = run_two_step(&sc).unwrap();
        let last1 = run.phase1.trajectory.samples.last().unwrap();
        let first2 = run.phase2.trajectory.samples.first().unwrap();
        assert_eq!(last1.t, first2.t);
        assert_eq!(last1.rho, first2.rho);
        assert_eq!(last1.rho_hat, first2.rho_hat);
        assert_eq!(first2.omega12_hat, run.result.omega12_hat_final);
    }

    #[test]
    fn measurement_hold_mode_runs() {
        let sc = Scenario {
            sim: SimConfig {
                measurement_hold: Some(0.01),
                ..short_cfg()
            },
            ..Scenario::reference()
        };
        let held = run_two_step(&sc).unwrap();
        let cont = run_two_step(&Scenario {
            sim: short_cfg(),
            ..Scenario::reference()
        })
        .unwrap();
        let d = (held.result.omega12_hat_final - cont.result.omega12_hat_final).abs();
        assert!(d > 0.0 && d < 1e-2, "hold changed estimate by {d}");
    }

    #[test]
    fn invalid_configs_rejected() {
        let p = PlantParams::reference();
        let init = InitialConditions::reference(&p);
        let bad = SimConfig {
            t2_end: 1.0,
            ..SimConfig::default()
        };
        assert!(run_phase1(&p, &Gains12::reference(), None, &bad, &init).is_err());
        let bad = SimConfig {
            sample_stride: 0,
            ..SimConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(monte_carlo(&Scenario::reference(), 0, 1, 1).is_err());
    }

    #[test]
    fn quantiles() {
        let s = Spread::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
        assert!(Spread::of(&[]).is_none());
    }
}
