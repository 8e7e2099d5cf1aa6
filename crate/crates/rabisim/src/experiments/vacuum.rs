//! Resonant excitation swap and its detuning dependence.

use rayon::prelude::*;

use rabisim_core::hamiltonian::ModelOptions;
use rabisim_core::lindblad::{TimeGrid, Tolerances};
use rabisim_core::params::DeviceParams;
use rabisim_core::series::TimeSeries;
use rabisim_core::state::QubitPreparation;
use rabisim_core::TAU;

use super::{DrivenSetup, Frame};
use crate::error::{Result, RunError};
use crate::fit::{fit_damped_cosine, FitResult};
use crate::report::{Outcome, Summary};

fn swap_setup(params: &DeviceParams, options: &ModelOptions, dissipative: bool) -> DrivenSetup {
    DrivenSetup {
        params: params.clone(),
        drives: Vec::new(),
        options: ModelOptions { parasitic: false, ..*options },
        frame: Frame::Rotating,
        initial: QubitPreparation::Excited,
        dissipative,
    }
}

#[derive(Debug, Clone)]
pub struct VacuumRabi {
    pub series: TimeSeries,
    pub fit: FitResult,
}

impl VacuumRabi {
    pub fn summary(&self, params: &DeviceParams) -> Summary {
        let mut s = Summary::new();
        s.metric("g_mhz", params.g / TAU / 1e6);
        s.metric("two_g_fit_mhz", self.fit.frequency / TAU / 1e6);
        s.metric("gamma_fit_per_s", self.fit.decay);
        s.metric("gamma_expected_per_s", (params.kappa + 1.0 / params.t1) / 2.0);
        s.metric("fit_amplitude", self.fit.amplitude);
        s.metric("fit_offset", self.fit.offset);
        s.metric("fit_residual_rms", self.fit.residual_norm);
        s
    }

    pub fn outcome(self, params: &DeviceParams) -> Outcome {
        let summary = self.summary(params);
        let mut o = Outcome { series: vec![("vacuum_rabi".into(), self.series)], tables: vec![], summary };
        o.collect_diagnostics();
        o
    }
}

/// Qubit in |e⟩, mode in |0⟩, no drives, integrated in the frame rotating
/// at the mode frequency. `P_e` is fitted to `offset + A e^{−Γt} cos(2g t)`.
pub fn run_vacuum_rabi(
    params: &DeviceParams,
    options: &ModelOptions,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<VacuumRabi> {
    if (params.epsilon - params.omega).abs() > 1e-9 * params.omega {
        return Err(RunError::Invalid("vacuum Rabi runs need epsilon = omega".into()));
    }
    let series = swap_setup(params, options, true).simulate(grid, tol)?;
    let pe = series.trace("P_e").expect("P_e trace");
    let fit = fit_damped_cosine(&series.times, pe)?;
    Ok(VacuumRabi { series, fit })
}

/// Generalized Rabi frequency `√((2g)² + δ²)`.
pub fn generalized_rabi_frequency(g: f64, detuning: f64) -> f64 {
    (4.0 * g * g + detuning * detuning).sqrt()
}

/// Swap contrast `(2g)² / ((2g)² + δ²)`.
pub fn swap_contrast(g: f64, detuning: f64) -> f64 {
    4.0 * g * g / (4.0 * g * g + detuning * detuning)
}

/// Comparison of one dissipationless column with the generalized Rabi formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningCheck {
    pub detuning: f64,
    pub frequency: f64,
    pub expected_frequency: f64,
    pub contrast: f64,
    pub expected_contrast: f64,
}

#[derive(Debug, Clone)]
pub struct DetuningMap {
    /// One `P_e` column per detuning, named by detuning in MHz.
    pub map: TimeSeries,
    pub detunings: Vec<f64>,
    pub checks: Vec<DetuningCheck>,
}

pub fn detuning_label(detuning: f64) -> String {
    format!("P_e[{:+.3}MHz]", detuning / TAU / 1e6)
}

/// Sweeps `ε − ω` over `detunings`. The generalized Rabi formula is checked
/// on dissipationless runs at each entry of `check_detunings`.
pub fn run_detuning_map(
    params: &DeviceParams,
    options: &ModelOptions,
    detunings: &[f64],
    check_detunings: &[f64],
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<DetuningMap> {
    let detuned = |d: f64| DeviceParams { epsilon: params.omega + d, ..params.clone() };
    let columns: Vec<Result<Vec<f64>>> = detunings
        .par_iter()
        .map(|&d| {
            let s = swap_setup(&detuned(d), options, true).simulate(grid, tol)?;
            Ok(s.trace("P_e").expect("P_e trace").to_vec())
        })
        .collect();
    let mut map = TimeSeries::new(grid.times());
    for (&d, col) in detunings.iter().zip(columns) {
        map.push_trace(detuning_label(d), col?)?;
    }
    let checks: Vec<Result<DetuningCheck>> = check_detunings
        .par_iter()
        .map(|&d| {
            let s = swap_setup(&detuned(d), options, false).simulate(grid, tol)?;
            let fit = fit_damped_cosine(&s.times, s.trace("P_e").expect("P_e trace"))?;
            Ok(DetuningCheck {
                detuning: d,
                frequency: fit.frequency,
                expected_frequency: generalized_rabi_frequency(params.g, d),
                contrast: 2.0 * fit.amplitude.abs(),
                expected_contrast: swap_contrast(params.g, d),
            })
        })
        .collect();
    Ok(DetuningMap { map, detunings: detunings.to_vec(), checks: checks.into_iter().collect::<Result<_>>()? })
}

impl DetuningMap {
    pub fn outcome(self) -> Outcome {
        let mut s = Summary::new();
        s.metric("columns", self.detunings.len() as f64);
        for (i, c) in self.checks.iter().enumerate() {
            let p = format!("check.{i}.");
            s.metric(format!("{p}detuning_mhz"), c.detuning / TAU / 1e6);
            s.metric(format!("{p}frequency_mhz"), c.frequency / TAU / 1e6);
            s.metric(format!("{p}expected_frequency_mhz"), c.expected_frequency / TAU / 1e6);
            s.metric(format!("{p}contrast"), c.contrast);
            s.metric(format!("{p}expected_contrast"), c.expected_contrast);
        }
        let mut o = Outcome { series: vec![("detuning_map".into(), self.map)], tables: vec![], summary: s };
        o.collect_diagnostics();
        o
    }
}
