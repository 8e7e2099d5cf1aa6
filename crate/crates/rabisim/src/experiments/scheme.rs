//! Dissipationless checks of the simulation scheme: driven versus ideal
//! mode population, drive-amplitude independence and the parasitic drive.

use rayon::prelude::*;

use rabisim_core::hamiltonian::{ModelOptions, TimeDependentHamiltonian};
use rabisim_core::layout::MODE;
use rabisim_core::lindblad::{evolve, Observable, TimeGrid, Tolerances};
use rabisim_core::ops::{displacement, embed, fock_ladder_on, number_on};
use rabisim_core::params::{DeviceParams, DriveTone, EffectiveParams};
use rabisim_core::series::TimeSeries;
use rabisim_core::state::QubitPreparation;
use rabisim_core::{mhz, HilbertLayout, QuantumState, C64, TAU};

use super::{effective_hamiltonian, effective_layout, initial_state, simulate_effective, window, DrivenSetup, EffectiveModel, Frame};
use crate::error::{Result, RunError};
use crate::report::{format_value, Outcome, Summary};
use crate::signal::rms;

fn mhz_of(x: f64) -> f64 {
    x / TAU / 1e6
}

fn peak(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::MIN, f64::max)
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub params: DeviceParams,
    pub omega_eff_list: Vec<f64>,
    /// Drive amplitude for the ω_eff sweep.
    pub eta1: f64,
    pub eta1_list: Vec<f64>,
    /// ω_eff for the η₁ sweep.
    pub omega_eff: f64,
    pub initial: QubitPreparation,
    pub options: ModelOptions,
    pub frame: Frame,
}

impl SchemeConfig {
    pub fn new(params: DeviceParams) -> Self {
        Self {
            params,
            omega_eff_list: [2.0, 3.0, 5.0, 8.0].map(mhz).to_vec(),
            eta1: mhz(50.0),
            eta1_list: [40.0, 50.0, 60.0].map(mhz).to_vec(),
            omega_eff: mhz(5.0),
            initial: QubitPreparation::Ground,
            options: ModelOptions::default(),
            frame: Frame::Rotating,
        }
    }

    fn driven(&self, omega_eff: f64, eta1: f64) -> Result<DrivenSetup> {
        Ok(DrivenSetup {
            params: self.params.clone(),
            drives: vec![DriveTone::new(eta1, self.params.omega - omega_eff, 0.0)?],
            options: ModelOptions { parasitic: false, ..self.options },
            frame: self.frame,
            initial: self.initial,
            dissipative: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaComparison {
    pub omega_eff: f64,
    pub peak_ideal: f64,
    pub peak_driven: f64,
    /// Largest pointwise `|n_driven − n_ideal|` over the ideal peak, within
    /// the first cycle `2π/ω_eff`.
    pub max_deviation: f64,
    /// Same over the whole record.
    pub max_deviation_record: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaComparison {
    pub eta1_a: f64,
    pub eta1_b: f64,
    /// RMS difference over the larger of the two peaks, within the first
    /// cycle of the reference ω_eff.
    pub rms_relative: f64,
    pub rms_relative_record: f64,
}

#[derive(Debug, Clone)]
pub struct SchemeVerification {
    /// `n_ideal[..]` and `n_driven[..]` per ω_eff.
    pub omega_sweep: TimeSeries,
    /// `n_driven[..]` per η₁ at the reference ω_eff, plus `n_ideal`.
    pub eta_sweep: TimeSeries,
    pub omegas: Vec<OmegaComparison>,
    pub eta_peaks: Vec<(f64, f64)>,
    pub eta_pairs: Vec<EtaComparison>,
}

enum Job {
    Ideal(f64),
    Driven(f64, f64),
}

/// Samples covering `[0, 2π/ω]`, at least three and at most the record.
fn cycle_len(times: &[f64], omega: f64) -> usize {
    let end = times[0] + TAU / omega;
    times.iter().take_while(|&&t| t <= end * (1.0 + 1e-12)).count().clamp(3.min(times.len()), times.len())
}

fn label(w: f64) -> String {
    format_value(mhz_of(w))
}

/// Comparisons are made over one cycle of the synthesized dynamics, where the
/// first-order scheme is meant to hold; whole-record figures are kept
/// alongside since second-order terms `∝ g²/η₁` accumulate with time.
pub fn run_scheme_verification(cfg: &SchemeConfig, grid: &TimeGrid, tol: &Tolerances) -> Result<SchemeVerification> {
    for &w in cfg.omega_eff_list.iter().chain([&cfg.omega_eff]) {
        if !(w > 0.0 && w < cfg.params.omega) {
            return Err(RunError::Invalid("every omega_eff must lie in (0, omega)".into()));
        }
    }
    let mut jobs: Vec<Job> = Vec::new();
    for &w in &cfg.omega_eff_list {
        jobs.push(Job::Ideal(w));
        jobs.push(Job::Driven(w, cfg.eta1));
    }
    jobs.push(Job::Ideal(cfg.omega_eff));
    for &e in &cfg.eta1_list {
        jobs.push(Job::Driven(cfg.omega_eff, e));
    }
    let layout = effective_layout(&cfg.params)?;
    let psi0 = initial_state(&layout, cfg.initial)?;
    let traces: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|job| {
            let s = match *job {
                Job::Ideal(w) => {
                    let eff = EffectiveParams::new(cfg.params.g, w, 0.0);
                    simulate_effective(&cfg.params, &eff, EffectiveModel::Rabi, &psi0, false, grid, tol)?
                }
                Job::Driven(w, e) => cfg.driven(w, e)?.simulate(grid, tol)?,
            };
            Ok(s.trace("n_mode").expect("n_mode").to_vec())
        })
        .collect();
    let mut traces = traces.into_iter().collect::<Result<Vec<_>>>()?.into_iter();
    let times = grid.times();
    let mut omega_sweep = TimeSeries::new(times.clone());
    let mut omegas = Vec::new();
    for &w in &cfg.omega_eff_list {
        let ideal = traces.next().expect("ideal");
        let driven = traces.next().expect("driven");
        let cycle = cycle_len(&times, w);
        let dev = |n: usize| {
            let p = peak(&ideal[..n]);
            ideal[..n].iter().zip(&driven).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / p
        };
        omegas.push(OmegaComparison {
            omega_eff: w,
            peak_ideal: peak(&ideal),
            peak_driven: peak(&driven),
            max_deviation: dev(cycle),
            max_deviation_record: dev(times.len()),
        });
        omega_sweep.push_trace(format!("n_ideal[{}MHz]", label(w)), ideal)?;
        omega_sweep.push_trace(format!("n_driven[{}MHz]", label(w)), driven)?;
    }
    let ref_cycle = cycle_len(&times, cfg.omega_eff);
    let mut eta_sweep = TimeSeries::new(times);
    eta_sweep.push_trace("n_ideal", traces.next().expect("ideal"))?;
    let eta_traces: Vec<Vec<f64>> = traces.collect();
    let mut eta_pairs = Vec::new();
    for i in 0..eta_traces.len() {
        for j in i + 1..eta_traces.len() {
            let (a, b) = (&eta_traces[i], &eta_traces[j]);
            let r = |n: usize| rms(a[..n].iter().zip(b).map(|(x, y)| x - y)) / peak(&a[..n]).max(peak(&b[..n]));
            eta_pairs.push(EtaComparison {
                eta1_a: cfg.eta1_list[i],
                eta1_b: cfg.eta1_list[j],
                rms_relative: r(ref_cycle),
                rms_relative_record: r(a.len()),
            });
        }
    }
    let eta_peaks = cfg.eta1_list.iter().zip(&eta_traces).map(|(&e, t)| (e, peak(t))).collect();
    for (&e, t) in cfg.eta1_list.iter().zip(eta_traces) {
        eta_sweep.push_trace(format!("n_driven[eta1={}MHz]", label(e)), t)?;
    }
    Ok(SchemeVerification { omega_sweep, eta_sweep, omegas, eta_peaks, eta_pairs })
}

impl SchemeVerification {
    pub fn outcome(self, cfg: &SchemeConfig) -> Outcome {
        let mut s = Summary::new();
        s.metric("g_mhz", mhz_of(cfg.params.g));
        s.metric("eta1_mhz", mhz_of(cfg.eta1));
        s.metric("reference_omega_eff_mhz", mhz_of(cfg.omega_eff));
        for (i, c) in self.omegas.iter().enumerate() {
            let p = format!("omega.{i}.");
            s.metric(format!("{p}omega_eff_mhz"), mhz_of(c.omega_eff));
            s.metric(format!("{p}peak_ideal"), c.peak_ideal);
            s.metric(format!("{p}peak_driven"), c.peak_driven);
            s.metric(format!("{p}max_deviation_rel"), c.max_deviation);
            s.metric(format!("{p}max_deviation_rel_record"), c.max_deviation_record);
        }
        for (i, (e, p)) in self.eta_peaks.iter().enumerate() {
            s.metric(format!("eta.{i}.eta1_mhz"), mhz_of(*e));
            s.metric(format!("eta.{i}.peak"), *p);
        }
        for (i, c) in self.eta_pairs.iter().enumerate() {
            s.text(format!("pair.{i}"), format!("{}-{}MHz", label(c.eta1_a), label(c.eta1_b)));
            s.metric(format!("pair.{i}.rms_rel"), c.rms_relative);
            s.metric(format!("pair.{i}.rms_rel_record"), c.rms_relative_record);
        }
        let mut o = Outcome {
            series: vec![("omega_sweep".into(), self.omega_sweep), ("eta_sweep".into(), self.eta_sweep)],
            tables: vec![],
            summary: s,
        };
        o.collect_diagnostics();
        o
    }
}

/// Closed-form population of the undamped driven oscillator
/// `ω b†b + (η/2)(b + b†)` started in the vacuum.
pub fn driven_oscillator_population(omega: f64, eta: f64, t: f64) -> f64 {
    (eta / omega).powi(2) * (omega * t / 2.0).sin().powi(2)
}

/// Displacement that maps the displaced model onto the parasitic one.
pub fn parasitic_displacement(omega_eff: f64, eta_r: f64) -> f64 {
    -eta_r / (2.0 * omega_eff)
}

#[derive(Debug, Clone)]
pub struct ParasiticConfig {
    pub params: DeviceParams,
    pub omega_eff: f64,
    pub eta_r_list: Vec<f64>,
    pub initial: QubitPreparation,
}

impl ParasiticConfig {
    pub fn new(params: DeviceParams) -> Self {
        Self {
            params,
            omega_eff: mhz(5.0),
            eta_r_list: [0.0, 2.5, 5.0].map(mhz).to_vec(),
            initial: QubitPreparation::Excited,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParasiticTrace {
    pub eta_r: f64,
    /// Largest amount by which `|P_e − ½|` exceeds the η_r = 0 contrast.
    pub envelope_excess: f64,
    pub mode_peak: f64,
    pub mode_peak_expected: f64,
    /// Largest deviation of the simulated mode trace from the closed form.
    pub mode_error: f64,
    /// Period from the first population maximum (twice its time).
    pub mode_period: f64,
}

#[derive(Debug, Clone)]
pub struct ParasiticStudy {
    pub qubit: TimeSeries,
    pub mode: TimeSeries,
    pub traces: Vec<ParasiticTrace>,
    /// `(η_r, max deviation)` between the parasitic model started from the
    /// displaced state and the displaced model, over `P_e` and `⟨n⟩`.
    pub equivalence: Option<(f64, f64)>,
}

/// Evolution under the parasitic model from `D(α)|ψ₀⟩` against the displaced
/// model from `|ψ₀⟩`, comparing `P_e` and `⟨n⟩` with `⟨D†nD⟩`.
pub fn displacement_equivalence(
    params: &DeviceParams,
    eff: &EffectiveParams,
    eta_r: f64,
    initial: QubitPreparation,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<f64> {
    let layout = effective_layout(params)?;
    let fock = params.fock_dim;
    let alpha = parasitic_displacement(eff.omega_eff, eta_r);
    let d = embed(&displacement(C64::from(alpha), fock)?.operator, MODE, &layout)?;
    let psi0 = initial_state(&layout, initial)?;
    let shifted = QuantumState::pure_normalized(layout.clone(), d.apply(psi0.as_pure()?)?)?;
    let par = simulate_effective(params, eff, EffectiveModel::Parasitic(eta_r), &shifted, false, grid, tol)?;
    let disp = simulate_effective(params, eff, EffectiveModel::Displaced(eta_r), &psi0, false, grid, tol)?;
    let n = embed(&number_on(MODE, fock)?, MODE, &layout)?;
    let dnd = &(&d.dagger() * &n) * &d;
    let dnd = (&dnd + &dnd.dagger()) * 0.5;
    let h = TimeDependentHamiltonian::new(effective_hamiltonian(
        eff,
        EffectiveModel::Displaced(eta_r),
        &layout,
    )?);
    let obs = [Observable::new("n_shifted", dnd)];
    let shifted_n = evolve(&h, &psi0, &[], grid, &obs, tol)?;
    let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(dev(par.trace("P_e").expect("P_e"), disp.trace("P_e").expect("P_e"))
        .max(dev(par.trace("n_mode").expect("n"), shifted_n.trace("n_shifted").expect("n"))))
}

pub fn run_parasitic_study(cfg: &ParasiticConfig, grid: &TimeGrid, tol: &Tolerances) -> Result<ParasiticStudy> {
    if !(cfg.omega_eff > 0.0) {
        return Err(RunError::Invalid("omega_eff must be positive".into()));
    }
    let eff = EffectiveParams::new(cfg.params.g, cfg.omega_eff, 0.0);
    let layout = effective_layout(&cfg.params)?;
    let psi0 = initial_state(&layout, cfg.initial)?;
    let mode_layout = HilbertLayout::single(MODE, cfg.params.fock_dim)?;
    let mode_psi0 = QuantumState::basis(mode_layout.clone(), &[0])?;
    let mut etas = cfg.eta_r_list.clone();
    if !etas.contains(&0.0) {
        etas.insert(0, 0.0);
    }
    let runs: Vec<Result<(Vec<f64>, Vec<f64>)>> = etas
        .par_iter()
        .map(|&eta_r| {
            let q = simulate_effective(&cfg.params, &eff, EffectiveModel::Displaced(eta_r), &psi0, false, grid, tol)?;
            let (b, bd) = fock_ladder_on(MODE, cfg.params.fock_dim)?;
            let n = number_on(MODE, cfg.params.fock_dim)?;
            let h = &n * cfg.omega_eff + (&b + &bd) * (eta_r / 2.0);
            let obs = [Observable::new("n_mode", n)];
            let m = evolve(
                &TimeDependentHamiltonian::new(h),
                &mode_psi0,
                &[],
                grid,
                &obs,
                tol,
            )?;
            Ok((q.trace("P_e").expect("P_e").to_vec(), m.trace("n_mode").expect("n").to_vec()))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let times = grid.times();
    let base_idx = etas.iter().position(|&e| e == 0.0).expect("baseline present");
    let base_contrast: Vec<f64> = runs[base_idx].0.iter().map(|p| (p - 0.5).abs()).collect();
    let period = TAU / cfg.omega_eff;
    let first = window(&times, 0.0, period);
    let mut qubit = TimeSeries::new(times.clone());
    let mut mode = TimeSeries::new(times.clone());
    let mut traces = Vec::new();
    for (&eta_r, (pe, n)) in etas.iter().zip(runs) {
        let excess = pe.iter().zip(&base_contrast).map(|(p, c)| (p - 0.5).abs() - c).fold(f64::MIN, f64::max);
        let closed: Vec<f64> = times.iter().map(|&t| driven_oscillator_population(cfg.omega_eff, eta_r, t)).collect();
        let err = n.iter().zip(&closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let k = first.clone().max_by(|&a, &b| n[a].total_cmp(&n[b])).unwrap_or(0);
        traces.push(ParasiticTrace {
            eta_r,
            envelope_excess: excess,
            mode_peak: peak(&n),
            mode_peak_expected: (eta_r / cfg.omega_eff).powi(2),
            mode_error: err,
            mode_period: if eta_r > 0.0 { 2.0 * times[k] } else { f64::NAN },
        });
        qubit.push_trace(format!("P_e[eta_r={}MHz]", mhz_of(eta_r)), pe)?;
        mode.push_trace(format!("n_mode[eta_r={}MHz]", mhz_of(eta_r)), n)?;
        mode.push_trace(format!("n_closed[eta_r={}MHz]", mhz_of(eta_r)), closed)?;
    }
    let largest = etas.iter().copied().fold(0.0, f64::max);
    let equivalence = if largest > 0.0 {
        let tight = Tolerances { rtol: tol.rtol.min(1e-10), atol: tol.atol.min(1e-12), ..*tol };
        Some((largest, displacement_equivalence(&cfg.params, &eff, largest, cfg.initial, grid, &tight)?))
    } else {
        None
    };
    Ok(ParasiticStudy { qubit, mode, traces, equivalence })
}

impl ParasiticStudy {
    pub fn outcome(self, cfg: &ParasiticConfig) -> Outcome {
        let mut s = Summary::new();
        s.metric("g_mhz", mhz_of(cfg.params.g));
        s.metric("omega_eff_mhz", mhz_of(cfg.omega_eff));
        for (i, t) in self.traces.iter().enumerate() {
            let p = format!("eta_r.{i}.");
            s.metric(format!("{p}eta_r_mhz"), mhz_of(t.eta_r));
            s.metric(format!("{p}envelope_excess"), t.envelope_excess);
            s.metric(format!("{p}mode_peak"), t.mode_peak);
            s.metric(format!("{p}mode_peak_expected"), t.mode_peak_expected);
            s.metric(format!("{p}mode_error"), t.mode_error);
            if t.mode_period.is_finite() {
                s.metric(format!("{p}mode_period_ns"), t.mode_period * 1e9);
            }
        }
        if let Some((eta, dev)) = self.equivalence {
            s.metric("equivalence.eta_r_mhz", mhz_of(eta));
            s.metric("equivalence.max_deviation", dev);
        }
        let mut o = Outcome {
            series: vec![("parasitic_qubit".into(), self.qubit), ("parasitic_mode".into(), self.mode)],
            tables: vec![],
            summary: s,
        };
        o.collect_diagnostics();
        o
    }
}
