//! Collapse and revival of the qubit under the synthesized Rabi model,
//! with and without the qubit energy term.

use std::f64::consts::{E, PI};

use rayon::prelude::*;

use rabisim_core::hamiltonian::ModelOptions;
use rabisim_core::lindblad::{TimeGrid, Tolerances};
use rabisim_core::params::{normalize_phase, DeviceParams, DriveTone, EffectiveParams};
use rabisim_core::series::TimeSeries;
use rabisim_core::state::QubitPreparation;
use rabisim_core::{mhz, TAU};

use super::{effective_layout, initial_state, preparation_name, simulate_effective, window, DrivenSetup, EffectiveModel, Frame};
use crate::error::{Result, RunError};
use crate::report::{Outcome, Summary};
use crate::signal::{extract_envelope, extract_rabi_frequency, rms, Peak};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevivalReport {
    pub collapse_time: f64,
    pub revival_time: f64,
    /// Contrast at the revival, in population units.
    pub revival_amplitude: f64,
    pub period: f64,
}

impl RevivalReport {
    fn write(&self, s: &mut Summary, prefix: &str) {
        s.metric(format!("{prefix}collapse_time_ns"), self.collapse_time * 1e9);
        s.metric(format!("{prefix}revival_time_ns"), self.revival_time * 1e9);
        s.metric(format!("{prefix}revival_amplitude"), self.revival_amplitude);
        s.metric(format!("{prefix}revival_period_ns"), self.period * 1e9);
    }
}

fn is_local_min(c: &[f64], i: usize) -> bool {
    i > 0 && i + 1 < c.len() && c[i] <= c[i - 1] && c[i] < c[i + 1]
}

fn is_local_max(c: &[f64], i: usize) -> bool {
    i > 0 && i + 1 < c.len() && c[i] >= c[i - 1] && c[i] > c[i + 1]
}

/// Vertex of the parabola through three neighbouring samples.
fn refine_peak(times: &[f64], c: &[f64], i: usize) -> (f64, f64) {
    let (a, b, d) = (c[i - 1], c[i], c[i + 1]);
    let denom = a - 2.0 * b + d;
    if denom == 0.0 {
        return (times[i], b);
    }
    let off = (0.5 * (a - d) / denom).clamp(-0.5, 0.5);
    let h = times[i + 1] - times[i];
    (times[i] + off * h, b - 0.25 * (a - d) * off)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len().max(1) as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt())
}

/// First revival after the collapse of a contrast trace, together with the
/// following minimum.
fn next_revival(c: &[f64], from: usize, c0: f64) -> Option<(usize, usize, f64)> {
    let n = c.len();
    let first_min = (from..n).find(|&i| is_local_min(c, i))?;
    let threshold_idx = (from..=first_min).find(|&i| c[i] < c0 / E);
    let collapse = threshold_idx.unwrap_or(first_min);
    let mut bottom = collapse;
    while bottom + 1 < n && c[bottom + 1] <= c[bottom] {
        bottom += 1;
    }
    let base = c[bottom];
    let edge = if threshold_idx.is_some() { c0 / E } else { base + 0.5 * (c0 - base) };
    let mut lo = bottom;
    while lo > from && c[lo - 1] <= edge {
        lo -= 1;
    }
    let mut hi = bottom;
    while hi + 1 < n && c[hi + 1] <= edge {
        hi += 1;
    }
    let (_, sigma) = mean_std(&c[lo..=hi]);
    let threshold = base + (2.0 * sigma).max(1e-3);
    let peak = (bottom + 1..n).find(|&i| is_local_max(c, i) && c[i] > threshold)?;
    Some((collapse, peak, threshold))
}

/// Collapse time is the first time the contrast falls below `1/e` of its
/// initial value, or its first local minimum if it stays above that. The revival
/// is the first later local maximum exceeding the collapsed baseline by more
/// than twice its fluctuation. The period is the spacing to the second
/// revival when the record contains one, else the first revival time.
pub fn detect_revival(times: &[f64], contrast: &[f64]) -> Option<RevivalReport> {
    let c0 = *contrast.first()?;
    if !(c0 > 1e-6) || contrast.len() < 5 {
        return None;
    }
    let (collapse, peak, _) = next_revival(contrast, 0, c0)?;
    let (t_rev, amp) = refine_peak(times, contrast, peak);
    let period = match next_revival(contrast, peak, amp) {
        Some((_, p2, _)) => refine_peak(times, contrast, p2).0 - t_rev,
        None => t_rev - times[0],
    };
    Some(RevivalReport {
        collapse_time: times[collapse],
        revival_time: t_rev,
        revival_amplitude: amp,
        period,
    })
}

/// Contrast of a population trace about the equator.
pub fn contrast(p_e: &[f64]) -> Vec<f64> {
    p_e.iter().map(|p| (p - 0.5).abs()).collect()
}

#[derive(Debug, Clone)]
pub struct CollapseRevivalConfig {
    pub params: DeviceParams,
    /// Rabi drive amplitude η₁.
    pub eta1: f64,
    pub omega_eff: f64,
    pub phi1: f64,
    pub initial: QubitPreparation,
    pub options: ModelOptions,
    pub frame: Frame,
    pub dissipative: bool,
    /// Also run the driven model; the effective model always runs.
    pub driven: bool,
}

impl CollapseRevivalConfig {
    pub fn new(params: DeviceParams, omega_eff: f64) -> Self {
        Self {
            params,
            eta1: mhz(50.0),
            omega_eff,
            phi1: 0.0,
            initial: QubitPreparation::Excited,
            options: ModelOptions::default(),
            frame: Frame::Rotating,
            dissipative: true,
            driven: true,
        }
    }

    pub fn omega1(&self) -> f64 {
        self.params.omega - self.omega_eff
    }

    /// A record covering two revivals plus margin.
    pub fn default_grid(&self, dt: f64) -> Result<TimeGrid> {
        Ok(TimeGrid::with_spacing(2.3 * TAU / self.omega_eff, dt)?)
    }
}

#[derive(Debug, Clone)]
pub struct CollapseRevival {
    /// Driven run with `P_e`, `n_mode` and the extracted `P_e_envelope`.
    pub lab: Option<TimeSeries>,
    pub effective: TimeSeries,
    pub report: Option<RevivalReport>,
    pub lab_report: Option<RevivalReport>,
    pub carrier: Option<Peak>,
    /// RMS distance between the driven-run envelope and the effective trace.
    pub envelope_rms: Option<f64>,
    pub warnings: Vec<String>,
}

/// Runs the ideal effective Hamiltonian and, if requested, the driven model
/// with identical channel operators; revivals are read off the effective trace.
pub fn run_collapse_revival(cfg: &CollapseRevivalConfig, grid: &TimeGrid, tol: &Tolerances) -> Result<CollapseRevival> {
    if !(cfg.omega_eff > 0.0) || !(cfg.omega1() > 0.0) {
        return Err(RunError::Invalid("omega_eff must lie in (0, omega)".into()));
    }
    let mut warnings = Vec::new();
    if (cfg.params.epsilon - cfg.params.omega).abs() > 1e-9 * cfg.params.omega {
        warnings.push("qubit and mode are not resonant; the effective model assumes epsilon = omega".into());
    }
    let eff = EffectiveParams::new(cfg.params.g, cfg.omega_eff, 0.0);
    let psi0 = initial_state(&effective_layout(&cfg.params)?, cfg.initial)?;
    let run_effective =
        || simulate_effective(&cfg.params, &eff, EffectiveModel::Rabi, &psi0, cfg.dissipative, grid, tol);
    let run_lab = || -> Result<Option<TimeSeries>> {
        if !cfg.driven {
            return Ok(None);
        }
        let setup = DrivenSetup {
            params: cfg.params.clone(),
            drives: vec![DriveTone::new(cfg.eta1, cfg.omega1(), cfg.phi1)?],
            options: cfg.options,
            frame: cfg.frame,
            initial: cfg.initial,
            dissipative: cfg.dissipative,
        };
        setup.simulate(grid, tol).map(Some)
    };
    let (effective, lab) = rayon::join(run_effective, run_lab);
    let mut effective = effective?;
    let mut lab = lab?;
    effective.set_meta("initial", preparation_name(cfg.initial));
    let report = detect_revival(&effective.times, &contrast(effective.trace("P_e").expect("P_e")));
    if report.is_none() {
        warnings.push("no revival detected in the effective trace".into());
    }
    let (mut carrier, mut lab_report, mut envelope_rms) = (None, None, None);
    if let Some(lab) = lab.as_mut() {
        let pe = lab.trace("P_e").expect("P_e").to_vec();
        let dt = grid.dt();
        match extract_rabi_frequency(&pe, dt) {
            Ok(peak) => {
                let env = extract_envelope(&pe, dt, peak.frequency, Some(cfg.omega_eff))?;
                warnings.extend(env.warnings.iter().cloned());
                let eff_pe = effective.trace("P_e").expect("P_e");
                envelope_rms = Some(rms(env.envelope.iter().zip(eff_pe).map(|(a, b)| a - b)));
                lab_report = detect_revival(&lab.times, &env.amplitude);
                lab.push_trace("P_e_envelope", env.envelope)?;
                carrier = Some(peak);
            }
            Err(e) => warnings.push(format!("no carrier found in the driven trace: {e}")),
        }
    }
    Ok(CollapseRevival { lab, effective, report, lab_report, carrier, envelope_rms, warnings })
}

impl CollapseRevival {
    pub fn summary(&self, cfg: &CollapseRevivalConfig) -> Summary {
        let mut s = Summary::new();
        s.metric("omega_eff_mhz", cfg.omega_eff / TAU / 1e6);
        s.metric("g_mhz", cfg.params.g / TAU / 1e6);
        s.metric("eta1_mhz", cfg.eta1 / TAU / 1e6);
        s.text("initial", preparation_name(cfg.initial));
        s.metric("expected_revival_ns", TAU / cfg.omega_eff * 1e9);
        if let Some(r) = &self.report {
            r.write(&mut s, "");
        }
        if let Some(r) = &self.lab_report {
            r.write(&mut s, "driven.");
        }
        if let Some(p) = &self.carrier {
            s.metric("carrier_mhz", p.frequency / TAU / 1e6);
            s.metric("carrier_uncertainty_mhz", p.uncertainty / TAU / 1e6);
        }
        if let Some(r) = self.envelope_rms {
            s.metric("envelope_rms", r);
        }
        for w in &self.warnings {
            s.warn(w.clone());
        }
        s
    }

    pub fn outcome(self, cfg: &CollapseRevivalConfig) -> Outcome {
        let summary = self.summary(cfg);
        let mut series = vec![("effective".to_string(), self.effective)];
        if let Some(l) = self.lab {
            series.insert(0, ("driven".into(), l));
        }
        let mut o = Outcome { series, tables: vec![], summary };
        o.collect_diagnostics();
        o
    }
}

/// Paired runs with and without the qubit energy drive η₂.
#[derive(Debug, Clone)]
pub struct FullRabiConfig {
    pub base: CollapseRevivalConfig,
    pub eta2: f64,
    pub phi2: f64,
    /// Explicit ω₂; `None` applies `ω₂ = ω₁ − η₁` with η₁ measured from
    /// the η₂ = 0 run.
    pub omega2: Option<f64>,
}

impl FullRabiConfig {
    /// ω₂ given the Rabi frequency measured on the baseline run.
    pub fn omega2_for(&self, measured_eta1: f64) -> f64 {
        self.omega2.unwrap_or(self.base.omega1() - measured_eta1)
    }

    pub fn effective(&self) -> EffectiveParams {
        EffectiveParams::new(self.base.params.g, self.base.omega_eff, self.eta2)
    }

    /// Revival plus the following inter-revival window and filter margin.
    pub fn default_grid(&self, dt: f64) -> Result<TimeGrid> {
        Ok(TimeGrid::with_spacing(2.5 * TAU / self.base.omega_eff, dt)?)
    }

    fn setup(&self, eta2: f64, phi2: f64, omega2: f64) -> Result<DrivenSetup> {
        let b = &self.base;
        let mut drives = vec![DriveTone::new(b.eta1, b.omega1(), b.phi1)?];
        if eta2 > 0.0 {
            drives.push(DriveTone::new(eta2, omega2, phi2)?);
        }
        Ok(DrivenSetup {
            params: b.params.clone(),
            drives,
            options: b.options,
            frame: b.frame,
            initial: b.initial,
            dissipative: b.dissipative,
        })
    }
}

/// Envelope-derived figures of one driven run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeMetrics {
    pub revival_time: f64,
    /// Largest envelope amplitude within `[0.75, 1.25]·2π/ω_eff`.
    pub revival_amplitude: f64,
    /// Mean envelope amplitude over the quarter to three quarters of the
    /// period following the revival.
    pub inter_revival_amplitude: f64,
}

/// Demodulates `P_e` at `carrier` and measures the revival and
/// inter-revival amplitudes.
pub fn envelope_metrics(series: &TimeSeries, carrier: f64, omega_eff: f64) -> Result<(EnvelopeMetrics, Vec<f64>)> {
    let pe = series.trace("P_e").ok_or_else(|| RunError::Invalid("series has no P_e trace".into()))?;
    let env = extract_envelope(pe, series.dt(), carrier, Some(omega_eff))?;
    let period = TAU / omega_eff;
    let t = &series.times;
    let rev = window(t, 0.75 * period, 1.25 * period);
    if rev.is_empty() || t.last().copied().unwrap_or(0.0) < 1.75 * period {
        return Err(RunError::Invalid("record must extend past 1.75 revival periods".into()));
    }
    let k = rev.clone().max_by(|&a, &b| env.amplitude[a].total_cmp(&env.amplitude[b])).expect("non-empty");
    let inter = window(t, t[k] + 0.25 * period, t[k] + 0.75 * period);
    let inter_amp = env.amplitude[inter.clone()].iter().sum::<f64>() / inter.len().max(1) as f64;
    Ok((
        EnvelopeMetrics { revival_time: t[k], revival_amplitude: env.amplitude[k], inter_revival_amplitude: inter_amp },
        env.amplitude,
    ))
}

#[derive(Debug, Clone)]
pub struct FullRabi {
    /// η₂ = 0 run, with `P_e_amplitude` from the envelope.
    pub baseline: TimeSeries,
    pub driven: TimeSeries,
    pub baseline_metrics: EnvelopeMetrics,
    pub driven_metrics: EnvelopeMetrics,
    pub measured_eta1: Peak,
    pub omega2: f64,
    pub warnings: Vec<String>,
}

impl FullRabi {
    pub fn revival_gain(&self) -> f64 {
        self.driven_metrics.revival_amplitude - self.baseline_metrics.revival_amplitude
    }

    pub fn inter_revival_gain(&self) -> f64 {
        self.driven_metrics.inter_revival_amplitude - self.baseline_metrics.inter_revival_amplitude
    }
}

fn constraint_warning(cfg: &FullRabiConfig, measured: &Peak, omega2: f64, warnings: &mut Vec<String>) {
    let b = &cfg.base;
    let mismatch = (omega2 - (b.omega1() - measured.frequency)).abs();
    if cfg.eta2 > 0.0 && mismatch > measured.uncertainty {
        warnings.push(format!("constraint omega2 = omega1 - eta1 violated by {:.3} MHz", mismatch / TAU / 1e6));
    }
    if cfg.eta2 > 0.0 && normalize_phase(cfg.phi2 - b.phi1).min(TAU - normalize_phase(cfg.phi2 - b.phi1)) > 1e-9 {
        warnings.push("phase matching phi1 = phi2 violated".into());
    }
}

fn finish_full(
    cfg: &FullRabiConfig,
    mut baseline: TimeSeries,
    mut driven: TimeSeries,
    measured: Peak,
    omega2: f64,
) -> Result<FullRabi> {
    let w = cfg.base.omega_eff;
    let (bm, ba) = envelope_metrics(&baseline, measured.frequency, w)?;
    let (dm, da) = envelope_metrics(&driven, measured.frequency, w)?;
    baseline.push_trace("P_e_amplitude", ba)?;
    driven.push_trace("P_e_amplitude", da)?;
    let mut warnings = Vec::new();
    constraint_warning(cfg, &measured, omega2, &mut warnings);
    Ok(FullRabi {
        baseline,
        driven,
        baseline_metrics: bm,
        driven_metrics: dm,
        measured_eta1: measured,
        omega2,
        warnings,
    })
}

fn measure_carrier(baseline: &TimeSeries) -> Result<Peak> {
    extract_rabi_frequency(baseline.trace("P_e").expect("P_e"), baseline.dt())
}

/// The η₂ = 0 run, its measured Rabi frequency and the resulting ω₂.
fn baseline_run(cfg: &FullRabiConfig, grid: &TimeGrid, tol: &Tolerances) -> Result<(TimeSeries, Peak, f64)> {
    if !(cfg.base.omega_eff > 0.0) {
        return Err(RunError::Invalid("omega_eff must be positive".into()));
    }
    let baseline = cfg.setup(0.0, cfg.phi2, cfg.base.omega1())?.simulate(grid, tol)?;
    let measured = measure_carrier(&baseline)?;
    let omega2 = cfg.omega2_for(measured.frequency);
    if !(omega2 > 0.0) {
        return Err(RunError::Invalid("omega2 must be positive; eta1 is too large for omega1".into()));
    }
    Ok((baseline, measured, omega2))
}

/// Runs η₂ = 0, measures the Rabi frequency from it, then runs η₂ > 0 with
/// `φ₂` from the configuration and `ω₂ = ω₁ − η₁` unless ω₂ is given.
pub fn run_full_rabi(cfg: &FullRabiConfig, grid: &TimeGrid, tol: &Tolerances) -> Result<FullRabi> {
    let (baseline, measured, omega2) = baseline_run(cfg, grid, tol)?;
    let driven = cfg.setup(cfg.eta2, cfg.phi2, omega2)?.simulate(grid, tol)?;
    finish_full(cfg, baseline, driven, measured, omega2)
}

impl FullRabi {
    pub fn summary(&self, cfg: &FullRabiConfig) -> Summary {
        let mut s = Summary::new();
        let m = |x: f64| x / TAU / 1e6;
        s.metric("omega_eff_mhz", m(cfg.base.omega_eff));
        s.metric("g_mhz", m(cfg.base.params.g));
        s.metric("eta1_mhz", m(cfg.base.eta1));
        s.metric("eta2_mhz", m(cfg.eta2));
        s.metric("omega2_offset_mhz", m(self.omega2 - cfg.base.omega1()));
        s.metric("measured_eta1_mhz", m(self.measured_eta1.frequency));
        s.metric("measured_eta1_uncertainty_mhz", m(self.measured_eta1.uncertainty));
        s.metric("critical_indicator", cfg.effective().critical_indicator());
        s.metric("baseline.revival_time_ns", self.baseline_metrics.revival_time * 1e9);
        s.metric("baseline.revival_amplitude", self.baseline_metrics.revival_amplitude);
        s.metric("baseline.inter_revival_amplitude", self.baseline_metrics.inter_revival_amplitude);
        s.metric("driven.revival_time_ns", self.driven_metrics.revival_time * 1e9);
        s.metric("driven.revival_amplitude", self.driven_metrics.revival_amplitude);
        s.metric("driven.inter_revival_amplitude", self.driven_metrics.inter_revival_amplitude);
        s.metric("revival_gain", self.revival_gain());
        s.metric("inter_revival_gain", self.inter_revival_gain());
        for w in &self.warnings {
            s.warn(w.clone());
        }
        s
    }

    pub fn outcome(self, cfg: &FullRabiConfig) -> Outcome {
        let summary = self.summary(cfg);
        let mut o = Outcome {
            series: vec![("baseline".into(), self.baseline), ("full_rabi".into(), self.driven)],
            tables: vec![],
            summary,
        };
        o.collect_diagnostics();
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationMode {
    /// `φ₂ = φ₁ + π`
    PhaseMismatch,
    /// `ω₂ = ω₁ − η₁ − 2π·10 MHz`
    FrequencyMismatch,
}

impl ViolationMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::PhaseMismatch => "phase",
            Self::FrequencyMismatch => "frequency",
        }
    }

    /// `(φ₂, ω₂)` of the violated run given the compliant `ω₂`.
    fn apply(self, cfg: &FullRabiConfig, compliant: f64) -> (f64, f64) {
        match self {
            Self::PhaseMismatch => (cfg.base.phi1 + PI, compliant),
            Self::FrequencyMismatch => (cfg.base.phi1, compliant - mhz(10.0)),
        }
    }
}

/// Gains of one violated run relative to the shared baseline.
#[derive(Debug, Clone)]
pub struct ViolationRun {
    pub mode: ViolationMode,
    pub series: TimeSeries,
    pub metrics: EnvelopeMetrics,
    pub revival_gain: f64,
    pub inter_revival_gain: f64,
    /// Violated gain over compliant gain.
    pub revival_ratio: f64,
    pub inter_revival_ratio: f64,
}

impl ViolationRun {
    /// Both gains are at most `limit` times the compliant gains.
    pub fn suppressed(&self, limit: f64) -> bool {
        self.revival_ratio <= limit && self.inter_revival_ratio <= limit
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintViolation {
    pub compliant: FullRabi,
    pub violations: Vec<ViolationRun>,
}

/// Fraction of the compliant gain that must not be exceeded.
pub const SUPPRESSION_LIMIT: f64 = 0.3;

/// Compliant pair plus one run per violation mode, with phase matching and
/// `ω₂ = ω₁ − η₁` imposed on the compliant run.
pub fn run_constraint_violation(
    cfg: &FullRabiConfig,
    modes: &[ViolationMode],
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<ConstraintViolation> {
    let compliant_cfg = FullRabiConfig { phi2: cfg.base.phi1, omega2: None, ..cfg.clone() };
    let (baseline, measured, omega2) = baseline_run(&compliant_cfg, grid, tol)?;
    let mut jobs = vec![(compliant_cfg.phi2, omega2)];
    jobs.extend(modes.iter().map(|m| m.apply(cfg, omega2)));
    let runs: Vec<Result<TimeSeries>> =
        jobs.par_iter().map(|&(p2, w2)| compliant_cfg.setup(cfg.eta2, p2, w2)?.simulate(grid, tol)).collect();
    let mut runs: Vec<TimeSeries> = runs.into_iter().collect::<Result<_>>()?;
    let violated: Vec<TimeSeries> = runs.split_off(1);
    let driven = runs.pop().expect("compliant run");
    let compliant = finish_full(&compliant_cfg, baseline, driven, measured, omega2)?;
    let mut violations = Vec::new();
    for (mode, mut series) in modes.iter().zip(violated) {
        let (metrics, amp) = envelope_metrics(&series, measured.frequency, cfg.base.omega_eff)?;
        series.push_trace("P_e_amplitude", amp)?;
        let rg = metrics.revival_amplitude - compliant.baseline_metrics.revival_amplitude;
        let ig = metrics.inter_revival_amplitude - compliant.baseline_metrics.inter_revival_amplitude;
        violations.push(ViolationRun {
            mode: *mode,
            series,
            metrics,
            revival_gain: rg,
            inter_revival_gain: ig,
            revival_ratio: rg / compliant.revival_gain(),
            inter_revival_ratio: ig / compliant.inter_revival_gain(),
        });
    }
    Ok(ConstraintViolation { compliant, violations })
}

impl ConstraintViolation {
    pub fn outcome(self, cfg: &FullRabiConfig) -> Outcome {
        let mut s = Summary::new();
        s.extend("compliant.", self.compliant.summary(cfg));
        s.metric("suppression_limit", SUPPRESSION_LIMIT);
        let mut series = vec![
            ("baseline".to_string(), self.compliant.baseline),
            ("compliant".to_string(), self.compliant.driven),
        ];
        for v in self.violations {
            let p = format!("{}.", v.mode.name());
            s.metric(format!("{p}revival_amplitude"), v.metrics.revival_amplitude);
            s.metric(format!("{p}inter_revival_amplitude"), v.metrics.inter_revival_amplitude);
            s.metric(format!("{p}revival_gain"), v.revival_gain);
            s.metric(format!("{p}inter_revival_gain"), v.inter_revival_gain);
            s.metric(format!("{p}revival_ratio"), v.revival_ratio);
            s.metric(format!("{p}inter_revival_ratio"), v.inter_revival_ratio);
            s.flag(format!("{p}suppressed"), v.suppressed(SUPPRESSION_LIMIT));
            series.push((format!("violated_{}", v.mode.name()), v.series));
        }
        let mut o = Outcome { series, tables: vec![], summary: s };
        o.collect_diagnostics();
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coherence(g_eff: f64, w: f64, t: f64) -> f64 {
        (-4.0 * (g_eff / w).powi(2) * (1.0 - (w * t).cos())).exp()
    }

    #[test]
    fn detects_closed_form_revivals() {
        for (g, w) in [(2.75, 4.0), (2.75, 8.0), (1.0, 5.0)] {
            let (g, w) = (mhz(g), mhz(w));
            let t: Vec<f64> = (0..1200).map(|k| k as f64 * 0.5e-9).collect();
            let c: Vec<f64> = t.iter().map(|&t| 0.5 * coherence(g, w, t) * (-2e5 * t).exp()).collect();
            let r = detect_revival(&t, &c).unwrap();
            let period = TAU / w;
            assert!((r.revival_time / period - 1.0).abs() < 0.01, "{} vs {period}", r.revival_time);
            assert!(r.revival_time > r.collapse_time);
            if t.last().unwrap() > &(2.2 * period) {
                assert!((r.period / period - 1.0).abs() < 0.01);
            }
        }
    }

    #[test]
    fn flat_contrast_has_no_revival() {
        let t: Vec<f64> = (0..200).map(|k| k as f64).collect();
        assert!(detect_revival(&t, &vec![0.5; 200]).is_none());
        assert!(detect_revival(&t, &vec![0.0; 200]).is_none());
    }
}
