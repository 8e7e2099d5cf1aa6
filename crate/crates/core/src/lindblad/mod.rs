//! Schrödinger and Lindblad time evolution with observable recording.

mod integrator;
mod sparse;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::hamiltonian::{qubit_ratios, ModelOperators, TimeDependentHamiltonian};
use crate::layout::{MODE, QUBIT, READOUT};
use crate::params::DeviceParams;
use crate::series::TimeSeries;
use crate::state::{min_eigenvalue, Representation};
use crate::{Error, HilbertLayout, Operator, QuantumState, Result, C64, TAU};

use integrator::{DormandPrince, OdeSystem, StepControl};
use sparse::Csr;

/// Dissipator `√rate · L`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseChannel {
    pub operator: Operator,
    pub rate: f64,
    pub label: String,
}

impl CollapseChannel {
    pub fn new(operator: Operator, rate: f64, label: impl Into<String>) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameters(format!("collapse rate {rate} must be finite and >= 0")));
        }
        Ok(Self { operator, rate, label: label.into() })
    }
}

/// Qubit decay at 1/T₁, pure dephasing `√(γ_φ/2)σz` and mode decay at κ.
pub fn standard_channels(params: &DeviceParams, layout: &HilbertLayout) -> Result<Vec<CollapseChannel>> {
    let levels = layout.subsystem_dim(QUBIT).ok_or_else(|| Error::UnknownSubsystem(QUBIT.into()))?;
    let fock = layout.subsystem_dim(MODE).ok_or_else(|| Error::UnknownSubsystem(MODE.into()))?;
    let p = DeviceParams { qubit_levels: levels, ..params.clone() };
    let ops = ModelOperators::with_ratios(&qubit_ratios(&p)?, fock, layout.subsystem_dim(READOUT))?;
    if ops.layout != *layout {
        return Err(Error::LayoutMismatch);
    }
    channels_for(params, &ops)
}

pub fn channels_for(params: &DeviceParams, ops: &ModelOperators) -> Result<Vec<CollapseChannel>> {
    if params.t2 > 2.0 * params.t1 * (1.0 + 1e-12) {
        return Err(Error::InvalidParameters(format!("T2 = {:e} s exceeds 2*T1", params.t2)));
    }
    Ok(alloc::vec![
        CollapseChannel::new(ops.lower.clone(), 1.0 / params.t1, "qubit_decay")?,
        CollapseChannel::new(ops.sigma_z.clone(), params.pure_dephasing_rate() / 2.0, "qubit_dephasing")?,
        CollapseChannel::new(ops.b.clone(), params.kappa, "mode_decay")?,
    ])
}

/// `−i[H, ρ] + Σ rate (LρL† − ½{L†L, ρ})`, dense.
pub fn lindblad_rhs(h: &Operator, rho: &DMatrix<C64>, channels: &[CollapseChannel]) -> Result<DMatrix<C64>> {
    let d = h.dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho.nrows() });
    }
    let hm = h.matrix();
    let mut out = (hm * rho - rho * hm) * C64::new(0.0, -1.0);
    for c in channels {
        if c.operator.layout() != h.layout() {
            return Err(Error::LayoutMismatch);
        }
        let l = c.operator.matrix();
        let ld = l.adjoint();
        let ldl = &ld * l;
        out += (l * rho * &ld - (&ldl * rho + rho * &ldl) * C64::from(0.5)) * C64::from(c.rate);
    }
    Ok(out)
}

/// Uniform sampling of `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub sample_count: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, sample_count: usize) -> Result<Self> {
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidParameters(format!("time grid end {t_end} must exceed start {t_start}")));
        }
        if sample_count < 2 {
            return Err(Error::InvalidParameters("time grid needs at least 2 samples".into()));
        }
        Ok(Self { t_start, t_end, sample_count })
    }

    /// Grid from 0 to `t_end` with spacing closest to `dt`.
    pub fn with_spacing(t_end: f64, dt: f64) -> Result<Self> {
        let n = Float::round(t_end / dt) as usize + 1;
        Self::new(0.0, t_end, n.max(2))
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.sample_count - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.sample_count)
            .map(|k| if k + 1 == self.sample_count { self.t_end } else { self.t_start + k as f64 * dt })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Largest tolerated trace or Hermiticity drift.
    pub drift_limit: f64,
    /// Most negative tolerated eigenvalue of ρ.
    pub positivity_limit: f64,
    /// Number of samples at which ρ is diagonalized.
    pub positivity_checks: usize,
    /// Cap steps at 1/(40 f_max).
    pub step_ceiling: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 50_000_000,
            drift_limit: 1e-6,
            positivity_limit: -1e-6,
            positivity_checks: 10,
            step_ceiling: true,
        }
    }
}

/// A named Hermitian observable.
#[derive(Debug, Clone)]
pub struct Observable {
    pub name: String,
    pub operator: Operator,
}

impl Observable {
    pub fn new(name: impl Into<String>, operator: Operator) -> Self {
        Self { name: name.into(), operator }
    }
}

/// Fastest angular frequency in `h`: modulation frequencies and a Gershgorin
/// bound on the spread of the static spectrum.
pub fn fastest_frequency(h: &TimeDependentHamiltonian) -> f64 {
    let m = h.static_part().matrix();
    let n = m.nrows();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].norm()).sum();
        let c = m[(i, i)].re;
        lo = lo.min(c - r);
        hi = hi.max(c + r);
    }
    (hi - lo).max(h.max_modulation_frequency())
}

struct Schrodinger {
    n: usize,
    h0: Csr,
    terms: Vec<(Csr, crate::hamiltonian::Modulation)>,
}

impl OdeSystem for Schrodinger {
    fn rhs(&mut self, t: f64, y: &[C64], dy: &mut [C64]) {
        dy.iter_mut().for_each(|z| *z = C64::from(0.0));
        let mi = C64::new(0.0, -1.0);
        self.h0.mul_acc(y, 1, dy, mi);
        for (op, m) in &self.terms {
            let c = m.value(t);
            if c != 0.0 {
                op.mul_acc(y, 1, dy, mi * c);
            }
        }
        debug_assert_eq!(y.len(), self.n);
    }
}

struct Lindblad {
    n: usize,
    h_eff: Csr,
    terms: Vec<(Csr, crate::hamiltonian::Modulation)>,
    jumps: Vec<Csr>,
    m: Vec<C64>,
    tmp: Vec<C64>,
}

impl OdeSystem for Lindblad {
    fn rhs(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        self.m.iter_mut().for_each(|z| *z = C64::from(0.0));
        let one = C64::from(1.0);
        self.h_eff.mul_acc(rho, n, &mut self.m, one);
        for (op, md) in &self.terms {
            let c = md.value(t);
            if c != 0.0 {
                op.mul_acc(rho, n, &mut self.m, C64::from(c));
            }
        }
        // K = −i H_eff ρ ; out = K + K†
        for i in 0..n {
            for j in 0..n {
                let kij = self.m[i * n + j];
                let kji = self.m[j * n + i];
                out[i * n + j] = C64::new(kij.im, -kij.re) + C64::new(kji.im, kji.re);
            }
        }
        for l in &self.jumps {
            self.tmp.iter_mut().for_each(|z| *z = C64::from(0.0));
            l.mul_acc(rho, n, &mut self.tmp, one);
            l.mul_adjoint_right_acc(&self.tmp, out);
        }
        for i in 0..n {
            for j in i + 1..n {
                let a = out[i * n + j];
                let b = out[j * n + i];
                let s = (a + b.conj()) * 0.5;
                out[i * n + j] = s;
                out[j * n + i] = s.conj();
            }
            out[i * n + i].im = 0.0;
        }
    }
}

/// Integrator bookkeeping for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Diagnostics {
    pub density_matrix: bool,
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    pub min_eigenvalue: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub step_ceiling: f64,
}

impl Diagnostics {
    pub fn write_metadata(&self, series: &mut TimeSeries) {
        let engine = if self.density_matrix { "lindblad" } else { "schrodinger" };
        series.set_meta("engine", engine);
        series.set_meta("max_trace_drift", format!("{:.3e}", self.max_trace_drift));
        series.set_meta("max_hermiticity_drift", format!("{:.3e}", self.max_hermiticity_drift));
        if self.density_matrix {
            series.set_meta("min_eigenvalue", format!("{:.3e}", self.min_eigenvalue));
        }
        series.set_meta("steps_accepted", self.steps_accepted.to_string());
        series.set_meta("steps_rejected", self.steps_rejected.to_string());
    }
}

fn uses_density(initial: &QuantumState, channels: &[CollapseChannel]) -> bool {
    !initial.is_pure_representation() || channels.iter().any(|c| c.rate > 0.0)
}

fn to_row_major(m: &DMatrix<C64>) -> Vec<C64> {
    m.transpose().iter().copied().collect()
}

/// Core loop: calls `on_sample(k, t, y)` at every grid point with `y` either
/// the state vector or row-major ρ.
fn integrate<F>(
    h: &TimeDependentHamiltonian,
    initial: &QuantumState,
    channels: &[CollapseChannel],
    times: &[f64],
    tol: &Tolerances,
    mut on_sample: F,
) -> Result<Diagnostics>
where
    F: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    if initial.layout() != h.layout() {
        return Err(Error::LayoutMismatch);
    }
    for c in channels {
        if c.operator.layout() != h.layout() {
            return Err(Error::LayoutMismatch);
        }
    }
    let n = h.layout().dim();
    let density = uses_density(initial, channels);
    let omega_max = fastest_frequency(h);
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    let h_max = if tol.step_ceiling && omega_max > 0.0 { TAU / (40.0 * omega_max) } else { f64::INFINITY };
    let ctl = StepControl { rtol: tol.rtol, atol: tol.atol, h_max: h_max.min(span.max(f64::MIN_POSITIVE)), max_steps: tol.max_steps };
    let terms: Vec<_> = h.terms().iter().map(|t| (Csr::from_dense(t.operator.matrix()), t.modulation.clone())).collect();
    let mut diag = Diagnostics { density_matrix: density, min_eigenvalue: f64::INFINITY, step_ceiling: h_max, ..Default::default() };

    let checks: Vec<usize> = if times.len() <= tol.positivity_checks {
        (0..times.len()).collect()
    } else {
        let m = tol.positivity_checks.max(1);
        (0..m).map(|k| if m == 1 { times.len() - 1 } else { k * (times.len() - 1) / (m - 1) }).collect()
    };

    if density {
        let active: Vec<&CollapseChannel> = channels.iter().filter(|c| c.rate > 0.0).collect();
        let mut heff = h.static_part().matrix().clone();
        let mut jumps = Vec::new();
        for c in &active {
            let l = c.operator.matrix() * C64::from(Float::sqrt(c.rate));
            heff -= (l.adjoint() * &l) * C64::new(0.0, 0.5);
            jumps.push(Csr::from_dense(&l));
        }
        let mut sys = Lindblad {
            n,
            h_eff: Csr::from_dense(&heff),
            terms,
            jumps,
            m: alloc::vec![C64::from(0.0); n * n],
            tmp: alloc::vec![C64::from(0.0); n * n],
        };
        let mut y = to_row_major(&initial.density_matrix());
        let mut stepper = DormandPrince::new(n * n, ctl);
        let mut t = times[0];
        for (k, &tk) in times.iter().enumerate() {
            stepper.advance(&mut sys, &mut t, &mut y, tk)?;
            let mut tr = C64::from(0.0);
            let mut herm: f64 = 0.0;
            for i in 0..n {
                tr += y[i * n + i];
                for j in i + 1..n {
                    herm = herm.max((y[i * n + j] - y[j * n + i].conj()).norm());
                }
            }
            let drift = (tr - C64::from(1.0)).norm();
            diag.max_trace_drift = diag.max_trace_drift.max(drift);
            diag.max_hermiticity_drift = diag.max_hermiticity_drift.max(herm);
            if drift > tol.drift_limit || herm > tol.drift_limit {
                return Err(Error::IntegrationFailure {
                    time: tk,
                    reason: format!("invariant drift: trace {drift:.3e}, hermiticity {herm:.3e}"),
                });
            }
            if checks.contains(&k) {
                let rho = DMatrix::from_row_slice(n, n, &y);
                let ev = min_eigenvalue(&rho)?;
                diag.min_eigenvalue = diag.min_eigenvalue.min(ev);
                if ev < tol.positivity_limit {
                    return Err(Error::IntegrationFailure { time: tk, reason: format!("density matrix eigenvalue {ev:.3e}") });
                }
            }
            on_sample(k, tk, &y)?;
        }
        diag.steps_accepted = stepper.stats.accepted;
        diag.steps_rejected = stepper.stats.rejected;
    } else {
        let mut sys = Schrodinger { n, h0: Csr::from_dense(h.static_part().matrix()), terms };
        let mut y: Vec<C64> = initial.as_pure()?.iter().copied().collect();
        let mut stepper = DormandPrince::new(n, ctl);
        let mut t = times[0];
        for (k, &tk) in times.iter().enumerate() {
            stepper.advance(&mut sys, &mut t, &mut y, tk)?;
            let norm2: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            let drift = (norm2 - 1.0).abs();
            diag.max_trace_drift = diag.max_trace_drift.max(drift);
            if drift > tol.drift_limit {
                return Err(Error::IntegrationFailure { time: tk, reason: format!("norm drift {drift:.3e}") });
            }
            on_sample(k, tk, &y)?;
        }
        diag.min_eigenvalue = 0.0;
        diag.steps_accepted = stepper.stats.accepted;
        diag.steps_rejected = stepper.stats.rejected;
    }
    Ok(diag)
}

/// Evolves `initial` over `grid`, recording the real expectation of every
/// observable. Pure states without active channels use the Schrödinger
/// equation; anything else evolves ρ under the Lindblad equation.
pub fn evolve(
    h: &TimeDependentHamiltonian,
    initial: &QuantumState,
    channels: &[CollapseChannel],
    grid: &TimeGrid,
    observables: &[Observable],
    tol: &Tolerances,
) -> Result<TimeSeries> {
    let times = grid.times();
    let density = uses_density(initial, channels);
    let mut compiled = Vec::with_capacity(observables.len());
    for o in observables {
        if o.operator.layout() != h.layout() {
            return Err(Error::LayoutMismatch);
        }
        if !o.operator.is_hermitian() {
            return Err(Error::InvalidParameters(format!("observable `{}` is not Hermitian", o.name)));
        }
        compiled.push((Csr::from_dense(o.operator.matrix()), o.operator.max_abs().max(1.0)));
    }
    let mut values: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(times.len()); observables.len()];
    let diag = integrate(h, initial, channels, &times, tol, |_, t, y| {
        for (k, (op, scale)) in compiled.iter().enumerate() {
            let z = if density { op.trace_product(y) } else { op.expectation(y) };
            if z.im.abs() > 1e-10 * scale {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: format!("observable `{}` has imaginary part {:.3e}", observables[k].name, z.im),
                });
            }
            values[k].push(z.re);
        }
        Ok(())
    })?;
    let mut series = TimeSeries::new(times);
    for (o, v) in observables.iter().zip(values) {
        series.push_trace(o.name.clone(), v)?;
    }
    diag.write_metadata(&mut series);
    for (i, note) in h.notes().iter().enumerate() {
        series.set_meta(format!("note.{i}"), note.clone());
    }
    Ok(series)
}

/// State at every time in `times` (the first entry is the initial time).
pub fn evolve_states(
    h: &TimeDependentHamiltonian,
    initial: &QuantumState,
    channels: &[CollapseChannel],
    times: &[f64],
    tol: &Tolerances,
) -> Result<(Vec<QuantumState>, Diagnostics)> {
    if times.is_empty() || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameters("sample times must be non-empty and ascending".into()));
    }
    let density = uses_density(initial, channels);
    let n = h.layout().dim();
    let layout = h.layout().clone();
    let mut out = Vec::with_capacity(times.len());
    let diag = integrate(h, initial, channels, times, tol, |_, _, y| {
        let repr = if density {
            Representation::Mixed(DMatrix::from_row_slice(n, n, y))
        } else {
            Representation::Pure(DVector::from_row_slice(y))
        };
        out.push(QuantumState::from_parts_unchecked(layout.clone(), repr));
        Ok(())
    })?;
    Ok((out, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::jaynes_cummings;
    use crate::mhz;
    use crate::ops::{fock_ladder, pauli_set};
    use crate::state::expectation_real;

    #[test]
    fn grid_times() {
        let g = TimeGrid::new(0.0, 1.0, 5).unwrap();
        assert_eq!(g.times(), [0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(TimeGrid::new(1.0, 1.0, 5).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn dephasing_rate_from_defaults() {
        let p = DeviceParams { fock_dim: 3, ..Default::default() };
        let l = HilbertLayout::qubit_mode(2, 3, None).unwrap();
        let ch = standard_channels(&p, &l).unwrap();
        assert_eq!(ch.len(), 3);
        assert!((ch[1].rate - 0.95e6).abs() < 1e-6);
        assert!((ch[0].rate - 0.2e6).abs() < 1e-6);
        let p2 = DeviceParams { t2: 10e-6, ..p.clone() };
        assert_eq!(standard_channels(&p2, &l).unwrap()[1].rate, 0.0);
        let bad = DeviceParams { t2: 11e-6, ..p };
        assert!(standard_channels(&bad, &l).is_err());
    }

    #[test]
    fn rhs_of_t1_decay() {
        let p = pauli_set();
        let l = p.z.layout().clone();
        let rho = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]).map(C64::from);
        let ch = [CollapseChannel::new(p.minus.clone(), 2.0, "t1").unwrap()];
        let d = lindblad_rhs(&Operator::zeros(&l), &rho, &ch).unwrap();
        assert!((d[(1, 1)].re + 2.0).abs() < 1e-15);
        assert!((d.trace()).norm() < 1e-15);
    }

    #[test]
    fn rhs_zero_for_commuting_state() {
        let p = pauli_set();
        let rho = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.7]).map(C64::from);
        let d = lindblad_rhs(&p.z, &rho, &[]).unwrap();
        assert_eq!(d.iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0);
    }

    #[test]
    fn constant_state_under_zero_hamiltonian() {
        let l = HilbertLayout::qubit_mode(2, 3, None).unwrap();
        let h = TimeDependentHamiltonian::new(Operator::zeros(&l));
        let s = QuantumState::basis(l.clone(), &[1, 2]).unwrap();
        let (states, _) = evolve_states(&h, &s, &[], &[0.0, 1.0, 2.0], &Tolerances::default()).unwrap();
        assert_eq!(states[2].as_pure().unwrap(), s.as_pure().unwrap());
    }

    #[test]
    fn vacuum_rabi_closed_form() {
        let l = HilbertLayout::qubit_mode(2, 4, None).unwrap();
        let g = mhz(4.3);
        // resonant JC in the frame of the bare energies
        let h = TimeDependentHamiltonian::new(jaynes_cummings(0.0, 0.0, g, &l).unwrap());
        let s = QuantumState::basis(l.clone(), &[1, 0]).unwrap();
        let ops = ModelOperators::with_ratios(&crate::transmon::harmonic_ratios(2), 4, None).unwrap();
        let grid = TimeGrid::new(0.0, 400e-9, 401).unwrap();
        let ts = evolve(&h, &s, &[], &grid, &[Observable::new("P_e", ops.excited.clone())], &Tolerances::default()).unwrap();
        let pe = ts.trace("P_e").unwrap();
        for (t, p) in ts.times.iter().zip(pe) {
            let want = Float::powi(Float::cos(g * t), 2);
            assert!((p - want).abs() < 1e-6, "t = {t}: {p} vs {want}");
        }
        let swap = core::f64::consts::PI / (2.0 * g);
        assert!((swap - 58.1e-9).abs() < 0.1e-9);
    }

    #[test]
    fn cavity_decay_is_exponential() {
        let (b, bd) = fock_ladder(4).unwrap();
        let l = b.layout().clone();
        let kappa = 3.9e6;
        let h = TimeDependentHamiltonian::new(Operator::zeros(&l));
        let s = QuantumState::basis(l.clone(), &[1]).unwrap();
        let ch = [CollapseChannel::new(b.clone(), kappa, "kappa").unwrap()];
        let grid = TimeGrid::new(0.0, 1e-6, 101).unwrap();
        let ts = evolve(&h, &s, &ch, &grid, &[Observable::new("n", &bd * &b)], &Tolerances::default()).unwrap();
        for (t, n) in ts.times.iter().zip(ts.trace("n").unwrap()) {
            assert!((n - Float::exp(-kappa * t)).abs() < 1e-7);
        }
        assert_eq!(ts.metadata["engine"], "lindblad");
    }

    #[test]
    fn resonant_drive_rabi_oscillation() {
        // rotating frame at the qubit frequency: H = (η/2) σx
        let p = pauli_set();
        let eta = mhz(50.0);
        let h = TimeDependentHamiltonian::new(p.x.scale_real(eta / 2.0));
        let s = QuantumState::basis(p.z.layout().clone(), &[0]).unwrap();
        let proj = Operator::diagonal(p.z.layout(), &[0.0, 1.0]).unwrap();
        let grid = TimeGrid::new(0.0, 100e-9, 201).unwrap();
        let ts = evolve(&h, &s, &[], &grid, &[Observable::new("P_e", proj.clone())], &Tolerances::default()).unwrap();
        for (t, pe) in ts.times.iter().zip(ts.trace("P_e").unwrap()) {
            assert!((pe - Float::powi(Float::sin(eta * t / 2.0), 2)).abs() < 1e-6);
        }
        let e = QuantumState::basis(p.z.layout().clone(), &[1]).unwrap();
        assert_eq!(expectation_real(&proj, &e).unwrap(), 1.0);
    }

    #[test]
    fn non_hermitian_observable_rejected() {
        let p = pauli_set();
        let h = TimeDependentHamiltonian::new(p.z.clone());
        let s = QuantumState::basis(p.z.layout().clone(), &[0]).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 2).unwrap();
        assert!(evolve(&h, &s, &[], &grid, &[Observable::new("s+", p.plus.clone())], &Tolerances::default()).is_err());
    }
}
