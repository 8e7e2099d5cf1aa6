//! Static spectra: the qubit-mode avoided crossing and transmon levels.

use rabisim_core::hamiltonian::jaynes_cummings;
use rabisim_core::layout::{MODE, QUBIT};
use rabisim_core::ops::{embed, number_on, projector};
use rabisim_core::params::DeviceParams;
use rabisim_core::transmon::transmon_charge_diagonalize;
use rabisim_core::{HilbertLayout, Operator, TAU};

use crate::error::{Result, RunError};
use crate::report::{Outcome, Summary, Table};

fn mhz_of(x: f64) -> f64 {
    x / TAU / 1e6
}

struct CrossingModel {
    layout: HilbertLayout,
    excitations: Operator,
    omega: f64,
    g: f64,
}

impl CrossingModel {
    fn new(params: &DeviceParams) -> Result<Self> {
        let fock = params.fock_dim.min(4);
        let layout = HilbertLayout::qubit_mode(2, fock, None)?;
        let excitations = embed(&number_on(MODE, fock)?, MODE, &layout)? + embed(&projector(QUBIT, 2, 1)?, QUBIT, &layout)?;
        Ok(Self { layout, excitations, omega: params.omega, g: params.g })
    }

    /// Energies of the two single-excitation eigenstates, ascending.
    fn pair(&self, epsilon: f64) -> Result<(f64, f64)> {
        let h = jaynes_cummings(epsilon, self.omega, self.g, &self.layout)?;
        let (vals, vecs) = h.eigh()?;
        let mut found = Vec::with_capacity(2);
        for (k, &e) in vals.iter().enumerate() {
            let v = vecs.column(k);
            let n = (v.adjoint() * self.excitations.matrix() * v)[(0, 0)].re;
            if (n - 1.0).abs() < 0.5 {
                found.push(e);
            }
        }
        match found.as_slice() {
            [a, b] => Ok((a.min(*b), a.max(*b))),
            _ => Err(RunError::Invalid(format!("found {} single-excitation states", found.len()))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AvoidedCrossing {
    /// Columns `detuning_mhz`, `lower_mhz`, `upper_mhz`, `gap_mhz`; energies
    /// are relative to `ω/2`.
    pub spectrum: Table,
    pub min_gap: f64,
    pub epsilon_at_min: f64,
    pub expected_gap: f64,
}

impl AvoidedCrossing {
    pub fn relative_error(&self) -> f64 {
        if self.expected_gap == 0.0 {
            self.min_gap.abs()
        } else {
            (self.min_gap / self.expected_gap - 1.0).abs()
        }
    }
}

/// Analytic single-excitation splitting `√((2g)² + δ²)`.
pub fn crossing_gap(g: f64, detuning: f64) -> f64 {
    (4.0 * g * g + detuning * detuning).sqrt()
}

/// Sweeps ε over `[eps_min, eps_max]` and locates the minimum splitting of
/// the single-excitation pair by golden-section search.
pub fn run_avoided_crossing(params: &DeviceParams, eps_min: f64, eps_max: f64, points: usize) -> Result<AvoidedCrossing> {
    if !(eps_min < params.omega && params.omega < eps_max) {
        return Err(RunError::Invalid("epsilon sweep does not bracket omega".into()));
    }
    if points < 3 {
        return Err(RunError::Invalid("epsilon sweep needs at least 3 points".into()));
    }
    let model = CrossingModel::new(params)?;
    let mut spectrum = Table::new(["detuning_mhz", "lower_mhz", "upper_mhz", "gap_mhz"]);
    let mut best = (f64::INFINITY, eps_min);
    for k in 0..points {
        let eps = eps_min + (eps_max - eps_min) * k as f64 / (points - 1) as f64;
        let (lo, hi) = model.pair(eps)?;
        let shift = params.omega / 2.0;
        spectrum.push(vec![mhz_of(eps - params.omega), mhz_of(lo - shift), mhz_of(hi - shift), mhz_of(hi - lo)]);
        if hi - lo < best.0 {
            best = (hi - lo, eps);
        }
    }
    let step = (eps_max - eps_min) / (points - 1) as f64;
    let gap = |e: f64| model.pair(e).map(|(a, b)| b - a);
    let (mut a, mut b) = ((best.1 - step).max(eps_min), (best.1 + step).min(eps_max));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (gap(c)?, gap(d)?);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * params.omega {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = gap(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = gap(d)?;
        }
    }
    let eps = 0.5 * (a + b);
    let g_min = gap(eps)?;
    let (min_gap, epsilon_at_min) = if g_min <= best.0 { (g_min, eps) } else { best };
    Ok(AvoidedCrossing { spectrum, min_gap, epsilon_at_min, expected_gap: 2.0 * params.g })
}

impl AvoidedCrossing {
    pub fn outcome(self, params: &DeviceParams) -> Outcome {
        let mut s = Summary::new();
        s.metric("g_mhz", mhz_of(params.g));
        s.metric("min_gap_mhz", mhz_of(self.min_gap));
        s.metric("expected_gap_mhz", mhz_of(self.expected_gap));
        s.metric("gap_relative_error", self.relative_error());
        s.metric("detuning_at_min_mhz", mhz_of(self.epsilon_at_min - params.omega));
        Outcome { series: vec![], tables: vec![("avoided_crossing".into(), self.spectrum)], summary: s }
    }
}

/// Charge-basis transmon spectrum for `E_J = (E_J/E_C)·E_C`.
pub fn run_transmon_levels(params: &DeviceParams, levels: usize) -> Result<Outcome> {
    let t = transmon_charge_diagonalize(params.ej_over_ec * params.ec, params.ec, params.ng, params.charge_cutoff, levels)?;
    let doubled = transmon_charge_diagonalize(
        params.ej_over_ec * params.ec,
        params.ec,
        params.ng,
        2 * params.charge_cutoff,
        levels,
    )?;
    let cutoff_change = (doubled.omega_01 - t.omega_01).abs() / t.omega_01;
    let ghz = |x: f64| x / TAU / 1e9;
    let mut table = Table::new(["level", "energy_ghz", "transition_ghz", "coupling_ratio"]);
    for (k, &e) in t.energies.iter().enumerate() {
        let transition = if k == 0 { 0.0 } else { ghz(e - t.energies[k - 1]) };
        let ratio = if k == 0 { 0.0 } else { t.coupling_ratios[(k - 1, k)] };
        table.push(vec![k as f64, ghz(e - t.energies[0]), transition, ratio]);
    }
    let mut s = Summary::new();
    s.metric("ej_over_ec", params.ej_over_ec);
    s.metric("ec_ghz", ghz(params.ec));
    s.metric("ng", params.ng);
    s.metric("charge_cutoff", params.charge_cutoff as f64);
    s.metric("omega_01_ghz", ghz(t.omega_01));
    s.metric("omega_12_ghz", ghz(t.omega_12));
    s.metric("anharmonicity_ghz", ghz(t.anharmonicity));
    s.metric("g12_over_g01", t.coupling_ratios[(1, 2)]);
    s.metric("omega_01_cutoff_change", cutoff_change);
    if cutoff_change > 1e-9 {
        s.warn(format!("doubling the charge cutoff moves omega_01 by {cutoff_change:.2e} (relative)"));
    }
    Ok(Outcome { series: vec![], tables: vec![("transmon_levels".into(), table)], summary: s })
}
