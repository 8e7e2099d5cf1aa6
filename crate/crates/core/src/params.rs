use crate::{ghz, mhz, Error, Result, TAU};

/// One transversal microwave tone: `η cos(ω t + φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTone {
    pub amplitude: f64,
    pub frequency: f64,
    /// In `[0, 2π)`.
    pub phase: f64,
}

impl DriveTone {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidParameters(alloc::format!("drive amplitude {amplitude} must be >= 0")));
        }
        if !(frequency > 0.0) || !frequency.is_finite() {
            return Err(Error::InvalidParameters(alloc::format!("drive frequency {frequency} must be > 0")));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidParameters("drive phase must be finite".into()));
        }
        Ok(Self { amplitude, frequency, phase: normalize_phase(phase) })
    }
}

pub fn normalize_phase(phase: f64) -> f64 {
    let p = phase % TAU;
    let p = if p < 0.0 { p + TAU } else { p };
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Device and truncation parameters. Frequencies and couplings are angular
/// (rad/s), rates are 1/s, times are s.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub epsilon: f64,
    pub omega: f64,
    pub g: f64,
    pub omega_r: f64,
    pub g_r: f64,
    pub f: f64,
    pub anharmonicity: f64,
    pub kappa: f64,
    pub t1: f64,
    pub t2: f64,
    pub eta_r: f64,
    pub qubit_levels: usize,
    pub fock_dim: usize,
    pub readout_dim: usize,
    pub ej_over_ec: f64,
    pub ec: f64,
    pub ng: f64,
    pub charge_cutoff: usize,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            epsilon: ghz(5.948),
            omega: ghz(5.948),
            g: mhz(4.3),
            omega_r: ghz(8.86),
            g_r: mhz(55.0),
            f: mhz(1.0),
            anharmonicity: ghz(-0.36),
            kappa: 3.9e6,
            t1: 5e-6,
            t2: 0.5e-6,
            eta_r: mhz(5.0),
            qubit_levels: 2,
            fock_dim: 26,
            readout_dim: 5,
            ej_over_ec: 50.0,
            ec: ghz(0.31),
            ng: 0.0,
            charge_cutoff: crate::transmon::DEFAULT_CHARGE_CUTOFF,
        }
    }
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("epsilon", self.epsilon),
            ("omega", self.omega),
            ("g", self.g),
            ("omega_r", self.omega_r),
            ("g_r", self.g_r),
            ("f", self.f),
            ("kappa", self.kappa),
            ("eta_r", self.eta_r),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameters(alloc::format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if !(self.t1 > 0.0 && self.t2 > 0.0) {
            return Err(Error::InvalidParameters("T1 and T2 must be positive".into()));
        }
        if self.t2 > 2.0 * self.t1 * (1.0 + 1e-12) {
            return Err(Error::InvalidParameters(alloc::format!(
                "T2 = {:e} s exceeds 2*T1 = {:e} s",
                self.t2,
                2.0 * self.t1
            )));
        }
        if !matches!(self.qubit_levels, 2 | 3) {
            return Err(Error::InvalidParameters(alloc::format!("qubit_levels = {} (must be 2 or 3)", self.qubit_levels)));
        }
        if self.fock_dim < 2 || self.readout_dim < 2 {
            return Err(Error::InvalidParameters("fock_dim and readout_dim must be >= 2".into()));
        }
        if !self.anharmonicity.is_finite() {
            return Err(Error::InvalidParameters("anharmonicity must be finite".into()));
        }
        Ok(())
    }

    /// `γ_φ = 1/T₂ − 1/(2T₁)`, clamped at zero against rounding.
    pub fn pure_dephasing_rate(&self) -> f64 {
        (1.0 / self.t2 - 0.5 / self.t1).max(0.0)
    }
}

/// Parameters of the synthesized Rabi Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    pub omega_eff: f64,
    /// `η₂`
    pub epsilon_eff: f64,
    /// `g/2`
    pub g_eff: f64,
}

impl EffectiveParams {
    /// From the lab coupling `g`; `g_eff = g/2`.
    pub fn new(g: f64, omega_eff: f64, eta2: f64) -> Self {
        Self { omega_eff, epsilon_eff: eta2, g_eff: g / 2.0 }
    }

    pub fn from_drive(params: &DeviceParams, omega1: f64, eta2: f64) -> Self {
        Self::new(params.g, params.omega - omega1, eta2)
    }

    /// `2 g_eff / √(ω_eff · ε_eff/2)`; above 1 marks the superradiant side.
    pub fn critical_indicator(&self) -> f64 {
        use num_traits::Float;
        2.0 * self.g_eff / Float::sqrt(self.omega_eff * self.epsilon_eff / 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_normalization() {
        assert_eq!(DriveTone::new(1.0, 1.0, -core::f64::consts::PI).unwrap().phase, core::f64::consts::PI);
        assert!(DriveTone::new(1.0, 1.0, 3.0 * TAU).unwrap().phase.abs() < 1e-12);
        assert!(DriveTone::new(-1.0, 1.0, 0.0).is_err());
        assert!(DriveTone::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn defaults_are_valid_and_dephasing_matches() {
        let p = DeviceParams::default();
        p.validate().unwrap();
        assert!((p.pure_dephasing_rate() - 1.9e6).abs() < 1e-6);
        let q = DeviceParams { t2: 2.0 * p.t1, ..p.clone() };
        assert_eq!(q.pure_dephasing_rate(), 0.0);
        let bad = DeviceParams { t2: 3.0 * p.t1, ..p };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn effective_coupling_is_half() {
        let e = EffectiveParams::new(mhz(5.5), mhz(6.0), mhz(3.0));
        assert_eq!(e.g_eff, mhz(5.5) / 2.0);
        assert!((e.critical_indicator() - 2.0 * 2.75 / (6.0f64 * 1.5).sqrt()).abs() < 1e-12);
    }
}
