//! Simulation pipelines for each experiment, plus the signal processing
//! that turns traces into reported numbers.

pub mod bias_tee;
pub mod retrieval;
pub mod revival;
pub mod scheme;
pub mod spectroscopy;
pub mod vacuum;

use rabisim_core::hamiltonian::{
    displaced_effective, driven_lab_with, effective_with_parasitic, rabi_hamiltonian, to_rotating_frame,
    ModelOperators, ModelOptions, TimeDependentHamiltonian,
};
use rabisim_core::layout::{MODE, QUBIT};
use rabisim_core::lindblad::{channels_for, evolve, standard_channels, Observable, TimeGrid, Tolerances};
use rabisim_core::ops::{embed, number_on, projector};
use rabisim_core::params::{DeviceParams, DriveTone, EffectiveParams};
use rabisim_core::series::TimeSeries;
use rabisim_core::state::QubitPreparation;
use rabisim_core::{HilbertLayout, Operator, QuantumState};

use crate::error::Result;

/// Frame in which driven runs are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    /// Frame co-rotating with the dominant drive.
    #[default]
    Rotating,
    /// The laboratory frame including the GHz carrier. Slow; spot checks only.
    Lab,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rotating => "rotating",
            Self::Lab => "lab",
        }
    }
}

pub fn preparation_name(p: QubitPreparation) -> &'static str {
    match p {
        QubitPreparation::Ground => "g",
        QubitPreparation::Excited => "e",
        QubitPreparation::Plus => "+",
        QubitPreparation::Minus => "-",
    }
}

/// Qubit in `prep`, every other subsystem in its ground state.
pub fn initial_state(layout: &HilbertLayout, prep: QubitPreparation) -> Result<QuantumState> {
    let mut factors = Vec::with_capacity(layout.len());
    for s in layout.subsystems() {
        let single = HilbertLayout::single(&s.label, s.dim)?;
        let state = if s.label == QUBIT {
            QuantumState::pure(single, prep.amplitudes(s.dim))?
        } else {
            QuantumState::basis(single, &[0])?
        };
        factors.push(state);
    }
    Ok(QuantumState::product(&factors)?)
}

/// A transversally driven qubit-mode system.
#[derive(Debug, Clone)]
pub struct DrivenSetup {
    pub params: DeviceParams,
    /// The first tone sets the rotating frame.
    pub drives: Vec<DriveTone>,
    pub options: ModelOptions,
    pub frame: Frame,
    pub initial: QubitPreparation,
    pub dissipative: bool,
}

impl DrivenSetup {
    pub fn hamiltonian(&self, ops: &ModelOperators) -> Result<TimeDependentHamiltonian> {
        let lab = driven_lab_with(&self.params, &self.drives, &self.options, ops)?;
        Ok(match self.frame {
            Frame::Lab => lab,
            Frame::Rotating => {
                let omega1 = self.drives.first().map_or(self.params.omega, |d| d.frequency);
                to_rotating_frame(&lab, omega1, self.options.rwa)?
            }
        })
    }

    /// Traces `P_e` and `n_mode`.
    pub fn simulate(&self, grid: &TimeGrid, tol: &Tolerances) -> Result<TimeSeries> {
        self.params.validate()?;
        let ops = ModelOperators::new(&self.params, self.options.readout)?;
        let h = self.hamiltonian(&ops)?;
        let channels = if self.dissipative { channels_for(&self.params, &ops)? } else { Vec::new() };
        let observables =
            [Observable::new("P_e", ops.excited.clone()), Observable::new("n_mode", ops.n_mode.clone())];
        let psi0 = initial_state(&ops.layout, self.initial)?;
        let mut series = evolve(&h, &psi0, &channels, grid, &observables, tol)?;
        series.set_meta("frame", self.frame.name());
        Ok(series)
    }
}

/// Which effective Hamiltonian to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EffectiveModel {
    Rabi,
    /// Rabi model plus the parasitic mode drive `(η_r/2)(b + b†)`.
    Parasitic(f64),
    /// The parasitic model after the displacement transformation.
    Displaced(f64),
}

pub fn effective_layout(params: &DeviceParams) -> Result<HilbertLayout> {
    Ok(HilbertLayout::qubit_mode(2, params.fock_dim, None)?)
}

pub fn effective_hamiltonian(eff: &EffectiveParams, model: EffectiveModel, layout: &HilbertLayout) -> Result<Operator> {
    Ok(match model {
        EffectiveModel::Rabi => rabi_hamiltonian(eff, layout)?,
        EffectiveModel::Parasitic(eta_r) => effective_with_parasitic(eff, eta_r, layout)?,
        EffectiveModel::Displaced(eta_r) => displaced_effective(eff, eta_r, layout)?,
    })
}

/// `P_e` and `n_mode` on the effective two-level layout.
pub fn effective_observables(layout: &HilbertLayout) -> Result<Vec<Observable>> {
    let fock = layout.subsystem_dim(MODE).unwrap_or(0);
    Ok(vec![
        Observable::new("P_e", embed(&projector(QUBIT, 2, 1)?, QUBIT, layout)?),
        Observable::new("n_mode", embed(&number_on(MODE, fock)?, MODE, layout)?),
    ])
}

/// Evolves `initial` under the chosen effective Hamiltonian. With
/// `dissipative`, the laboratory channel operators are applied unchanged.
pub fn simulate_effective(
    params: &DeviceParams,
    eff: &EffectiveParams,
    model: EffectiveModel,
    initial: &QuantumState,
    dissipative: bool,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<TimeSeries> {
    let layout = initial.layout().clone();
    let h = TimeDependentHamiltonian::new(effective_hamiltonian(eff, model, &layout)?);
    let channels = if dissipative { standard_channels(params, &layout)? } else { Vec::new() };
    let mut series = evolve(&h, initial, &channels, grid, &effective_observables(&layout)?, tol)?;
    series.set_meta("frame", "effective");
    Ok(series)
}

/// Index range of samples with `lo <= t <= hi`.
pub(crate) fn window(times: &[f64], lo: f64, hi: f64) -> std::ops::Range<usize> {
    let a = times.partition_point(|&t| t < lo);
    let b = times.partition_point(|&t| t <= hi);
    a..b.max(a)
}
