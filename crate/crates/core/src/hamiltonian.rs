//! Hamiltonian builders: lab-frame driven Jaynes–Cummings, the frame
//! rotating with the dominant drive, and the effective Rabi models.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::layout::{MODE, QUBIT, READOUT};
use crate::ops::{embed, fock_ladder_on, number_on, pauli_set};
use crate::params::{DeviceParams, DriveTone, EffectiveParams};
use crate::transmon::{transmon_charge_diagonalize, transversal_from_ratios};
use crate::{Error, HilbertLayout, Operator, Result, C64};

/// Scalar time dependence of one Hamiltonian term.
#[derive(Clone)]
pub enum Modulation {
    /// `amplitude · cos(frequency · t + phase)`
    Cosine { amplitude: f64, frequency: f64, phase: f64 },
    /// Arbitrary real function with its fastest angular frequency.
    Custom { function: Arc<dyn Fn(f64) -> f64 + Send + Sync>, max_frequency: f64 },
}

impl Modulation {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Cosine { amplitude, frequency, phase } => amplitude * Float::cos(frequency * t + phase),
            Self::Custom { function, .. } => function(t),
        }
    }

    /// Fastest angular frequency present.
    pub fn max_frequency(&self) -> f64 {
        match self {
            Self::Cosine { frequency, .. } => frequency.abs(),
            Self::Custom { max_frequency, .. } => max_frequency.abs(),
        }
    }
}

impl fmt::Debug for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Cosine { amplitude, frequency, phase } => f
                .debug_struct("Cosine")
                .field("amplitude", amplitude)
                .field("frequency", frequency)
                .field("phase", phase)
                .finish(),
            Self::Custom { max_frequency, .. } => {
                f.debug_struct("Custom").field("max_frequency", max_frequency).finish_non_exhaustive()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DriveTerm {
    pub operator: Operator,
    pub modulation: Modulation,
}

/// `H(t) = static + Σ fᵢ(t) Aᵢ`
#[derive(Debug, Clone)]
pub struct TimeDependentHamiltonian {
    static_part: Operator,
    terms: Vec<DriveTerm>,
    notes: Vec<String>,
}

impl TimeDependentHamiltonian {
    pub fn new(static_part: Operator) -> Self {
        Self { static_part, terms: Vec::new(), notes: Vec::new() }
    }

    pub fn layout(&self) -> &HilbertLayout {
        self.static_part.layout()
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    pub fn terms(&self) -> &[DriveTerm] {
        &self.terms
    }

    /// Warnings collected while building.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn push_note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn add_static(&mut self, op: &Operator) -> Result<()> {
        self.static_part = self.static_part.try_add(op)?;
        Ok(())
    }

    pub fn add_term(&mut self, operator: Operator, modulation: Modulation) -> Result<()> {
        if operator.layout() != self.layout() {
            return Err(Error::LayoutMismatch);
        }
        self.terms.push(DriveTerm { operator, modulation });
        Ok(())
    }

    pub fn is_static(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn at(&self, t: f64) -> Operator {
        let mut m = self.static_part.matrix().clone();
        for term in &self.terms {
            let c = term.modulation.value(t);
            if c != 0.0 {
                m += term.operator.matrix() * C64::from(c);
            }
        }
        Operator::new(self.layout().clone(), m).expect("same layout")
    }

    /// Fastest modulation angular frequency (0 for a static Hamiltonian).
    pub fn max_modulation_frequency(&self) -> f64 {
        self.terms.iter().map(|t| t.modulation.max_frequency()).fold(0.0, f64::max)
    }
}

/// Qubit, mode and optional readout operators embedded in a common layout.
#[derive(Debug, Clone)]
pub struct ModelOperators {
    pub layout: HilbertLayout,
    pub qubit_levels: usize,
    /// Transversal operator `X = X₋ + X₊` (σx on two levels).
    pub transversal: Operator,
    /// Weighted lowering operator `X₋` (σ₋ on two levels).
    pub lower: Operator,
    pub raise: Operator,
    /// `diag(0, 1, 2, …)` on the qubit.
    pub qubit_number: Operator,
    /// `2 N_q − 1` (σz on two levels).
    pub sigma_z: Operator,
    /// `|e⟩⟨e|`
    pub excited: Operator,
    pub b: Operator,
    pub b_dag: Operator,
    pub n_mode: Operator,
    pub readout: Option<ReadoutOperators>,
}

#[derive(Debug, Clone)]
pub struct ReadoutOperators {
    pub a: Operator,
    pub a_dag: Operator,
    pub n: Operator,
}

/// Level-coupling ratios for the configured qubit: σx on two levels, the
/// charge-basis transmon ratios on three.
pub fn qubit_ratios(params: &DeviceParams) -> Result<DMatrix<f64>> {
    match params.qubit_levels {
        2 => Ok(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])),
        n => {
            let t = transmon_charge_diagonalize(params.ej_over_ec * params.ec, params.ec, params.ng, params.charge_cutoff, n)?;
            Ok(t.coupling_ratios)
        }
    }
}

impl ModelOperators {
    pub fn new(params: &DeviceParams, readout: bool) -> Result<Self> {
        let ratios = qubit_ratios(params)?;
        Self::with_ratios(&ratios, params.fock_dim, readout.then_some(params.readout_dim))
    }

    pub fn with_ratios(ratios: &DMatrix<f64>, fock_dim: usize, readout_dim: Option<usize>) -> Result<Self> {
        let levels = ratios.nrows();
        let layout = HilbertLayout::qubit_mode(levels, fock_dim, readout_dim)?;
        let x_local = transversal_from_ratios(ratios);
        let mut lower_m = x_local.matrix().clone();
        for i in 0..levels {
            for j in 0..=i {
                lower_m[(i, j)] = C64::from(0.0);
            }
        }
        let ql = x_local.layout().clone();
        let lower_local = Operator::new(ql.clone(), lower_m)?;
        let num: Vec<f64> = (0..levels).map(|k| k as f64).collect();
        let nq_local = Operator::diagonal(&ql, &num)?;
        let sz: Vec<f64> = num.iter().map(|k| 2.0 * k - 1.0).collect();
        let sz_local = Operator::diagonal(&ql, &sz)?;
        let mut exc = alloc::vec![0.0; levels];
        exc[1] = 1.0;
        let exc_local = Operator::diagonal(&ql, &exc)?;
        let (b, bd) = fock_ladder_on(MODE, fock_dim)?;
        let e = |op: &Operator, label: &str| embed(op, label, &layout);
        let lower = e(&lower_local, QUBIT)?;
        let b_e = e(&b, MODE)?;
        let bd_e = e(&bd, MODE)?;
        let readout = match readout_dim {
            Some(r) => {
                let (a, ad) = fock_ladder_on(READOUT, r)?;
                let a = e(&a, READOUT)?;
                let a_dag = e(&ad, READOUT)?;
                let n = e(&number_on(READOUT, r)?, READOUT)?;
                Some(ReadoutOperators { a, a_dag, n })
            }
            None => None,
        };
        Ok(Self {
            qubit_levels: levels,
            transversal: e(&x_local, QUBIT)?,
            raise: lower.dagger(),
            lower,
            qubit_number: e(&nq_local, QUBIT)?,
            sigma_z: e(&sz_local, QUBIT)?,
            excited: e(&exc_local, QUBIT)?,
            n_mode: e(&number_on(MODE, fock_dim)?, MODE)?,
            b: b_e,
            b_dag: bd_e,
            readout,
            layout,
        })
    }

    /// Bare qubit Hamiltonian `Σ (ε k + α k(k−1)/2)|k⟩⟨k| − ε/2`.
    pub fn qubit_hamiltonian(&self, epsilon: f64, anharmonicity: f64) -> Result<Operator> {
        let l = HilbertLayout::single(QUBIT, self.qubit_levels)?;
        let e: Vec<f64> = (0..self.qubit_levels)
            .map(|k| {
                let k = k as f64;
                epsilon * k + anharmonicity * k * (k - 1.0) / 2.0 - epsilon / 2.0
            })
            .collect();
        embed(&Operator::diagonal(&l, &e)?, QUBIT, &self.layout)
    }

    /// `X₋ b† + X₊ b`
    pub fn exchange_mode(&self) -> Operator {
        &(&self.lower * &self.b_dag) + &(&self.raise * &self.b)
    }
}

/// Frame generator `N = b†b + N_q − ½ (+ a†a)`, diagonal, read from the layout.
pub fn frame_charges(layout: &HilbertLayout) -> Result<Vec<f64>> {
    let mut charges = alloc::vec![0.0];
    for s in layout.subsystems() {
        let shift = if s.label == QUBIT {
            -0.5
        } else if s.label == MODE || s.label == READOUT {
            0.0
        } else {
            return Err(Error::UnknownSubsystem(s.label.clone()));
        };
        let mut next = Vec::with_capacity(charges.len() * s.dim);
        for c in &charges {
            for k in 0..s.dim {
                next.push(c + k as f64 + shift);
            }
        }
        charges = next;
    }
    Ok(charges)
}

/// Splits a Hermitian operator into the part commuting with the frame
/// generator and the components `A_q` raising the frame charge by `q > 0`.
fn frame_components(op: &Operator, charges: &[f64]) -> (Operator, BTreeMap<i64, Operator>) {
    let n = op.dim();
    let mut zero = DMatrix::zeros(n, n);
    let mut parts: BTreeMap<i64, DMatrix<C64>> = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            let v = op.get(i, j);
            if v == C64::from(0.0) {
                continue;
            }
            let q = Float::round(charges[i] - charges[j]) as i64;
            if q == 0 {
                zero[(i, j)] = v;
            } else if q > 0 {
                parts.entry(q).or_insert_with(|| DMatrix::zeros(n, n))[(i, j)] = v;
            }
        }
    }
    let l = op.layout().clone();
    let parts = parts.into_iter().map(|(q, m)| (q, Operator::new(l.clone(), m).expect("same side"))).collect();
    (Operator::new(l, zero).expect("same side"), parts)
}

/// Options shared by the lab and rotating-frame builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelOptions {
    pub parasitic: bool,
    pub readout: bool,
    /// Drop terms oscillating faster than half the dominant drive frequency.
    pub rwa: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { parasitic: false, readout: false, rwa: true }
    }
}

/// `(ε/2)σz + ω b†b + g(σ₋b† + σ₊b)` on a `(qubit: 2, mode)` layout.
pub fn jaynes_cummings(epsilon: f64, omega: f64, g: f64, layout: &HilbertLayout) -> Result<Operator> {
    if layout.len() != 2 || layout.subsystem_dim(QUBIT) != Some(2) || !layout.contains(MODE) {
        return Err(Error::LayoutMismatch);
    }
    let p = pauli_set();
    let (b, bd) = fock_ladder_on(MODE, layout.subsystem_dim(MODE).unwrap_or(0))?;
    let sz = embed(&p.z, QUBIT, layout)?;
    let sm = embed(&p.minus, QUBIT, layout)?;
    let sp = embed(&p.plus, QUBIT, layout)?;
    let b = embed(&b, MODE, layout)?;
    let bd = embed(&bd, MODE, layout)?;
    let n = embed(&number_on(MODE, layout.subsystem_dim(MODE).unwrap_or(0))?, MODE, layout)?;
    Ok(sz * (epsilon / 2.0) + n * omega + (&sm * &bd + &sp * &b) * g)
}

/// `(η₂/2)(σz/2) + ω_eff b†b + g_eff σx(b† + b)`
pub fn rabi_hamiltonian(eff: &EffectiveParams, layout: &HilbertLayout) -> Result<Operator> {
    let ops = effective_ops(layout)?;
    Ok(&ops.sz * (eff.epsilon_eff / 4.0) + &ops.n * eff.omega_eff + &(&ops.sx * &ops.quad) * eff.g_eff)
}

/// Rabi Hamiltonian plus `(η_r/2)(b† + b)`.
pub fn effective_with_parasitic(eff: &EffectiveParams, eta_r: f64, layout: &HilbertLayout) -> Result<Operator> {
    let ops = effective_ops(layout)?;
    Ok(rabi_hamiltonian(eff, layout)? + &ops.quad * (eta_r / 2.0))
}

/// The parasitic Hamiltonian after displacing the mode by `−η_r/(2ω_eff)`,
/// constant dropped: `(η₂/2)(σz/2) − (g η_r/(2ω_eff))σx + ω_eff b†b + g_eff σx(b†+b)`.
pub fn displaced_effective(eff: &EffectiveParams, eta_r: f64, layout: &HilbertLayout) -> Result<Operator> {
    if eff.omega_eff == 0.0 {
        return Err(Error::SingularDisplacement);
    }
    let ops = effective_ops(layout)?;
    let g = 2.0 * eff.g_eff;
    Ok(rabi_hamiltonian(eff, layout)? - &ops.sx * (g * eta_r / (2.0 * eff.omega_eff)))
}

/// Constant dropped by [`displaced_effective`]: `−η_r²/(4ω_eff)`.
pub fn displacement_energy_shift(eff: &EffectiveParams, eta_r: f64) -> f64 {
    -eta_r * eta_r / (4.0 * eff.omega_eff)
}

struct EffectiveOps {
    sz: Operator,
    sx: Operator,
    n: Operator,
    quad: Operator,
}

fn effective_ops(layout: &HilbertLayout) -> Result<EffectiveOps> {
    if layout.len() != 2 || layout.subsystem_dim(QUBIT) != Some(2) || !layout.contains(MODE) {
        return Err(Error::LayoutMismatch);
    }
    let p = pauli_set();
    let (b, bd) = fock_ladder_on(MODE, layout.subsystem_dim(MODE).unwrap_or(0))?;
    let dim = layout.subsystem_dim(MODE).unwrap_or(0);
    let b = embed(&b, MODE, layout)?;
    let bd = embed(&bd, MODE, layout)?;
    Ok(EffectiveOps {
        sz: embed(&p.z, QUBIT, layout)?,
        sx: embed(&p.x, QUBIT, layout)?,
        n: embed(&number_on(MODE, dim)?, MODE, layout)?,
        quad: &bd + &b,
    })
}

/// Lab-frame Hamiltonian with transversal drives `Σ ηᵢ cos(ωᵢt + φᵢ) X`,
/// optionally a parasitic mode drive at the dominant tone and the readout
/// resonator.
pub fn driven_lab_hamiltonian(
    params: &DeviceParams,
    drives: &[DriveTone],
    options: &ModelOptions,
) -> Result<TimeDependentHamiltonian> {
    params.validate()?;
    let ops = ModelOperators::new(params, options.readout)?;
    driven_lab_with(params, drives, options, &ops)
}

pub fn driven_lab_with(
    params: &DeviceParams,
    drives: &[DriveTone],
    options: &ModelOptions,
    ops: &ModelOperators,
) -> Result<TimeDependentHamiltonian> {
    let mut h = ops.qubit_hamiltonian(params.epsilon, params.anharmonicity)?;
    h = h + &ops.n_mode * params.omega + ops.exchange_mode() * params.g;
    let mut notes = Vec::new();
    if let Some(r) = &ops.readout {
        if params.f == 0.0 && params.g_r == 0.0 {
            notes.push(String::from("readout resonator included with f = 0 and g_r = 0; it is decoupled"));
        }
        let qr = &(&ops.lower * &r.a_dag) + &(&ops.raise * &r.a);
        let mr = &(&r.a * &ops.b_dag) + &(&r.a_dag * &ops.b);
        h = h + &r.n * params.omega_r + qr * params.g_r + mr * params.f;
    }
    let mut out = TimeDependentHamiltonian::new(h);
    for n in notes {
        out.push_note(n);
    }
    for d in drives {
        out.add_term(
            ops.transversal.clone(),
            Modulation::Cosine { amplitude: d.amplitude, frequency: d.frequency, phase: d.phase },
        )?;
    }
    if options.parasitic {
        let d0 = drives.first().ok_or_else(|| Error::InvalidParameters("parasitic drive needs a dominant tone".into()))?;
        out.add_term(
            &ops.b + &ops.b_dag,
            Modulation::Cosine { amplitude: params.eta_r, frequency: d0.frequency, phase: d0.phase },
        )?;
    }
    Ok(out)
}

/// The driven Hamiltonian in the frame `U = exp{iω₁t N}` with ω₁ the
/// frequency of `drives[0]`.
pub fn rotating_frame_analytic(
    params: &DeviceParams,
    drives: &[DriveTone],
    options: &ModelOptions,
) -> Result<TimeDependentHamiltonian> {
    let lab = driven_lab_hamiltonian(params, drives, options)?;
    let omega1 = drives.first().ok_or_else(|| Error::InvalidParameters("rotating frame needs a dominant tone".into()))?.frequency;
    to_rotating_frame(&lab, omega1, options.rwa)
}

/// Transforms a lab Hamiltonian with cosine modulations into the frame
/// `U = exp{iω₁t N}`. With `rwa`, terms oscillating faster than ω₁/2 are dropped.
pub fn to_rotating_frame(lab: &TimeDependentHamiltonian, omega1: f64, rwa: bool) -> Result<TimeDependentHamiltonian> {
    let layout = lab.layout().clone();
    let charges = frame_charges(&layout)?;
    let gen = Operator::diagonal(&layout, &charges)?;
    let mut rot = Builder { out: TimeDependentHamiltonian::new(Operator::zeros(&layout)), omega1, rwa };
    for n in lab.notes() {
        rot.out.push_note(n.clone());
    }

    let (s0, sq) = frame_components(lab.static_part(), &charges);
    rot.out.add_static(&(s0 - gen * omega1))?;
    for (q, aq) in &sq {
        rot.rotating(aq, 1.0, *q as f64 * omega1, 0.0)?;
    }
    for term in lab.terms() {
        let Modulation::Cosine { amplitude, frequency, phase } = term.modulation else {
            return Err(Error::InvalidParameters("frame transformation needs cosine modulations".into()));
        };
        let (a0, aq) = frame_components(&term.operator, &charges);
        if a0.max_abs() > 0.0 {
            rot.keep_or_drop(a0, term.modulation.clone(), frequency)?;
        }
        for (q, a) in &aq {
            let qw = *q as f64 * omega1;
            rot.rotating(a, amplitude / 2.0, qw + frequency, phase)?;
            rot.rotating(a, amplitude / 2.0, qw - frequency, -phase)?;
        }
    }
    Ok(rot.out)
}

struct Builder {
    out: TimeDependentHamiltonian,
    omega1: f64,
    rwa: bool,
}

impl Builder {
    fn dropped(&self, freq: f64) -> bool {
        self.rwa && freq.abs() > self.omega1 / 2.0
    }

    fn keep_or_drop(&mut self, op: Operator, m: Modulation, freq: f64) -> Result<()> {
        if !self.dropped(freq) {
            self.out.add_term(op, m)?;
        }
        Ok(())
    }

    /// `amp · (e^{i(Ωt+ψ)} A + h.c.)`
    fn rotating(&mut self, a: &Operator, amp: f64, freq: f64, psi: f64) -> Result<()> {
        let sym = a + &a.dagger();
        let anti = (a - &a.dagger()) * C64::i();
        if freq.abs() <= 1e-12 * self.omega1 {
            let s = sym * (amp * Float::cos(psi)) + anti * (amp * Float::sin(psi));
            return self.out.add_static(&s);
        }
        if self.dropped(freq) {
            return Ok(());
        }
        self.out.add_term(sym, Modulation::Cosine { amplitude: amp, frequency: freq, phase: psi })?;
        self.out.add_term(
            anti,
            Modulation::Cosine { amplitude: amp, frequency: freq, phase: psi - core::f64::consts::FRAC_PI_2 },
        )
    }
}

/// Result of comparing `U H_lab U† − iU∂ₜU†` against a rotating-frame Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameResidual {
    /// Largest entry modulus of the difference over all samples.
    pub max_abs: f64,
    /// Largest entry modulus of `H_lab(t)` over all samples.
    pub lab_scale: f64,
}

impl FrameResidual {
    pub fn relative(&self) -> f64 {
        self.max_abs / self.lab_scale
    }
}

/// Evaluates the frame identity at every `t` in `samples`.
pub fn frame_residual(
    lab: &TimeDependentHamiltonian,
    rot: &TimeDependentHamiltonian,
    omega1: f64,
    samples: &[f64],
) -> Result<FrameResidual> {
    if lab.layout() != rot.layout() {
        return Err(Error::LayoutMismatch);
    }
    let charges = frame_charges(lab.layout())?;
    let n = charges.len();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &t in samples {
        let hl = lab.at(t);
        let hr = rot.at(t);
        scale = scale.max(hl.max_abs());
        let phases: Vec<C64> = charges.iter().map(|&c| C64::from_polar(1.0, omega1 * t * c)).collect();
        for i in 0..n {
            for j in 0..n {
                let mut v = phases[i] * hl.get(i, j) * phases[j].conj();
                if i == j {
                    v -= C64::from(omega1 * charges[i]);
                }
                worst = worst.max((v - hr.get(i, j)).norm());
            }
        }
    }
    Ok(FrameResidual { max_abs: worst, lab_scale: scale })
}
