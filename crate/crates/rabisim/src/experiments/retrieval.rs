//! Separating qubit and mode contributions from |g⟩/|e⟩ preparation pairs.

use rayon::prelude::*;

use rabisim_core::lindblad::{TimeGrid, Tolerances};
use rabisim_core::params::{DeviceParams, EffectiveParams};
use rabisim_core::series::TimeSeries;
use rabisim_core::state::QubitPreparation;

use super::{effective_layout, initial_state, simulate_effective, EffectiveModel};
use crate::error::{Result, RunError};
use crate::report::Summary;
use crate::signal::correlation;

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    /// `(S_e − S_g)/2`
    pub qubit: Vec<f64>,
    /// `(S_e + S_g)/2 − ½`
    pub mode: Vec<f64>,
    /// Least-squares weight of `⟨n⟩` in the mode signal.
    pub weight: f64,
    pub correlation: f64,
    /// `max |P_e^e + P_e^g − 1|`, when both series carry `P_e`.
    pub antisymmetry: Option<f64>,
}

/// Both series need a `signal` trace and the trace named `n`; `P_e` is used
/// for the antisymmetry figure when present.
pub fn retrieve_populations(ground: &TimeSeries, excited: &TimeSeries, n: &str) -> Result<Retrieval> {
    if ground.times != excited.times {
        return Err(RunError::Invalid("retrieval needs both traces on the same grid".into()));
    }
    let get = |s: &TimeSeries, name: &str| {
        s.trace(name).map(<[f64]>::to_vec).ok_or_else(|| RunError::Invalid(format!("missing `{name}` trace")))
    };
    let (sg, se) = (get(ground, "signal")?, get(excited, "signal")?);
    let (ng, ne) = (get(ground, n)?, get(excited, n)?);
    let qubit: Vec<f64> = se.iter().zip(&sg).map(|(e, g)| (e - g) / 2.0).collect();
    let mode: Vec<f64> = se.iter().zip(&sg).map(|(e, g)| (e + g) / 2.0 - 0.5).collect();
    let n_avg: Vec<f64> = ne.iter().zip(&ng).map(|(a, b)| (a + b) / 2.0).collect();
    let nn: f64 = n_avg.iter().map(|x| x * x).sum();
    let weight = if nn > 0.0 { mode.iter().zip(&n_avg).map(|(m, x)| m * x).sum::<f64>() / nn } else { 0.0 };
    let antisymmetry = match (ground.trace("P_e"), excited.trace("P_e")) {
        (Some(g), Some(e)) => Some(g.iter().zip(e).map(|(a, b)| (a + b - 1.0).abs()).fold(0.0, f64::max)),
        _ => None,
    };
    Ok(Retrieval { correlation: correlation(&mode, &n_avg), qubit, mode, weight, antisymmetry })
}

/// Adds `signal = P_e + weight·⟨n⟩` to a series.
pub fn add_dispersive_signal(series: &mut TimeSeries, weight: f64) -> Result<()> {
    let pe = series.trace("P_e").ok_or_else(|| RunError::Invalid("missing P_e".into()))?;
    let n = series.trace("n_mode").ok_or_else(|| RunError::Invalid("missing n_mode".into()))?;
    let signal = pe.iter().zip(n).map(|(p, n)| p + weight * n).collect();
    series.push_trace("signal", signal)?;
    Ok(())
}

/// Simulates both preparations under the effective Rabi model and retrieves
/// the qubit and mode signals.
pub fn run_retrieval(
    params: &DeviceParams,
    eff: &EffectiveParams,
    weight: f64,
    dissipative: bool,
    grid: &TimeGrid,
    tol: &Tolerances,
) -> Result<(TimeSeries, TimeSeries, Retrieval)> {
    let layout = effective_layout(params)?;
    let runs: Vec<Result<TimeSeries>> = [QubitPreparation::Ground, QubitPreparation::Excited]
        .par_iter()
        .map(|&p| {
            let psi0 = initial_state(&layout, p)?;
            let mut s = simulate_effective(params, eff, EffectiveModel::Rabi, &psi0, dissipative, grid, tol)?;
            add_dispersive_signal(&mut s, weight)?;
            Ok(s)
        })
        .collect();
    let mut runs = runs.into_iter();
    let g = runs.next().expect("ground")?;
    let e = runs.next().expect("excited")?;
    let r = retrieve_populations(&g, &e, "n_mode")?;
    Ok((g, e, r))
}

impl Retrieval {
    pub fn summary(&self, injected: f64) -> Summary {
        let mut s = Summary::new();
        s.metric("weight_injected", injected);
        s.metric("weight_fit", self.weight);
        s.metric("mode_correlation", self.correlation);
        s.metric("mode_signal_max", self.mode.iter().map(|x| x.abs()).fold(0.0, f64::max));
        if let Some(a) = self.antisymmetry {
            s.metric("antisymmetry", a);
        }
        s
    }

    pub fn series(&self, times: Vec<f64>) -> Result<TimeSeries> {
        let mut s = TimeSeries::new(times);
        s.push_trace("qubit_signal", self.qubit.clone())?;
        s.push_trace("mode_signal", self.mode.clone())?;
        Ok(s)
    }
}
