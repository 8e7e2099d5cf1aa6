//! Runs a resolved configuration and writes its outputs.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use rabisim_core::lindblad::TimeGrid;
use rabisim_core::params::{DeviceParams, EffectiveParams};

use crate::config::{Experiment, Resolved};
use crate::experiments::bias_tee::run_bias_tee;
use crate::experiments::retrieval::run_retrieval;
use crate::experiments::revival::{
    run_collapse_revival, run_constraint_violation, run_full_rabi, CollapseRevivalConfig, FullRabiConfig,
};
use crate::experiments::scheme::{run_parasitic_study, run_scheme_verification, ParasiticConfig, SchemeConfig};
use crate::experiments::spectroscopy::{run_avoided_crossing, run_transmon_levels};
use crate::experiments::vacuum::{run_detuning_map, run_vacuum_rabi};
use crate::report::{Outcome, Summary};
use crate::{Result, RunError};

/// Stable identifier of a run: the first 16 hex digits of the SHA-256 of
/// the configuration echo.
pub fn run_id(cfg: &Resolved) -> String {
    let digest = Sha256::digest(cfg.echo_toml().as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn revival_config(cfg: &Resolved) -> CollapseRevivalConfig {
    CollapseRevivalConfig {
        eta1: cfg.eta1,
        phi1: cfg.phi1,
        initial: cfg.initial,
        options: cfg.options,
        frame: cfg.frame,
        dissipative: cfg.dissipative,
        ..CollapseRevivalConfig::new(cfg.params.clone(), cfg.omega_eff)
    }
}

fn full_rabi_config(cfg: &Resolved) -> FullRabiConfig {
    FullRabiConfig { base: revival_config(cfg), eta2: cfg.eta2, phi2: cfg.phi2, omega2: cfg.omega2 }
}

/// Runs the configured experiment in memory, plus the truncation check
/// when enabled.
pub fn execute(cfg: &Resolved) -> Result<Outcome> {
    let mut outcome = execute_once(cfg)?;
    if cfg.convergence_check && uses_fock_space(cfg.experiment) {
        let wider = Resolved {
            params: DeviceParams { fock_dim: cfg.params.fock_dim + FOCK_MARGIN, ..cfg.params.clone() },
            ..cfg.clone()
        };
        let check = execute_once(&wider)?;
        convergence_report(&mut outcome.summary, &check.summary);
    }
    Ok(outcome)
}

const FOCK_MARGIN: usize = 5;
const CONVERGENCE_LIMIT: f64 = 0.01;
/// Metrics smaller than this in both runs are residuals, not observables.
const CONVERGENCE_FLOOR: f64 = 1e-9;

fn uses_fock_space(e: Experiment) -> bool {
    !matches!(e, Experiment::TransmonLevels | Experiment::BiasTee)
}

/// Compares every metric present in both summaries, skipping solver
/// diagnostics, and warns when the largest relative change exceeds 1%.
pub fn convergence_report(summary: &mut Summary, wider: &Summary) {
    const SKIP: [&str; 3] = ["max_trace_drift", "max_hermiticity_drift", "min_eigenvalue"];
    let mut worst: Option<(String, f64)> = None;
    for (key, _) in summary.entries() {
        if SKIP.iter().any(|s| key.ends_with(s)) || key == "fock_dim" {
            continue;
        }
        let (Some(a), Some(b)) = (summary.get_f64(key), wider.get_f64(key)) else { continue };
        let scale = a.abs().max(b.abs());
        if scale <= CONVERGENCE_FLOOR {
            continue;
        }
        let change = (a - b).abs() / scale;
        if worst.as_ref().is_none_or(|(_, w)| change > *w) {
            worst = Some((key.clone(), change));
        }
    }
    let change = worst.as_ref().map_or(0.0, |(_, c)| *c);
    summary.metric("convergence.max_relative_change", change);
    summary.flag("convergence.ok", change <= CONVERGENCE_LIMIT);
    if let Some((key, c)) = worst.filter(|(_, c)| *c > CONVERGENCE_LIMIT) {
        summary.warn(format!("`{key}` changes by {:.2}% with {FOCK_MARGIN} more Fock levels", c * 100.0));
    }
}

fn execute_once(cfg: &Resolved) -> Result<Outcome> {
    let grid = || TimeGrid::with_spacing(cfg.t_end, cfg.dt).map_err(RunError::from);
    let tol = &cfg.tol;
    let mut outcome = match cfg.experiment {
        Experiment::VacuumRabi => run_vacuum_rabi(&cfg.params, &cfg.options, &grid()?, tol)?.outcome(&cfg.params),
        Experiment::DetuningMap => {
            run_detuning_map(&cfg.params, &cfg.options, &cfg.detunings, &cfg.check_detunings, &grid()?, tol)?.outcome()
        }
        Experiment::CollapseRevival => {
            let rc = revival_config(cfg);
            let grid = grid()?;
            let mut out = run_collapse_revival(&rc, &grid, tol)?.outcome(&rc);
            if let Some(weight) = cfg.retrieval {
                let eff = EffectiveParams::new(cfg.params.g, cfg.omega_eff, 0.0);
                let (_, _, r) = run_retrieval(&cfg.params, &eff, weight, cfg.dissipative, &grid, tol)?;
                out.summary.extend("retrieval.", r.summary(weight));
                out.series.push(("retrieval".into(), r.series(grid.times())?));
            }
            out
        }
        Experiment::FullRabi => {
            let fc = full_rabi_config(cfg);
            run_full_rabi(&fc, &grid()?, tol)?.outcome(&fc)
        }
        Experiment::ViolateConstraint => {
            let fc = full_rabi_config(cfg);
            run_constraint_violation(&fc, &cfg.violation, &grid()?, tol)?.outcome(&fc)
        }
        Experiment::VerifyScheme => {
            let sc = SchemeConfig {
                eta1: cfg.eta1,
                eta1_list: cfg.eta1_list.clone(),
                omega_eff: cfg.omega_eff,
                omega_eff_list: cfg.omega_eff_list.clone(),
                initial: cfg.initial,
                options: cfg.options,
                frame: cfg.frame,
                ..SchemeConfig::new(cfg.params.clone())
            };
            run_scheme_verification(&sc, &grid()?, tol)?.outcome(&sc)
        }
        Experiment::Parasitic => {
            let pc = ParasiticConfig {
                omega_eff: cfg.omega_eff,
                eta_r_list: cfg.eta_r_list.clone(),
                initial: cfg.initial,
                ..ParasiticConfig::new(cfg.params.clone())
            };
            run_parasitic_study(&pc, &grid()?, tol)?.outcome(&pc)
        }
        Experiment::AvoidedCrossing => {
            let (lo, hi) = cfg.epsilon_range;
            run_avoided_crossing(&cfg.params, lo, hi, cfg.epsilon_points)?.outcome(&cfg.params)
        }
        Experiment::TransmonLevels => run_transmon_levels(&cfg.params, cfg.levels)?,
        Experiment::BiasTee => run_bias_tee(&cfg.bias_tee)?.outcome()?,
    };
    outcome.collect_diagnostics();
    Ok(outcome)
}

fn header(cfg: &Resolved, status: &str) -> Summary {
    let mut h = Summary::new();
    h.text("run_id", run_id(cfg));
    h.text("experiment", cfg.experiment.name());
    h.text("status", status);
    for (section, key, value) in cfg.echo() {
        h.text(format!("config.{section}.{key}"), value);
    }
    h
}

/// Where a run writes: `--out`, else the config's `out_dir`, else a
/// directory named after the experiment.
pub fn output_dir(cfg: &Resolved, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(cfg.experiment.name()))
}

/// Runs and writes everything. On failure the summary records the error
/// class and message and the error is returned for its exit code.
pub fn dispatch(cfg: &Resolved, dir: &Path) -> Result<(Outcome, Vec<PathBuf>)> {
    match execute(cfg) {
        Ok(outcome) => {
            let files = outcome.write(dir, &header(cfg, "ok"))?;
            Ok((outcome, files))
        }
        Err(err) => {
            let mut h = header(cfg, "failed");
            h.text("error.class", error_class(&err));
            h.text("error.message", err.to_string());
            h.text("exit_code", err.exit_code().to_string());
            Outcome::default().write(dir, &h)?;
            Err(err)
        }
    }
}

pub fn error_class(err: &RunError) -> &'static str {
    match err {
        RunError::Config(_) => "config",
        RunError::Core(rabisim_core::Error::IntegrationFailure { .. }) => "integration",
        RunError::Core(_) => "model",
        RunError::Fit(_) => "fit",
        RunError::Signal(_) => "signal",
        RunError::UnknownExperiment(_) => "unknown-experiment",
        RunError::Invalid(_) => "invalid",
        RunError::Io { .. } => "io",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_flags_the_worst_metric() {
        let mut a = Summary::new();
        a.metric("revival_time_s", 2.0e-7);
        a.metric("relative_error", 1e-14);
        a.metric("max_trace_drift", 1e-15);
        let mut b = Summary::new();
        b.metric("revival_time_s", 2.05e-7);
        b.metric("relative_error", 5e-14);
        b.metric("max_trace_drift", 9e-15);
        convergence_report(&mut a, &b);
        assert!((a.get_f64("convergence.max_relative_change").unwrap() - 0.05 / 2.05).abs() < 1e-12);
        assert_eq!(a.get("convergence.ok"), Some("false"));
        assert!(a.warnings()[0].contains("revival_time_s"));
    }
}
