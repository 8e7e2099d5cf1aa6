//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any criterion fails.

use std::f64::consts::{E, SQRT_2, TAU};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};

use rabisim::config::{parse_config, Experiment, Resolved};
use rabisim::experiments::bias_tee::run_bias_tee;
use rabisim::experiments::revival::{
    run_collapse_revival, run_constraint_violation, CollapseRevivalConfig, FullRabiConfig, SUPPRESSION_LIMIT,
};
use rabisim::experiments::scheme::{run_scheme_verification, SchemeConfig};
use rabisim::experiments::spectroscopy::run_avoided_crossing;
use rabisim::experiments::vacuum::run_vacuum_rabi;
use rabisim_core::expm::expm;
use rabisim_core::hamiltonian::{
    displaced_effective, displacement_energy_shift, driven_lab_hamiltonian, effective_with_parasitic, frame_residual,
    rotating_frame_analytic, ModelOptions, TimeDependentHamiltonian,
};
use rabisim_core::lindblad::{evolve_states, CollapseChannel, TimeGrid, Tolerances};
use rabisim_core::params::{DeviceParams, DriveTone, EffectiveParams};
use rabisim_core::series::TimeSeries;
use rabisim_core::state::min_eigenvalue;
use rabisim_core::transmon::transmon_charge_diagonalize;
use rabisim_core::{ghz, mhz, HilbertLayout, Operator, QuantumState};

type Check = Result<(bool, String), String>;

fn resolve(experiment: Experiment, text: &str) -> Result<Resolved, String> {
    parse_config(text).and_then(|c| c.resolve(experiment)).map_err(|e| e.to_string())
}

fn grid(r: &Resolved) -> Result<TimeGrid, String> {
    TimeGrid::with_spacing(r.t_end, r.dt).map_err(|e| e.to_string())
}

fn to_mhz(w: f64) -> f64 {
    w / TAU / 1e6
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// Solver diagnostics gathered from every Lindblad run made here.
#[derive(Default)]
struct Drift {
    trace: f64,
    hermiticity: f64,
    min_eigenvalue: f64,
    runs: usize,
}

impl Drift {
    fn record(&mut self, s: &TimeSeries) {
        let get = |k: &str| s.metadata.get(k).and_then(|v| v.parse::<f64>().ok());
        if let Some(x) = get("max_trace_drift") {
            self.trace = self.trace.max(x);
            self.runs += 1;
        }
        if let Some(x) = get("max_hermiticity_drift") {
            self.hermiticity = self.hermiticity.max(x);
        }
        if let Some(x) = get("min_eigenvalue") {
            self.min_eigenvalue = self.min_eigenvalue.min(x);
        }
    }
}

fn vacuum_rabi(drift: &mut Drift) -> Result<(Check, Check), String> {
    let r = resolve(Experiment::VacuumRabi, "[device]\ng_mhz = 4.3\nkappa_per_s = 3.9e6\nt1_us = 5\n")?;
    let start = Instant::now();
    let v = run_vacuum_rabi(&r.params, &r.options, &grid(&r)?, &r.tol).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    drift.record(&v.series);
    let two_g = to_mhz(v.fit.frequency);
    let c1 = rel(two_g, 8.6);
    let first = (
        c1 <= 0.02 && secs <= 5.0,
        format!("2g_fit = {two_g:.4} MHz (rel. err {c1:.2e}, limit 2e-2), runtime {secs:.2} s (limit 5 s)"),
    );
    let oracle = (r.params.kappa + 1.0 / r.params.t1) / 2.0;
    let gamma = v.fit.decay;
    let (e_oracle, e_paper) = (rel(gamma, oracle), rel(gamma, 2.08e6));
    let second = (
        e_oracle <= 0.05 && e_paper <= 0.10,
        format!(
            "Gamma_fit = {gamma:.4e} 1/s vs (kappa + 1/T1)/2 = {oracle:.4e} (rel. {e_oracle:.3}, limit 0.05), vs 2.08e6 (rel. {e_paper:.3}, limit 0.10)"
        ),
    );
    Ok((Ok(first), Ok(second)))
}

fn revival_timing(drift: &mut Drift) -> Check {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for w in [4.0, 5.0, 6.0, 8.0] {
        let r = resolve(
            Experiment::CollapseRevival,
            &format!("[device]\ng_mhz = 5.5\n[drive]\nomega_eff_mhz = {w}\neta1_mhz = 50\n"),
        )?;
        let cfg = CollapseRevivalConfig {
            eta1: r.eta1,
            initial: r.initial,
            dissipative: r.dissipative,
            ..CollapseRevivalConfig::new(r.params.clone(), r.omega_eff)
        };
        let run = run_collapse_revival(&cfg, &grid(&r)?, &r.tol).map_err(|e| e.to_string())?;
        drift.record(&run.effective);
        if let Some(lab) = &run.lab {
            drift.record(lab);
        }
        let period = TAU / r.omega_eff;
        let driven = run.lab_report.map(|x| x.revival_time);
        let effective = run.report.map(|x| x.revival_time);
        let within = |t: Option<f64>| t.is_some_and(|t| rel(t, period) <= 0.05);
        ok &= within(driven) && within(effective);
        let ns = |t: Option<f64>| t.map_or("none".to_string(), |t| format!("{:.1}", t * 1e9));
        parts.push(format!("{w} MHz: driven {} / effective {} ns vs {:.1}", ns(driven), ns(effective), period * 1e9));
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((ok && secs <= 30.0, format!("{}; total {secs:.1} s (limit 30 s)", parts.join("; "))))
}

fn scheme() -> Result<(Check, Check, Check), String> {
    let r = resolve(Experiment::VerifyScheme, "[device]\ng_mhz = 5\n[drive]\neta1_mhz = 50\nomega_eff_mhz = 5\n")?;
    let cfg = SchemeConfig {
        eta1: r.eta1,
        eta1_list: [40.0, 50.0, 60.0].map(mhz).to_vec(),
        omega_eff: r.omega_eff,
        omega_eff_list: [2.0, 3.0, 5.0, 8.0].map(mhz).to_vec(),
        ..SchemeConfig::new(r.params.clone())
    };
    let v = run_scheme_verification(&cfg, &grid(&r)?, &r.tol).map_err(|e| e.to_string())?;
    let at5 = v
        .omegas
        .iter()
        .find(|c| (to_mhz(c.omega_eff) - 5.0).abs() < 1e-9)
        .ok_or("no 5 MHz comparison")?;
    let c4 = (
        at5.max_deviation <= 0.15,
        format!(
            "max |n_driven - n_ideal| / peak = {:.4} over one cycle (limit 0.15); {:.4} over the full {:.0} ns record",
            at5.max_deviation,
            at5.max_deviation_record,
            r.t_end * 1e9
        ),
    );
    let worst = v.eta_pairs.iter().map(|p| p.rms_relative).fold(0.0, f64::max);
    let pairs: Vec<String> = v
        .eta_pairs
        .iter()
        .map(|p| format!("{}-{}: {:.4}", to_mhz(p.eta1_a).round(), to_mhz(p.eta1_b).round(), p.rms_relative))
        .collect();
    let c5 = (worst <= 0.05, format!("pairwise RMS / peak {} (limit 0.05)", pairs.join(", ")));
    let peak = at5.peak_driven;
    let c6 = ((0.8..=1.2).contains(&peak), format!("peak <n> = {peak:.4} driven, {:.4} ideal (range [0.8, 1.2])", at5.peak_ideal));
    Ok((Ok(c4), Ok(c5), Ok(c6)))
}

fn full_rabi(drift: &mut Drift) -> Check {
    let r = resolve(
        Experiment::ViolateConstraint,
        "[device]\ng_mhz = 5.5\n[drive]\nomega_eff_mhz = 6\neta1_mhz = 50\neta2_mhz = 3\n",
    )?;
    let cfg = FullRabiConfig {
        base: CollapseRevivalConfig {
            eta1: r.eta1,
            initial: r.initial,
            dissipative: r.dissipative,
            ..CollapseRevivalConfig::new(r.params.clone(), r.omega_eff)
        },
        eta2: r.eta2,
        phi2: r.phi1,
        omega2: None,
    };
    let v = run_constraint_violation(&cfg, &r.violation, &grid(&r)?, &r.tol).map_err(|e| e.to_string())?;
    drift.record(&v.compliant.baseline);
    drift.record(&v.compliant.driven);
    let (rg, ig) = (v.compliant.revival_gain(), v.compliant.inter_revival_gain());
    let mut ok = rg > 0.0 && ig > 0.0;
    let mut text = format!("revival gain {rg:.4}, inter-revival gain {ig:.4} (both > 0)");
    for run in &v.violations {
        drift.record(&run.series);
        ok &= run.suppressed(SUPPRESSION_LIMIT);
        text += &format!(
            "; {} mismatch ratios {:.3} / {:.3} (limit {SUPPRESSION_LIMIT})",
            run.mode.name(),
            run.revival_ratio,
            run.inter_revival_ratio
        );
    }
    ok &= v.violations.len() == 2;
    Ok((ok, text))
}

fn avoided_crossing() -> Check {
    let r = resolve(Experiment::AvoidedCrossing, "[device]\ng_mhz = 3.9\n")?;
    let (lo, hi) = r.epsilon_range;
    let a = run_avoided_crossing(&r.params, lo, hi, r.epsilon_points).map_err(|e| e.to_string())?;
    let e = rel(a.min_gap, 2.0 * r.params.g);
    Ok((e <= 1e-3, format!("min gap {:.6} MHz vs 2g = {:.6} MHz (rel. {e:.2e}, limit 1e-3)", to_mhz(a.min_gap), to_mhz(2.0 * r.params.g))))
}

fn transmon() -> Check {
    let levels = transmon_charge_diagonalize(50.0 * ghz(0.31), ghz(0.31), 0.0, 30, 3).map_err(|e| e.to_string())?;
    let alpha = levels.anharmonicity / TAU / 1e9;
    let ratio = levels.coupling_ratios[(1, 2)];
    let (ea, er) = (rel(alpha, -0.36), rel(ratio, SQRT_2));
    Ok((
        ea <= 0.15 && er <= 0.05,
        format!("alpha/h = {alpha:.4} GHz (rel. {ea:.3} to -0.36, limit 0.15), g12/g01 = {ratio:.4} (rel. {er:.3} to sqrt 2, limit 0.05)"),
    ))
}

fn complex_matrix(rng: &mut impl Rng, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Column-stacked Liouvillian, `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
fn liouvillian(h: &DMatrix<C64>, l: &DMatrix<C64>) -> DMatrix<C64> {
    let n = h.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let ldl = l.adjoint() * l;
    (id.kronecker(h) - h.transpose().kronecker(&id)) * C64::new(0.0, -1.0) + l.conjugate().kronecker(l)
        - (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * C64::from(0.5)
}

fn properties(drift: &Drift) -> Check {
    let mut rng = rand::rngs::StdRng::seed_from_u64(2017);
    let layout = HilbertLayout::qubit_mode(2, 3, None).map_err(|e| e.to_string())?;
    let tight = Tolerances { rtol: 1e-11, atol: 1e-13, ..Default::default() };
    let times: Vec<f64> = (0..10).map(|k| 0.25 * k as f64).collect();
    let (mut oracle_err, mut trace, mut herm, mut min_eig) = (0.0f64, drift.trace, drift.hermiticity, drift.min_eigenvalue);
    for _ in 0..10 {
        let a = complex_matrix(&mut rng, 6);
        let h = (&a + a.adjoint()) * C64::from(0.5);
        let l = complex_matrix(&mut rng, 6) * C64::from(rng.random_range(0.2..1.0f64).sqrt());
        let b = complex_matrix(&mut rng, 6);
        let rho0 = &b * b.adjoint();
        let rho0 = &rho0 / rho0.trace();
        let op = |m: &DMatrix<C64>| Operator::new(layout.clone(), m.clone()).map_err(|e| e.to_string());
        let ham = TimeDependentHamiltonian::new(op(&h)?);
        let ch = [CollapseChannel::new(op(&l)?, 1.0, "L").map_err(|e| e.to_string())?];
        let init = QuantumState::mixed(layout.clone(), rho0.clone()).map_err(|e| e.to_string())?;
        let (states, diag) = evolve_states(&ham, &init, &ch, &times, &tight).map_err(|e| e.to_string())?;
        trace = trace.max(diag.max_trace_drift);
        herm = herm.max(diag.max_hermiticity_drift);
        let sup = liouvillian(&h, &l);
        let v0 = DVector::from_iterator(36, rho0.iter().copied());
        for (t, s) in times.iter().zip(&states) {
            let rho = s.density_matrix();
            min_eig = min_eig.min(min_eigenvalue(&rho).map_err(|e| e.to_string())?);
            let want = expm(&(&sup * C64::from(*t))) * &v0;
            let err = rho.iter().zip(want.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            oracle_err = oracle_err.max(err);
        }
    }

    let mut frame = 0.0f64;
    for levels in [2, 3] {
        let p = DeviceParams { fock_dim: 6, qubit_levels: levels, ..Default::default() };
        let w1 = p.omega - mhz(5.0);
        let drives = [DriveTone::new(mhz(50.0), w1, 0.4), DriveTone::new(mhz(3.0), w1 - mhz(50.0), 0.4)]
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let opts = ModelOptions { parasitic: true, readout: false, rwa: false };
        let lab = driven_lab_hamiltonian(&p, &drives, &opts).map_err(|e| e.to_string())?;
        let rot = rotating_frame_analytic(&p, &drives, &opts).map_err(|e| e.to_string())?;
        let ts: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..2e-6)).collect();
        frame = frame.max(frame_residual(&lab, &rot, w1, &ts).map_err(|e| e.to_string())?.relative());
    }

    let mut spectral = 0.0f64;
    let eff_layout = HilbertLayout::qubit_mode(2, 26, None).map_err(|e| e.to_string())?;
    for (g, w, eta2, eta_r) in [(5.5, 5.0, 0.0, 5.0), (5.5, 6.0, 3.0, 5.0), (5.0, 8.0, 3.0, 2.5)] {
        let eff = EffectiveParams::new(mhz(g), mhz(w), mhz(eta2));
        let a = effective_with_parasitic(&eff, mhz(eta_r), &eff_layout).and_then(|h| h.eigenvalues());
        let b = displaced_effective(&eff, mhz(eta_r), &eff_layout).and_then(|h| h.eigenvalues());
        let (a, b) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?);
        let shift = displacement_energy_shift(&eff, mhz(eta_r));
        for k in 0..10 {
            spectral = spectral.max((a[k] - b[k] - shift).abs() / a[k].abs().max(eff.omega_eff));
        }
    }

    let ok = trace <= 1e-8 && herm <= 1e-8 && min_eig >= -1e-6 && oracle_err <= 1e-7 && frame <= 1e-8 && spectral <= 1e-9;
    Ok((
        ok,
        format!(
            "trace drift {trace:.1e}, hermiticity drift {herm:.1e} (limit 1e-8, {} runs + 10 random), min eigenvalue {min_eig:.1e} (limit -1e-6), Liouvillian oracle {oracle_err:.1e} (limit 1e-7), frame residual {frame:.1e} (limit 1e-8), spectral equivalence {spectral:.1e} (limit 1e-9)",
            drift.runs
        ),
    ))
}

fn bias_tee() -> Check {
    let r = resolve(Experiment::BiasTee, "[bias_tee]\ntau_us = 0.7\nsegments_ns = [[100, 0], [500, 1], [400, 0]]\n")?;
    let b = run_bias_tee(&r.bias_tee).map_err(|e| e.to_string())?;
    let oracle = 1.0 - E.powf(-0.5 / 0.7);
    let e = rel(b.droop_uncompensated, oracle);
    Ok((
        b.droop_compensated <= 0.01 && e <= 0.01,
        format!(
            "compensated droop {:.2e} (limit 0.01), uncompensated {:.4} vs 1 - exp(-0.5/0.7) = {oracle:.4} (rel. {e:.1e})",
            b.droop_compensated, b.droop_uncompensated
        ),
    ))
}

fn main() -> ExitCode {
    let mut drift = Drift { min_eigenvalue: 0.0, ..Default::default() };
    let mut results: Vec<(u32, &str, Check)> = Vec::new();
    match vacuum_rabi(&mut drift) {
        Ok((a, b)) => {
            results.push((1, "vacuum Rabi frequency", a));
            results.push((2, "vacuum Rabi envelope", b));
        }
        Err(e) => {
            results.push((1, "vacuum Rabi frequency", Err(e.clone())));
            results.push((2, "vacuum Rabi envelope", Err(e)));
        }
    }
    results.push((3, "revival timing", revival_timing(&mut drift)));
    match scheme() {
        Ok((a, b, c)) => {
            results.push((4, "scheme verification", a));
            results.push((5, "eta1 independence", b));
            results.push((6, "peak photon number", c));
        }
        Err(e) => {
            for (n, name) in [(4, "scheme verification"), (5, "eta1 independence"), (6, "peak photon number")] {
                results.push((n, name, Err(e.clone())));
            }
        }
    }
    results.push((7, "full Rabi model and constraint violation", full_rabi(&mut drift)));
    results.push((8, "avoided crossing", avoided_crossing()));
    results.push((9, "transmon levels", transmon()));
    results.push((10, "property suite", properties(&drift)));
    results.push((11, "bias-tee compensation", bias_tee()));

    let mut failed = 0;
    for (n, name, check) in &results {
        let (ok, detail) = match check {
            Ok((ok, d)) => (*ok, d.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!("criterion {n:>2} {} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
