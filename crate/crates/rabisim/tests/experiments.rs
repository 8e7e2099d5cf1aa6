use std::f64::consts::TAU;

use proptest::prelude::*;

use rabisim::experiments::bias_tee::{run_bias_tee, BiasTeeConfig, Segment};
use rabisim::experiments::retrieval::run_retrieval;
use rabisim::experiments::revival::{contrast, detect_revival};
use rabisim::experiments::scheme::displacement_equivalence;
use rabisim::experiments::vacuum::run_vacuum_rabi;
use rabisim::report::{csv_string, parse_csv};
use rabisim_core::hamiltonian::ModelOptions;
use rabisim_core::lindblad::{TimeGrid, Tolerances};
use rabisim_core::mhz;
use rabisim_core::params::{DeviceParams, EffectiveParams};
use rabisim_core::series::TimeSeries;
use rabisim_core::state::QubitPreparation;

fn small_device() -> DeviceParams {
    DeviceParams { fock_dim: 16, ..Default::default() }
}

#[test]
fn revival_time_tracks_the_effective_period() {
    let p = small_device();
    for w in [4.0, 6.0] {
        let eff = EffectiveParams::new(mhz(5.5), mhz(w), 0.0);
        let grid = TimeGrid::with_spacing(2.3 / w * 1e-6, 1e-9).unwrap();
        let (g, _, _) = run_retrieval(&p, &eff, 0.0, false, &grid, &Tolerances::default()).unwrap();
        let r = detect_revival(&g.times, &contrast(g.trace("P_e").unwrap())).expect("revival");
        let period = TAU / mhz(w);
        assert!((r.revival_time - period).abs() < 0.05 * period, "{w} MHz: {} vs {period}", r.revival_time);
        assert!(r.collapse_time < r.revival_time);
    }
}

#[test]
fn retrieval_recovers_injected_weight() {
    let p = small_device();
    let eff = EffectiveParams::new(mhz(5.5), mhz(5.0), 0.0);
    let grid = TimeGrid::with_spacing(400e-9, 1e-9).unwrap();
    let (_, _, r) = run_retrieval(&p, &eff, 0.2, false, &grid, &Tolerances::default()).unwrap();
    assert!((r.weight - 0.2).abs() < 0.05 * 0.2, "weight {}", r.weight);
    assert!(r.correlation > 0.95);
    assert!(r.antisymmetry.unwrap() < 1e-6);
}

#[test]
fn parasitic_drive_is_a_displacement() {
    let p = small_device();
    let eff = EffectiveParams::new(mhz(5.0), mhz(5.0), 0.0);
    let grid = TimeGrid::with_spacing(300e-9, 1e-9).unwrap();
    let tol = Tolerances { rtol: 1e-10, atol: 1e-12, ..Default::default() };
    let dev = displacement_equivalence(&p, &eff, mhz(2.5), QubitPreparation::Excited, &grid, &tol).unwrap();
    assert!(dev <= 1e-6, "deviation {dev}");
}

#[test]
fn dephasing_does_not_enter_the_swap_decay() {
    let grid = TimeGrid::with_spacing(1e-6, 1e-9).unwrap();
    let opts = ModelOptions::default();
    let tol = Tolerances::default();
    let fit = |t2: f64| {
        let p = DeviceParams { fock_dim: 4, t2, ..Default::default() };
        run_vacuum_rabi(&p, &opts, &grid, &tol).unwrap().fit
    };
    let (dephased, clean) = (fit(0.5e-6), fit(10e-6));
    assert!((dephased.frequency - clean.frequency).abs() < 0.01 * clean.frequency);
    // Pure dephasing adds to the envelope decay, so the fitted rate exceeds (κ + 1/T₁)/2.
    assert!(dephased.decay > clean.decay);
}

#[test]
fn compensated_pulse_has_no_droop_for_any_time_constant() {
    for tau in [0.2e-6, 0.7e-6, 3e-6] {
        let b = run_bias_tee(&BiasTeeConfig { tau, ..Default::default() }).unwrap();
        assert!(b.droop_compensated < 1e-9, "tau {tau}: {}", b.droop_compensated);
        let oracle = 1.0 - (-0.5e-6 / tau).exp();
        assert!((b.droop_uncompensated - oracle).abs() < 1e-3 * oracle.max(1e-3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(values in prop::collection::vec(-1e3f64..1e3, 1..40), scale in -12i32..6) {
        let times: Vec<f64> = (0..values.len()).map(|k| k as f64 * 1e-9).collect();
        let mut s = TimeSeries::new(times);
        let v: Vec<f64> = values.iter().map(|x| x * 10f64.powi(scale)).collect();
        s.push_trace("x", v.clone()).unwrap();
        let back = parse_csv(&csv_string(&s)).unwrap();
        for (a, b) in back.trace("x").unwrap().iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300));
        }
        for (a, b) in back.times.iter().zip(&s.times) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-18));
        }
    }

    #[test]
    fn compensation_holds_for_random_sequences(levels in prop::collection::vec(-1.0f64..1.0, 1..5), tau_us in 0.1f64..5.0) {
        let segments = levels.iter().map(|&level| Segment { duration: 100e-9, level }).collect();
        let cfg = BiasTeeConfig { segments, tau: tau_us * 1e-6, ..Default::default() };
        let b = run_bias_tee(&cfg).unwrap();
        prop_assert!(b.droop_compensated < 1e-9);
    }
}
