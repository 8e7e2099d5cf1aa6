use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rabisim_core::expm::expm;
use rabisim_core::hamiltonian::*;
use rabisim_core::layout::{MODE, QUBIT};
use rabisim_core::lindblad::*;
use rabisim_core::ops::*;
use rabisim_core::params::*;
use rabisim_core::state::{expectation_real, min_eigenvalue, QubitPreparation};
use rabisim_core::*;

fn small_layout() -> HilbertLayout {
    HilbertLayout::qubit_mode(2, 3, None).unwrap()
}

fn complex_matrix(n: usize, v: &[f64]) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |i, j| C64::new(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]))
}

fn hermitian(n: usize, v: &[f64]) -> DMatrix<C64> {
    let a = complex_matrix(n, v);
    (&a + a.adjoint()) * C64::from(0.5)
}

fn random_density(n: usize, v: &[f64]) -> DMatrix<C64> {
    let a = complex_matrix(n, v);
    let r = &a * a.adjoint();
    let tr = r.trace();
    r / tr
}

/// Column-stacked Liouvillian: vec(AXB) = (Bᵀ ⊗ A) vec(X).
fn liouvillian(h: &DMatrix<C64>, jumps: &[DMatrix<C64>]) -> DMatrix<C64> {
    let n = h.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let mut sup = (id.kronecker(h) - h.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
    for l in jumps {
        let ldl = l.adjoint() * l;
        sup += l.conjugate().kronecker(l);
        sup -= (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * C64::from(0.5);
    }
    sup
}

fn vec_cols(m: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_iterator(m.len(), m.iter().copied())
}

fn tight() -> Tolerances {
    Tolerances { rtol: 1e-11, atol: 1e-13, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn liouvillian_oracle_agrees(
        hv in prop::collection::vec(-1.0f64..1.0, 72),
        lv in prop::collection::vec(-1.0f64..1.0, 72),
        rv in prop::collection::vec(-1.0f64..1.0, 72),
        rate in 0.05f64..1.0,
    ) {
        let layout = small_layout();
        let h = hermitian(6, &hv);
        let l = complex_matrix(6, &lv);
        let rho0 = random_density(6, &rv);
        let ham = TimeDependentHamiltonian::new(Operator::new(layout.clone(), h.clone()).unwrap());
        let ch = [CollapseChannel::new(Operator::new(layout.clone(), l.clone()).unwrap(), rate, "L").unwrap()];
        let init = QuantumState::mixed(layout, rho0.clone()).unwrap();
        let times = [0.0, 0.7, 2.0];
        let (states, _) = evolve_states(&ham, &init, &ch, &times, &tight()).unwrap();
        let sup = liouvillian(&h, &[l * C64::from(rate.sqrt())]);
        for (t, s) in times.iter().zip(&states) {
            let want = expm(&(&sup * C64::from(*t))) * vec_cols(&rho0);
            let got = vec_cols(&s.density_matrix());
            let err = (got - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-7, "t = {}: {:e}", t, err);
        }
    }

    #[test]
    fn rhs_is_trace_free(
        hv in prop::collection::vec(-1.0f64..1.0, 72),
        lv in prop::collection::vec(-1.0f64..1.0, 72),
        rv in prop::collection::vec(-1.0f64..1.0, 72),
    ) {
        let layout = small_layout();
        let h = Operator::new(layout.clone(), hermitian(6, &hv)).unwrap();
        let ch = [CollapseChannel::new(Operator::new(layout, complex_matrix(6, &lv)).unwrap(), 0.8, "L").unwrap()];
        let rho = hermitian(6, &rv);
        let d = lindblad_rhs(&h, &rho, &ch).unwrap();
        let scale = rho.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(d.trace().norm() <= 1e-12 * scale.max(1.0) * 10.0);
    }

    #[test]
    fn evolution_preserves_invariants(
        hv in prop::collection::vec(-1.0f64..1.0, 72),
        lv in prop::collection::vec(-1.0f64..1.0, 72),
        rv in prop::collection::vec(-1.0f64..1.0, 72),
    ) {
        let layout = small_layout();
        let ham = TimeDependentHamiltonian::new(Operator::new(layout.clone(), hermitian(6, &hv)).unwrap());
        let ch = [CollapseChannel::new(Operator::new(layout.clone(), complex_matrix(6, &lv)).unwrap(), 0.5, "L").unwrap()];
        let init = QuantumState::mixed(layout, random_density(6, &rv)).unwrap();
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let (states, diag) = evolve_states(&ham, &init, &ch, &times, &Tolerances::default()).unwrap();
        prop_assert!(diag.max_trace_drift <= 1e-8);
        prop_assert!(diag.max_hermiticity_drift <= 1e-8);
        for s in &states {
            prop_assert!(min_eigenvalue(&s.density_matrix()).unwrap() >= -1e-6);
        }
    }

    #[test]
    fn hadamard_lemma(t in 0.0f64..10.0) {
        let d = 12;
        let (_, bd) = fock_ladder(d).unwrap();
        let n = number(d).unwrap();
        let w1 = 1.0;
        let u = n.scale(C64::new(0.0, w1 * t)).expm();
        let lhs = &(&u * &bd) * &u.dagger();
        let rhs = bd.scale(C64::from_polar(1.0, w1 * t));
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                prop_assert!((lhs.get(i, j) - rhs.get(i, j)).norm() <= 1e-8);
            }
        }
        prop_assert!(u.is_unitary());
    }

    #[test]
    fn tensor_associative_and_embed_commutes(
        av in prop::collection::vec(-1.0f64..1.0, 8),
        bv in prop::collection::vec(-1.0f64..1.0, 18),
        cv in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        let a = Operator::new(HilbertLayout::single("a", 2).unwrap(), complex_matrix(2, &av)).unwrap();
        let b = Operator::new(HilbertLayout::single("b", 3).unwrap(), complex_matrix(3, &bv)).unwrap();
        let c = Operator::new(HilbertLayout::single("c", 2).unwrap(), complex_matrix(2, &cv)).unwrap();
        let left = tensor(&[&tensor(&[&a, &b]).unwrap(), &c]).unwrap();
        let right = tensor(&[&a, &tensor(&[&b, &c]).unwrap()]).unwrap();
        prop_assert_eq!(left.layout(), right.layout());
        prop_assert!((left.matrix() - right.matrix()).iter().all(|z| z.norm() < 1e-14));
        let l = left.layout().clone();
        let ea = embed(&a, "a", &l).unwrap();
        let ec = embed(&c, "c", &l).unwrap();
        prop_assert!(ea.commutator(&ec).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn builders_hermitian_at_random_times(ts in prop::collection::vec(0.0f64..2e-6, 20)) {
        let p = DeviceParams { fock_dim: 5, qubit_levels: 3, ..Default::default() };
        let w1 = p.omega - mhz(6.0);
        let drives = [DriveTone::new(mhz(50.0), w1, 0.2).unwrap(), DriveTone::new(mhz(3.0), w1 - mhz(50.0), 0.2).unwrap()];
        let opts = ModelOptions { parasitic: true, readout: true, rwa: false };
        let lab = driven_lab_hamiltonian(&DeviceParams { readout_dim: 3, ..p.clone() }, &drives, &opts).unwrap();
        let rot = rotating_frame_analytic(&DeviceParams { readout_dim: 3, ..p }, &drives, &opts).unwrap();
        for t in ts {
            for h in [&lab, &rot] {
                let ht = h.at(t);
                prop_assert!(ht.hermiticity_error() <= 1e-12 * ht.max_abs());
            }
        }
    }
}

#[test]
fn frame_identity_with_counter_rotating_terms() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for levels in [2, 3] {
        let p = DeviceParams { fock_dim: 6, qubit_levels: levels, readout_dim: 3, ..Default::default() };
        let w1 = p.omega - mhz(5.0);
        let drives = [DriveTone::new(mhz(50.0), w1, 1.1).unwrap(), DriveTone::new(mhz(3.0), w1 - mhz(50.0), 1.1).unwrap()];
        for readout in [false, true] {
            let opts = ModelOptions { parasitic: true, readout, rwa: false };
            let lab = driven_lab_hamiltonian(&p, &drives, &opts).unwrap();
            let rot = rotating_frame_analytic(&p, &drives, &opts).unwrap();
            let ts: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..2e-6)).collect();
            let r = frame_residual(&lab, &rot, w1, &ts).unwrap();
            assert!(r.relative() <= 1e-8, "levels {levels}, readout {readout}: {r:?}");
        }
    }
}

#[test]
fn frame_residual_without_couplings_is_tiny() {
    let p = DeviceParams { fock_dim: 6, g: 0.0, ..Default::default() };
    let w1 = p.omega - mhz(5.0);
    let d = [DriveTone::new(0.0, w1, 0.0).unwrap()];
    let opts = ModelOptions { rwa: true, ..Default::default() };
    let lab = driven_lab_hamiltonian(&p, &d, &opts).unwrap();
    let rot = rotating_frame_analytic(&p, &d, &opts).unwrap();
    let ts: Vec<f64> = (0..50).map(|k| k as f64 * 1.7e-8).collect();
    let r = frame_residual(&lab, &rot, w1, &ts).unwrap();
    assert!(r.relative() <= 1e-10, "{r:?}");
}

#[test]
fn parasitic_and_displaced_spectra_agree() {
    let fock = 26;
    let layout = HilbertLayout::qubit_mode(2, fock, None).unwrap();
    for (g, w, eta2, eta_r) in [(5.5, 5.0, 0.0, 5.0), (4.3, 5.0, 3.0, 5.0), (5.5, 8.0, 3.0, 2.0), (5.0, 5.0, 0.0, 5.0)] {
        let eff = EffectiveParams::new(mhz(g), mhz(w), mhz(eta2));
        let a = effective_with_parasitic(&eff, mhz(eta_r), &layout).unwrap().eigenvalues().unwrap();
        let b = displaced_effective(&eff, mhz(eta_r), &layout).unwrap().eigenvalues().unwrap();
        let shift = displacement_energy_shift(&eff, mhz(eta_r));
        for k in 0..fock / 2 {
            let scale = a[k].abs().max(eff.omega_eff);
            let rel = (a[k] - (b[k] + shift)).abs() / scale;
            assert!(rel <= 1e-9, "g={g} w={w}: level {k} rel {rel:e}");
        }
    }
}

#[test]
fn displacement_preserves_oscillator_spacing() {
    let d = 30;
    let w = mhz(5.0);
    let eta = mhz(5.0);
    let alpha = C64::from(-eta / (2.0 * w));
    let dis = displacement(alpha, d).unwrap().operator;
    let (b, bd) = fock_ladder(d).unwrap();
    let h = number(d).unwrap() * w + (&b + &bd) * (eta / 2.0);
    let t = &(&dis.dagger() * &h) * &dis;
    let vals = t.eigenvalues().unwrap();
    for k in 1..10 {
        assert!(((vals[k] - vals[k - 1]) - w).abs() < 1e-9 * w);
    }
    assert!((vals[0] + eta * eta / (4.0 * w)).abs() < 1e-9 * w);
}

#[test]
fn unitary_limit_purity_and_energy() {
    let layout = HilbertLayout::qubit_mode(2, 8, None).unwrap();
    let eff = EffectiveParams::new(mhz(5.5), mhz(5.0), mhz(3.0));
    let h = rabi_hamiltonian(&eff, &layout).unwrap();
    let (coh, _) = coherent_state(C64::new(0.3, 0.2), 8).unwrap();
    let q = QuantumState::pure(HilbertLayout::single(QUBIT, 2).unwrap(), QubitPreparation::Plus.amplitudes(2)).unwrap();
    let psi = QuantumState::product(&[q, coh]).unwrap();
    let rho = QuantumState::mixed(layout.clone(), psi.density_matrix()).unwrap();
    let ham = TimeDependentHamiltonian::new(h.clone());
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 20e-9).collect();
    let tol = Tolerances { rtol: 1e-10, atol: 1e-12, ..Default::default() };
    let (states, _) = evolve_states(&ham, &rho, &[], &times, &tol).unwrap();
    let e0 = expectation_real(&h, &rho).unwrap();
    for s in &states {
        assert!((s.purity() - 1.0).abs() <= 1e-8);
        let e = expectation_real(&h, s).unwrap();
        assert!((e - e0).abs() <= 1e-8 * e0.abs().max(eff.omega_eff));
    }
}

#[test]
fn vacuum_rabi_error_shrinks_with_tolerance() {
    let layout = HilbertLayout::qubit_mode(2, 4, None).unwrap();
    let g = mhz(4.3);
    let h = TimeDependentHamiltonian::new(jaynes_cummings(0.0, 0.0, g, &layout).unwrap());
    let init = QuantumState::basis(layout.clone(), &[1, 0]).unwrap();
    let ops = ModelOperators::with_ratios(&rabisim_core::transmon::harmonic_ratios(2), 4, None).unwrap();
    let grid = TimeGrid::new(0.0, 1e-6, 11).unwrap();
    let obs = [Observable::new("P_e", ops.excited)];
    let err = |rtol: f64| {
        let tol = Tolerances { rtol, atol: rtol * 1e-2, step_ceiling: false, drift_limit: 1e-2, ..Default::default() };
        let ts = evolve(&h, &init, &[], &grid, &obs, &tol).unwrap();
        ts.times.iter().zip(ts.trace("P_e").unwrap()).map(|(t, p)| (p - (g * t).cos().powi(2)).abs()).fold(0.0, f64::max)
    };
    let coarse = err(1e-5);
    let fine = err(1e-8);
    assert!(fine <= 1e-6, "{fine:e}");
    assert!(fine < coarse / 10.0, "coarse {coarse:e}, fine {fine:e}");
}

#[test]
fn lab_frame_spot_check_matches_rotating_frame() {
    // a short true-lab-frame run against the exact rotating-frame Hamiltonian
    let p = DeviceParams { fock_dim: 3, ..Default::default() };
    let w1 = p.omega - mhz(5.0);
    let d = [DriveTone::new(mhz(50.0), w1, 0.0).unwrap()];
    let opts = ModelOptions { rwa: false, ..Default::default() };
    let lab = driven_lab_hamiltonian(&p, &d, &opts).unwrap();
    let rot = rotating_frame_analytic(&p, &d, &opts).unwrap();
    let ops = ModelOperators::new(&p, false).unwrap();
    let init = QuantumState::basis(ops.layout.clone(), &[0, 0]).unwrap();
    let grid = TimeGrid::new(0.0, 10e-9, 11).unwrap();
    let obs = [Observable::new("P_e", ops.excited.clone()), Observable::new("n", ops.n_mode.clone())];
    let a = evolve(&lab, &init, &[], &grid, &obs, &Tolerances::default()).unwrap();
    let b = evolve(&rot, &init, &[], &grid, &obs, &Tolerances::default()).unwrap();
    for name in ["P_e", "n"] {
        for (x, y) in a.trace(name).unwrap().iter().zip(b.trace(name).unwrap()) {
            assert!((x - y).abs() < 1e-5, "{name}: {x} vs {y}");
        }
    }
    let _ = MODE;
}
