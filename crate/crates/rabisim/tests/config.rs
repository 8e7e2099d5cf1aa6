use std::f64::consts::TAU;

use proptest::prelude::*;

use rabisim::config::{parse_config, Experiment};

#[test]
fn unit_suffixes_convert() {
    let cfg = parse_config("[device]\ng_khz = 4300\nkappa_per_us = 3.9\nt1_ns = 5000\n").unwrap();
    let r = cfg.resolve(Experiment::VacuumRabi).unwrap();
    assert!((r.params.g - TAU * 4.3e6).abs() < 1e-6);
    assert!((r.params.kappa - 3.9e6).abs() < 1e-6);
    assert!((r.params.t1 - 5e-6).abs() < 1e-18);
}

#[test]
fn missing_unit_and_unknown_keys_are_errors() {
    let e = parse_config("[device]\ng = 4.3\n").unwrap_err().to_string();
    assert!(e.contains("unit"), "{e}");
    let e = parse_config("[device]\nfoo_mhz = 1\n").unwrap_err().to_string();
    assert!(e.contains("foo"), "{e}");
    let e = parse_config("[drive]\n\n\nkappa_per_s = 1\n").unwrap_err().to_string();
    assert!(e.contains("kappa"), "{e}");
}

#[test]
fn negative_rate_names_key_and_line() {
    let e = parse_config("[device]\ng_mhz = 4.3\n\nkappa_per_s = -1\n").unwrap_err().to_string();
    assert!(e.contains("kappa") && e.contains("line 4"), "{e}");
}

#[test]
fn echo_round_trips_for_every_experiment() {
    let cfg = parse_config("[device]\ng_mhz = 5.1\nt2_us = 0.7\n[drive]\neta1_mhz = 45\n").unwrap();
    for exp in Experiment::ALL {
        let r = cfg.resolve(exp).unwrap();
        let again = parse_config(&r.echo_toml()).unwrap().resolve(exp).unwrap();
        assert_eq!(r.echo_toml(), again.echo_toml(), "{}", exp.name());
        assert_eq!(Experiment::from_name(exp.name()), Some(exp));
    }
    assert_eq!(Experiment::from_name("teleport"), None);
}

#[test]
fn overrides_accept_bare_and_sectioned_keys() {
    let mut cfg = parse_config("").unwrap();
    cfg.set("device.g_mhz=5.5").unwrap();
    cfg.set("grid.dt_ns=2").unwrap();
    let r = cfg.resolve(Experiment::VacuumRabi).unwrap();
    assert!((r.params.g - TAU * 5.5e6).abs() < 1e-6);
    assert!((r.dt - 2e-9).abs() < 1e-20);
    assert!(cfg.set("device.g_mhz=-3").is_err());
}

proptest! {
    #[test]
    fn frequency_units_agree(f in 0.001f64..1000.0) {
        let a = parse_config(&format!("[device]\ng_mhz = {f:e}\n")).unwrap().resolve(Experiment::VacuumRabi).unwrap();
        let b = parse_config(&format!("[device]\ng_khz = {:e}\n", f * 1e3)).unwrap().resolve(Experiment::VacuumRabi).unwrap();
        prop_assert!((a.params.g - b.params.g).abs() <= 1e-12 * a.params.g);
        prop_assert!((a.params.g - TAU * f * 1e6).abs() <= 1e-12 * a.params.g);
    }
}
