use std::f64::consts::LN_2;

use demon_core::feedback::Solver;
use demon_core::thermo::{entropy_balance, gain, heat_flows, thermo_report, SECOND_LAW_TOL};
use demon_core::{Reservoir, SystemConfig};
use proptest::prelude::*;

fn demon() -> SystemConfig {
    SystemConfig::transport_reference().with_delta(1.0)
}

#[test]
fn negative_feedback_energy_leaves_gain_undefined() {
    let cfg = demon().with_bias(-5.0);
    let r = thermo_report(Solver::Dcg, 0.5, &cfg).unwrap();
    assert!(r.feedback_energy < 0.0);
    assert!(r.power > 0.0);
    assert_eq!(r.gain, None);
    assert_eq!(gain(0.5, &cfg).unwrap(), None);
}

#[test]
fn power_generation_has_positive_gain() {
    let cfg = demon().with_bias(-10.0);
    let r = thermo_report(Solver::Dcg, 1.0, &cfg).unwrap();
    assert!(r.power > 0.0 && r.feedback_energy > 0.0);
    let g = r.gain.unwrap();
    assert!((g - r.power * r.tau / r.feedback_energy).abs() < 1e-12 * g);
}

#[test]
fn heat_helpers_agree_with_report() {
    let cfg = demon();
    let r = thermo_report(Solver::Dcg, 0.3, &cfg).unwrap();
    assert_eq!(heat_flows(0.3, &cfg).unwrap(), (r.heat.left, r.heat.right, r.heat_total));
    let b = entropy_balance(0.3, &cfg).unwrap();
    assert_eq!(b.information, -b.entropy_sys);
    assert_eq!(b.efficiency, r.efficiency);
}

#[test]
fn no_feedback_means_no_information_gain_beyond_entropy() {
    let cfg = SystemConfig::transport_reference();
    let r = thermo_report(Solver::Dcg, 2.0, &cfg).unwrap();
    assert!(r.entropy_res + r.entropy_sys >= -SECOND_LAW_TOL);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_invariants(v in -20.0f64..20.0, log_tau in (0.05f64).log10()..(3.0f64).log10(), delta in -1.0f64..1.0) {
        let cfg = SystemConfig::transport_reference().with_delta(delta).with_bias(v);
        let r = thermo_report(Solver::Dcg, 10f64.powf(log_tau), &cfg).unwrap();
        prop_assert!(r.entropy_sys >= 0.0 && r.entropy_sys <= LN_2 + 1e-15);
        if let Some(eta) = r.efficiency {
            prop_assert!(eta <= 1.0 + 1e-9);
        }
        let first_law: f64 = Reservoir::ALL.iter().map(|&l| r.heat[l] + cfg.reservoir(l).mu * r.moments.dn[l]).sum();
        prop_assert!((first_law - r.feedback_energy).abs() < 1e-12);
        if let Some(g) = r.gain {
            prop_assert!(g > 0.0 && r.power > 0.0 && r.feedback_energy > 0.0);
        }
    }
}
