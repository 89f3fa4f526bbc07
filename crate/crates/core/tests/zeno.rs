use demon_core::feedback::{analyze_period, Solver};
use demon_core::model::{fermi_occupation, fermi_vacancy, spectral_density};
use demon_core::zeno::{delta_tilde, zeno_coefficients, zeno_feedback_energy, zeno_feedback_energy_at, zeno_moments, zeno_occupation};
use demon_core::{DemonError, Outcome, Reservoir, SystemConfig};

fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    (1..n).map(|k| f(lo + k as f64 * h)).sum::<f64>() * h + 0.5 * h * (f(lo) + f(hi))
}

#[test]
fn fixed_point_matches_short_period_extrapolation() {
    for delta in [-1.0, 0.0, 1.0] {
        let cfg = SystemConfig::transport_reference().with_delta(delta);
        let n = |tau: f64| analyze_period(Solver::Dcg, tau, &cfg).unwrap().stationary.sigma.p_filled;
        // n(tau) = n0 + c tau + ..., Richardson on tau and tau/2
        let (a, b) = (n(2e-4), n(1e-4));
        let extrapolated = 2.0 * b - a;
        let z = zeno_occupation(&cfg).unwrap();
        assert!((z.fixed_point - extrapolated).abs() < 1e-6, "delta {delta}: {} vs {extrapolated}", z.fixed_point);
    }
}

#[test]
fn demon_configuration_is_roughly_half_filled() {
    let z = zeno_occupation(&SystemConfig::transport_reference().with_delta(1.0)).unwrap();
    assert!((z.fixed_point - 0.5).abs() < 0.1);
}

#[test]
fn printed_occupation_formula_differs_under_feedback() {
    let cfg = SystemConfig::transport_reference().with_delta(1.0);
    let z = zeno_occupation(&cfg).unwrap();
    assert!((z.fixed_point - z.filled_only).abs() > 1e-4);
    let flat = SystemConfig::transport_reference();
    let z = zeno_occupation(&flat).unwrap();
    assert!((z.fixed_point - z.filled_only).abs() < 1e-14);
}

#[test]
fn expansion_agrees_with_full_pipeline_at_small_tau() {
    for delta in [-1.0, 0.0, 1.0] {
        let cfg = SystemConfig::transport_reference().with_delta(delta);
        let tau = 1e-2;
        let full = analyze_period(Solver::Dcg, tau, &cfg).unwrap().moments;
        let z = zeno_moments(tau, &cfg).unwrap();
        for lead in Reservoir::ALL {
            assert!((z.dn[lead] / full.dn[lead] - 1.0).abs() < 2e-2, "delta {delta} dn {lead:?}");
            assert!((z.de[lead] / full.de[lead] - 1.0).abs() < 2e-2, "delta {delta} dE {lead:?}");
        }
        let fb = zeno_feedback_energy(tau, &cfg).unwrap();
        assert!((fb / full.de.total() - 1.0).abs() < 2e-2, "delta {delta}");
    }
}

#[test]
fn moments_scale_as_tau_squared() {
    let cfg = SystemConfig::transport_reference().with_delta(1.0);
    let a = zeno_moments(1e-3, &cfg).unwrap();
    let b = zeno_moments(2e-3, &cfg).unwrap();
    for lead in Reservoir::ALL {
        assert!((b.dn[lead] / a.dn[lead] - 4.0).abs() < 1e-12);
        assert!((b.de[lead] / a.de[lead] - 4.0).abs() < 1e-12);
    }
}

#[test]
fn delta_tilde_matches_dense_grid() {
    let mut cfg = SystemConfig::transport_reference().with_delta(0.7);
    cfg.right.eps_center = 12.0;
    let right = &cfg.right;
    let left = &cfg.left;
    let proto = &cfg.feedback;
    let r = trapezoid(|w| spectral_density(w, right, Outcome::Filled, proto) * w * fermi_vacancy(w, right), 0.0, 20.0, 1_000_000);
    let l = trapezoid(|w| spectral_density(w, left, Outcome::Empty, proto) * w * fermi_occupation(w, left), 0.0, 20.0, 1_000_000);
    assert!((delta_tilde(&cfg).unwrap() - (r - l)).abs() < 1e-8);
}

#[test]
fn extremal_feedback_energy_follows_delta_tilde() {
    // hot leads with the left coupling weighted to high and the right one
    // to low energies
    let mut cfg = SystemConfig::transport_reference().with_delta(1.0);
    cfg.feedback.extremal = true;
    for lead in Reservoir::ALL {
        let r = cfg.reservoir_mut(lead);
        r.beta = 1e-3;
        r.mu = 10.0;
    }
    cfg.left.eps_center = 18.0;
    cfg.right.eps_center = 2.0;
    let dt = delta_tilde(&cfg).unwrap();
    assert!(dt < 0.0);
    let e = zeno_feedback_energy_at(0.01, &cfg, 0.5).unwrap();
    assert_eq!(e.signum(), dt.signum());
    // swapping the line positions flips both signs
    cfg.left.eps_center = 2.0;
    cfg.right.eps_center = 18.0;
    let dt = delta_tilde(&cfg).unwrap();
    assert!(dt > 0.0);
    assert!(zeno_feedback_energy_at(0.01, &cfg, 0.5).unwrap() > 0.0);
}

#[test]
fn markovian_current_does_not_vanish_like_the_expansion() {
    let cfg = SystemConfig::transport_reference().with_delta(1.0);
    let bms = |tau: f64| analyze_period(Solver::Bms, tau, &cfg).unwrap().current().unwrap();
    let zeno = |tau: f64| zeno_moments(tau, &cfg).unwrap().dn.right / tau;
    assert!((bms(1e-3) / bms(1e-4) - 1.0).abs() < 1e-2);
    assert!((zeno(1e-3) / zeno(1e-4) - 10.0).abs() < 1e-9);
}

#[test]
fn unbounded_support_needs_cutoffs() {
    let cfg = SystemConfig::unbounded_reference();
    assert!(matches!(zeno_coefficients(&cfg), Err(DemonError::CutoffRequired(_))));
}
