use std::f64::consts::PI;

use demon_core::kernel::{
    bms_liouvillian, build_cg_liouvillian, cg_rate_energy_weighted, cg_rates, propagator, sinc2_kernel, TiltedRates,
};
use demon_core::model::{fermi_occupation, fermi_vacancy, spectral_density};
use demon_core::{CountingFields, Outcome, QuadSettings, Reservoir, SystemConfig};

/// Composite trapezoid rule on `n` uniform intervals.
fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for k in 1..n {
        acc += f(lo + k as f64 * h);
    }
    acc * h
}

#[test]
fn left_empty_rate_matches_dense_trapezoid() {
    let cfg = SystemConfig::transport_reference().with_delta(1.0);
    let res = &cfg.left;
    let t = 2.0;
    let r = cg_rates(t, res, Outcome::Empty, &cfg.feedback, &cfg.dot, 0.0, &cfg.quadrature).unwrap();
    let g = |w: f64| sinc2_kernel(t, w - cfg.dot.epsilon) * spectral_density(w, res, Outcome::Empty, &cfg.feedback);
    let fill = trapezoid(|w| g(w) * fermi_occupation(w, res), 0.0, 20.0, 1_000_000);
    let drain = trapezoid(|w| g(w) * fermi_vacancy(w, res), 0.0, 20.0, 1_000_000);
    assert!((r.fill.re - fill).abs() < 1e-8, "{} vs {fill}", r.fill.re);
    assert!((r.drain.re - drain).abs() < 1e-8, "{} vs {drain}", r.drain.re);
}

#[test]
fn narrow_spectral_line_carries_its_energy() {
    let mut cfg = SystemConfig::transport_reference();
    cfg.left.delta_width = 1e-4;
    cfg.left.eps_center = 3.0;
    let res = &cfg.left;
    let t = 1.0;
    let rates = cg_rates(t, res, Outcome::Filled, &cfg.feedback, &cfg.dot, 0.0, &cfg.quadrature).unwrap();
    let w = cg_rate_energy_weighted(t, res, Outcome::Filled, &cfg.feedback, &cfg.dot, &cfg.quadrature).unwrap();
    // d/dzeta fill = -i w0 fill, d/dzeta drain = +i w0 drain, up to the line width
    assert!((w.fill.im + 3.0 * rates.fill.re).abs() < 1e-3 * rates.fill.re);
    assert!((w.drain.im - 3.0 * rates.drain.re).abs() < 1e-3 * rates.drain.re);
}

#[test]
fn long_times_converge_to_markovian_rates() {
    let cfg = SystemConfig::transport_reference().with_delta(1.0);
    for lead in Reservoir::ALL {
        for outcome in Outcome::ALL {
            let res = cfg.reservoir(lead);
            let cg = cg_rates(1e3, res, outcome, &cfg.feedback, &cfg.dot, 0.0, &cfg.quadrature).unwrap();
            let bms = TiltedRates::markovian(res, outcome, &cfg.feedback, &cfg.dot, &[]).at_zero();
            assert!(((cg.fill - bms.fill) / bms.fill).norm() < 1e-3);
            assert!(((cg.drain - bms.drain) / bms.drain).norm() < 1e-3);
        }
    }
}

#[test]
fn kernel_concentrates_on_smooth_integrand() {
    let cfg = SystemConfig::transport_reference();
    let res = &cfg.right;
    let bms = TiltedRates::markovian(res, Outcome::Empty, &cfg.feedback, &cfg.dot, &[]).at_zero();
    let settings = QuadSettings::default();
    let mut last = f64::INFINITY;
    for t in [1e2, 1e3, 1e4] {
        let cg = cg_rates(t, res, Outcome::Empty, &cfg.feedback, &cfg.dot, 0.0, &settings).unwrap();
        let err = (cg.fill - bms.fill).norm() + (cg.drain - bms.drain).norm();
        assert!(err < last, "error {err} at t = {t} did not decrease from {last}");
        last = err;
    }
}

#[test]
fn short_times_are_linear_in_t() {
    let cfg = SystemConfig::transport_reference();
    let res = &cfg.left;
    let flat = |weight: &dyn Fn(f64) -> f64| {
        trapezoid(|w| spectral_density(w, res, Outcome::Empty, &cfg.feedback) * weight(w), 0.0, 20.0, 200_000)
            / (2.0 * PI)
    };
    let g10 = flat(&|w| fermi_occupation(w, res));
    let g01 = flat(&|w| fermi_vacancy(w, res));
    for t in [1e-3, 1e-4] {
        let r = cg_rates(t, res, Outcome::Empty, &cfg.feedback, &cfg.dot, 0.0, &cfg.quadrature).unwrap();
        assert!((r.fill.re / t - g10).abs() < 1e-3 * g10);
        assert!((r.drain.re / t - g01).abs() < 1e-3 * g01);
    }
}

#[test]
fn propagator_is_stochastic_on_log_grid() {
    let cfg = SystemConfig::transport_reference().with_delta(-1.0);
    for k in 0..=16 {
        let t = 10f64.powf(-4.0 + 0.5 * k as f64);
        for outcome in Outcome::ALL {
            let l = build_cg_liouvillian(t, &cfg, outcome, &CountingFields::zero()).unwrap();
            let p = propagator(t, &l);
            for c in 0..2 {
                assert!((p[(0, c)] + p[(1, c)] - 1.0).norm() < 1e-12, "t = {t}");
                for r in 0..2 {
                    assert!(p[(r, c)].im.abs() < 1e-15);
                    assert!((-1e-15..=1.0 + 1e-12).contains(&p[(r, c)].re), "t = {t}");
                }
            }
        }
    }
}

#[test]
fn tilted_rates_are_bounded_by_untilted() {
    let cfg = SystemConfig::transport_reference();
    let zetas = [0.1, 0.7, 2.0, -1.3];
    for lead in Reservoir::ALL {
        let table =
            TiltedRates::coarse_grained(0.8, cfg.reservoir(lead), Outcome::Empty, &cfg.feedback, &cfg.dot, &zetas, &cfg.quadrature)
                .unwrap();
        let zero = table.at_zero();
        for z in zetas {
            let r = table.at(z).unwrap();
            assert!(r.fill.norm() <= zero.fill.re * (1.0 + 1e-12));
            assert!(r.drain.norm() <= zero.drain.re * (1.0 + 1e-12));
        }
    }
}

#[test]
fn markovian_generator_tilts_by_dot_energy() {
    let cfg = SystemConfig::transport_reference();
    let zeta = 0.37;
    let xi = CountingFields::zero().with_zeta(Reservoir::Left, zeta);
    let l0 = bms_liouvillian(&cfg, Outcome::Empty, &CountingFields::zero()).matrix;
    let lz = bms_liouvillian(&cfg, Outcome::Empty, &xi).matrix;
    let right = TiltedRates::markovian(&cfg.right, Outcome::Empty, &cfg.feedback, &cfg.dot, &[]).at_zero();
    let left_fill = l0[(1, 0)] - right.fill;
    let expected = left_fill * num_complex::Complex64::from_polar(1.0, -zeta * cfg.dot.epsilon) + right.fill;
    assert!((lz[(1, 0)] - expected).norm() < 1e-15);
    assert_eq!(lz[(0, 0)], l0[(0, 0)]);
}
