//! Dynamical coarse-graining rates and the counting-field generator of the
//! dot occupations.
//!
//! Rates are evaluated in the form where the reservoir energy `omega` is the
//! integration variable:
//!
//! ```text
//! fill(zeta)  = ∫ K_t(omega - eps) Γ(omega) f(omega)       e^{-i zeta omega} domega
//! drain(zeta) = ∫ K_t(omega - eps) Γ(omega) (1 - f(omega)) e^{+i zeta omega} domega
//! K_t(x)      = (t / 2π) sinc²(t x / 2)
//! ```
//!
//! `fill` moves an electron from the lead onto the dot, `drain` moves it
//! back. With the generator below, `-i d/dchi_alpha` of the generating
//! function counts particles entering lead `alpha` and `-i d/dzeta_alpha`
//! the energy entering it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{DemonError, Result};
use crate::mat2::{expm, CMat2, C64};
use crate::model::{
    conditioned_gamma0, fermi_occupation, fermi_vacancy, lorentz_shape, spectral_density, DotSpec,
    FeedbackProtocol, Outcome, PerReservoir, Reservoir, ReservoirSpec, SystemConfig,
};
use crate::quadrature::{integrate, QuadSettings};

/// Particle (`chi`) and energy (`zeta`) counting fields of both leads.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CountingFields {
    pub chi: PerReservoir<f64>,
    pub zeta: PerReservoir<f64>,
}

impl CountingFields {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    pub fn with_chi(mut self, lead: Reservoir, value: f64) -> Self {
        self.chi[lead] = value;
        self
    }

    pub fn with_zeta(mut self, lead: Reservoir, value: f64) -> Self {
        self.zeta[lead] = value;
        self
    }
}

/// Filling (`0 → 1`) and draining (`1 → 0`) rates of one lead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRates {
    pub fill: C64,
    pub drain: C64,
}

impl TransitionRates {
    pub const ZERO: Self = Self {
        fill: C64::new(0.0, 0.0),
        drain: C64::new(0.0, 0.0),
    };

    pub fn real(fill: f64, drain: f64) -> Self {
        Self {
            fill: C64::new(fill, 0.0),
            drain: C64::new(drain, 0.0),
        }
    }
}

/// `(t / 2π) sinc²(t x / 2)`; integrates to one over `x` for every `t > 0`.
pub fn sinc2_kernel(t: f64, x: f64) -> f64 {
    let u = 0.5 * t * x;
    let sinc = if u.abs() < 1e-4 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    };
    t / (2.0 * PI) * sinc * sinc
}

/// Rates of one lead on a set of energy counting fields, together with their
/// analytic `zeta` derivatives at zero. Negative fields follow from complex
/// conjugation because the integrand weights are real.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedRates {
    zetas: Vec<f64>,
    at_zero: TransitionRates,
    tilted: Vec<TransitionRates>,
    slope: TransitionRates,
}

impl TiltedRates {
    pub fn at_zero(&self) -> TransitionRates {
        self.at_zero
    }

    /// `d/dzeta` of both rates at `zeta = 0`.
    pub fn slope(&self) -> TransitionRates {
        self.slope
    }

    /// Rates at `zeta`, if it (or `-zeta`) was part of the table.
    pub fn at(&self, zeta: f64) -> Option<TransitionRates> {
        if zeta == 0.0 {
            return Some(self.at_zero);
        }
        self.zetas.iter().zip(&self.tilted).find_map(|(&z, r)| {
            if z == zeta {
                Some(*r)
            } else if z == -zeta {
                Some(TransitionRates {
                    fill: r.fill.conj(),
                    drain: r.drain.conj(),
                })
            } else {
                None
            }
        })
    }

    /// Table of a decoupled lead.
    pub fn zero(zetas: &[f64]) -> Self {
        Self {
            zetas: zetas.to_vec(),
            at_zero: TransitionRates::ZERO,
            tilted: vec![TransitionRates::ZERO; zetas.len()],
            slope: TransitionRates::ZERO,
        }
    }

    /// Closed-form long-time rates: every transferred electron carries the
    /// dot energy.
    pub fn markovian(res: &ReservoirSpec, outcome: Outcome, proto: &FeedbackProtocol, dot: &DotSpec, zetas: &[f64]) -> Self {
        let eps = dot.epsilon;
        let gamma = spectral_density(eps, res, outcome, proto);
        let fill = gamma * fermi_occupation(eps, res);
        let drain = gamma * fermi_vacancy(eps, res);
        let tilt = |z: f64| TransitionRates {
            fill: fill * Complex64::from_polar(1.0, -z * eps),
            drain: drain * Complex64::from_polar(1.0, z * eps),
        };
        Self {
            zetas: zetas.to_vec(),
            at_zero: TransitionRates::real(fill, drain),
            tilted: zetas.iter().map(|&z| tilt(z)).collect(),
            slope: TransitionRates {
                fill: C64::new(0.0, -eps * fill),
                drain: C64::new(0.0, eps * drain),
            },
        }
    }

    /// Coarse-grained rates at evaluation time `t > 0`.
    pub fn coarse_grained(
        t: f64,
        res: &ReservoirSpec,
        outcome: Outcome,
        proto: &FeedbackProtocol,
        dot: &DotSpec,
        zetas: &[f64],
        settings: &QuadSettings,
    ) -> Result<Self> {
        assert!(t > 0.0, "coarse-graining time must be positive");
        let eps = dot.epsilon;
        let kernel = CgKernel::new(t, eps, res, settings.max_initial_panels);
        let breaks = kernel.breakpoints(res, settings.max_initial_panels);
        Self::tabulate(|omega| kernel.eval(omega), res, outcome, proto, zetas, &breaks, settings)
    }

    /// Short-time coefficients `(1/2π) ∫ Γ f e^{-i zeta omega}` and
    /// `(1/2π) ∫ Γ (1 - f) e^{+i zeta omega}`, the `t → 0` limit of the
    /// coarse-grained rates divided by `t`. The energy slopes need finite
    /// cutoffs.
    pub fn short_time(
        res: &ReservoirSpec,
        outcome: Outcome,
        proto: &FeedbackProtocol,
        zetas: &[f64],
        settings: &QuadSettings,
    ) -> Result<Self> {
        if conditioned_gamma0(res, outcome, proto) == 0.0 {
            return Ok(Self::zero(zetas));
        }
        if !res.has_finite_support() {
            return Err(DemonError::CutoffRequired(format!(
                "{:?} lead after {outcome:?} has unbounded support",
                res.label
            )));
        }
        let breaks = [res.mu, res.eps_center];
        Self::tabulate(|_| 1.0 / (2.0 * PI), res, outcome, proto, zetas, &breaks, settings)
    }

    fn tabulate(
        kernel: impl Fn(f64) -> f64,
        res: &ReservoirSpec,
        outcome: Outcome,
        proto: &FeedbackProtocol,
        zetas: &[f64],
        breaks: &[f64],
        settings: &QuadSettings,
    ) -> Result<Self> {
        let n = zetas.len();
        let dim = 4 + 4 * n;
        let gamma0 = conditioned_gamma0(res, outcome, proto);
        if gamma0 == 0.0 {
            return Ok(Self::zero(zetas));
        }
        let integrand = |omega: f64, out: &mut [f64]| {
            let g = gamma0 * lorentz_shape(omega, res) * kernel(omega);
            let w10 = g * fermi_occupation(omega, res);
            let w01 = g * fermi_vacancy(omega, res);
            out[0] = w10;
            out[1] = w01;
            out[2] = w10 * omega;
            out[3] = w01 * omega;
            for (j, z) in zetas.iter().enumerate() {
                let (s, c) = (z * omega).sin_cos();
                let o = 4 + 4 * j;
                out[o] = w10 * c;
                out[o + 1] = w10 * s;
                out[o + 2] = w01 * c;
                out[o + 3] = w01 * s;
            }
        };
        let v = integrate(integrand, dim, res.omega_min, res.omega_max, breaks, settings)?;
        let tilted = (0..n)
            .map(|j| {
                let o = 4 + 4 * j;
                TransitionRates {
                    fill: C64::new(v[o], -v[o + 1]),
                    drain: C64::new(v[o + 2], v[o + 3]),
                }
            })
            .collect();
        Ok(Self {
            zetas: zetas.to_vec(),
            at_zero: TransitionRates::real(v[0], v[1]),
            tilted,
            slope: TransitionRates {
                fill: C64::new(0.0, -v[2]),
                drain: C64::new(0.0, v[3]),
            },
        })
    }
}

/// Coarse-graining kernel together with the breakpoints of its integrands.
///
/// Breakpoints are the support edges, the kernel zeros `eps ± 2πk/t` (dense
/// near the peak, geometrically sparser further out), the chemical potential
/// and the Lorentzian centre. On an unbounded side the kernel is replaced,
/// beyond a zero at distance `reach`, by its local mean `1/(π t x²)`: the
/// dropped part `-cos(t x)/(π t x²)` integrates against a smooth envelope
/// `h` to `O(h'(reach)/t²)`.
#[derive(Debug, Clone, Copy)]
struct CgKernel {
    t: f64,
    eps: f64,
    below: f64,
    above: f64,
}

impl CgKernel {
    fn new(t: f64, eps: f64, res: &ReservoirSpec, max_panels: usize) -> Self {
        let spacing = 2.0 * PI / t;
        let mut reach = (max_panels / 4).max(8) as f64 * spacing;
        let feature = res.delta_width.min(1.0 / res.beta);
        if t * feature < 100.0 {
            let (lo, hi) = res.effective_support();
            reach = reach.max(eps - lo).max(hi - eps);
        }
        let reach = (reach / spacing).ceil() * spacing;
        Self {
            t,
            eps,
            below: if res.omega_min.is_finite() { f64::NEG_INFINITY } else { eps - reach },
            above: if res.omega_max.is_finite() { f64::INFINITY } else { eps + reach },
        }
    }

    fn eval(&self, omega: f64) -> f64 {
        let x = omega - self.eps;
        if omega < self.below || omega > self.above {
            1.0 / (PI * self.t * x * x)
        } else {
            sinc2_kernel(self.t, x)
        }
    }

    fn breakpoints(&self, res: &ReservoirSpec, max_panels: usize) -> Vec<f64> {
        let eps = self.eps;
        let lo_reach = if res.omega_min.is_finite() { eps - res.omega_min } else { eps - self.below };
        let hi_reach = if res.omega_max.is_finite() { res.omega_max - eps } else { self.above - eps };
        let mut pts = vec![res.mu, res.eps_center, eps];
        pts.extend([res.omega_min, res.omega_max, self.below, self.above].into_iter().filter(|p| p.is_finite()));
        let spacing = 2.0 * PI / self.t;
        let k_max = (lo_reach.max(hi_reach) / spacing).ceil();
        let dense = (max_panels / 4).max(8) as f64;
        let mut k = 1.0;
        while k <= k_max {
            let x = k * spacing;
            if x <= lo_reach {
                pts.push(eps - x);
            }
            if x <= hi_reach {
                pts.push(eps + x);
            }
            k = if k < dense { k + 1.0 } else { (k * 1.02).ceil() };
        }
        pts.retain(|p| *p >= res.omega_min && *p <= res.omega_max);
        pts.sort_by(f64::total_cmp);
        pts
    }
}

/// Coarse-grained rates of one lead at evaluation time `t` and energy
/// counting field `zeta`.
pub fn cg_rates(
    t: f64,
    res: &ReservoirSpec,
    outcome: Outcome,
    proto: &FeedbackProtocol,
    dot: &DotSpec,
    zeta: f64,
    settings: &QuadSettings,
) -> Result<TransitionRates> {
    let zetas: &[f64] = if zeta == 0.0 { &[] } else { std::slice::from_ref(&zeta) };
    let table = TiltedRates::coarse_grained(t, res, outcome, proto, dot, zetas, settings)?;
    Ok(table.at(zeta).expect("requested field is in the table"))
}

/// Same rates, integrated in the reflected variable: the filling rate uses
/// the kernel `sinc²[(t/2)(-eps - w)]` with `Γ(-w) f(-w) e^{i zeta w}`.
pub fn cg_rates_reflected(
    t: f64,
    res: &ReservoirSpec,
    outcome: Outcome,
    proto: &FeedbackProtocol,
    dot: &DotSpec,
    zeta: f64,
    settings: &QuadSettings,
) -> Result<TransitionRates> {
    let kernel = CgKernel::new(t, dot.epsilon, res, settings.max_initial_panels);
    let breaks = kernel.breakpoints(res, settings.max_initial_panels);
    let gamma = |w: f64| spectral_density(w, res, outcome, proto);
    let fill = integrate(
        |w, out| {
            let weight = kernel.eval(-w) * gamma(-w) * fermi_occupation(-w, res);
            let (s, c) = (zeta * w).sin_cos();
            out[0] = weight * c;
            out[1] = weight * s;
        },
        2,
        -res.omega_max,
        -res.omega_min,
        &reflect(&breaks),
        settings,
    )?;
    let drain = integrate(
        |w, out| {
            let weight = kernel.eval(w) * gamma(w) * fermi_vacancy(w, res);
            let (s, c) = (zeta * w).sin_cos();
            out[0] = weight * c;
            out[1] = weight * s;
        },
        2,
        res.omega_min,
        res.omega_max,
        &breaks,
        settings,
    )?;
    Ok(TransitionRates {
        fill: C64::new(fill[0], fill[1]),
        drain: C64::new(drain[0], drain[1]),
    })
}

fn reflect(points: &[f64]) -> Vec<f64> {
    points.iter().rev().map(|p| -p).collect()
}

/// `d/dzeta` of both coarse-grained rates at `zeta = 0` (purely imaginary).
pub fn cg_rate_energy_weighted(
    t: f64,
    res: &ReservoirSpec,
    outcome: Outcome,
    proto: &FeedbackProtocol,
    dot: &DotSpec,
    settings: &QuadSettings,
) -> Result<TransitionRates> {
    Ok(TiltedRates::coarse_grained(t, res, outcome, proto, dot, &[], settings)?.slope())
}

/// Outcome-conditioned generator of the occupation vector `(empty, filled)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CgLiouvillian {
    pub matrix: CMat2,
    /// Kernel time; `None` for the Markovian generator.
    pub eval_time: Option<f64>,
    pub fields: CountingFields,
}

/// Sum over leads of the single-lead generators.
pub fn assemble_generator(rates: &PerReservoir<(TransitionRates, TransitionRates)>, fields: &CountingFields) -> CMat2 {
    let mut m = CMat2::zeros();
    for lead in Reservoir::ALL {
        let (at_zero, tilted) = rates[lead];
        let chi = fields.chi[lead];
        m[(0, 0)] -= at_zero.fill;
        m[(1, 1)] -= at_zero.drain;
        m[(0, 1)] += tilted.drain * Complex64::from_polar(1.0, chi);
        m[(1, 0)] += tilted.fill * Complex64::from_polar(1.0, -chi);
    }
    m
}

pub fn build_cg_liouvillian(t: f64, config: &SystemConfig, outcome: Outcome, xi: &CountingFields) -> Result<CgLiouvillian> {
    let mut rates = PerReservoir::new((TransitionRates::ZERO, TransitionRates::ZERO), (TransitionRates::ZERO, TransitionRates::ZERO));
    for lead in Reservoir::ALL {
        let zeta = xi.zeta[lead];
        let zetas: &[f64] = if zeta == 0.0 { &[] } else { std::slice::from_ref(&zeta) };
        let table = TiltedRates::coarse_grained(
            t,
            config.reservoir(lead),
            outcome,
            &config.feedback,
            &config.dot,
            zetas,
            &config.quadrature,
        )?;
        rates[lead] = (table.at_zero(), table.at(zeta).unwrap());
    }
    Ok(CgLiouvillian {
        matrix: assemble_generator(&rates, xi),
        eval_time: Some(t),
        fields: *xi,
    })
}

pub fn bms_liouvillian(config: &SystemConfig, outcome: Outcome, xi: &CountingFields) -> CgLiouvillian {
    let rates = PerReservoir::from_fn(|lead| {
        let zeta = xi.zeta[lead];
        let table = TiltedRates::markovian(config.reservoir(lead), outcome, &config.feedback, &config.dot, &[zeta]);
        (table.at_zero(), table.at(zeta).unwrap())
    });
    CgLiouvillian {
        matrix: assemble_generator(&rates, xi),
        eval_time: None,
        fields: *xi,
    }
}

/// `exp(L t)`. For a coarse-grained generator `t` must equal its kernel time.
pub fn propagator(t: f64, l: &CgLiouvillian) -> CMat2 {
    if let Some(te) = l.eval_time {
        debug_assert!((te - t).abs() <= 1e-12 * t.max(1.0), "kernel time {te} used at {t}");
    }
    if t == 0.0 {
        return CMat2::identity();
    }
    expm(&(l.matrix * C64::new(t, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemConfig;
    use approx::assert_relative_eq;

    fn reference() -> SystemConfig {
        SystemConfig::transport_reference()
    }

    #[test]
    fn filling_rate_closed_form_for_saturated_lead() {
        // Lorentzian of width d centred on the dot:
        // fill + drain = Γ0 [1 - (1 - e^{-t d}) / (t d)], with drain ≈ 0 for a full lead
        let mut res = reference().left;
        res.omega_min = f64::NEG_INFINITY;
        res.omega_max = f64::INFINITY;
        res.eps_center = 1.0;
        res.delta_width = 2.0;
        res.mu = 200.0;
        res.beta = 1.0;
        let proto = FeedbackProtocol::default();
        let dot = DotSpec::default();
        for t in [0.5, 2.0, 10.0] {
            let r = cg_rates(t, &res, Outcome::Empty, &proto, &dot, 0.0, &QuadSettings::default()).unwrap();
            let td = t * res.delta_width;
            let expected = res.gamma0 * (1.0 - (1.0 - (-td).exp()) / td);
            assert_relative_eq!(r.fill.re + r.drain.re, expected, max_relative = 1e-9);
            assert!(r.drain.norm() < 1e-6 * expected);
        }
    }

    #[test]
    fn zero_coupling_gives_zero_rates() {
        let mut cfg = reference();
        cfg.left.gamma0 = 0.0;
        let r = cg_rates(1.0, &cfg.left, Outcome::Filled, &cfg.feedback, &cfg.dot, 0.3, &cfg.quadrature).unwrap();
        assert_eq!(r, TransitionRates::ZERO);
        let w = cg_rate_energy_weighted(1.0, &cfg.left, Outcome::Filled, &cfg.feedback, &cfg.dot, &cfg.quadrature).unwrap();
        assert_eq!(w, TransitionRates::ZERO);
    }

    #[test]
    fn rates_at_zero_field_are_real_and_dominate_tilted_modulus() {
        let cfg = reference();
        for zeta in [0.05, 0.3, 1.0] {
            let z0 = cg_rates(2.0, &cfg.left, Outcome::Empty, &cfg.feedback, &cfg.dot, 0.0, &cfg.quadrature).unwrap();
            let z = cg_rates(2.0, &cfg.left, Outcome::Empty, &cfg.feedback, &cfg.dot, zeta, &cfg.quadrature).unwrap();
            assert_eq!(z0.fill.im, 0.0);
            assert!(z0.fill.re > 0.0 && z0.drain.re > 0.0);
            assert!(z.fill.norm() <= z0.fill.re + 1e-12);
            assert!(z.drain.norm() <= z0.drain.re + 1e-12);
        }
    }

    #[test]
    fn reflected_parameterization_agrees() {
        let cfg = reference();
        for (t, zeta) in [(0.3, 0.0), (2.0, 0.2), (7.0, -0.4)] {
            for res in [&cfg.left, &cfg.right] {
                let a = cg_rates(t, res, Outcome::Filled, &cfg.feedback, &cfg.dot, zeta, &cfg.quadrature).unwrap();
                let b = cg_rates_reflected(t, res, Outcome::Filled, &cfg.feedback, &cfg.dot, zeta, &cfg.quadrature).unwrap();
                assert!((a.fill - b.fill).norm() < 1e-9);
                assert!((a.drain - b.drain).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn energy_slope_matches_central_difference() {
        let cfg = reference().with_delta(1.0);
        let h = 1e-5;
        for res in [&cfg.left, &cfg.right] {
            let w = cg_rate_energy_weighted(1.5, res, Outcome::Empty, &cfg.feedback, &cfg.dot, &cfg.quadrature).unwrap();
            let table = TiltedRates::coarse_grained(1.5, res, Outcome::Empty, &cfg.feedback, &cfg.dot, &[h], &cfg.quadrature).unwrap();
            let (p, m) = (table.at(h).unwrap(), table.at(-h).unwrap());
            let fd_fill = (p.fill - m.fill) / (2.0 * h);
            let fd_drain = (p.drain - m.drain) / (2.0 * h);
            assert_relative_eq!(fd_fill.im, w.fill.im, max_relative = 1e-6);
            assert_relative_eq!(fd_drain.im, w.drain.im, max_relative = 1e-6);
            assert_eq!(w.fill.re, 0.0);
        }
    }

    #[test]
    fn fourth_order_difference_of_tilted_rates() {
        let cfg = reference();
        let res = &cfg.right;
        let slope = cg_rate_energy_weighted(3.0, res, Outcome::Filled, &cfg.feedback, &cfg.dot, &cfg.quadrature).unwrap();
        let mut errors = Vec::new();
        for h in [0.02, 0.01] {
            let t = TiltedRates::coarse_grained(3.0, res, Outcome::Filled, &cfg.feedback, &cfg.dot, &[h, 2.0 * h], &cfg.quadrature).unwrap();
            let d = |s: f64| t.at(s).unwrap().drain;
            let fd = (-d(2.0 * h) + d(h) * 8.0 - d(-h) * 8.0 + d(-2.0 * h)) / (12.0 * h);
            errors.push((fd - slope.drain).norm());
        }
        // O(h^4): halving h shrinks the error roughly 16-fold.
        let ratio = errors[0] / errors[1];
        assert!(ratio > 10.0 && ratio < 22.0, "ratio {ratio}");
    }

    #[test]
    fn generator_is_stochastic_at_zero_field() {
        let cfg = reference().with_delta(1.0);
        for outcome in Outcome::ALL {
            for t in [1e-3, 0.5, 4.0] {
                let l = build_cg_liouvillian(t, &cfg, outcome, &CountingFields::zero()).unwrap();
                let m = l.matrix;
                assert!(m[(0, 1)].re >= 0.0 && m[(1, 0)].re >= 0.0);
                assert!(m[(0, 0)].re <= 0.0 && m[(1, 1)].re <= 0.0);
                for c in 0..2 {
                    assert!((m[(0, c)] + m[(1, c)]).norm() < 1e-15);
                }
                let p = propagator(t, &l);
                for c in 0..2 {
                    assert_relative_eq!((p[(0, c)] + p[(1, c)]).re, 1.0, epsilon = 1e-14);
                    assert!(p[(0, c)].re >= 0.0 && p[(1, c)].re >= 0.0);
                }
            }
        }
    }

    #[test]
    fn propagator_at_zero_time_is_identity() {
        let cfg = reference();
        let l = bms_liouvillian(&cfg, Outcome::Empty, &CountingFields::zero().with_chi(Reservoir::Left, 0.4));
        assert_eq!(propagator(0.0, &l), CMat2::identity());
    }

    #[test]
    fn bms_symmetric_point_and_outside_support() {
        let mut cfg = reference();
        cfg.left.mu = cfg.dot.epsilon;
        let l = bms_liouvillian(&cfg, Outcome::Empty, &CountingFields::zero());
        let table = TiltedRates::markovian(&cfg.left, Outcome::Empty, &cfg.feedback, &cfg.dot, &[]);
        let g = spectral_density(1.0, &cfg.left, Outcome::Empty, &cfg.feedback);
        assert_relative_eq!(table.at_zero().fill.re, g / 2.0);
        assert_relative_eq!(table.at_zero().drain.re, g / 2.0);
        assert!(l.matrix[(1, 0)].re > 0.0);

        let mut outside = reference();
        outside.dot.epsilon = -3.0;
        let l = bms_liouvillian(&outside, Outcome::Filled, &CountingFields::zero());
        assert_eq!(l.matrix, CMat2::zeros());
    }

    #[test]
    fn stationary_ratio_of_symmetric_leads() {
        // identical leads: the long-time filled probability is fill / (fill + drain)
        let mut cfg = reference();
        cfg.right = cfg.left;
        cfg.right.label = Reservoir::Right;
        let t = 6.0;
        let l = build_cg_liouvillian(t, &cfg, Outcome::Empty, &CountingFields::zero()).unwrap();
        let (fill, drain) = (l.matrix[(1, 0)].re, l.matrix[(0, 1)].re);
        let mut p = CMat2::identity();
        let step = propagator(t, &l);
        for _ in 0..200 {
            p = step * p;
        }
        assert_relative_eq!(p[(1, 0)].re, fill / (fill + drain), epsilon = 1e-10);
    }
}
