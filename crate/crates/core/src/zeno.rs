//! Short-period (quantum Zeno) expansion of the feedback dynamics.
//!
//! For `tau → 0` the coarse-grained rates grow linearly in `tau`, so one
//! period transfers `O(tau²)` particles. The coefficients are the flat
//! spectral integrals
//!
//! ```text
//! g10(zeta) = (1/2π) ∫ Γ f e^{-i zeta omega},   g01(zeta) = (1/2π) ∫ Γ (1 - f) e^{+i zeta omega}
//! ```

use crate::error::{DemonError, Result};
use crate::kernel::{CountingFields, TiltedRates};
use crate::mat2::C64;
use crate::model::{fermi_occupation, fermi_vacancy, spectral_density, Outcome, PerReservoir, Reservoir, SystemConfig};
use crate::quadrature::integrate_scalar;

/// Short-time coefficients of both leads after both outcomes.
#[derive(Debug, Clone)]
pub struct ZenoCoefficients {
    tables: [PerReservoir<TiltedRates>; 2],
}

impl ZenoCoefficients {
    pub fn table(&self, lead: Reservoir, outcome: Outcome) -> &TiltedRates {
        &self.tables[outcome.index()][lead]
    }

    /// `g10^{alpha,nu}(0)`
    pub fn g10(&self, lead: Reservoir, outcome: Outcome) -> f64 {
        self.table(lead, outcome).at_zero().fill.re
    }

    /// `g01^{alpha,nu}(0)`
    pub fn g01(&self, lead: Reservoir, outcome: Outcome) -> f64 {
        self.table(lead, outcome).at_zero().drain.re
    }

    /// `d/dzeta g10` at zero (purely imaginary).
    pub fn g10_w(&self, lead: Reservoir, outcome: Outcome) -> C64 {
        self.table(lead, outcome).slope().fill
    }

    /// `d/dzeta g01` at zero (purely imaginary).
    pub fn g01_w(&self, lead: Reservoir, outcome: Outcome) -> C64 {
        self.table(lead, outcome).slope().drain
    }

    fn sum(&self, f: impl Fn(Reservoir) -> f64) -> f64 {
        Reservoir::ALL.iter().map(|&l| f(l)).sum()
    }

    /// Largest coefficient; `rate * tau` measures how deep in the Zeno
    /// regime a period is.
    pub fn max_rate(&self) -> f64 {
        let mut m = 0.0f64;
        for lead in Reservoir::ALL {
            for outcome in Outcome::ALL {
                m = m.max(self.g10(lead, outcome)).max(self.g01(lead, outcome));
            }
        }
        m
    }
}

pub fn zeno_coefficients(config: &SystemConfig) -> Result<ZenoCoefficients> {
    zeno_coefficients_with(config, &[])
}

/// Coefficients including the energy counting fields `zetas`.
pub fn zeno_coefficients_with(config: &SystemConfig, zetas: &[f64]) -> Result<ZenoCoefficients> {
    config.validate()?;
    let table = |lead: Reservoir, outcome: Outcome| {
        TiltedRates::short_time(config.reservoir(lead), outcome, &config.feedback, zetas, &config.quadrature)
    };
    Ok(ZenoCoefficients {
        tables: [
            PerReservoir::new(table(Reservoir::Left, Outcome::Empty)?, table(Reservoir::Right, Outcome::Empty)?),
            PerReservoir::new(table(Reservoir::Left, Outcome::Filled)?, table(Reservoir::Right, Outcome::Filled)?),
        ],
    })
}

/// Two candidates for the `tau → 0` stationary filled probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZenoOccupation {
    /// Fixed point of the `O(tau²)` branch dynamics: refilling after an
    /// Empty outcome against draining after a Filled one.
    pub fixed_point: f64,
    /// `1 / (1 + sum g01^F / sum g10^F)`
    pub filled_only: f64,
}

pub fn zeno_occupation(config: &SystemConfig) -> Result<ZenoOccupation> {
    Ok(occupation_from(&zeno_coefficients(config)?))
}

pub fn occupation_from(g: &ZenoCoefficients) -> ZenoOccupation {
    let fill_e = g.sum(|l| g.g10(l, Outcome::Empty));
    let fill_f = g.sum(|l| g.g10(l, Outcome::Filled));
    let drain_f = g.sum(|l| g.g01(l, Outcome::Filled));
    ZenoOccupation {
        fixed_point: fill_e / (fill_e + drain_f),
        filled_only: fill_f / (fill_f + drain_f),
    }
}

/// `m(xi, tau) = tau² sum_alpha [n g01^{alpha,F}(zeta_alpha) e^{+i chi_alpha}
/// + (1 - n) g10^{alpha,E}(zeta_alpha) e^{-i chi_alpha}]`
/// with `n` the branch fixed point. The generating function of one period is
/// `1 + m(xi) - m(0)` to this order.
pub fn zeno_mgf(tau: f64, config: &SystemConfig, xi: &CountingFields) -> Result<C64> {
    let g = zeno_coefficients_with(config, &[xi.zeta.left, xi.zeta.right])?;
    let n = occupation_from(&g).fixed_point;
    Ok(mgf_from(&g, n, tau, xi))
}

pub fn mgf_from(g: &ZenoCoefficients, n: f64, tau: f64, xi: &CountingFields) -> C64 {
    let mut m = C64::new(0.0, 0.0);
    for lead in Reservoir::ALL {
        let zeta = xi.zeta[lead];
        let chi = xi.chi[lead];
        let drain = g.table(lead, Outcome::Filled).at(zeta).expect("tabulated field").drain;
        let fill = g.table(lead, Outcome::Empty).at(zeta).expect("tabulated field").fill;
        m += drain * C64::from_polar(n, chi) + fill * C64::from_polar(1.0 - n, -chi);
    }
    m * (tau * tau)
}

/// First moments `-i d m / d chi_alpha` and `-i d m / d zeta_alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZenoMoments {
    pub dn: PerReservoir<f64>,
    pub de: PerReservoir<f64>,
    pub occupation: f64,
}

pub fn zeno_moments(tau: f64, config: &SystemConfig) -> Result<ZenoMoments> {
    let g = zeno_coefficients(config)?;
    let n = occupation_from(&g).fixed_point;
    Ok(moments_from(&g, n, tau))
}

pub fn moments_from(g: &ZenoCoefficients, n: f64, tau: f64) -> ZenoMoments {
    let t2 = tau * tau;
    let dn = PerReservoir::from_fn(|l| t2 * (n * g.g01(l, Outcome::Filled) - (1.0 - n) * g.g10(l, Outcome::Empty)));
    let de = PerReservoir::from_fn(|l| {
        let d = g.g01_w(l, Outcome::Filled) * n + g.g10_w(l, Outcome::Empty) * (1.0 - n);
        t2 * (-C64::i() * d).re
    });
    ZenoMoments { dn, de, occupation: n }
}

/// `dE_L + dE_R` to order `tau²`.
pub fn zeno_feedback_energy(tau: f64, config: &SystemConfig) -> Result<f64> {
    Ok(zeno_moments(tau, config)?.de.total())
}

/// Same expression with the stationary occupation `n` imposed.
pub fn zeno_feedback_energy_at(tau: f64, config: &SystemConfig, n: f64) -> Result<f64> {
    Ok(moments_from(&zeno_coefficients(config)?, n, tau).de.total())
}

/// `∫ [Γ_R^F ω (1 - f_R) - Γ_L^E ω f_L] dω`; negative values signal a
/// negative feedback energy under extremal feedback.
pub fn delta_tilde(config: &SystemConfig) -> Result<f64> {
    config.validate()?;
    let proto = &config.feedback;
    let part = |lead: Reservoir, outcome: Outcome, occupied: bool| -> Result<f64> {
        let res = config.reservoir(lead);
        if res.gamma0 * proto.coupling_scale(lead, outcome) == 0.0 {
            return Ok(0.0);
        }
        if !res.has_finite_support() {
            return Err(DemonError::CutoffRequired(format!("{lead:?} lead has unbounded support")));
        }
        let occ = |w: f64| if occupied { fermi_occupation(w, res) } else { fermi_vacancy(w, res) };
        integrate_scalar(
            |w| spectral_density(w, res, outcome, proto) * w * occ(w),
            res.omega_min,
            res.omega_max,
            &[res.mu, res.eps_center],
            &config.quadrature,
        )
    };
    Ok(part(Reservoir::Right, Outcome::Filled, false)? - part(Reservoir::Left, Outcome::Empty, true)?)
}
