//! Thermodynamic bookkeeping of one stationary feedback period: power,
//! feedback energy, gain, heat, entropy and information.
//!
//! Projective measurements are treated as free of switching work.

use crate::error::{DemonError, Result};
use crate::feedback::{analyze_period, FcsMoments, PeriodAnalysis, Solver};
use crate::model::{OccupationVector, Outcome, PerReservoir, Reservoir, SystemConfig};

/// Tolerance of the per-branch second law.
pub const SECOND_LAW_TOL: f64 = 1e-9;

/// Shannon entropy `-sum p ln p` of an occupation vector, in units of k_B.
pub fn shannon_entropy(state: &OccupationVector) -> f64 {
    // use the smaller entry so that ln(1 - p) keeps full precision
    let p = state.p_empty.min(state.p_filled).clamp(0.0, 0.5);
    if p == 0.0 {
        return 0.0;
    }
    -p * p.ln() - (1.0 - p) * (-p).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchThermo {
    pub outcome: Outcome,
    pub probability: f64,
    pub moments: FcsMoments,
    pub heat: PerReservoir<f64>,
    /// Entropy of the dot at the end of the period (it starts pure).
    pub entropy_sys: f64,
    /// `sum_alpha beta_alpha dQ_alpha`
    pub entropy_res: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoReport {
    pub tau: f64,
    pub bias: f64,
    pub current: f64,
    pub power: f64,
    pub feedback_energy: f64,
    /// `None` unless both power and feedback energy are positive.
    pub gain: Option<f64>,
    pub heat: PerReservoir<f64>,
    pub heat_total: f64,
    pub entropy_sys: f64,
    pub entropy_res: f64,
    pub information: f64,
    /// `None` when no information is deleted.
    pub efficiency: Option<f64>,
    pub moments: FcsMoments,
    pub occupation: f64,
    pub relaxation_eigenvalue: f64,
    pub branches: [BranchThermo; 2],
}

/// `-dn_R V / tau`
pub fn power_from(dn_right: f64, bias: f64, tau: f64) -> f64 {
    // adding +0 turns a signed zero at V = 0 into +0
    -dn_right * bias / tau + 0.0
}

/// `P tau / dE_fb`, defined only for positive power and feedback energy.
pub fn gain_from(power: f64, tau: f64, feedback_energy: f64) -> Option<f64> {
    (power > 0.0 && feedback_energy > 0.0).then(|| power * tau / feedback_energy)
}

/// `dQ_alpha = dE_alpha - mu_alpha dn_alpha`
pub fn heat_from(moments: &FcsMoments, config: &SystemConfig) -> PerReservoir<f64> {
    PerReservoir::from_fn(|lead| moments.de[lead] - config.reservoir(lead).mu * moments.dn[lead])
}

fn entropy_flow(heat: &PerReservoir<f64>, config: &SystemConfig) -> f64 {
    Reservoir::ALL.iter().map(|&lead| config.reservoir(lead).beta * heat[lead]).sum()
}

impl ThermoReport {
    pub fn from_analysis(analysis: &PeriodAnalysis, config: &SystemConfig) -> Result<Self> {
        let tau = analysis.tau;
        let current = analysis.current()?;
        let bias = config.bias();
        let moments = analysis.moments;
        let power = power_from(moments.dn.right, bias, tau);
        let feedback_energy = moments.de.total();
        let heat = heat_from(&moments, config);

        let mut branches = Vec::with_capacity(2);
        for outcome in Outcome::ALL {
            let m = analysis.branches[outcome.index()];
            let heat = heat_from(&m, config);
            let b = BranchThermo {
                outcome,
                probability: analysis.stationary.sigma.probability(outcome),
                moments: m,
                heat,
                entropy_sys: shannon_entropy(&analysis.branch_final[outcome.index()]),
                entropy_res: entropy_flow(&heat, config),
            };
            let total = b.entropy_sys + b.entropy_res;
            if total < -SECOND_LAW_TOL {
                return Err(DemonError::SecondLawViolation { branch: outcome, total });
            }
            branches.push(b);
        }
        let branches: [BranchThermo; 2] = branches.try_into().expect("two outcomes");
        let entropy_sys: f64 = branches.iter().map(|b| b.probability * b.entropy_sys).sum();
        let entropy_res: f64 = branches.iter().map(|b| b.probability * b.entropy_res).sum();
        let information = -entropy_sys;

        Ok(Self {
            tau,
            bias,
            current,
            power,
            feedback_energy,
            gain: gain_from(power, tau, feedback_energy),
            heat_total: heat.total(),
            heat,
            entropy_sys,
            entropy_res,
            information,
            efficiency: (information != 0.0).then(|| entropy_res / information),
            moments,
            occupation: analysis.stationary.sigma.p_filled,
            relaxation_eigenvalue: analysis.stationary.relaxation_eigenvalue,
            branches,
        })
    }
}

pub fn thermo_report(solver: Solver, tau: f64, config: &SystemConfig) -> Result<ThermoReport> {
    ThermoReport::from_analysis(&analyze_period(solver, tau, config)?, config)
}

pub fn electric_power(tau: f64, config: &SystemConfig) -> Result<f64> {
    Ok(thermo_report(Solver::Dcg, tau, config)?.power)
}

/// `dE_L + dE_R` per stationary period.
pub fn feedback_energy(tau: f64, config: &SystemConfig) -> Result<f64> {
    Ok(thermo_report(Solver::Dcg, tau, config)?.feedback_energy)
}

pub fn gain(tau: f64, config: &SystemConfig) -> Result<Option<f64>> {
    Ok(thermo_report(Solver::Dcg, tau, config)?.gain)
}

/// `(dQ_L, dQ_R, dQ)`
pub fn heat_flows(tau: f64, config: &SystemConfig) -> Result<(f64, f64, f64)> {
    let r = thermo_report(Solver::Dcg, tau, config)?;
    Ok((r.heat.left, r.heat.right, r.heat_total))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBalance {
    pub entropy_sys: f64,
    pub entropy_res: f64,
    pub information: f64,
    pub efficiency: Option<f64>,
    pub branches: [BranchThermo; 2],
}

pub fn entropy_balance(tau: f64, config: &SystemConfig) -> Result<EntropyBalance> {
    let r = thermo_report(Solver::Dcg, tau, config)?;
    Ok(EntropyBalance {
        entropy_sys: r.entropy_sys,
        entropy_res: r.entropy_res,
        information: r.information,
        efficiency: r.efficiency,
        branches: r.branches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    #[test]
    fn entropy_of_two_state_vectors() {
        assert_eq!(shannon_entropy(&OccupationVector::pure(Outcome::Filled)), 0.0);
        assert_relative_eq!(shannon_entropy(&OccupationVector { p_empty: 0.5, p_filled: 0.5 }), LN_2, max_relative = 1e-15);
        // -p ln p - (1-p) ln(1-p) ≈ p (1 - ln p) for tiny p
        let p = 1e-12;
        let s = shannon_entropy(&OccupationVector { p_empty: 1.0 - p, p_filled: p });
        assert_relative_eq!(s, p * (1.0 - p.ln()), max_relative = 1e-9);
    }

    #[test]
    fn gain_arithmetic_and_domain() {
        assert_relative_eq!(gain_from(4.0, 0.5, 0.05).unwrap(), 40.0);
        assert_eq!(gain_from(-1.0, 0.5, 0.05), None);
        assert_eq!(gain_from(1.0, 0.5, -0.05), None);
        assert!(gain_from(1.0, 1.0, 1e-300).unwrap() > 1e299);
    }

    #[test]
    fn zero_bias_gives_zero_power() {
        assert_eq!(power_from(0.3, 0.0, 1.0), 0.0);
        let cfg = SystemConfig::transport_reference().with_delta(1.0).with_bias(0.0);
        let p = electric_power(0.5, &cfg).unwrap();
        assert_eq!(p, 0.0);
        assert!(p.is_sign_positive());
    }

    #[test]
    fn report_is_internally_consistent() {
        let cfg = SystemConfig::transport_reference().with_delta(1.0);
        let r = thermo_report(Solver::Dcg, 0.5, &cfg).unwrap();
        assert_eq!(r.heat_total, r.heat.left + r.heat.right);
        let first_law: f64 = Reservoir::ALL
            .iter()
            .map(|&l| r.heat[l] + cfg.reservoir(l).mu * r.moments.dn[l])
            .sum();
        assert!((first_law - r.feedback_energy).abs() < 1e-12);
        assert!(r.entropy_sys >= 0.0 && r.entropy_sys <= LN_2);
        assert!(r.information <= 0.0);
        assert!(r.efficiency.unwrap() <= 1.0 + 1e-9);
        let p: f64 = r.branches.iter().map(|b| b.probability).sum();
        assert_relative_eq!(p, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn equal_potentials_make_heat_equal_energy() {
        let mut cfg = SystemConfig::transport_reference().with_delta(0.5);
        cfg.left.mu = 0.0;
        cfg.right.mu = 0.0;
        let r = thermo_report(Solver::Dcg, 1.0, &cfg).unwrap();
        assert_eq!(r.heat.left, r.moments.de.left);
        assert_eq!(r.heat.right, r.moments.de.right);
    }
}
