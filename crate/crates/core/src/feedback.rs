//! Piecewise-constant feedback: projective measurement of the dot every
//! `tau`, outcome-conditioned couplings in between, the stroboscopic
//! stationary state and the first moments of transferred particles and
//! energy per period.

use serde::{Deserialize, Serialize};

use crate::error::{DemonError, Result};
use crate::kernel::{assemble_generator, CountingFields, TiltedRates, TransitionRates};
use crate::mat2::{expm, expm_frechet, expm_minus_identity, CMat2, CVec2, C64};
use crate::model::{OccupationVector, Outcome, PerReservoir, Reservoir, SystemConfig};

/// Generator used between two measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Coarse-grained rates with kernel time equal to the period.
    Dcg,
    /// Time-independent Born-Markov-secular rates.
    Bms,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Dcg => "dcg",
            Solver::Bms => "bms",
        }
    }
}

/// Step of the particle counting fields in the finite-difference moments.
pub const CHI_STEP: f64 = 1e-4;
/// Relative agreement required between finite-difference and analytic moments.
pub const MOMENT_REL_TOL: f64 = 1e-5;
/// Threshold on `|dn_L + dn_R|` in the stationary state.
pub const CONSERVATION_TOL: f64 = 1e-9;
/// Minimum `1 - phi2` for a well-defined stroboscopic fixed point.
pub const FIXED_POINT_GAP: f64 = 1e-10;

/// `(P_E, P_F)`
pub fn measurement_projectors() -> (CMat2, CMat2) {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    (CMat2::new(one, zero, zero, zero), CMat2::new(zero, zero, zero, one))
}

fn basis(outcome: Outcome) -> CVec2 {
    let mut v = CVec2::zeros();
    v[outcome.index()] = C64::new(1.0, 0.0);
    v
}

fn trace(v: &CVec2) -> C64 {
    v[0] + v[1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackPropagator {
    pub matrix: CMat2,
    pub tau: f64,
    pub xi: CountingFields,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryState {
    pub sigma: OccupationVector,
    /// Second eigenvalue of the one-period propagator.
    pub relaxation_eigenvalue: f64,
    pub tau: f64,
}

/// Particle and energy transferred into each lead during one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcsMoments {
    pub dn: PerReservoir<f64>,
    pub de: PerReservoir<f64>,
    /// Measurement outcome that started the period, for conditioned moments.
    pub branch: Option<Outcome>,
    /// Probability of that outcome (one for unconditioned moments).
    pub p_branch: f64,
}

impl FcsMoments {
    fn scaled_sum(parts: &[FcsMoments]) -> PerReservoir<[f64; 2]> {
        PerReservoir::from_fn(|lead| {
            parts.iter().fold([0.0, 0.0], |acc, m| {
                [acc[0] + m.p_branch * m.dn[lead], acc[1] + m.p_branch * m.de[lead]]
            })
        })
    }
}

/// Rates of both leads after both outcomes for one period length, with the
/// energy counting fields needed by the moment stencils.
#[derive(Debug, Clone)]
pub struct PeriodModel {
    pub solver: Solver,
    pub tau: f64,
    zeta_step: f64,
    rates: [PerReservoir<TiltedRates>; 2],
}

impl PeriodModel {
    pub fn new(solver: Solver, tau: f64, config: &SystemConfig) -> Result<Self> {
        Self::with_zetas(solver, tau, config, &[])
    }

    /// Model whose rate tables also cover the energy fields `extra_zetas`.
    pub fn with_zetas(solver: Solver, tau: f64, config: &SystemConfig, extra_zetas: &[f64]) -> Result<Self> {
        config.validate()?;
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(DemonError::InvalidConfig(format!("feedback period {tau} must be finite and >= 0")));
        }
        let eps = config.dot.epsilon.abs();
        let zeta_step = if eps > 0.0 { 1e-4 / eps } else { 1e-4 };
        let mut zetas = vec![zeta_step, 2.0 * zeta_step];
        for &z in extra_zetas {
            if z != 0.0 && !zetas.contains(&z) && !zetas.contains(&-z) {
                zetas.push(z);
            }
        }
        let table = |outcome: Outcome, lead: Reservoir| -> Result<TiltedRates> {
            let res = config.reservoir(lead);
            match solver {
                Solver::Dcg if tau == 0.0 => Ok(TiltedRates::zero(&zetas)),
                Solver::Dcg => TiltedRates::coarse_grained(
                    tau,
                    res,
                    outcome,
                    &config.feedback,
                    &config.dot,
                    &zetas,
                    &config.quadrature,
                ),
                Solver::Bms => Ok(TiltedRates::markovian(res, outcome, &config.feedback, &config.dot, &zetas)),
            }
        };
        let mut rates = Vec::with_capacity(2);
        for outcome in Outcome::ALL {
            rates.push(PerReservoir::new(table(outcome, Reservoir::Left)?, table(outcome, Reservoir::Right)?));
        }
        let rates: [PerReservoir<TiltedRates>; 2] = rates.try_into().expect("two outcomes");
        Ok(Self { solver, tau, zeta_step, rates })
    }

    pub fn rates(&self, outcome: Outcome, lead: Reservoir) -> &TiltedRates {
        &self.rates[outcome.index()][lead]
    }

    /// `L_nu(xi) * tau`
    pub fn exponent(&self, outcome: Outcome, xi: &CountingFields) -> CMat2 {
        let rates = PerReservoir::from_fn(|lead| {
            let table = self.rates(outcome, lead);
            let tilted = table
                .at(xi.zeta[lead])
                .unwrap_or_else(|| panic!("energy field {} not tabulated", xi.zeta[lead]));
            (table.at_zero(), tilted)
        });
        assemble_generator(&rates, xi) * C64::new(self.tau, 0.0)
    }

    pub fn branch_propagator(&self, outcome: Outcome, xi: &CountingFields) -> CMat2 {
        if self.tau == 0.0 {
            return CMat2::identity();
        }
        expm(&self.exponent(outcome, xi))
    }

    /// `F(xi) = sum_nu exp(L_nu(xi) tau) P_nu`
    pub fn propagator(&self, xi: &CountingFields) -> FeedbackPropagator {
        let (pe, pf) = measurement_projectors();
        let matrix = if self.tau == 0.0 {
            CMat2::identity()
        } else {
            self.branch_propagator(Outcome::Empty, xi) * pe + self.branch_propagator(Outcome::Filled, xi) * pf
        };
        FeedbackPropagator { matrix, tau: self.tau, xi: *xi }
    }

    pub fn stationary_state(&self) -> Result<StationaryState> {
        let f = self.propagator(&CountingFields::zero()).matrix;
        // F = [[1 - a, b], [a, 1 - b]]
        let a = f[(1, 0)].re;
        let b = f[(0, 1)].re;
        let gap = a + b;
        if !(gap >= FIXED_POINT_GAP) {
            return Err(DemonError::DegenerateFixedPoint { gap });
        }
        Ok(StationaryState {
            sigma: OccupationVector { p_empty: b / gap, p_filled: a / gap },
            relaxation_eigenvalue: 1.0 - gap,
            tau: self.tau,
        })
    }

    /// Occupation reached after one period that started in the pure state
    /// `outcome`.
    pub fn branch_final_state(&self, outcome: Outcome) -> OccupationVector {
        let p = self.branch_propagator(outcome, &CountingFields::zero());
        let jump = p[(outcome.other().index(), outcome.index())].re.clamp(0.0, 1.0);
        match outcome {
            Outcome::Empty => OccupationVector { p_empty: 1.0 - jump, p_filled: jump },
            Outcome::Filled => OccupationVector { p_empty: jump, p_filled: 1.0 - jump },
        }
    }

    /// `M_nu(xi) - 1` for the period started in the pure state `outcome`.
    fn branch_mgf_minus_one(&self, outcome: Outcome, xi: &CountingFields) -> C64 {
        if self.tau == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let e = basis(outcome);
        let tilted = expm_minus_identity(&self.exponent(outcome, xi)) * e;
        let plain = expm_minus_identity(&self.exponent(outcome, &CountingFields::zero())) * e;
        trace(&tilted) - trace(&plain)
    }

    /// Generating function of one period started in `state`.
    pub fn mgf(&self, state: &OccupationVector, xi: &CountingFields) -> C64 {
        let mut total = C64::new(1.0, 0.0);
        for outcome in Outcome::ALL {
            total += self.branch_mgf_minus_one(outcome, xi) * state.probability(outcome);
        }
        total
    }

    /// Branch moments from fourth-order central differences of `M_nu - 1`.
    fn branch_moments_fd(&self, outcome: Outcome) -> FcsMoments {
        let stencil = |f: &dyn Fn(f64) -> C64, h: f64| -> f64 {
            let d = (f(-2.0 * h) - f(-h) * 8.0 + f(h) * 8.0 - f(2.0 * h)) / (12.0 * h);
            // -i dM/dx
            d.im
        };
        let dn = PerReservoir::from_fn(|lead| {
            stencil(&|h| self.branch_mgf_minus_one(outcome, &CountingFields::zero().with_chi(lead, h)), CHI_STEP)
        });
        let de = PerReservoir::from_fn(|lead| {
            stencil(&|h| self.branch_mgf_minus_one(outcome, &CountingFields::zero().with_zeta(lead, h)), self.zeta_step)
        });
        FcsMoments { dn, de, branch: Some(outcome), p_branch: 1.0 }
    }

    /// Branch moments from the Fréchet derivative of the exponential along
    /// the analytic field derivatives of the generator.
    fn branch_moments_analytic(&self, outcome: Outcome) -> FcsMoments {
        let zero = C64::new(0.0, 0.0);
        let tau = C64::new(self.tau, 0.0);
        let a = self.exponent(outcome, &CountingFields::zero());
        let e = basis(outcome);
        let moment = |d: CMat2| -> f64 {
            if self.tau == 0.0 {
                return 0.0;
            }
            (-C64::i() * trace(&(expm_frechet(&a, &(d * tau)) * e))).re
        };
        let dn = PerReservoir::from_fn(|lead| {
            let r = self.rates(outcome, lead).at_zero();
            moment(CMat2::new(zero, C64::i() * r.drain, -C64::i() * r.fill, zero))
        });
        let de = PerReservoir::from_fn(|lead| {
            let s: TransitionRates = self.rates(outcome, lead).slope();
            moment(CMat2::new(zero, s.drain, s.fill, zero))
        });
        FcsMoments { dn, de, branch: Some(outcome), p_branch: 1.0 }
    }

    /// Scale of particle and energy exchange in one period, used as the
    /// absolute floor of the moment comparison.
    fn activity(&self, outcome: Outcome) -> (f64, f64) {
        Reservoir::ALL.iter().fold((0.0, 0.0), |(n, e), &lead| {
            let t = self.rates(outcome, lead);
            let r = t.at_zero();
            let s = t.slope();
            (
                n + self.tau * (r.fill.norm() + r.drain.norm()),
                e + self.tau * (s.fill.norm() + s.drain.norm()),
            )
        })
    }

    /// Finite-difference and analytic moments of both branches.
    pub fn branch_moment_paths(&self) -> [(FcsMoments, FcsMoments); 2] {
        Outcome::ALL.map(|o| (self.branch_moments_fd(o), self.branch_moments_analytic(o)))
    }

    /// Conditioned moments of both branches, weighted by the outcome
    /// probabilities of `state`; fails when the two derivative paths disagree.
    pub fn branch_moments(&self, state: &OccupationVector) -> Result<[FcsMoments; 2]> {
        let mut out = Vec::with_capacity(2);
        for (outcome, (fd, an)) in Outcome::ALL.into_iter().zip(self.branch_moment_paths()) {
            let (n_scale, e_scale) = self.activity(outcome);
            for lead in Reservoir::ALL {
                check_paths(&format!("dn_{lead:?} | {outcome:?}"), fd.dn[lead], an.dn[lead], n_scale)?;
                check_paths(&format!("dE_{lead:?} | {outcome:?}"), fd.de[lead], an.de[lead], e_scale)?;
            }
            out.push(FcsMoments { p_branch: state.probability(outcome), ..fd });
        }
        Ok(out.try_into().expect("two outcomes"))
    }

    /// Moments of one period started in `state`.
    pub fn moments(&self, state: &OccupationVector, conditioned: Option<Outcome>) -> Result<FcsMoments> {
        let branches = self.branch_moments(state)?;
        Ok(match conditioned {
            Some(outcome) => branches[outcome.index()],
            None => combine(&branches),
        })
    }
}

fn check_paths(quantity: &str, fd: f64, analytic: f64, scale: f64) -> Result<()> {
    if (fd - analytic).abs() <= MOMENT_REL_TOL * analytic.abs() + 1e-9 * scale {
        Ok(())
    } else {
        Err(DemonError::MomentToleranceFailure {
            quantity: quantity.to_string(),
            finite_difference: fd,
            analytic,
        })
    }
}

/// Probability-weighted sum of branch moments.
pub fn combine(branches: &[FcsMoments]) -> FcsMoments {
    let sums = FcsMoments::scaled_sum(branches);
    FcsMoments {
        dn: sums.map(|s| s[0]),
        de: sums.map(|s| s[1]),
        branch: None,
        p_branch: 1.0,
    }
}

/// Everything the thermodynamic bookkeeping needs about one stationary
/// feedback period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodAnalysis {
    pub solver: Solver,
    pub tau: f64,
    pub stationary: StationaryState,
    pub moments: FcsMoments,
    pub branches: [FcsMoments; 2],
    /// Occupation at the end of a period started in each pure state.
    pub branch_final: [OccupationVector; 2],
}

impl PeriodAnalysis {
    pub fn current(&self) -> Result<f64> {
        let residual = self.moments.dn.total();
        if residual.abs() >= CONSERVATION_TOL {
            return Err(DemonError::ConservationViolation { residual });
        }
        Ok(self.moments.dn.right / self.tau)
    }
}

pub fn analyze_period(solver: Solver, tau: f64, config: &SystemConfig) -> Result<PeriodAnalysis> {
    if !(tau > 0.0) {
        return Err(DemonError::InvalidConfig("stationary analysis needs tau > 0".into()));
    }
    let model = PeriodModel::new(solver, tau, config)?;
    let stationary = model.stationary_state()?;
    let branches = model.branch_moments(&stationary.sigma)?;
    Ok(PeriodAnalysis {
        solver,
        tau,
        stationary,
        moments: combine(&branches),
        branches,
        branch_final: Outcome::ALL.map(|o| model.branch_final_state(o)),
    })
}

pub fn feedback_propagator(tau: f64, config: &SystemConfig, xi: &CountingFields) -> Result<FeedbackPropagator> {
    if tau == 0.0 {
        return Ok(FeedbackPropagator { matrix: CMat2::identity(), tau, xi: *xi });
    }
    let model = PeriodModel::with_zetas(Solver::Dcg, tau, config, &[xi.zeta.left, xi.zeta.right])?;
    Ok(model.propagator(xi))
}

pub fn stationary_state(tau: f64, config: &SystemConfig) -> Result<StationaryState> {
    if !(tau > 0.0) {
        return Err(DemonError::DegenerateFixedPoint { gap: 0.0 });
    }
    PeriodModel::new(Solver::Dcg, tau, config)?.stationary_state()
}

/// `M(tau, xi) = (1, 1) F(xi) sigma_s`
pub fn mgf(tau: f64, config: &SystemConfig, xi: &CountingFields) -> Result<C64> {
    let model = PeriodModel::with_zetas(Solver::Dcg, tau, config, &[xi.zeta.left, xi.zeta.right])?;
    let sigma = model.stationary_state()?.sigma;
    Ok(model.mgf(&sigma, xi))
}

pub fn fcs_first_moments(tau: f64, config: &SystemConfig, conditioned: Option<Outcome>) -> Result<FcsMoments> {
    let model = PeriodModel::new(Solver::Dcg, tau, config)?;
    let sigma = model.stationary_state()?.sigma;
    model.moments(&sigma, conditioned)
}

/// `dn_R / tau` in the stationary state.
pub fn time_averaged_current(tau: f64, config: &SystemConfig) -> Result<f64> {
    analyze_period(Solver::Dcg, tau, config)?.current()
}
