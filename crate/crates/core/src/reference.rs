//! Reference solvers: exact free-fermion dynamics of the dot coupled to
//! discretized leads, with projective dot measurements and feedback, and the
//! Markovian (BMS) feedback pipeline.
//!
//! Single-particle index 0 is the dot, followed by the modes of the left and
//! then the right lead. `C[(x, y)] = <c_x^† c_y>`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DemonError, Result};
use crate::feedback::Solver;
use crate::kernel::{bms_liouvillian, build_cg_liouvillian, propagator, CountingFields};
use crate::mat2::{real_vec, C64};
use crate::model::{
    fermi_occupation, spectral_density, FeedbackProtocol, OccupationVector, Outcome, PerReservoir, Reservoir,
    ReservoirSpec, SystemConfig,
};
use crate::thermo::{thermo_report, ThermoReport};

/// Branch probabilities below this are not followed.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-14;

/// Same feedback, thermodynamics and counting statistics with Markovian
/// rates.
pub fn bms_pipeline(tau: f64, config: &SystemConfig) -> Result<ThermoReport> {
    thermo_report(Solver::Bms, tau, config)
}

/// Lead represented by `N` modes on a uniform midpoint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedBath {
    pub lead: Reservoir,
    pub omega: Vec<f64>,
    pub coupling: Vec<f64>,
    pub spacing: f64,
}

impl DiscretizedBath {
    pub fn count(&self) -> usize {
        self.omega.len()
    }

    /// `2π / Δω`, the revival time of the discrete spectrum.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing
    }
}

/// Uniform grid over the effective support with
/// `t_k = sqrt(Γ(ω_k) Δω / 2π)`, so that `2π Σ t_k² δ(ω - ω_k)` reproduces
/// the coupling density.
pub fn discretize_bath(res: &ReservoirSpec, outcome: Outcome, proto: &FeedbackProtocol, n: usize) -> DiscretizedBath {
    assert!(n >= 1, "a bath needs at least one mode");
    let (lo, hi) = res.effective_support();
    let spacing = (hi - lo) / n as f64;
    let omega: Vec<f64> = (0..n).map(|k| lo + (k as f64 + 0.5) * spacing).collect();
    let coupling = omega
        .iter()
        .map(|&w| (spectral_density(w, res, outcome, proto) * spacing / (2.0 * PI)).sqrt())
        .collect();
    DiscretizedBath { lead: res.label, omega, coupling, spacing }
}

/// Star-shaped single-particle Hamiltonian: dot level hybridized with two
/// discretized leads.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactModel {
    pub epsilon: f64,
    pub baths: PerReservoir<DiscretizedBath>,
}

impl ExactModel {
    /// Model with the couplings that are active after `outcome`.
    pub fn new(config: &SystemConfig, outcome: Outcome, modes_per_lead: usize) -> Self {
        Self {
            epsilon: config.dot.epsilon,
            baths: PerReservoir::from_fn(|lead| {
                discretize_bath(config.reservoir(lead), outcome, &config.feedback, modes_per_lead)
            }),
        }
    }

    pub fn dim(&self) -> usize {
        1 + self.baths.left.count() + self.baths.right.count()
    }

    /// Index range of the modes of `lead`.
    pub fn range(&self, lead: Reservoir) -> std::ops::Range<usize> {
        let nl = self.baths.left.count();
        match lead {
            Reservoir::Left => 1..1 + nl,
            Reservoir::Right => 1 + nl..1 + nl + self.baths.right.count(),
        }
    }

    pub fn horizon(&self) -> f64 {
        self.baths.left.recurrence_time().min(self.baths.right.recurrence_time())
    }

    fn check_horizon(&self, t: f64) -> Result<()> {
        let horizon = self.horizon();
        if t >= horizon {
            return Err(DemonError::HorizonExceeded { requested: t, horizon });
        }
        Ok(())
    }

    fn energies_and_couplings(&self) -> (Vec<f64>, Vec<f64>) {
        let mut e = vec![self.epsilon];
        let mut t = vec![0.0];
        for lead in Reservoir::ALL {
            e.extend_from_slice(&self.baths[lead].omega);
            t.extend_from_slice(&self.baths[lead].coupling);
        }
        (e, t)
    }

    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let (e, t) = self.energies_and_couplings();
        let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e));
        for (k, &tk) in t.iter().enumerate().skip(1) {
            h[(0, k)] = tk;
            h[(k, 0)] = tk;
        }
        h
    }

    /// Product state: dot occupation `n_dot`, leads in equilibrium.
    pub fn thermal_state(&self, config: &SystemConfig, n_dot: f64) -> CorrelationMatrix {
        let mut c = DMatrix::zeros(self.dim(), self.dim());
        c[(0, 0)] = C64::new(n_dot, 0.0);
        for lead in Reservoir::ALL {
            let res = config.reservoir(lead);
            for (k, idx) in self.range(lead).enumerate() {
                c[(idx, idx)] = C64::new(fermi_occupation(self.baths[lead].omega[k], res), 0.0);
            }
        }
        CorrelationMatrix { c }
    }

    /// `exp(i h t)` from the eigen-decomposition of `h`.
    pub fn heisenberg_propagator(&self, t: f64) -> Result<DMatrix<C64>> {
        self.check_horizon(t)?;
        let eig = SymmetricEigen::new(self.hamiltonian());
        let q = eig.eigenvectors.map(|x| C64::new(x, 0.0));
        let phases = eig.eigenvalues.map(|l| C64::from_polar(1.0, l * t));
        let mut scaled = q.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        Ok(scaled * q.transpose())
    }

    /// Occupation of the dot at each of `times` (ascending, starting at or
    /// after zero) for an initial state with diagonal correlation matrix.
    pub fn dot_occupation_trace(&self, initial: &CorrelationMatrix, times: &[f64]) -> Result<Vec<f64>> {
        if let Some(&t_max) = times.last() {
            self.check_horizon(t_max)?;
        }
        let diag: Vec<f64> = (0..self.dim()).map(|i| initial.c[(i, i)].re).collect();
        let cheb = Chebyshev::new(self);
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        v[0] = C64::new(1.0, 0.0);
        let mut now = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            if t > now {
                v = cheb.propagate(&v, t - now);
                now = t;
            }
            out.push(v.iter().zip(&diag).map(|(a, n)| a.norm_sqr() * n).sum());
        }
        Ok(out)
    }
}

/// Chebyshev expansion of `exp(-i h t)` for the star Hamiltonian.
struct Chebyshev {
    center: f64,
    half_width: f64,
    energies: Vec<f64>,
    couplings: Vec<f64>,
}

impl Chebyshev {
    fn new(model: &ExactModel) -> Self {
        let (energies, couplings) = model.energies_and_couplings();
        // the spectrum of a star lies within the site energies widened by
        // the root of the summed squared couplings
        let radius = couplings.iter().map(|t| t * t).sum::<f64>().sqrt();
        let lo = energies.iter().copied().fold(f64::INFINITY, f64::min) - radius;
        let hi = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max) + radius;
        Self {
            center: 0.5 * (lo + hi),
            half_width: 0.5 * (hi - lo) * 1.01 + 1e-12,
            energies,
            couplings,
        }
    }

    /// `(h - center) v / half_width`
    fn scaled_apply(&self, v: &[C64], out: &mut [C64]) {
        let s = 1.0 / self.half_width;
        out[0] = v[0] * ((self.energies[0] - self.center) * s);
        for k in 1..v.len() {
            out[0] += v[k] * (self.couplings[k] * s);
            out[k] = v[k] * ((self.energies[k] - self.center) * s) + v[0] * (self.couplings[k] * s);
        }
    }

    fn propagate(&self, v: &[C64], dt: f64) -> Vec<C64> {
        let x = self.half_width * dt;
        let bessel = bessel_j_sequence(x);
        let n = v.len();
        let mut prev = v.to_vec();
        let mut cur = vec![C64::new(0.0, 0.0); n];
        self.scaled_apply(&prev, &mut cur);
        let mut acc: Vec<C64> = prev.iter().map(|a| a * bessel[0]).collect();
        let mut phase = -C64::i();
        if bessel.len() > 1 {
            let c = phase * (2.0 * bessel[1]);
            acc.iter_mut().zip(&cur).for_each(|(a, b)| *a += b * c);
        }
        let mut next = vec![C64::new(0.0, 0.0); n];
        for jk in bessel.iter().skip(2) {
            self.scaled_apply(&cur, &mut next);
            for i in 0..n {
                next[i] = next[i] * 2.0 - prev[i];
            }
            phase *= -C64::i();
            let c = phase * (2.0 * jk);
            acc.iter_mut().zip(&next).for_each(|(a, b)| *a += b * c);
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        let global = C64::from_polar(1.0, -self.center * dt);
        acc.iter_mut().for_each(|a| *a *= global);
        acc
    }
}

/// `J_0(x), J_1(x), ...` until the terms drop below 1e-17 beyond `k > x`,
/// by Miller's backward recurrence normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64) -> Vec<f64> {
    assert!(x >= 0.0);
    if x == 0.0 {
        return vec![1.0];
    }
    let start = (x + 20.0 + 10.0 * x.cbrt()).ceil() as usize + 20;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.iter_mut().for_each(|v| *v /= norm);
    let keep = (0..j.len())
        .rposition(|k| k as f64 <= x || j[k].abs() > 1e-17)
        .map_or(1, |k| k + 1);
    j.truncate(keep);
    j
}

/// Single-particle correlation matrix `<c_x^† c_y>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub c: DMatrix<C64>,
}

impl CorrelationMatrix {
    pub fn dot_occupation(&self) -> f64 {
        self.c[(0, 0)].re
    }

    pub fn lead_number(&self, model: &ExactModel, lead: Reservoir) -> f64 {
        model.range(lead).map(|i| self.c[(i, i)].re).sum()
    }

    /// `Σ_k ω_k <n_k>`
    pub fn lead_energy(&self, model: &ExactModel, lead: Reservoir) -> f64 {
        model.range(lead).zip(&model.baths[lead].omega).map(|(i, w)| w * self.c[(i, i)].re).sum()
    }

    /// `<H_c> = Σ_k t_k <d^† c_k + c_k^† d>`
    pub fn coupling_energy(&self, model: &ExactModel) -> f64 {
        let mut e = 0.0;
        for lead in Reservoir::ALL {
            for (i, t) in model.range(lead).zip(&model.baths[lead].coupling) {
                e += t * 2.0 * self.c[(0, i)].re;
            }
        }
        e
    }

    pub fn total_energy(&self, model: &ExactModel) -> f64 {
        model.epsilon * self.dot_occupation()
            + self.lead_energy(model, Reservoir::Left)
            + self.lead_energy(model, Reservoir::Right)
            + self.coupling_energy(model)
    }

    pub fn total_number(&self) -> f64 {
        (0..self.c.nrows()).map(|i| self.c[(i, i)].re).sum()
    }
}

/// `C(t) = W C W^†` with `W = exp(i h t)`.
pub fn exact_evolve(c: &CorrelationMatrix, model: &ExactModel, t: f64) -> Result<CorrelationMatrix> {
    if t == 0.0 {
        return Ok(c.clone());
    }
    let w = model.heisenberg_propagator(t)?;
    Ok(evolve_with(c, &w))
}

fn evolve_with(c: &CorrelationMatrix, w: &DMatrix<C64>) -> CorrelationMatrix {
    CorrelationMatrix { c: w * &c.c * w.adjoint() }
}

/// State after the projective measurement of the dot with result `outcome`
/// and the probability of that result.
pub fn measure(c: &CorrelationMatrix, outcome: Outcome) -> Result<(CorrelationMatrix, f64)> {
    let n = c.dot_occupation().clamp(0.0, 1.0);
    let p = match outcome {
        Outcome::Filled => n,
        Outcome::Empty => 1.0 - n,
    };
    if p < MIN_BRANCH_PROBABILITY {
        return Err(DemonError::DegenerateBranch { branch: outcome, probability: p });
    }
    let dim = c.c.nrows();
    let col: Vec<C64> = (0..dim).map(|x| c.c[(x, 0)]).collect();
    let row: Vec<C64> = (0..dim).map(|y| c.c[(0, y)]).collect();
    let factor = match outcome {
        Outcome::Filled => -1.0 / n,
        Outcome::Empty => 1.0 / (1.0 - n),
    };
    let mut out = c.c.clone();
    for x in 1..dim {
        for y in 1..dim {
            out[(x, y)] += col[x] * row[y] * factor;
        }
    }
    for k in 0..dim {
        out[(0, k)] = C64::new(0.0, 0.0);
        out[(k, 0)] = C64::new(0.0, 0.0);
    }
    out[(0, 0)] = C64::new(outcome.index() as f64, 0.0);
    Ok((CorrelationMatrix { c: out }, p))
}

/// Both conditional states of a dot measurement with their probabilities;
/// branches below [`MIN_BRANCH_PROBABILITY`] are skipped.
pub fn exact_measure_feedback(c: &CorrelationMatrix) -> Vec<(Outcome, CorrelationMatrix, f64)> {
    Outcome::ALL
        .into_iter()
        .filter_map(|o| measure(c, o).ok().map(|(s, p)| (o, s, p)))
        .collect()
}

/// Averages over measurement records of a run of feedback periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFeedbackSummary {
    pub periods: usize,
    /// Particles entering each lead per period.
    pub dn: PerReservoir<f64>,
    /// Energy entering each lead per period.
    pub de: PerReservoir<f64>,
    /// `-<H_c>` just before each measurement after the first, per period.
    pub measurement_energy: f64,
    /// Largest deviation between the direct energy change at a measurement
    /// and `-<H_c>`.
    pub measurement_identity_residual: f64,
    /// Largest drift of total energy or particle number during a period.
    pub conservation_residual: f64,
    /// Number of measurement records that contributed.
    pub records: usize,
}

/// Evolution operators of both conditioned Hamiltonians over one period.
pub struct FeedbackEngine {
    models: [ExactModel; 2],
    propagators: [DMatrix<C64>; 2],
    pub tau: f64,
}

impl FeedbackEngine {
    pub fn new(config: &SystemConfig, modes_per_lead: usize, tau: f64) -> Result<Self> {
        config.validate()?;
        let models = Outcome::ALL.map(|o| ExactModel::new(config, o, modes_per_lead));
        let propagators = [models[0].heisenberg_propagator(tau)?, models[1].heisenberg_propagator(tau)?];
        Ok(Self { models, propagators, tau })
    }

    pub fn model(&self, outcome: Outcome) -> &ExactModel {
        &self.models[outcome.index()]
    }

    /// Initial product state with the leads in equilibrium.
    pub fn initial_state(&self, config: &SystemConfig, n_dot: f64) -> CorrelationMatrix {
        self.models[0].thermal_state(config, n_dot)
    }

    fn step(&self, c: &CorrelationMatrix, outcome: Outcome) -> (CorrelationMatrix, Step) {
        let model = self.model(outcome);
        let next = evolve_with(c, &self.propagators[outcome.index()]);
        let drift = (next.total_energy(model) - c.total_energy(model))
            .abs()
            .max((next.total_number() - c.total_number()).abs());
        let step = Step {
            dn: PerReservoir::from_fn(|l| next.lead_number(model, l) - c.lead_number(model, l)),
            de: PerReservoir::from_fn(|l| next.lead_energy(model, l) - c.lead_energy(model, l)),
            drift,
        };
        (next, step)
    }

    /// Energy change caused by measuring `c`, which evolved under the
    /// couplings after `previous`: `(direct average change, -<H_c>)`.
    fn measurement_energy(&self, c: &CorrelationMatrix, previous: Outcome) -> (f64, f64) {
        let model = self.model(previous);
        let before = c.total_energy(model);
        let after: f64 = exact_measure_feedback(c).iter().map(|(_, s, p)| p * s.total_energy(model)).sum();
        (after - before, -c.coupling_energy(model))
    }

    /// Follow every measurement record over `periods` periods. The first
    /// measurement acts on `initial`.
    pub fn exhaustive(&self, initial: &CorrelationMatrix, periods: usize) -> ExactFeedbackSummary {
        let mut acc = Accumulator::new(periods);
        self.branch(initial, None, 1.0, periods, &mut acc);
        acc.finish()
    }

    fn branch(&self, c: &CorrelationMatrix, previous: Option<Outcome>, weight: f64, left: usize, acc: &mut Accumulator) {
        if let Some(prev) = previous {
            let (direct, hc) = self.measurement_energy(c, prev);
            acc.measurement(weight, direct, hc);
        }
        if left == 0 {
            acc.records += 1;
            return;
        }
        for (outcome, state, p) in exact_measure_feedback(c) {
            let (next, step) = self.step(&state, outcome);
            acc.step(weight * p, &step);
            self.branch(&next, Some(outcome), weight * p, left - 1, acc);
        }
    }

    /// Average over `samples` measurement records drawn with their Born
    /// probabilities from a seeded generator.
    pub fn monte_carlo(&self, initial: &CorrelationMatrix, periods: usize, samples: usize, seed: u64) -> ExactFeedbackSummary {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = Accumulator::new(periods);
        let w = 1.0 / samples as f64;
        for _ in 0..samples {
            let mut c = initial.clone();
            let mut previous = None;
            for _ in 0..periods {
                if let Some(prev) = previous {
                    let (direct, hc) = self.measurement_energy(&c, prev);
                    acc.measurement(w, direct, hc);
                }
                let filled: bool = rng.gen::<f64>() < c.dot_occupation().clamp(0.0, 1.0);
                let outcome = if filled { Outcome::Filled } else { Outcome::Empty };
                let (state, _) = measure(&c, outcome).or_else(|_| measure(&c, outcome.other())).expect("one branch is possible");
                let outcome = if state.dot_occupation() > 0.5 { Outcome::Filled } else { Outcome::Empty };
                let (next, step) = self.step(&state, outcome);
                acc.step(w, &step);
                c = next;
                previous = Some(outcome);
            }
            if let Some(prev) = previous {
                let (direct, hc) = self.measurement_energy(&c, prev);
                acc.measurement(w, direct, hc);
            }
            acc.records += 1;
        }
        acc.finish()
    }
}

struct Step {
    dn: PerReservoir<f64>,
    de: PerReservoir<f64>,
    drift: f64,
}

struct Accumulator {
    periods: usize,
    dn: PerReservoir<f64>,
    de: PerReservoir<f64>,
    measurement: f64,
    identity: f64,
    drift: f64,
    records: usize,
}

impl Accumulator {
    fn new(periods: usize) -> Self {
        Self {
            periods,
            dn: PerReservoir::default(),
            de: PerReservoir::default(),
            measurement: 0.0,
            identity: 0.0,
            drift: 0.0,
            records: 0,
        }
    }

    fn step(&mut self, weight: f64, s: &Step) {
        for l in Reservoir::ALL {
            self.dn[l] += weight * s.dn[l];
            self.de[l] += weight * s.de[l];
        }
        self.drift = self.drift.max(s.drift);
    }

    fn measurement(&mut self, weight: f64, direct: f64, hc: f64) {
        self.measurement += weight * hc;
        self.identity = self.identity.max((direct - hc).abs());
    }

    fn finish(self) -> ExactFeedbackSummary {
        let per = 1.0 / self.periods.max(1) as f64;
        ExactFeedbackSummary {
            periods: self.periods,
            dn: self.dn.map(|v| v * per),
            de: self.de.map(|v| v * per),
            measurement_energy: self.measurement * per,
            measurement_identity_residual: self.identity,
            conservation_residual: self.drift,
            records: self.records,
        }
    }
}

/// Dot occupation without feedback from the master equations: the
/// coarse-grained generator is rebuilt with kernel time `t` at each `t`.
pub fn master_equation_trace(solver: Solver, config: &SystemConfig, initial: &OccupationVector, times: &[f64]) -> Result<Vec<f64>> {
    let mut cfg = config.clone();
    cfg.feedback.delta = 0.0;
    cfg.feedback.extremal = false;
    let sigma0 = real_vec(initial.as_array());
    let xi = CountingFields::zero();
    let bms = bms_liouvillian(&cfg, Outcome::Empty, &xi);
    times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return Ok(initial.p_filled);
            }
            let p = match solver {
                Solver::Dcg => propagator(t, &build_cg_liouvillian(t, &cfg, Outcome::Empty, &xi)?),
                Solver::Bms => propagator(t, &bms),
            };
            Ok((p * sigma0)[1].re)
        })
        .collect()
}

/// Stationary filled probability of the Markovian generator without
/// feedback.
pub fn bms_stationary_occupation(config: &SystemConfig) -> f64 {
    let mut cfg = config.clone();
    cfg.feedback.delta = 0.0;
    cfg.feedback.extremal = false;
    let l = bms_liouvillian(&cfg, Outcome::Empty, &CountingFields::zero()).matrix;
    let (fill, drain) = (l[(1, 0)].re, l[(0, 1)].re);
    fill / (fill + drain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn weak() -> SystemConfig {
        let mut cfg = SystemConfig::transport_reference().with_delta(1.0);
        cfg.left.gamma0 = 0.05;
        cfg.right.gamma0 = 0.05;
        cfg
    }

    #[test]
    fn single_mode_carries_total_weight() {
        let mut res = SystemConfig::transport_reference().left;
        res.delta_width = 1e8;
        let bath = discretize_bath(&res, Outcome::Empty, &FeedbackProtocol::default(), 1);
        assert_eq!(bath.count(), 1);
        assert_eq!(bath.omega, vec![10.0]);
        assert_relative_eq!(bath.coupling[0].powi(2), res.gamma0 * 20.0 / (2.0 * PI), max_relative = 1e-12);
    }

    #[test]
    fn bessel_sequence_values() {
        // scipy.special.jv(0, 1.0), jv(1, 1.0), jv(5, 1.0)
        let j = bessel_j_sequence(1.0);
        assert_relative_eq!(j[0], 0.765_197_686_557_966_6, max_relative = 1e-13);
        assert_relative_eq!(j[1], 0.440_050_585_744_933_5, max_relative = 1e-13);
        assert_relative_eq!(j[5], 2.497_577_302_112_344e-4, max_relative = 1e-12);
        let big = bessel_j_sequence(300.0);
        let sum = big[0] + 2.0 * big.iter().skip(2).step_by(2).sum::<f64>();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
        assert!(big.len() > 300);
    }

    #[test]
    fn chebyshev_matches_dense_propagator() {
        let model = ExactModel::new(&weak(), Outcome::Filled, 20);
        let t = 1.7;
        let w = model.heisenberg_propagator(t).unwrap();
        let cheb = Chebyshev::new(&model);
        let mut v = vec![C64::new(0.0, 0.0); model.dim()];
        v[0] = C64::new(1.0, 0.0);
        let u = cheb.propagate(&v, t);
        // exp(-i h t) e_0 is the conjugate of the first column of exp(i h t)
        for i in 0..model.dim() {
            assert!((u[i] - w[(i, 0)].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_time_and_decoupled_evolution() {
        let mut cfg = weak();
        let model = ExactModel::new(&cfg, Outcome::Empty, 10);
        let c = model.thermal_state(&cfg, 0.3);
        assert_eq!(exact_evolve(&c, &model, 0.0).unwrap(), c);
        cfg.left.gamma0 = 0.0;
        cfg.right.gamma0 = 0.0;
        let model = ExactModel::new(&cfg, Outcome::Empty, 10);
        let c = model.thermal_state(&cfg, 0.3);
        let later = exact_evolve(&c, &model, 2.5).unwrap();
        for i in 0..model.dim() {
            assert!((later.c[(i, i)] - c.c[(i, i)]).norm() < 1e-13);
        }
    }

    #[test]
    fn horizon_is_enforced() {
        let model = ExactModel::new(&weak(), Outcome::Empty, 20);
        let horizon = model.horizon();
        assert_relative_eq!(horizon, 2.0 * PI);
        let err = model.heisenberg_propagator(horizon + 0.1).unwrap_err();
        assert!(matches!(err, DemonError::HorizonExceeded { .. }));
        let c = model.thermal_state(&weak(), 0.0);
        assert!(model.dot_occupation_trace(&c, &[0.0, 7.0]).is_err());
    }

    #[test]
    fn unitary_evolution_conserves_number_and_energy() {
        let cfg = weak();
        let model = ExactModel::new(&cfg, Outcome::Filled, 30);
        let c = model.thermal_state(&cfg, 1.0);
        let later = exact_evolve(&c, &model, 1.3).unwrap();
        assert!((later.total_number() - c.total_number()).abs() < 1e-10);
        assert!((later.total_energy(&model) - c.total_energy(&model)).abs() < 1e-10);
        let herm = (&later.c - later.c.adjoint()).norm();
        assert!(herm < 1e-12);
    }

    #[test]
    fn measuring_an_eigenstate_keeps_bath() {
        let cfg = weak();
        let model = ExactModel::new(&cfg, Outcome::Filled, 5);
        let c = model.thermal_state(&cfg, 1.0);
        assert!(matches!(measure(&c, Outcome::Empty), Err(DemonError::DegenerateBranch { .. })));
        let (s, p) = measure(&c, Outcome::Filled).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(s, c);
        let half = model.thermal_state(&cfg, 0.5);
        let branches = exact_measure_feedback(&half);
        assert_eq!(branches.len(), 2);
        for (o, s, p) in branches {
            assert_eq!(p, 0.5);
            assert_eq!(s.dot_occupation(), o.index() as f64);
            assert_eq!(s.c.view((1, 1), (10, 10)), half.c.view((1, 1), (10, 10)));
        }
    }

    #[test]
    fn golden_rule_calibration() {
        // filled dot decaying into an empty flat lead: n_d(t) = exp(-Γ t)
        let mut cfg = SystemConfig::transport_reference();
        for lead in Reservoir::ALL {
            let r = cfg.reservoir_mut(lead);
            r.gamma0 = 0.02;
            r.delta_width = 1e6;
            r.mu = -1e3;
            r.beta = 1.0;
            r.omega_min = -19.0;
            r.omega_max = 21.0;
        }
        let model = ExactModel::new(&cfg, Outcome::Empty, 4000);
        let c = model.thermal_state(&cfg, 1.0);
        let times = [20.0, 40.0];
        let n = model.dot_occupation_trace(&c, &times).unwrap();
        let rate = (n[0] / n[1]).ln() / (times[1] - times[0]);
        let gamma = 2.0 * 0.02;
        let calibration = rate / gamma;
        assert!((calibration - 1.0).abs() < 1e-2, "calibration {calibration}");
    }

    #[test]
    fn measurement_identity_on_short_run() {
        let cfg = weak();
        let engine = FeedbackEngine::new(&cfg, 15, 0.5).unwrap();
        let initial = engine.initial_state(&cfg, 0.4);
        let s = engine.exhaustive(&initial, 3);
        assert_eq!(s.records, 8);
        assert!(s.measurement_identity_residual < 1e-10);
        assert!(s.conservation_residual < 1e-10);
        let mc = engine.monte_carlo(&initial, 3, 64, 7);
        assert_eq!(mc.records, 64);
        let again = engine.monte_carlo(&initial, 3, 64, 7);
        assert_eq!(mc, again);
    }

    #[test]
    fn master_equation_traces_start_at_initial_state() {
        let cfg = SystemConfig::unbounded_reference();
        let empty = OccupationVector::pure(Outcome::Empty);
        for solver in [Solver::Dcg, Solver::Bms] {
            let n = master_equation_trace(solver, &cfg, &empty, &[0.0, 0.1, 50.0]).unwrap();
            assert_eq!(n[0], 0.0);
            assert!(n[1] > 0.0);
            assert!((n[2] - bms_stationary_occupation(&cfg)).abs() < 2e-2);
        }
    }
}
