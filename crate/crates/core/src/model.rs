//! Physical configuration of the single-electron transistor and the
//! elementary functions shared by every solver.
//!
//! Units: the dot energy sets the energy scale, with ħ = k_B = 1, so every
//! energy is measured in units of ε and every time in units of 1/ε.

use std::ops::{Index, IndexMut};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DemonError, Result};
use crate::quadrature::QuadSettings;

/// Lead label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reservoir {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Reservoir {
    pub const ALL: [Reservoir; 2] = [Reservoir::Left, Reservoir::Right];

    pub fn index(self) -> usize {
        match self {
            Reservoir::Left => 0,
            Reservoir::Right => 1,
        }
    }
}

/// Result of a projective measurement of the dot occupation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "E")]
    Empty,
    #[serde(rename = "F")]
    Filled,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Empty, Outcome::Filled];

    /// Position of the corresponding basis state in the occupation vector.
    pub fn index(self) -> usize {
        match self {
            Outcome::Empty => 0,
            Outcome::Filled => 1,
        }
    }

    pub fn other(self) -> Outcome {
        match self {
            Outcome::Empty => Outcome::Filled,
            Outcome::Filled => Outcome::Empty,
        }
    }
}

/// A pair of values, one per lead.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerReservoir<T> {
    pub left: T,
    pub right: T,
}

impl<T> PerReservoir<T> {
    pub fn new(left: T, right: T) -> Self {
        Self { left, right }
    }

    pub fn from_fn(mut f: impl FnMut(Reservoir) -> T) -> Self {
        Self {
            left: f(Reservoir::Left),
            right: f(Reservoir::Right),
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PerReservoir<U> {
        PerReservoir {
            left: f(&self.left),
            right: f(&self.right),
        }
    }
}

impl PerReservoir<f64> {
    pub fn total(&self) -> f64 {
        self.left + self.right
    }
}

impl<T> Index<Reservoir> for PerReservoir<T> {
    type Output = T;
    fn index(&self, r: Reservoir) -> &T {
        match r {
            Reservoir::Left => &self.left,
            Reservoir::Right => &self.right,
        }
    }
}

impl<T> IndexMut<Reservoir> for PerReservoir<T> {
    fn index_mut(&mut self, r: Reservoir) -> &mut T {
        match r {
            Reservoir::Left => &mut self.left,
            Reservoir::Right => &mut self.right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DotSpec {
    /// On-site energy of the dot level.
    pub epsilon: f64,
}

impl Default for DotSpec {
    fn default() -> Self {
        Self { epsilon: 1.0 }
    }
}

/// Thermal lead with a Lorentzian coupling density on `[omega_min, omega_max]`.
///
/// Cutoffs may be infinite (`-inf` / `inf` in TOML).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    pub label: Reservoir,
    pub beta: f64,
    pub mu: f64,
    pub gamma0: f64,
    pub eps_center: f64,
    pub delta_width: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl ReservoirSpec {
    pub fn validate(&self) -> Result<()> {
        let name = format!("{:?}", self.label);
        let bad = |what: &str| Err(DemonError::InvalidConfig(format!("{name} reservoir: {what}")));
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive and finite");
        }
        if !self.mu.is_finite() || !self.eps_center.is_finite() {
            return bad("mu and eps_center must be finite");
        }
        if !(self.delta_width > 0.0 && self.delta_width.is_finite()) {
            return bad("delta_width must be positive and finite");
        }
        if !(self.gamma0 >= 0.0 && self.gamma0.is_finite()) {
            return bad("gamma0 must be non-negative and finite");
        }
        if self.omega_min.is_nan() || self.omega_max.is_nan() || self.omega_min >= self.omega_max {
            return bad("omega_min must be below omega_max");
        }
        Ok(())
    }

    pub fn has_finite_support(&self) -> bool {
        self.omega_min.is_finite() && self.omega_max.is_finite()
    }

    pub fn in_support(&self, omega: f64) -> bool {
        omega >= self.omega_min && omega <= self.omega_max
    }

    /// Finite window used wherever the support has to be truncated (bath
    /// discretization, breakpoint placement). Finite cutoffs are kept; an
    /// infinite side is replaced by the wider of `mu ∓ 40/beta` and
    /// `eps_center ∓ 50 delta_width`.
    pub fn effective_support(&self) -> (f64, f64) {
        let thermal = 40.0 / self.beta;
        let lorentz = 50.0 * self.delta_width;
        let lo = if self.omega_min.is_finite() {
            self.omega_min
        } else {
            (self.mu - thermal).min(self.eps_center - lorentz)
        };
        let hi = if self.omega_max.is_finite() {
            self.omega_max
        } else {
            (self.mu + thermal).max(self.eps_center + lorentz)
        };
        (lo, hi)
    }
}

/// Piecewise-constant feedback protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackProtocol {
    /// Default feedback period for single-point runs.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Feedback strength; zero switches the feedback off.
    #[serde(default)]
    pub delta: f64,
    /// Switch off the left lead after a Filled outcome and the right lead
    /// after an Empty outcome.
    #[serde(default)]
    pub extremal: bool,
}

fn default_tau() -> f64 {
    1.0
}

impl Default for FeedbackProtocol {
    fn default() -> Self {
        Self {
            tau: 1.0,
            delta: 0.0,
            extremal: false,
        }
    }
}

impl FeedbackProtocol {
    pub fn without_feedback() -> Self {
        Self::default()
    }

    /// Factor multiplying `gamma0` of `lead` during a period that follows
    /// outcome `outcome`.
    pub fn coupling_scale(&self, lead: Reservoir, outcome: Outcome) -> f64 {
        let up = self.delta.exp();
        let down = (-self.delta).exp();
        match (lead, outcome) {
            (Reservoir::Left, Outcome::Empty) => up,
            (Reservoir::Left, Outcome::Filled) if self.extremal => 0.0,
            (Reservoir::Left, Outcome::Filled) => down,
            (Reservoir::Right, Outcome::Empty) if self.extremal => 0.0,
            (Reservoir::Right, Outcome::Empty) => down,
            (Reservoir::Right, Outcome::Filled) => up,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(DemonError::InvalidConfig("tau must be finite and >= 0".into()));
        }
        if !self.delta.is_finite() {
            return Err(DemonError::InvalidConfig("delta must be finite".into()));
        }
        Ok(())
    }
}

/// Diagonal of the reduced dot density matrix, `(rho_00, rho_11)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationVector {
    pub p_empty: f64,
    pub p_filled: f64,
}

impl OccupationVector {
    pub const NORMALIZATION_TOL: f64 = 1e-12;

    pub fn new(p_empty: f64, p_filled: f64) -> Result<Self> {
        let ok = |p: f64| (-Self::NORMALIZATION_TOL..=1.0 + Self::NORMALIZATION_TOL).contains(&p);
        if !ok(p_empty) || !ok(p_filled) || (p_empty + p_filled - 1.0).abs() > Self::NORMALIZATION_TOL {
            return Err(DemonError::InvalidConfig(format!(
                "occupation ({p_empty}, {p_filled}) is not a probability vector"
            )));
        }
        Ok(Self { p_empty, p_filled })
    }

    pub fn pure(outcome: Outcome) -> Self {
        match outcome {
            Outcome::Empty => Self { p_empty: 1.0, p_filled: 0.0 },
            Outcome::Filled => Self { p_empty: 0.0, p_filled: 1.0 },
        }
    }

    pub fn probability(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Empty => self.p_empty,
            Outcome::Filled => self.p_filled,
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.p_empty, self.p_filled]
    }
}

/// Complete physical configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default)]
    pub dot: DotSpec,
    pub left: ReservoirSpec,
    pub right: ReservoirSpec,
    #[serde(default)]
    pub feedback: FeedbackProtocol,
    #[serde(default)]
    pub quadrature: QuadSettings,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dot.epsilon.is_finite() {
            return Err(DemonError::InvalidConfig("dot epsilon must be finite".into()));
        }
        if self.left.label != Reservoir::Left || self.right.label != Reservoir::Right {
            return Err(DemonError::InvalidConfig("reservoir labels must be L and R".into()));
        }
        self.left.validate()?;
        self.right.validate()?;
        self.feedback.validate()?;
        self.quadrature.validate()
    }

    pub fn reservoir(&self, lead: Reservoir) -> &ReservoirSpec {
        match lead {
            Reservoir::Left => &self.left,
            Reservoir::Right => &self.right,
        }
    }

    pub fn reservoir_mut(&mut self, lead: Reservoir) -> &mut ReservoirSpec {
        match lead {
            Reservoir::Left => &mut self.left,
            Reservoir::Right => &mut self.right,
        }
    }

    /// Chemical potential bias `V = mu_L - mu_R`.
    pub fn bias(&self) -> f64 {
        self.left.mu - self.right.mu
    }

    /// Copy with the bias set to `v`, keeping the mean chemical potential.
    pub fn with_bias(&self, v: f64) -> Self {
        let mean = 0.5 * (self.left.mu + self.right.mu);
        let mut out = self.clone();
        out.left.mu = mean + 0.5 * v;
        out.right.mu = mean - 0.5 * v;
        out
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.feedback.delta = delta;
        out
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig =
            toml::from_str(text).map_err(|e| DemonError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            DemonError::InvalidConfig(format!("{}: {e}", path.as_ref().display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// Lorentzian leads centred at 5 and -1 with width 5, couplings 0.5,
    /// temperature 10, `mu_L = 0`, `mu_R = 10` and support `[0, 20]`.
    pub fn transport_reference() -> Self {
        let lead = |label, eps_center, mu| ReservoirSpec {
            label,
            beta: 0.1,
            mu,
            gamma0: 0.5,
            eps_center,
            delta_width: 5.0,
            omega_min: 0.0,
            omega_max: 20.0,
        };
        Self {
            dot: DotSpec::default(),
            left: lead(Reservoir::Left, 5.0, 0.0),
            right: lead(Reservoir::Right, -1.0, 10.0),
            feedback: FeedbackProtocol::default(),
            quadrature: QuadSettings::default(),
        }
    }

    /// Same leads as [`SystemConfig::transport_reference`] but with
    /// unbounded support.
    pub fn unbounded_reference() -> Self {
        let mut cfg = Self::transport_reference();
        for lead in Reservoir::ALL {
            let r = cfg.reservoir_mut(lead);
            r.omega_min = f64::NEG_INFINITY;
            r.omega_max = f64::INFINITY;
        }
        cfg
    }
}

/// Fermi function `1/(exp(beta (omega - mu)) + 1)`, evaluated without
/// overflow.
pub fn fermi_occupation(omega: f64, res: &ReservoirSpec) -> f64 {
    logistic(-res.beta * (omega - res.mu))
}

/// `1 - f(omega)`, evaluated without cancellation.
pub fn fermi_vacancy(omega: f64, res: &ReservoirSpec) -> f64 {
    logistic(res.beta * (omega - res.mu))
}

/// `1/(1 + exp(-x))`
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Lorentzian shape `delta^2 / ((omega - eps_center)^2 + delta^2)` inside the
/// support, zero outside.
pub fn lorentz_shape(omega: f64, res: &ReservoirSpec) -> f64 {
    if !res.in_support(omega) {
        return 0.0;
    }
    let d2 = res.delta_width * res.delta_width;
    let x = omega - res.eps_center;
    d2 / (x * x + d2)
}

/// Outcome-conditioned spectral coupling density `Gamma_alpha^nu(omega)`.
pub fn spectral_density(
    omega: f64,
    res: &ReservoirSpec,
    outcome: Outcome,
    proto: &FeedbackProtocol,
) -> f64 {
    conditioned_gamma0(res, outcome, proto) * lorentz_shape(omega, res)
}

/// `Gamma_{0,alpha}^nu` after the feedback scaling.
pub fn conditioned_gamma0(res: &ReservoirSpec, outcome: Outcome, proto: &FeedbackProtocol) -> f64 {
    res.gamma0 * proto.coupling_scale(res.label, outcome)
}
