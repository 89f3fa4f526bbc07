//! Run configuration files.

use std::path::Path;

use demon_core::SystemConfig;
use serde::{Deserialize, Serialize};

use crate::error::{SweepError, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Trace,
    TauScan,
    Grid,
    ZenoCheck,
    Benchmark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Dcg,
    Bms,
    Zeno,
    Exact,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Dcg => "dcg",
            SolverKind::Bms => "bms",
            SolverKind::Zeno => "zeno",
            SolverKind::Exact => "exact",
        }
    }
}

/// Dot-occupation time trace without feedback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSpec {
    pub t_max: f64,
    /// Number of uniform steps between 0 and `t_max`.
    pub steps: usize,
    /// Initial filled probability; the leads start in equilibrium.
    pub initial_occupation: f64,
    /// Modes per lead for the exact solver.
    pub modes_per_lead: usize,
}

impl Default for TraceSpec {
    fn default() -> Self {
        Self {
            t_max: 20.0,
            steps: 400,
            initial_occupation: 0.0,
            modes_per_lead: 4000,
        }
    }
}

/// Log-spaced feedback periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TauScanSpec {
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_steps: usize,
    pub deltas: Vec<f64>,
    /// Zeno rows are only emitted up to this period.
    pub zeno_tau_max: f64,
}

impl Default for TauScanSpec {
    fn default() -> Self {
        Self {
            tau_min: 1e-3,
            tau_max: 1e3,
            tau_steps: 61,
            deltas: vec![-1.0, 0.0, 1.0],
            zeno_tau_max: 1.0,
        }
    }
}

/// Uniform bias axis times log-spaced period axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub v_min: f64,
    pub v_max: f64,
    pub v_steps: usize,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_steps: usize,
    pub deltas: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            v_min: -20.0,
            v_max: 20.0,
            v_steps: 61,
            tau_min: 0.05,
            tau_max: 3.0,
            tau_steps: 61,
            deltas: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZenoCheckSpec {
    pub taus: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl Default for ZenoCheckSpec {
    fn default() -> Self {
        Self {
            taus: vec![1e-4, 1e-3, 1e-2, 1e-1],
            deltas: vec![-1.0, 0.0, 1.0],
        }
    }
}

/// Exact feedback dynamics against the master-equation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSpec {
    pub tau: f64,
    pub periods: usize,
    pub modes_per_lead: usize,
    /// Record count for sampling when `periods` exceeds the exhaustive limit.
    pub samples: usize,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            tau: 0.5,
            periods: 4,
            modes_per_lead: 100,
            samples: 256,
            seed: 0,
        }
    }
}

/// Overrides applied to the quadrature settings of the system.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
    pub max_initial_panels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When present, must match the subcommand.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default = "SystemConfig::transport_reference")]
    pub system: SystemConfig,
    /// Empty selects the mode's default solvers.
    #[serde(default)]
    pub solvers: Vec<SolverKind>,
    /// Zero uses all available cores.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub trace: TraceSpec,
    #[serde(default)]
    pub tau_scan: TauScanSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub zeno_check: ZenoCheckSpec,
    #[serde(default)]
    pub benchmark: BenchmarkSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: None,
            system: SystemConfig::transport_reference(),
            solvers: Vec::new(),
            workers: 0,
            tolerances: ToleranceOverrides::default(),
            trace: TraceSpec::default(),
            tau_scan: TauScanSpec::default(),
            grid: GridSpec::default(),
            zeno_check: ZenoCheckSpec::default(),
            benchmark: BenchmarkSpec::default(),
        }
    }
}

fn bad(msg: impl Into<String>) -> SweepError {
    SweepError::Config(msg.into())
}

fn positive_range(name: &str, lo: f64, hi: f64, steps: usize) -> SweepResult<()> {
    if steps == 0 {
        return Err(bad(format!("{name}: steps must be at least 1")));
    }
    if !(lo > 0.0 && hi.is_finite() && lo <= hi) {
        return Err(bad(format!("{name}: need 0 < min <= max")));
    }
    if steps == 1 && lo != hi {
        return Err(bad(format!("{name}: a single step needs min == max")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> SweepResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> SweepResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SweepError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// System with the tolerance overrides applied.
    pub fn system(&self) -> SystemConfig {
        let mut s = self.system.clone();
        let t = &self.tolerances;
        let q = &mut s.quadrature;
        q.abs_tol = t.abs_tol.unwrap_or(q.abs_tol);
        q.rel_tol = t.rel_tol.unwrap_or(q.rel_tol);
        q.max_subdivisions = t.max_subdivisions.unwrap_or(q.max_subdivisions);
        q.max_initial_panels = t.max_initial_panels.unwrap_or(q.max_initial_panels);
        s
    }

    pub fn validate(&self) -> SweepResult<()> {
        self.system().validate().map_err(|e| bad(e.to_string()))?;
        let t = &self.trace;
        if !(t.t_max > 0.0 && t.t_max.is_finite()) || t.steps == 0 {
            return Err(bad("trace: need t_max > 0 and steps >= 1"));
        }
        if !(0.0..=1.0).contains(&t.initial_occupation) {
            return Err(bad("trace: initial_occupation must lie in [0, 1]"));
        }
        if t.modes_per_lead < 1 {
            return Err(bad("trace: modes_per_lead must be at least 1"));
        }
        let s = &self.tau_scan;
        positive_range("tau_scan", s.tau_min, s.tau_max, s.tau_steps)?;
        let g = &self.grid;
        positive_range("grid tau", g.tau_min, g.tau_max, g.tau_steps)?;
        if g.v_steps == 0 || !(g.v_min <= g.v_max) || !g.v_min.is_finite() || !g.v_max.is_finite() {
            return Err(bad("grid: need finite v_min <= v_max and v_steps >= 1"));
        }
        if g.v_steps == 1 && g.v_min != g.v_max {
            return Err(bad("grid: a single bias step needs v_min == v_max"));
        }
        for (name, list) in [("tau_scan", &s.deltas), ("grid", &g.deltas), ("zeno_check", &self.zeno_check.deltas)] {
            if list.is_empty() || list.iter().any(|d| !d.is_finite()) {
                return Err(bad(format!("{name}: deltas must be a non-empty list of finite numbers")));
            }
        }
        if self.zeno_check.taus.is_empty() || self.zeno_check.taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(bad("zeno_check: taus must be positive"));
        }
        let b = &self.benchmark;
        if !(b.tau > 0.0 && b.tau.is_finite()) || b.periods == 0 || b.modes_per_lead == 0 || b.samples == 0 {
            return Err(bad("benchmark: need tau > 0 and positive periods, modes_per_lead, samples"));
        }
        Ok(())
    }
}

/// `n` points from `lo` to `hi`, uniform in `ln`.
pub fn log_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// `n` uniform points from `lo` to `hi`.
pub fn linear_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| match k {
            k if k == n - 1 => hi,
            k => lo + (hi - lo) * k as f64 / (n - 1) as f64,
        })
        .collect()
}
