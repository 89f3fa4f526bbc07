//! The five run modes.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use demon_core::feedback::{analyze_period, Solver};
use demon_core::reference::{master_equation_trace, ExactModel, FeedbackEngine};
use demon_core::thermo::thermo_report;
use demon_core::zeno::{delta_tilde, moments_from, occupation_from, zeno_coefficients, ZenoCoefficients};
use demon_core::{DemonError, OccupationVector, Outcome, Reservoir, SystemConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{linear_axis, log_axis, Mode, RunConfig, SolverKind};
use crate::error::{SweepError, SweepResult};
use crate::output::{clip_gain, write_contour, write_rows, Matrix, SweepRow};

/// Share of failed points above which a sweep reports failure.
pub const FAILURE_BUDGET: f64 = 0.05;

/// Longest measurement record followed exhaustively by the benchmark.
pub const MAX_EXHAUSTIVE_PERIODS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mode: Mode,
    pub points: usize,
    pub failed: usize,
    pub files: Vec<PathBuf>,
}

pub fn run(mode: Mode, cfg: &RunConfig, out: &Path) -> SweepResult<RunSummary> {
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(SweepError::Config(format!("config is for mode {m:?}, not {mode:?}")));
        }
    }
    cfg.validate()?;
    fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| SweepError::Config(e.to_string()))?;
    pool.install(|| match mode {
        Mode::Trace => run_trace(cfg, out),
        Mode::TauScan => run_tau_scan(cfg, out),
        Mode::Grid => run_grid(cfg, out),
        Mode::ZenoCheck => run_zeno_check(cfg, out),
        Mode::Benchmark => run_benchmark(cfg, out),
    })
}

fn solvers(cfg: &RunConfig, default: &[SolverKind], allowed: &[SolverKind], mode: &str) -> SweepResult<Vec<SolverKind>> {
    let list = if cfg.solvers.is_empty() { default.to_vec() } else { cfg.solvers.clone() };
    if let Some(bad) = list.iter().find(|s| !allowed.contains(s)) {
        return Err(SweepError::Config(format!("solver {} is not available in {mode} mode", bad.name())));
    }
    Ok(list)
}

fn check_budget(mode: Mode, points: usize, failed: usize, files: Vec<PathBuf>) -> SweepResult<RunSummary> {
    if failed as f64 > FAILURE_BUDGET * points as f64 {
        return Err(SweepError::FailureBudget { failed, total: points });
    }
    Ok(RunSummary { mode, points, failed, files })
}

/// Dot occupation from an equilibrium start without feedback, on a shared
/// time grid.
pub fn run_trace(cfg: &RunConfig, out: &Path) -> SweepResult<RunSummary> {
    let list = solvers(cfg, &[SolverKind::Dcg, SolverKind::Exact, SolverKind::Bms], &[SolverKind::Dcg, SolverKind::Exact, SolverKind::Bms], "trace")?;
    let mut system = cfg.system();
    system.feedback.delta = 0.0;
    system.feedback.extremal = false;
    let spec = &cfg.trace;
    let times = linear_axis(0.0, spec.t_max, spec.steps + 1);
    let n0 = spec.initial_occupation;
    let initial = OccupationVector::new(1.0 - n0, n0).map_err(|e| SweepError::Config(e.to_string()))?;

    let columns: Vec<SweepResult<Vec<f64>>> = list
        .par_iter()
        .map(|&s| match s {
            SolverKind::Dcg => Ok(master_equation_trace(Solver::Dcg, &system, &initial, &times)?),
            SolverKind::Bms => Ok(master_equation_trace(Solver::Bms, &system, &initial, &times)?),
            _ => {
                let model = ExactModel::new(&system, Outcome::Empty, spec.modes_per_lead);
                if spec.t_max >= model.horizon() {
                    return Err(SweepError::Config(format!(
                        "trace to t = {} exceeds the recurrence horizon {} of {} modes per lead",
                        spec.t_max,
                        model.horizon(),
                        spec.modes_per_lead
                    )));
                }
                Ok(model.dot_occupation_trace(&model.thermal_state(&system, n0), &times)?)
            }
        })
        .collect();
    let columns = columns.into_iter().collect::<SweepResult<Vec<_>>>()?;

    let path = out.join("trace.csv");
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["t".to_string()];
    header.extend(list.iter().map(|s| format!("n_{}", s.name())));
    w.write_record(&header)?;
    for (i, t) in times.iter().enumerate() {
        let mut rec = vec![format!("{t}")];
        rec.extend(columns.iter().map(|c| format!("{}", c[i])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(RunSummary { mode: Mode::Trace, points: times.len(), failed: 0, files: vec![path] })
}

/// Short-time coefficients per feedback strength, computed once.
fn zeno_tables(system: &SystemConfig, deltas: &[f64]) -> HashMap<u64, Result<ZenoCoefficients, DemonError>> {
    deltas
        .iter()
        .map(|&d| (d.to_bits(), zeno_coefficients(&system.with_delta(d))))
        .collect()
}

fn point(
    solver: SolverKind,
    system: &SystemConfig,
    v: f64,
    tau: f64,
    delta: f64,
    zeno: &HashMap<u64, Result<ZenoCoefficients, DemonError>>,
) -> SweepRow {
    let cfg = system.with_delta(delta).with_bias(v);
    let result = match solver {
        SolverKind::Dcg => thermo_report(Solver::Dcg, tau, &cfg).map(|r| SweepRow::from_report(delta, "dcg", &r)),
        SolverKind::Bms => thermo_report(Solver::Bms, tau, &cfg).map(|r| SweepRow::from_report(delta, "bms", &r)),
        _ => {
            let g = if v == system.bias() {
                zeno[&delta.to_bits()].clone()
            } else {
                zeno_coefficients(&cfg)
            };
            g.map(|g| {
                let n = occupation_from(&g).fixed_point;
                SweepRow::from_zeno(delta, tau, &cfg, &moments_from(&g, n, tau), g.max_rate() * tau)
            })
        }
    };
    result.unwrap_or_else(|e| SweepRow::failed(cfg.bias(), tau, delta, solver.name(), &e))
}

/// Stationary feedback quantities over log-spaced periods for each feedback
/// strength and solver.
pub fn run_tau_scan(cfg: &RunConfig, out: &Path) -> SweepResult<RunSummary> {
    let all = [SolverKind::Dcg, SolverKind::Zeno, SolverKind::Bms];
    let list = solvers(cfg, &all, &all, "tau-scan")?;
    let system = cfg.system();
    let spec = &cfg.tau_scan;
    let taus = log_axis(spec.tau_min, spec.tau_max, spec.tau_steps);
    let zeno = zeno_tables(&system, &spec.deltas);
    let v = system.bias();
    let mut jobs = Vec::new();
    for &delta in &spec.deltas {
        for &solver in &list {
            for &tau in &taus {
                if solver != SolverKind::Zeno || tau <= spec.zeno_tau_max * (1.0 + 1e-12) {
                    jobs.push((solver, tau, delta));
                }
            }
        }
    }
    let rows: Vec<SweepRow> = jobs.par_iter().map(|&(s, tau, d)| point(s, &system, v, tau, d, &zeno)).collect();
    let path = out.join("tau_scan.csv");
    write_rows(&path, &rows)?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    check_budget(Mode::TauScan, rows.len(), failed, vec![path])
}

/// Observables written as matrix files by the grid mode.
pub const MATRIX_OBSERVABLES: [&str; 7] = ["P", "dE_fb", "G", "Q", "Q_L", "Q_R", "eta"];

fn observable(row: &SweepRow, name: &str) -> Option<f64> {
    match name {
        "P" => row.p,
        "dE_fb" => row.de_fb,
        "G" => clip_gain(row.g),
        "Q" => row.q,
        "Q_L" => row.q_l,
        "Q_R" => row.q_r,
        "eta" => row.eta,
        _ => None,
    }
}

/// File stem shared by the matrix and contour files of one block.
pub fn block_stem(name: &str, solver: &str, delta: f64) -> String {
    format!("{name}_{solver}_delta{delta}")
}

/// Full report on the (V, tau) grid; rows are ordered by feedback strength,
/// solver, period and bias.
pub fn run_grid(cfg: &RunConfig, out: &Path) -> SweepResult<RunSummary> {
    let all = [SolverKind::Dcg, SolverKind::Bms, SolverKind::Zeno];
    let list = solvers(cfg, &[SolverKind::Dcg], &all, "grid")?;
    let system = cfg.system();
    let g = &cfg.grid;
    let vs = linear_axis(g.v_min, g.v_max, g.v_steps);
    let taus = log_axis(g.tau_min, g.tau_max, g.tau_steps);
    let zeno = if list.contains(&SolverKind::Zeno) { zeno_tables(&system, &g.deltas) } else { HashMap::new() };
    let mut jobs = Vec::new();
    for &delta in &g.deltas {
        for &solver in &list {
            for &tau in &taus {
                for &v in &vs {
                    jobs.push((solver, v, tau, delta));
                }
            }
        }
    }
    let rows: Vec<SweepRow> = jobs.par_iter().map(|&(s, v, tau, d)| point(s, &system, v, tau, d, &zeno)).collect();
    let mut files = Vec::new();
    let path = out.join("grid.csv");
    write_rows(&path, &rows)?;
    files.push(path);

    let block = vs.len() * taus.len();
    for (k, chunk) in rows.chunks(block).enumerate() {
        let delta = g.deltas[k / list.len()];
        let solver = list[k % list.len()].name();
        for name in MATRIX_OBSERVABLES {
            let m = Matrix {
                name: name.to_string(),
                vs: vs.clone(),
                taus: taus.clone(),
                values: chunk.chunks(vs.len()).map(|r| r.iter().map(|row| observable(row, name)).collect()).collect(),
            };
            let path = out.join(format!("{}.dat", block_stem(name, solver, delta)));
            m.write(&path)?;
            files.push(path);
            if name == "P" || name == "Q" {
                let path = out.join(format!("{}_zero.dat", block_stem(name, solver, delta)));
                write_contour(&path, name, &m.zero_contour())?;
                files.push(path);
            }
        }
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    check_budget(Mode::Grid, rows.len(), failed, files)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ZenoCheckRow {
    delta: f64,
    tau: f64,
    n_dcg: Option<f64>,
    n_zeno: Option<f64>,
    n_zeno_printed: Option<f64>,
    #[serde(rename = "dn_R_dcg")]
    dn_r_dcg: Option<f64>,
    #[serde(rename = "dn_R_zeno")]
    dn_r_zeno: Option<f64>,
    #[serde(rename = "dn_R_rel")]
    dn_r_rel: Option<f64>,
    #[serde(rename = "dE_fb_dcg")]
    de_dcg: Option<f64>,
    #[serde(rename = "dE_fb_zeno")]
    de_zeno: Option<f64>,
    #[serde(rename = "dE_fb_rel")]
    de_rel: Option<f64>,
    smallness: Option<f64>,
    delta_tilde: Option<f64>,
    status: String,
}

fn zeno_check_point(system: &SystemConfig, tau: f64, delta: f64) -> ZenoCheckRow {
    let cfg = system.with_delta(delta);
    let compute = || -> Result<ZenoCheckRow, DemonError> {
        let g = zeno_coefficients(&cfg)?;
        let occ = occupation_from(&g);
        let z = moments_from(&g, occ.fixed_point, tau);
        let full = analyze_period(Solver::Dcg, tau, &cfg)?;
        let rel = |a: f64, b: f64| a / b - 1.0;
        Ok(ZenoCheckRow {
            delta,
            tau,
            n_dcg: Some(full.stationary.sigma.p_filled),
            n_zeno: Some(occ.fixed_point),
            n_zeno_printed: Some(occ.filled_only),
            dn_r_dcg: Some(full.moments.dn.right),
            dn_r_zeno: Some(z.dn.right),
            dn_r_rel: Some(rel(z.dn.right, full.moments.dn.right)),
            de_dcg: Some(full.moments.de.total()),
            de_zeno: Some(z.de.total()),
            de_rel: Some(rel(z.de.total(), full.moments.de.total())),
            smallness: Some(g.max_rate() * tau),
            delta_tilde: Some(delta_tilde(&cfg)?),
            status: "ok".into(),
        })
    };
    compute().unwrap_or_else(|e| ZenoCheckRow {
        delta,
        tau,
        n_dcg: None,
        n_zeno: None,
        n_zeno_printed: None,
        dn_r_dcg: None,
        dn_r_zeno: None,
        dn_r_rel: None,
        de_dcg: None,
        de_zeno: None,
        de_rel: None,
        smallness: None,
        delta_tilde: None,
        status: format!("failed:{}", e.kind()),
    })
}

/// Short-time expansion against the full coarse-grained pipeline.
pub fn run_zeno_check(cfg: &RunConfig, out: &Path) -> SweepResult<RunSummary> {
    let system = cfg.system();
    let spec = &cfg.zeno_check;
    let jobs: Vec<(f64, f64)> = spec.deltas.iter().flat_map(|&d| spec.taus.iter().map(move |&t| (d, t))).collect();
    let rows: Vec<ZenoCheckRow> = jobs.par_iter().map(|&(d, t)| zeno_check_point(&system, t, d)).collect();
    let path = out.join("zeno_check.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    check_budget(Mode::ZenoCheck, rows.len(), failed, vec![path])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct BenchmarkRow {
    quantity: String,
    reference: Option<f64>,
    exact: f64,
    rel_diff: Option<f64>,
}

/// Exact feedback dynamics on discretized leads against the stationary
/// master-equation result for the configured feedback.
pub fn run_benchmark(cfg: &RunConfig, out: &Path) -> SweepResult<RunSummary> {
    let list = solvers(cfg, &[SolverKind::Dcg], &[SolverKind::Dcg, SolverKind::Bms], "benchmark")?;
    let system = cfg.system();
    let b = &cfg.benchmark;
    let probe = ExactModel::new(&system, Outcome::Empty, b.modes_per_lead);
    if b.tau >= probe.horizon() {
        return Err(SweepError::Config(format!(
            "tau = {} exceeds the recurrence horizon {} of {} modes per lead",
            b.tau,
            probe.horizon(),
            b.modes_per_lead
        )));
    }
    let engine = FeedbackEngine::new(&system, b.modes_per_lead, b.tau)?;
    let mut rows = Vec::new();
    for solver in list {
        let s = if solver == SolverKind::Bms { Solver::Bms } else { Solver::Dcg };
        let reference = analyze_period(s, b.tau, &system)?;
        let initial = engine.initial_state(&system, reference.stationary.sigma.p_filled);
        let run = if b.periods <= MAX_EXHAUSTIVE_PERIODS {
            engine.exhaustive(&initial, b.periods)
        } else {
            engine.monte_carlo(&initial, b.periods, b.samples, b.seed)
        };
        let mut push = |q: String, r: Option<f64>, e: f64| {
            rows.push(BenchmarkRow { quantity: q, reference: r, exact: e, rel_diff: r.map(|r| e / r - 1.0) });
        };
        let m = reference.moments;
        for lead in Reservoir::ALL {
            let tag = if lead == Reservoir::Left { "L" } else { "R" };
            push(format!("{}:dn_{tag}", solver.name()), Some(m.dn[lead]), run.dn[lead]);
            push(format!("{}:dE_{tag}", solver.name()), Some(m.de[lead]), run.de[lead]);
        }
        push(format!("{}:dE_fb", solver.name()), Some(m.de.total()), run.de.total());
        push(format!("{}:measurement_energy", solver.name()), Some(m.de.total()), run.measurement_energy);
        push("measurement_identity_residual".into(), None, run.measurement_identity_residual);
        push("conservation_residual".into(), None, run.conservation_residual);
        push("records".into(), None, run.records as f64);
    }
    let path = out.join("benchmark.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(RunSummary { mode: Mode::Benchmark, points: 1, failed: 0, files: vec![path] })
}
