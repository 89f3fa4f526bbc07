//! Long-format CSV rows, matrix files and zero contours.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use demon_core::feedback::FcsMoments;
use demon_core::thermo::{gain_from, heat_from, power_from, ThermoReport};
use demon_core::zeno::ZenoMoments;
use demon_core::{DemonError, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::SweepResult;

/// One grid or scan point. Undefined quantities are empty fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "V")]
    pub v: f64,
    pub tau: f64,
    pub delta: f64,
    #[serde(rename = "I_m")]
    pub i_m: Option<f64>,
    #[serde(rename = "P")]
    pub p: Option<f64>,
    #[serde(rename = "dE_fb")]
    pub de_fb: Option<f64>,
    #[serde(rename = "G")]
    pub g: Option<f64>,
    #[serde(rename = "Q_L")]
    pub q_l: Option<f64>,
    #[serde(rename = "Q_R")]
    pub q_r: Option<f64>,
    #[serde(rename = "Q")]
    pub q: Option<f64>,
    #[serde(rename = "dS_sys")]
    pub ds_sys: Option<f64>,
    #[serde(rename = "dS_res")]
    pub ds_res: Option<f64>,
    pub info: Option<f64>,
    pub eta: Option<f64>,
    pub n_s: Option<f64>,
    pub phi2: Option<f64>,
    pub solver: String,
    pub status: String,
    /// `max_rate * tau` for short-time expansion rows.
    pub smallness: Option<f64>,
}

impl SweepRow {
    fn empty(v: f64, tau: f64, delta: f64, solver: &str, status: String) -> Self {
        Self {
            v,
            tau,
            delta,
            i_m: None,
            p: None,
            de_fb: None,
            g: None,
            q_l: None,
            q_r: None,
            q: None,
            ds_sys: None,
            ds_res: None,
            info: None,
            eta: None,
            n_s: None,
            phi2: None,
            solver: solver.to_string(),
            status,
            smallness: None,
        }
    }

    pub fn from_report(delta: f64, solver: &str, r: &ThermoReport) -> Self {
        Self {
            i_m: Some(r.current),
            p: Some(r.power),
            de_fb: Some(r.feedback_energy),
            g: r.gain,
            q_l: Some(r.heat.left),
            q_r: Some(r.heat.right),
            q: Some(r.heat_total),
            ds_sys: Some(r.entropy_sys),
            ds_res: Some(r.entropy_res),
            info: Some(r.information),
            eta: r.efficiency,
            n_s: Some(r.occupation),
            phi2: Some(r.relaxation_eigenvalue),
            ..Self::empty(r.bias, r.tau, delta, solver, "ok".into())
        }
    }

    /// Row from the short-time expansion; entropy columns stay empty.
    pub fn from_zeno(delta: f64, tau: f64, config: &SystemConfig, m: &ZenoMoments, smallness: f64) -> Self {
        let v = config.bias();
        let moments = FcsMoments { dn: m.dn, de: m.de, branch: None, p_branch: 1.0 };
        let heat = heat_from(&moments, config);
        let power = power_from(m.dn.right, v, tau);
        let de_fb = m.de.total();
        Self {
            i_m: Some(m.dn.right / tau),
            p: Some(power),
            de_fb: Some(de_fb),
            g: gain_from(power, tau, de_fb),
            q_l: Some(heat.left),
            q_r: Some(heat.right),
            q: Some(heat.total()),
            n_s: Some(m.occupation),
            smallness: Some(smallness),
            ..Self::empty(v, tau, delta, "zeno", "ok".into())
        }
    }

    pub fn failed(v: f64, tau: f64, delta: f64, solver: &str, err: &DemonError) -> Self {
        Self::empty(v, tau, delta, solver, format!("failed:{}", err.kind()))
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn write_rows(path: &Path, rows: &[SweepRow]) -> SweepResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> SweepResult<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<SweepRow>, _>>()?)
}

/// Observable on a (tau, V) grid: `values[i][j]` belongs to `taus[i]`,
/// `vs[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub name: String,
    pub vs: Vec<f64>,
    pub taus: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x}"))
}

fn fmt_axis(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

impl Matrix {
    /// Text form: `#` header lines with both axes, then one line per period
    /// with one column per bias; undefined entries are `nan`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# observable: {}", self.name);
        let _ = writeln!(s, "# rows: tau, columns: V");
        let _ = writeln!(s, "# V: {}", fmt_axis(&self.vs));
        let _ = writeln!(s, "# tau: {}", fmt_axis(&self.taus));
        for row in &self.values {
            let line: Vec<String> = row.iter().map(|v| fmt_value(*v)).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn parse(text: &str) -> Option<Self> {
        let mut name = None;
        let mut vs = None;
        let mut taus = None;
        let mut values = Vec::new();
        let axis = |rest: &str| rest.split_whitespace().map(|x| x.parse().ok()).collect::<Option<Vec<f64>>>();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# observable: ") {
                name = Some(rest.to_string());
            } else if let Some(rest) = line.strip_prefix("# V: ") {
                vs = axis(rest);
            } else if let Some(rest) = line.strip_prefix("# tau: ") {
                taus = axis(rest);
            } else if !line.starts_with('#') && !line.trim().is_empty() {
                let row = line
                    .split_whitespace()
                    .map(|x| if x == "nan" { Some(None) } else { x.parse().ok().map(Some) })
                    .collect::<Option<Vec<Option<f64>>>>()?;
                values.push(row);
            }
        }
        Some(Self { name: name?, vs: vs?, taus: taus?, values })
    }

    pub fn write(&self, path: &Path) -> SweepResult<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Line segments of the zero level set, by marching squares in
    /// `(V, ln tau)` with linear interpolation along cell edges.
    pub fn zero_contour(&self) -> Vec<[(f64, f64); 2]> {
        let mut segments = Vec::new();
        let lt: Vec<f64> = self.taus.iter().map(|t| t.ln()).collect();
        for i in 0..self.taus.len().saturating_sub(1) {
            for j in 0..self.vs.len().saturating_sub(1) {
                let corners = [(i, j), (i, j + 1), (i + 1, j + 1), (i + 1, j)];
                let vals: Option<Vec<f64>> = corners.iter().map(|&(a, b)| self.values[a][b]).collect();
                let Some(vals) = vals else { continue };
                let mut hits = Vec::new();
                for k in 0..4 {
                    let (a, b) = (vals[k], vals[(k + 1) % 4]);
                    if (a > 0.0) != (b > 0.0) {
                        let f = a / (a - b);
                        let (p, q) = (corners[k], corners[(k + 1) % 4]);
                        let v = self.vs[p.1] + f * (self.vs[q.1] - self.vs[p.1]);
                        let l = lt[p.0] + f * (lt[q.0] - lt[p.0]);
                        hits.push((v, l.exp()));
                    }
                }
                match hits.len() {
                    2 => segments.push([hits[0], hits[1]]),
                    4 => {
                        let centre = vals.iter().sum::<f64>() / 4.0;
                        // cut off the two corners whose sign differs from the centre
                        if (centre > 0.0) == (vals[0] > 0.0) {
                            segments.push([hits[0], hits[1]]);
                            segments.push([hits[2], hits[3]]);
                        } else {
                            segments.push([hits[0], hits[3]]);
                            segments.push([hits[1], hits[2]]);
                        }
                    }
                    _ => {}
                }
            }
        }
        segments
    }
}

/// Segments as `V tau` pairs separated by blank lines.
pub fn write_contour(path: &Path, name: &str, segments: &[[(f64, f64); 2]]) -> SweepResult<()> {
    let mut s = format!("# zero contour of {name}: V tau\n");
    for [a, b] in segments {
        let _ = writeln!(s, "{} {}\n{} {}\n", a.0, a.1, b.0, b.1);
    }
    fs::write(path, s)?;
    Ok(())
}

/// Display clip for the gain map.
pub fn clip_gain(g: Option<f64>) -> Option<f64> {
    g.filter(|g| *g > 0.0 && *g < 40.0)
}
