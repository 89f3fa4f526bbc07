//! Globally adaptive 21-point Gauss–Kronrod quadrature for vector-valued
//! integrands on finite or semi-infinite intervals.
//!
//! All components share the same nodes, so quantities that are later
//! differenced against each other (tilted rates at neighbouring counting
//! fields) carry correlated discretization errors.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{DemonError, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_005_695,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights belonging to the odd Kronrod nodes `XGK[1], XGK[3], ...`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSettings {
    /// Target for the summed absolute error estimate (max over components).
    pub abs_tol: f64,
    /// Relative target, applied to the largest component magnitude; the
    /// looser of the two targets wins.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Maximum number of bisections after the initial partition.
    pub max_subdivisions: usize,
    /// Maximum number of panels in the initial partition.
    pub max_initial_panels: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_subdivisions: 100_000,
            max_initial_panels: 10_000,
        }
    }
}

fn default_rel_tol() -> f64 {
    1e-12
}

impl QuadSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol >= 0.0) || self.max_subdivisions == 0 || self.max_initial_panels == 0 {
            return Err(DemonError::InvalidConfig(
                "quadrature tolerance and budgets must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    /// `x = s`
    Identity,
    /// `x = anchor - (1 - s)/s`, `s` in (0, 1]
    LeftTail(f64),
    /// `x = anchor + (1 - s)/s`, `s` in (0, 1]
    RightTail(f64),
}

impl Map {
    /// Abscissa and Jacobian.
    fn apply(self, s: f64) -> (f64, f64) {
        match self {
            Map::Identity => (s, 1.0),
            Map::LeftTail(a) => (a - (1.0 - s) / s, 1.0 / (s * s)),
            Map::RightTail(a) => (a + (1.0 - s) / s, 1.0 / (s * s)),
        }
    }
}

struct Panel {
    map: Map,
    a: f64,
    b: f64,
    result: Vec<f64>,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One Gauss–Kronrod panel. Returns the Kronrod estimate and the largest
/// component error.
fn gauss_kronrod<F>(f: &F, dim: usize, map: Map, a: f64, b: f64, buf: &mut [Vec<f64>; 2]) -> (Vec<f64>, f64)
where
    F: Fn(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |s: f64, out: &mut [f64]| {
        let (x, jac) = map.apply(s);
        f(x, out);
        if jac != 1.0 {
            out.iter_mut().for_each(|v| *v *= jac);
        }
    };

    // One row of 21 evaluations per component.
    let mut values = vec![0.0; 21 * dim];
    let mut tmp = std::mem::take(&mut buf[0]);
    tmp.resize(dim, 0.0);
    let mut nodes = [0.0; 21];
    nodes[0] = center;
    for j in 0..10 {
        nodes[1 + 2 * j] = center - half * XGK[j];
        nodes[2 + 2 * j] = center + half * XGK[j];
    }
    for (k, &s) in nodes.iter().enumerate() {
        tmp.iter_mut().for_each(|v| *v = 0.0);
        eval(s, &mut tmp);
        values[k * dim..(k + 1) * dim].copy_from_slice(&tmp);
    }
    buf[0] = tmp;

    let mut result = vec![0.0; dim];
    let mut worst = 0.0f64;
    for c in 0..dim {
        let fc = values[c];
        let mut kron = WGK[10] * fc;
        let mut gauss = 0.0;
        let mut res_abs = (WGK[10] * fc).abs();
        for j in 0..10 {
            let f1 = values[(1 + 2 * j) * dim + c];
            let f2 = values[(2 + 2 * j) * dim + c];
            kron += WGK[j] * (f1 + f2);
            res_abs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                gauss += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * kron;
        let mut res_asc = WGK[10] * (fc - mean).abs();
        for j in 0..10 {
            let f1 = values[(1 + 2 * j) * dim + c];
            let f2 = values[(2 + 2 * j) * dim + c];
            res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
        }
        let h = half.abs();
        let err = rescale_error((kron - gauss) * half, res_abs * h, res_asc * h);
        result[c] = kron * half;
        worst = worst.max(err);
    }
    (result, worst)
}

/// Integrate a `dim`-component integrand over `[lo, hi]`, where either end
/// may be infinite. `breakpoints` inside the interval seed the initial
/// partition (duplicates and points outside are ignored).
pub fn integrate<F>(
    f: F,
    dim: usize,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    settings: &QuadSettings,
) -> Result<Vec<f64>>
where
    F: Fn(f64, &mut [f64]),
{
    if !(lo < hi) {
        return Ok(vec![0.0; dim]);
    }
    let mut points: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    if lo.is_finite() {
        points.push(lo);
    }
    if hi.is_finite() {
        points.push(hi);
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));
    if points.is_empty() {
        points.push(0.0);
    }
    let points = thin_points(points, settings.max_initial_panels);

    let mut segments: Vec<(Map, f64, f64)> = Vec::new();
    if lo == f64::NEG_INFINITY {
        segments.push((Map::LeftTail(points[0]), 0.0, 1.0));
    }
    for w in points.windows(2) {
        segments.push((Map::Identity, w[0], w[1]));
    }
    if hi == f64::INFINITY {
        segments.push((Map::RightTail(*points.last().unwrap()), 0.0, 1.0));
    }

    let mut buf = [Vec::new(), Vec::new()];
    let mut heap = BinaryHeap::with_capacity(segments.len() + settings.max_subdivisions);
    let mut total_err = 0.0;
    for (map, a, b) in segments {
        let (result, error) = gauss_kronrod(&f, dim, map, a, b, &mut buf);
        total_err += error;
        heap.push(Panel { map, a, b, result, error });
    }
    // Panels too narrow to bisect further.
    let mut frozen: Vec<Panel> = Vec::new();
    let mut frozen_err = 0.0;

    let target = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        let mut acc = vec![0.0; dim];
        for p in heap.iter().chain(frozen.iter()) {
            for (a, r) in acc.iter_mut().zip(&p.result) {
                *a += r;
            }
        }
        let scale = acc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        settings.abs_tol.max(settings.rel_tol * scale)
    };
    let mut tol = target(&heap, &frozen);

    let mut splits = 0;
    while total_err > tol {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) <= 1e-13 * worst.a.abs().max(worst.b.abs()) {
            frozen_err += worst.error;
            frozen.push(worst);
            continue;
        }
        if splits >= settings.max_subdivisions {
            heap.push(worst);
            break;
        }
        splits += 1;
        let (r1, e1) = gauss_kronrod(&f, dim, worst.map, worst.a, mid, &mut buf);
        let (r2, e2) = gauss_kronrod(&f, dim, worst.map, mid, worst.b, &mut buf);
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { map: worst.map, a: worst.a, b: mid, result: r1, error: e1 });
        heap.push(Panel { map: worst.map, a: mid, b: worst.b, result: r2, error: e2 });
        // Recompute the running sum now and then to avoid drift.
        if splits % 512 == 0 {
            total_err = heap.iter().map(|p| p.error).sum::<f64>() + frozen_err;
            tol = target(&heap, &frozen);
        }
        if total_err <= tol {
            tol = target(&heap, &frozen);
        }
    }
    total_err = heap.iter().map(|p| p.error).sum::<f64>() + frozen_err;
    if total_err > target(&heap, &frozen) {
        return Err(DemonError::QuadratureFailure {
            requested: settings.abs_tol,
            achieved: total_err,
            budget: settings.max_subdivisions,
        });
    }

    let mut acc = vec![0.0; dim];
    for p in heap.iter().chain(frozen.iter()) {
        for (a, r) in acc.iter_mut().zip(&p.result) {
            *a += r;
        }
    }
    Ok(acc)
}

/// Keep at most `max_panels + 1` points, always retaining both ends.
fn thin_points(points: Vec<f64>, max_panels: usize) -> Vec<f64> {
    if points.len() <= max_panels + 1 {
        return points;
    }
    let stride = (points.len() - 1).div_ceil(max_panels);
    let last = *points.last().unwrap();
    let mut out: Vec<f64> = points.into_iter().step_by(stride).collect();
    if *out.last().unwrap() != last {
        out.push(last);
    }
    out
}

/// Scalar convenience wrapper.
pub fn integrate_scalar<F>(f: F, lo: f64, hi: f64, breakpoints: &[f64], settings: &QuadSettings) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate(|x, out| out[0] = f(x), 1, lo, hi, breakpoints, settings).map(|v| v[0])
}
