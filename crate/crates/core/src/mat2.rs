//! Closed-form exponential of 2×2 complex matrices.
//!
//! With `m = tr(A)/2`, `B = A - m I` and `s² = -det B`, Cayley–Hamilton gives
//! `B² = s² I` and therefore `exp(A) = e^m (cosh s I + sinh(s)/s B)`. Both
//! `cosh s` and `sinh(s)/s` are even in `s`, so the branch of the square root
//! is irrelevant; coinciding eigenvalues (`2|s|` below [`DEGENERATE_GAP`]) are
//! handled by the series of `sinh(s)/s`.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat2 = Matrix2<C64>;
pub type CVec2 = Vector2<C64>;

/// Eigenvalue gap below which the degenerate branch is used.
pub const DEGENERATE_GAP: f64 = 1e-12;

const ONE: C64 = C64::new(1.0, 0.0);

struct Split {
    m: C64,
    b: CMat2,
    s2: C64,
    s: C64,
}

fn split(a: &CMat2) -> Split {
    let m = (a[(0, 0)] + a[(1, 1)]) * 0.5;
    let b = a - CMat2::identity() * m;
    let h = (a[(0, 0)] - a[(1, 1)]) * 0.5;
    let s2 = h * h + a[(0, 1)] * a[(1, 0)];
    Split { m, b, s2, s: s2.sqrt() }
}

fn sinhc(s: C64, s2: C64) -> C64 {
    if 2.0 * s.norm() < DEGENERATE_GAP {
        ONE + s2 / 6.0
    } else {
        s.sinh() / s
    }
}

/// Series of `(cosh s - sinh(s)/s) / (2 s²)`, the derivative of
/// `sinh(s)/s` with respect to `s²`, for small `|s|`.
fn sinhc_slope(s2: C64) -> C64 {
    C64::new(1.0 / 6.0, 0.0) + s2 / 60.0 + s2 * s2 / 1680.0
}

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn expm1(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    let half_sin = (0.5 * y).sin();
    let ex = x.exp();
    C64::new(x.exp_m1() * y.cos() - 2.0 * half_sin * half_sin, ex * y.sin())
}

/// `cosh(s) - 1` without cancellation.
fn coshm1(s: C64) -> C64 {
    let h = (s * 0.5).sinh();
    h * h * 2.0
}

/// `(e^m cosh s, e^m sinh s)` without overflow when `e^m` and `cosh s` are
/// individually out of range (stiff generators at long times).
fn scaled_hyperbolic(m: C64, s: C64) -> (C64, C64) {
    if s.re.abs() < 1.0 {
        let em = m.exp();
        (em * s.cosh(), em * s.sinh())
    } else {
        let ep = (m + s).exp();
        let en = (m - s).exp();
        ((ep + en) * 0.5, (ep - en) * 0.5)
    }
}

/// `e^m sinh(s)/s`
fn scaled_sinhc(m: C64, s: C64, s2: C64, es: C64) -> C64 {
    if s.norm() < 1.0 {
        m.exp() * sinhc(s, s2)
    } else {
        es / s
    }
}

pub fn expm(a: &CMat2) -> CMat2 {
    let Split { m, b, s2, s } = split(a);
    let (ec, es) = scaled_hyperbolic(m, s);
    CMat2::identity() * ec + b * scaled_sinhc(m, s, s2, es)
}

/// `exp(A) - I`, accurate when `A` is small.
pub fn expm_minus_identity(a: &CMat2) -> CMat2 {
    let Split { m, b, s2, s } = split(a);
    if m.norm() >= 1.0 || s.norm() >= 1.0 {
        return expm(a) - CMat2::identity();
    }
    let em = m.exp();
    let diag = expm1(m) * s.cosh() + coshm1(s);
    CMat2::identity() * diag + b * (em * sinhc(s, s2))
}

/// Directional (Fréchet) derivative `d/dx exp(A + x E)` at `x = 0`.
pub fn expm_frechet(a: &CMat2, e: &CMat2) -> CMat2 {
    let Split { m, b, s2, s } = split(a);
    let dm = (e[(0, 0)] + e[(1, 1)]) * 0.5;
    let db = e - CMat2::identity() * dm;
    let h = (a[(0, 0)] - a[(1, 1)]) * 0.5;
    let dh = (e[(0, 0)] - e[(1, 1)]) * 0.5;
    let ds2 = h * dh * 2.0 + e[(0, 1)] * a[(1, 0)] + a[(0, 1)] * e[(1, 0)];
    let (ec, es) = scaled_hyperbolic(m, s);
    let sc = scaled_sinhc(m, s, s2, es);
    let slope_coeff = if s.norm() < 1e-3 {
        m.exp() * sinhc_slope(s2)
    } else {
        (ec - sc) / (s2 * 2.0)
    };
    let value = CMat2::identity() * ec + b * sc;
    let slope = CMat2::identity() * (sc * 0.5) + b * slope_coeff;
    value * dm + slope * ds2 + db * sc
}

pub fn real_vec(v: [f64; 2]) -> CVec2 {
    CVec2::new(C64::new(v[0], 0.0), C64::new(v[1], 0.0))
}
