//! Brute-force many-body oracle on the full Fock space of a few fermionic
//! modes.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

/// Annihilation operators with Jordan–Wigner signs; bit `x` of a basis
/// index is the occupation of mode `x`.
pub fn annihilators(modes: usize) -> Vec<DMatrix<C64>> {
    let dim = 1 << modes;
    (0..modes)
        .map(|x| {
            let mut c = DMatrix::zeros(dim, dim);
            for s in 0..dim {
                if s & (1 << x) != 0 {
                    let below = (s & ((1 << x) - 1)).count_ones();
                    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                    c[(s ^ (1 << x), s)] = C64::new(sign, 0.0);
                }
            }
            c
        })
        .collect()
}

/// `exp(-sum K_xy c_x^† c_y) / Z` for a random Hermitian `K`.
pub fn random_gaussian_state(rng: &mut impl Rng, ops: &[DMatrix<C64>]) -> DMatrix<C64> {
    let m = ops.len();
    let dim = ops[0].nrows();
    let mut k = DMatrix::<C64>::zeros(m, m);
    for x in 0..m {
        k[(x, x)] = C64::new(rng.gen_range(-2.0..2.0), 0.0);
        for y in x + 1..m {
            let v = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            k[(x, y)] = v;
            k[(y, x)] = v.conj();
        }
    }
    let mut q = DMatrix::<C64>::zeros(dim, dim);
    for x in 0..m {
        for y in 0..m {
            q += ops[x].adjoint() * &ops[y] * k[(x, y)];
        }
    }
    let rho = (-q).exp();
    let z = rho.trace();
    rho / z
}

/// `C_xy = Tr(rho c_x^† c_y)`
pub fn correlation(rho: &DMatrix<C64>, ops: &[DMatrix<C64>]) -> DMatrix<C64> {
    let m = ops.len();
    DMatrix::from_fn(m, m, |x, y| (rho * ops[x].adjoint() * &ops[y]).trace())
}

/// Projective measurement of mode 0: conditional state and probability.
pub fn project(rho: &DMatrix<C64>, ops: &[DMatrix<C64>], filled: bool) -> (DMatrix<C64>, f64) {
    let n = ops[0].adjoint() * &ops[0];
    let p = if filled { n } else { DMatrix::identity(n.nrows(), n.ncols()) - n };
    let out = &p * rho * &p;
    let prob = out.trace().re;
    (out / C64::new(prob, 0.0), prob)
}
