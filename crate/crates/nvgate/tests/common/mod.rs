#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use nvgate::operator_core::CMat;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(r: &mut impl Rng, dim: usize) -> CMat {
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
    });
    (&a + a.adjoint()).scale(0.5)
}

/// Truncated Taylor series of exp(-i sign H t).
pub fn taylor_exp(h: &CMat, t: f64, sign: f64, terms: usize) -> CMat {
    let n = h.nrows();
    let x = h.scale(t) * Complex64::new(0.0, -sign);
    let mut term = CMat::identity(n, n);
    let mut sum = term.clone();
    for k in 1..terms {
        term = &term * &x / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    sum
}

/// exp(-i H t) as a product of short Taylor steps.
pub fn stepped_exp(h: &CMat, t: f64, steps: usize) -> CMat {
    let one = taylor_exp(h, t / steps as f64, 1.0, 25);
    let mut out = CMat::identity(h.nrows(), h.nrows());
    for _ in 0..steps {
        out = &one * out;
    }
    out
}
