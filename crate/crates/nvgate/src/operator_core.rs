//! Dense complex matrices for small spin registers.
//!
//! Basis convention: |0> = (1,0), |1> = (0,1) for every spin, electron is the
//! leftmost tensor factor. `sigma_z` is |1><1| - |0><0|, i.e. diag(-1, 1), and
//! `sigma_y` is chosen so that sigma_x sigma_y = i sigma_z holds.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type CMat = DMatrix<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMat {
    CMat::zeros(dim, dim)
}

pub fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn sigma_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., 1.), c(0., -1.), c(0., 0.)])
}

pub fn sigma_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(-1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)])
}

/// diag(1, -1): the textbook Pauli Z, kept for tests and interop.
pub fn pauli_z_standard() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// |i><j| on a `dim`-dimensional space.
pub fn ket_bra(dim: usize, i: usize, j: usize) -> CMat {
    let mut m = zeros(dim);
    m[(i, j)] = c(1., 0.);
    m
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `op` at position `site` of an `num_sites`-spin register, identities elsewhere.
pub fn embed(op: &CMat, site: usize, num_sites: usize) -> Result<CMat> {
    if op.nrows() != 2 || op.ncols() != 2 {
        return invalid(format!(
            "embed expects a 2x2 operator, got {}x{}",
            op.nrows(),
            op.ncols()
        ));
    }
    if site >= num_sites {
        return invalid(format!("site {site} out of range for {num_sites} sites"));
    }
    let mut out = CMat::identity(1, 1);
    let id2 = identity(2);
    for s in 0..num_sites {
        out = kron(&out, if s == site { op } else { &id2 });
    }
    Ok(out)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a - b))
}

pub fn hermiticity_error(h: &CMat) -> f64 {
    max_abs_diff(h, &h.adjoint())
}

pub fn unitarity_error(u: &CMat) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn trace(m: &CMat) -> Complex64 {
    m.trace()
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

fn check_square(m: &CMat, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return invalid(format!("{what}: matrix must be square and non-empty"));
    }
    Ok(())
}

/// Spectral decomposition H = V diag(w) V^dagger of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(h: &CMat) -> Result<Self> {
        check_square(h, "hermitian eigen")?;
        let scale = max_abs(h).max(1.0);
        let err = hermiticity_error(h);
        if err > HERMITIAN_TOL * scale {
            return Err(Error::ContractViolation(format!(
                "generator is not Hermitian (deviation {err:.3e})"
            )));
        }
        // symmetrize so the eigensolver sees an exactly Hermitian input
        let hs = (h + h.adjoint()).scale(0.5);
        let eig = hs.symmetric_eigen();
        Ok(Self {
            values: eig.eigenvalues.iter().cloned().collect(),
            vectors: eig.eigenvectors,
        })
    }

    /// exp(-i * sign * H * t)
    pub fn exp(&self, t: f64, sign: f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &w) in self.values.iter().enumerate() {
            let ph = Complex64::from_polar(1.0, -sign * w * t);
            for i in 0..n {
                scaled[(i, j)] *= ph;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// exp(sign * (-i) * H * t) by spectral decomposition.
pub fn exp_hermitian(h: &CMat, t: f64, sign: f64) -> Result<CMat> {
    if !(t >= 0.0) || !t.is_finite() {
        return invalid(format!("time must be finite and non-negative, got {t}"));
    }
    if sign != 1.0 && sign != -1.0 {
        return invalid("sign must be +1 or -1");
    }
    Ok(HermitianEigen::new(h)?.exp(t, sign))
}

/// U^k by repeated squaring.
pub fn matrix_power(u: &CMat, k: u64) -> CMat {
    let mut result = identity(u.nrows());
    let mut base = u.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Hermitian G with U = exp(-i G), eigenphases on the principal branch (-pi, pi].
///
/// U is normal, so its Hermitian and anti-Hermitian parts commute and share an
/// eigenbasis; a generic real combination of the two is diagonalized instead of
/// running a non-Hermitian eigensolver.
pub fn unitary_generator(u: &CMat) -> Result<CMat> {
    check_square(u, "unitary generator")?;
    let err = unitarity_error(u);
    if err > 1e-8 {
        return Err(Error::ContractViolation(format!(
            "matrix is not unitary (deviation {err:.3e})"
        )));
    }
    let ud = u.adjoint();
    let re = (u + &ud).scale(0.5);
    let im = (u - &ud) * c(0.0, -0.5);
    let mix = &re + im.scale(0.618_033_988_749_894_9);
    let eig = HermitianEigen::new(&mix)?;
    let v = &eig.vectors;
    let n = u.nrows();
    let d = v.adjoint() * u * v;
    let mut g = zeros(n);
    for j in 0..n {
        let theta = d[(j, j)].arg();
        g[(j, j)] = c(-theta, 0.0);
    }
    let out = v * g * v.adjoint();
    Ok((&out + out.adjoint()).scale(0.5))
}

/// Partial trace over the sites listed in `traced` (each a qubit) of an operator on `num_sites` qubits.
pub fn partial_trace(rho: &CMat, num_sites: usize, traced: &[usize]) -> Result<CMat> {
    let dim = 1usize << num_sites;
    if rho.nrows() != dim || rho.ncols() != dim {
        return invalid("partial trace: dimension does not match site count");
    }
    if traced.iter().any(|&s| s >= num_sites) {
        return invalid("partial trace: site out of range");
    }
    let kept: Vec<usize> = (0..num_sites).filter(|s| !traced.contains(s)).collect();
    let kd = 1usize << kept.len();
    let td = 1usize << traced.len();
    let compose = |k: usize, t: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &s) in kept.iter().enumerate() {
            let bit = (k >> (kept.len() - 1 - pos)) & 1;
            idx |= bit << (num_sites - 1 - s);
        }
        for (pos, &s) in traced.iter().enumerate() {
            let bit = (t >> (traced.len() - 1 - pos)) & 1;
            idx |= bit << (num_sites - 1 - s);
        }
        idx
    };
    let mut out = zeros(kd);
    for a in 0..kd {
        for b in 0..kd {
            let mut acc = c(0., 0.);
            for t in 0..td {
                acc += rho[(compose(a, t), compose(b, t))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}
