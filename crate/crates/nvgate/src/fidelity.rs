//! Process fidelities and first-order control-error diagnostics.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::evolution::Propagator;
use crate::operator_core::{c, dagger, operator_norm, sigma_x, sigma_y, sigma_z, CMat};
use crate::sequence::{generate, with_errors, SequenceSpec};
use crate::spin_model::SpinSystem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityValue {
    pub value: f64,
    pub dim: usize,
}

impl FidelityValue {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.value
    }
}

/// |tr(U^dagger V)|^2 / d^2, the overlap of the Choi states of U and V.
pub fn process_fidelity(u: &CMat, v: &CMat) -> Result<FidelityValue> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() || u.nrows() == 0 {
        return invalid("process fidelity needs two square matrices of equal size");
    }
    let d = u.nrows();
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            tr += u[(k, i)].conj() * v[(k, i)];
        }
    }
    Ok(FidelityValue {
        value: tr.norm_sqr() / (d * d) as f64,
        dim: d,
    })
}

/// |tr(P U^dagger V P)|^2 / rank(P)^2 for an orthogonal projector given by its basis indices.
pub fn subspace_process_fidelity(u: &CMat, v: &CMat, support: &[usize]) -> Result<FidelityValue> {
    if support.is_empty() {
        return invalid("projector has rank zero");
    }
    if u.shape() != v.shape() {
        return invalid("dimension mismatch");
    }
    if support.iter().any(|&i| i >= u.nrows()) {
        return invalid("projector index out of range");
    }
    let mut tr = Complex64::new(0.0, 0.0);
    for &i in support {
        for k in 0..u.nrows() {
            tr += u[(k, i)].conj() * v[(k, i)];
        }
    }
    let dp = support.len();
    Ok(FidelityValue {
        value: tr.norm_sqr() / (dp * dp) as f64,
        dim: dp,
    })
}

/// Basis indices of {e} x {|10>, |01>} x (any further spins) on the first two nuclei.
pub fn encoded_subspace(num_nuclei: usize) -> Vec<usize> {
    let n = num_nuclei + 1;
    (0..1usize << n)
        .filter(|&idx| {
            let b1 = (idx >> (n - 2)) & 1;
            let b2 = (idx >> (n - 3)) & 1;
            b1 != b2
        })
        .collect()
}

/// exp(-i angle (delta sz/2 + (1+eps)(cos(phase) sx + sin(phase) sy)/2)).
pub fn pulse_error_unitary(angle: f64, phase: f64, delta: f64, eps: f64) -> CMat {
    // closed form of a spin-1/2 rotation
    let a = 1.0 + eps;
    let n = [a * phase.cos(), a * phase.sin(), delta];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len == 0.0 {
        return crate::operator_core::identity(2);
    }
    let half = angle * len / 2.0;
    let gen =
        sigma_x().scale(n[0] / len) + sigma_y().scale(n[1] / len) + sigma_z().scale(n[2] / len);
    crate::operator_core::identity(2).scale(half.cos()) - gen * c(0.0, half.sin())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Detuning,
    Amplitude,
}

/// Operator norm of U0^dagger dU/dx at x = 0 for the electron alone.
///
/// Central differences at two step sizes; they must agree to 1 percent
/// (or both be negligible).
pub fn first_order_error_derivative(spec: &SequenceSpec, which: ErrorKind) -> Result<f64> {
    let schedule = generate(spec)?;
    let system = SpinSystem::new(vec![])?;
    let prop = Propagator::new(&system);
    let u0 = prop.schedule_unitary(&schedule)?;
    let at = |x: f64| -> Result<CMat> {
        let s = match which {
            ErrorKind::Detuning => with_errors(&schedule, x, 0.0),
            ErrorKind::Amplitude => with_errors(&schedule, 0.0, x),
        };
        prop.schedule_unitary(&s)
    };
    let deriv = |h: f64| -> Result<f64> {
        let d = (at(h)? - at(-h)?).scale(0.5 / h);
        Ok(operator_norm(&(dagger(&u0) * d)))
    };
    let d1 = deriv(1e-5)?;
    let d2 = deriv(1e-6)?;
    let scale = d1.abs().max(d2.abs());
    if scale > 1e-6 && (d1 - d2).abs() > 0.01 * scale {
        return Err(Error::NumericalFailure(format!(
            "finite differences disagree: {d1:.6e} vs {d2:.6e}"
        )));
    }
    Ok(d2)
}
