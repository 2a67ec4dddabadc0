//! Electron plus up to three nuclei in the electron rotating frame.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::operator_core::{embed, sigma_x, sigma_y, sigma_z, zeros, CMat};

pub const MAX_NUCLEI: usize = 3;

/// Reduced Planck constant in J s.
const HBAR: f64 = 1.054_571_817e-34;
/// mu_0 / 4 pi in T m / A.
const MU0_OVER_4PI: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    /// Larmor frequency, rad/us.
    pub omega_l: f64,
    /// Transverse hyperfine coupling, rad/us, non-negative.
    pub a_perp: f64,
    /// Parallel hyperfine coupling, rad/us.
    pub a_par: f64,
    pub label: String,
}

impl Nucleus {
    pub fn new(omega_l: f64, a_perp: f64, a_par: f64, label: impl Into<String>) -> Result<Self> {
        if !(omega_l > 0.0) || !omega_l.is_finite() {
            return invalid(format!("omega_L must be positive, got {omega_l}"));
        }
        if !a_perp.is_finite() || !a_par.is_finite() {
            return invalid("hyperfine couplings must be finite");
        }
        // sign of a_perp is a choice of transverse axis
        Ok(Self {
            omega_l,
            a_perp: a_perp.abs(),
            a_par,
            label: label.into(),
        })
    }

    /// Soft checks that do not invalidate the nucleus.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.a_perp > self.omega_l / 10.0 {
            w.push(format!(
                "{}: a_perp = {:.4} rad/us exceeds omega_L/10; secular approximation is marginal",
                self.label, self.a_perp
            ));
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    pub nuclei: Vec<Nucleus>,
}

impl SpinSystem {
    pub fn new(nuclei: Vec<Nucleus>) -> Result<Self> {
        if nuclei.len() > MAX_NUCLEI {
            return invalid(format!("at most {MAX_NUCLEI} nuclei supported"));
        }
        for (i, a) in nuclei.iter().enumerate() {
            if nuclei[..i].iter().any(|b| b.label == a.label) {
                return invalid(format!("duplicate nucleus label '{}'", a.label));
            }
        }
        Ok(Self { nuclei })
    }

    pub fn num_sites(&self) -> usize {
        1 + self.nuclei.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.num_sites()
    }

    /// Same nuclei with every hyperfine coupling set to zero.
    pub fn uncoupled(&self) -> Self {
        Self {
            nuclei: self
                .nuclei
                .iter()
                .map(|n| Nucleus {
                    a_perp: 0.0,
                    a_par: 0.0,
                    ..n.clone()
                })
                .collect(),
        }
    }
}

/// Microwave drive on the electron during a pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub rabi: f64,
    pub phase: f64,
    pub detuning: f64,
    pub amplitude_factor: f64,
}

impl DriveParams {
    pub fn ideal(rabi: f64, phase: f64) -> Self {
        Self {
            rabi,
            phase,
            detuning: 0.0,
            amplitude_factor: 1.0,
        }
    }
}

/// Embedded single-spin operators of a register, built once.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub sx: CMat,
    pub sy: CMat,
    pub sz: CMat,
    pub ix: Vec<CMat>,
    pub iy: Vec<CMat>,
    pub iz: Vec<CMat>,
}

impl SpinOperators {
    pub fn new(num_nuclei: usize) -> Self {
        let n = num_nuclei + 1;
        let e = |op: &CMat, s: usize| embed(op, s, n).expect("site in range");
        let half = |m: CMat| m.scale(0.5);
        Self {
            sx: e(&sigma_x(), 0),
            sy: e(&sigma_y(), 0),
            sz: e(&sigma_z(), 0),
            ix: (1..n).map(|s| e(&half(sigma_x()), s)).collect(),
            iy: (1..n).map(|s| e(&half(sigma_y()), s)).collect(),
            iz: (1..n).map(|s| e(&half(sigma_z()), s)).collect(),
        }
    }
}

/// Hyperfine tensor row for a point dipole at `position` (nm), rad/us.
///
/// Prefactor is mu0 hbar gamma_e gamma_n / (4 pi r^3); gyromagnetic ratios in rad/(us T).
pub fn hyperfine_vector(position: [f64; 3], gamma_e: f64, gamma_n: f64) -> Result<[f64; 3]> {
    let r = norm3(position);
    if !(r > 0.0) {
        return invalid("position must have non-zero length");
    }
    let r_m = r * 1e-9;
    // gamma in rad/(s T) is 1e6 times the rad/(us T) value; result back to rad/us
    let pref = MU0_OVER_4PI * HBAR * (gamma_e * 1e6) * (gamma_n * 1e6) / r_m.powi(3) / 1e6;
    Ok(dipolar_direction(position).map(|x| pref * x))
}

/// z - 3 (z.r) r for unit r.
fn dipolar_direction(position: [f64; 3]) -> [f64; 3] {
    let r = norm3(position);
    let u = position.map(|x| x / r);
    let zr = u[2];
    [-3.0 * zr * u[0], -3.0 * zr * u[1], 1.0 - 3.0 * zr * u[2]]
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Nucleus parameters from the effective Larmor vector gamma_n B z + A/2.
pub fn nucleus_from_hyperfine(a: [f64; 3], gamma_n: f64, b_z: f64) -> Result<Nucleus> {
    if b_z < 0.0 {
        return invalid("B_z must be non-negative");
    }
    let w = [a[0] / 2.0, a[1] / 2.0, gamma_n * b_z + a[2] / 2.0];
    let omega_l = norm3(w);
    if !(omega_l > 0.0) {
        return Err(Error::DegenerateFrame(
            "effective Larmor vector vanishes".into(),
        ));
    }
    let a_par = (w[0] * a[0] + w[1] * a[1] + w[2] * a[2]) / omega_l;
    let a2 = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
    let a_perp = (a2 - a_par * a_par).max(0.0).sqrt();
    Nucleus::new(omega_l, a_perp, a_par, "geometric")
}

pub fn nucleus_from_geometry(
    position: [f64; 3],
    gamma_n: f64,
    b_z: f64,
    gamma_e: f64,
) -> Result<Nucleus> {
    let a = hyperfine_vector(position, gamma_e, gamma_n)?;
    nucleus_from_hyperfine(a, gamma_n, b_z)
}

/// Rotating-frame Hamiltonian, rad/us.
pub fn hamiltonian(system: &SpinSystem, drive: Option<&DriveParams>) -> CMat {
    hamiltonian_with_offset(system, drive, 0.0)
}

/// As [`hamiltonian`] plus a static electron offset `offset * sigma_z / 2`.
pub fn hamiltonian_with_offset(
    system: &SpinSystem,
    drive: Option<&DriveParams>,
    offset: f64,
) -> CMat {
    let ops = SpinOperators::new(system.nuclei.len());
    hamiltonian_from_ops(&ops, system, drive, offset)
}

pub(crate) fn hamiltonian_from_ops(
    ops: &SpinOperators,
    system: &SpinSystem,
    drive: Option<&DriveParams>,
    offset: f64,
) -> CMat {
    let mut h = zeros(system.dim());
    for (k, n) in system.nuclei.iter().enumerate() {
        h += ops.iz[k].scale(n.omega_l);
        let coupling = ops.ix[k].scale(n.a_perp) + ops.iz[k].scale(n.a_par);
        h += (&ops.sz * coupling).scale(0.5);
    }
    let mut detuning = offset;
    if let Some(d) = drive {
        detuning += d.detuning;
        let amp = d.amplitude_factor * d.rabi / 2.0;
        h += ops.sx.scale(amp * d.phase.cos()) + ops.sy.scale(amp * d.phase.sin());
    }
    if detuning != 0.0 {
        h += ops.sz.scale(detuning / 2.0);
    }
    // products of embedded Paulis are exactly Hermitian; keep it that way
    (&h + h.adjoint()).scale(0.5)
}
