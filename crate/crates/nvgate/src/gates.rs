//! Closed-form flip-flop evolutions, target gates, encoded rotations, the GHZ
//! circuit and the sequential reference construction.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::operator_core::{c, embed, exp_hermitian, identity, sigma_x, sigma_y, CMat};
use crate::sequence::{Segment, SegmentSchedule};
use crate::spin_model::SpinSystem;

fn check_sign(s: i8) -> Result<f64> {
    match s {
        1 | -1 => Ok(s as f64),
        _ => invalid(format!("interaction sign must be +1 or -1, got {s}")),
    }
}

/// (1/2) sum_k a_k (sx Ix^k + s_k sy Iy^k) on electron + two nuclei.
pub fn flipflop_generator(a1: f64, a2: f64, s1: i8, s2: i8) -> Result<CMat> {
    let (s1, s2) = (check_sign(s1)?, check_sign(s2)?);
    let site = |op: CMat, k: usize| embed(&op, k, 3).expect("site in range");
    let sx = site(sigma_x(), 0);
    let sy = site(sigma_y(), 0);
    let term = |k: usize, s: f64| {
        &sx * site(sigma_x().scale(0.5), k) + (&sy * site(sigma_y().scale(0.5), k)).scale(s)
    };
    Ok((term(1, s1).scale(a1) + term(2, s2).scale(a2)).scale(0.5))
}

/// exp(-i H t) for the two-nucleus flip-flop generator, in closed form.
///
/// Every invariant block of H is a star of one state coupled to two others,
/// so the spectrum is {0, +-L/2} with L = hypot(a1, a2) and
/// exp(-iHt) = 1 - i sin(Lt/2) (2/L) H - 2 sin^2(Lt/4) (4/L^2) H^2.
pub fn flipflop_evolution(a1: f64, a2: f64, s1: i8, s2: i8, t: f64) -> Result<CMat> {
    let h = flipflop_generator(a1, a2, s1, s2)?;
    let l = a1.hypot(a2);
    if l == 0.0 {
        return Ok(identity(8));
    }
    let h2 = &h * &h;
    let s = (l * t / 4.0).sin();
    Ok(identity(8)
        - h.map(|z| z * c(0.0, (l * t / 2.0).sin() * 2.0 / l))
        - h2.scale(2.0 * s * s * 4.0 / (l * l)))
}

/// Smallest t with sin(hypot(a1, a2) t / 4) = 1.
pub fn gate_time(a1: f64, a2: f64) -> Result<f64> {
    let l = a1.hypot(a2);
    if !(l > 0.0) || !l.is_finite() {
        return invalid("gate time needs a nonzero coupling");
    }
    Ok(2.0 * PI / l)
}

/// Equal-coupling gate at its gate time.
///
/// (+,+) is the nuclear swap with electron-conditioned phases on |00> and |11>;
/// mixed signs give the variant acting as a swap of |00> and |11>.
pub fn target_gate(s1: i8, s2: i8) -> Result<CMat> {
    flipflop_evolution(1.0, 1.0, s1, s2, gate_time(1.0, 1.0)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct GateTarget {
    pub sign_pair: (i8, i8),
    pub a1: f64,
    pub a2: f64,
    pub t_gate: f64,
    #[serde(skip)]
    pub matrix: CMat,
    pub alpha: f64,
}

impl GateTarget {
    pub fn new(a1: f64, a2: f64, s1: i8, s2: i8) -> Result<Self> {
        let t_gate = gate_time(a1, a2)?;
        Ok(Self {
            sign_pair: (s1, s2),
            a1,
            a2,
            t_gate,
            matrix: flipflop_evolution(a1, a2, s1, s2, t_gate)?,
            alpha: encoded_angle(a1, a2)?,
        })
    }
}

/// alpha with cos(alpha) = (a1^2 - a2^2) / (a1^2 + a2^2).
pub fn encoded_angle(a1: f64, a2: f64) -> Result<f64> {
    let n = a1 * a1 + a2 * a2;
    if !(n > 0.0) {
        return invalid("encoded rotation needs a nonzero coupling");
    }
    Ok(((a1 * a1 - a2 * a2) / n).clamp(-1.0, 1.0).acos())
}

/// Flip-flop gate on the protected block span{|10>, |01>} and its angle.
pub fn encoded_rotation(a1: f64, a2: f64) -> Result<(f64, CMat)> {
    let alpha = encoded_angle(a1, a2)?;
    Ok((alpha, flipflop_evolution(a1, a2, 1, 1, gate_time(a1, a2)?)?))
}

/// exp(-i pi/2 Ix) on the second nucleus after V.
pub fn ghz_circuit(v: &CMat) -> Result<CMat> {
    if v.nrows() != 8 || v.ncols() != 8 {
        return invalid("GHZ circuit acts on one electron and two nuclei");
    }
    let rx = exp_hermitian(&embed(&sigma_x().scale(0.5), 2, 3)?, FRAC_PI_2, 1.0)?;
    Ok(rx * v)
}

/// Layout of the sequential reference gate.
#[derive(Clone, Debug, Serialize)]
pub struct SequentialGate {
    pub schedule: SegmentSchedule,
    /// CPMG periods per block, in application order.
    pub block_periods: Vec<u64>,
    pub total_time: f64,
}

/// CPMG block resonant with omega: free(tc/2) pi free(tc) pi free(tc/2), tc = pi/omega, repeated.
fn cpmg_block(omega: f64, periods: u64) -> SegmentSchedule {
    let tc = PI / omega;
    let mut segments = Vec::with_capacity(5 * periods as usize);
    for _ in 0..periods {
        segments.push(Segment::free(tc / 2.0));
        segments.push(Segment::pulse(PI, 0.0, None));
        segments.push(Segment::free(tc));
        segments.push(Segment::pulse(PI, 0.0, None));
        segments.push(Segment::free(tc / 2.0));
    }
    SegmentSchedule { segments }
}

/// Sequential two-nucleus reference built from electron-conditioned rotations.
///
/// Each block is an instantaneous-pulse CPMG resonant with one nucleus. Its
/// average Hamiltonian is (a/pi) sz Ix, so a block of length pi^2/(2a),
/// rounded to whole CPMG periods, rotates the nucleus by +-pi/2 depending on
/// the electron state. Blocks run A B A B, with the electron turned by pi/2
/// about y around every B block so the second nucleus couples through sx.
/// `a1` and `a2` set the block lengths.
pub fn sequential_reference_gate(system: &SpinSystem, a1: f64, a2: f64) -> Result<SequentialGate> {
    if system.nuclei.len() < 2 {
        return invalid("sequential reference needs two target nuclei");
    }
    if !(a1 > 0.0) || !(a2 > 0.0) {
        return invalid("block couplings must be positive");
    }
    let w1 = system.nuclei[0].omega_l;
    let w2 = system.nuclei[1].omega_l;
    if (w1 - w2).abs() <= 1e-9 * w1.abs().max(w2.abs()) {
        return Err(Error::ConstructionFailure(
            "both nuclei share the CPMG resonance".into(),
        ));
    }
    let periods = |a: f64, w: f64| -> u64 {
        let t = PI * PI / (2.0 * a);
        ((t * w / (2.0 * PI)).round() as u64).max(1)
    };
    let (p1, p2) = (periods(a1, w1), periods(a2, w2));
    let a = cpmg_block(w1, p1);
    let b = cpmg_block(w2, p2);
    let turn = |angle: f64| SegmentSchedule {
        segments: vec![Segment::pulse(angle, FRAC_PI_2, None)],
    };
    let mut schedule = SegmentSchedule { segments: vec![] };
    for _ in 0..2 {
        schedule.extend(&a);
        schedule.extend(&turn(FRAC_PI_2));
        schedule.extend(&b);
        schedule.extend(&turn(-FRAC_PI_2));
    }
    let total_time = schedule.total_duration();
    Ok(SequentialGate {
        schedule,
        block_periods: vec![p1, p2, p1, p2],
        total_time,
    })
}

/// |0> x |y-> x |y->, with |y-> = (|0> - i|1>)/sqrt(2).
pub fn ghz_input() -> nalgebra::DVector<Complex64> {
    let y = [c(1.0, 0.0), c(0.0, -1.0)];
    let mut v = nalgebra::DVector::from_element(8, c(0.0, 0.0));
    for n1 in 0..2 {
        for n2 in 0..2 {
            v[(n1 << 1) | n2] = y[n1] * y[n2] * 0.5;
        }
    }
    v
}
