//! Direct two-nucleus gate design and its simulation.
//!
//! The hyperfine coupling shifts each nucleus' precession away from its bare
//! Larmor frequency. Resonance conditions, couplings and the interaction frame
//! all use the shifted (effective) frequencies, found by fixed-point iteration
//! on the one-super-period propagator. The Hamiltonian always keeps the bare
//! frequencies.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolution::{
    floquet_larmor_shift, interaction_frame_correction_with, propagate_with, Propagator,
};
use crate::fidelity::{encoded_subspace, process_fidelity, subspace_process_fidelity};
use crate::gates::flipflop_evolution;
use crate::operator_core::{identity, kron, CMat};
use crate::resonance::{
    calibrate_delays, phi_for_opposite, phi_for_same, Calibration, MagnitudeTarget,
};
use crate::sequence::{generate, with_errors, Rabi, SegmentSchedule, SequenceSpec};
use crate::spin_model::{Nucleus, SpinSystem};

/// Which pair of resonances the two target nuclei sit on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Pairing {
    /// Nucleus 1 on (0,+), nucleus 2 on (1,-): opposite polarization directions.
    Opposite,
    /// Nucleus 1 on (n, s), nucleus 2 on (n+1, s); `order = None` picks the lowest n.
    Same { order: Option<u32>, sign: i8 },
}

impl Pairing {
    /// (phi, tau) for the given frequencies and the flip-flop (+1) / flip-flip (-1) signs.
    pub fn solve(&self, w1: f64, w2: f64) -> Result<(f64, f64, (i8, i8))> {
        match *self {
            Pairing::Opposite => {
                let (phi, tau) = phi_for_opposite(w1, w2)?;
                Ok((phi, tau, (-1, 1)))
            }
            Pairing::Same { order, sign } => {
                let s = phi_for_same(w1, w2, order, sign)?;
                Ok((s.phi, s.tau, (-sign, -sign)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignRequest {
    pub targets: [Nucleus; 2],
    pub rabi: Rabi,
    pub pairing: Pairing,
    /// Required a1_eff / a2_eff.
    pub ratio: f64,
    pub magnitude: MagnitudeTarget,
    /// Fixed-point iterations for the effective frequencies.
    pub frame_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateDesign {
    pub spec: SequenceSpec,
    pub calibration: Calibration,
    pub super_periods: u64,
    pub total_time: f64,
    pub omega_eff: [f64; 2],
    pub signs: (i8, i8),
    pub targets: [Nucleus; 2],
}

impl GateDesign {
    /// One super-period schedule without control errors.
    pub fn schedule(&self) -> Result<SegmentSchedule> {
        generate(&self.spec)
    }

    /// Ideal interaction-picture gate the design aims for.
    pub fn target(&self) -> Result<CMat> {
        flipflop_evolution(
            self.calibration.a1,
            self.calibration.a2,
            self.signs.0,
            self.signs.1,
            self.total_time,
        )
    }
}

fn spins(targets: &[Nucleus; 2], omegas: [f64; 2]) -> [(f64, f64); 2] {
    [
        (targets[0].a_perp, omegas[0]),
        (targets[1].a_perp, omegas[1]),
    ]
}

pub fn design_direct_gate(req: &DesignRequest) -> Result<GateDesign> {
    if req.targets[0].omega_l >= req.targets[1].omega_l {
        return invalid("targets must be ordered by increasing Larmor frequency");
    }
    let build = |omegas: [f64; 2], magnitude: MagnitudeTarget| -> Result<GateDesign> {
        let (phi, tau, signs) = req.pairing.solve(omegas[0], omegas[1])?;
        let cal = calibrate_delays(
            &spins(&req.targets, omegas),
            tau,
            phi,
            req.ratio,
            req.rabi,
            magnitude,
        )?;
        let spec = SequenceSpec::composite(tau, phi, cal.tau1, cal.tau2, 2, req.rabi);
        Ok(GateDesign {
            spec,
            calibration: cal,
            super_periods: cal.super_periods,
            total_time: cal.super_periods as f64 * 4.0 * tau,
            omega_eff: omegas,
            signs,
            targets: req.targets.clone(),
        })
    };
    let mut omegas = [req.targets[0].omega_l, req.targets[1].omega_l];
    // the super-period count is fixed after the first pass so the iteration cannot hop between K values
    let mut magnitude = req.magnitude;
    let mut design = build(omegas, magnitude)?;
    if magnitude == MagnitudeTarget::Fastest {
        magnitude = MagnitudeTarget::SuperPeriods(design.super_periods);
    }
    for _ in 0..req.frame_iterations {
        let schedule = design.schedule()?;
        let mut next = omegas;
        for (j, n) in req.targets.iter().enumerate() {
            next[j] += floquet_larmor_shift(n, &schedule, omegas[j])?;
        }
        let moved = (next[0] - omegas[0]).abs().max((next[1] - omegas[1]).abs());
        omegas = next;
        design = build(omegas, magnitude)?;
        if moved < 1e-13 {
            break;
        }
    }
    Ok(design)
}

/// Effective precession frequency of a spectator nucleus under a schedule
/// repeated periodically, by the same fixed-point iteration.
pub fn spectator_frequency(
    nucleus: &Nucleus,
    schedule: &SegmentSchedule,
    iterations: usize,
) -> Result<f64> {
    let mut w = nucleus.omega_l;
    for _ in 0..iterations {
        let d = floquet_larmor_shift(nucleus, schedule, w)?;
        w += d;
        if d.abs() < 1e-13 {
            break;
        }
    }
    Ok(w)
}

/// Interaction-picture propagator of `schedule` repeated `repeats` times on
/// `system`, in the frames rotating at `omegas` (one per nucleus).
pub fn corrected_unitary(
    system: &SpinSystem,
    schedule: &SegmentSchedule,
    repeats: u64,
    omegas: &[f64],
) -> Result<CMat> {
    if omegas.len() != system.nuclei.len() {
        return invalid("one frame frequency per nucleus is required");
    }
    let prop = Propagator::new(system);
    let res = propagate_with(&prop, schedule, repeats)?;
    Ok(interaction_frame_correction_with(
        &res,
        omegas,
        res.total_time,
    ))
}

/// Corrected direct-gate unitary with control errors and optional spectators
/// appended after the two targets.
pub fn simulate_direct(
    design: &GateDesign,
    spectators: &[Nucleus],
    delta_rel: f64,
    eps_amp: f64,
) -> Result<CMat> {
    let mut nuclei = design.targets.to_vec();
    nuclei.extend_from_slice(spectators);
    let system = SpinSystem::new(nuclei)?;
    let schedule = design.schedule()?;
    let mut omegas = design.omega_eff.to_vec();
    for s in spectators {
        omegas.push(spectator_frequency(s, &schedule, 4)?);
    }
    let schedule = with_errors(&schedule, delta_rel, eps_amp);
    corrected_unitary(&system, &schedule, design.super_periods, &omegas)
}

/// 1 - F of the simulated gate against the closed-form target.
pub fn direct_infidelity(design: &GateDesign, delta_rel: f64, eps_amp: f64) -> Result<f64> {
    let u = simulate_direct(design, &[], delta_rel, eps_amp)?;
    Ok(process_fidelity(&u, &design.target()?)?.infidelity())
}

/// Fidelity measure for spectator scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Full,
    /// Restricted to the {|10>, |01>} block of the two targets.
    Encoded,
}

/// Infidelity of `with` (targets plus spectators) against `reference`
/// (targets only) tensored with identity on the spectators.
pub fn spectator_infidelity(with: &CMat, reference: &CMat, metric: Metric) -> Result<f64> {
    let extra = with.nrows() / reference.nrows();
    if extra * reference.nrows() != with.nrows() || extra == 0 {
        return invalid("spectator dimension mismatch");
    }
    let full_ref = kron(reference, &identity(extra));
    let spectators = extra.trailing_zeros() as usize;
    let f = match metric {
        Metric::Full => process_fidelity(with, &full_ref)?,
        Metric::Encoded => {
            subspace_process_fidelity(with, &full_ref, &encoded_subspace(2 + spectators))?
        }
    };
    Ok(f.infidelity())
}

/// Check that a stored design still satisfies its calibration, for replays.
pub fn verify_design(design: &GateDesign) -> Result<()> {
    let c = &design.calibration;
    if c.ratio_residual > 1e-6 || c.magnitude_residual > 1e-6 {
        return Err(Error::CalibrationFailure {
            residual: c.ratio_residual.max(c.magnitude_residual),
            message: "stored calibration does not meet its targets".into(),
        });
    }
    design.spec.validate()
}
