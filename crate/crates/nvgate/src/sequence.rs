//! Pulse schedules for the phase, duration and composite sequence variants.
//!
//! One half-block spans 2 tau. Finite pulses keep their centres where the
//! instantaneous pulses would sit, except the pi/2 pulses that open and close a
//! half-block: those are aligned to the block edges so that every half-block
//! occupies exactly [0, 2 tau].

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Phase bookkeeping, relative to the base phase of a half-block.
pub mod phases {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    /// pi/2 pulses flanking a half-block.
    pub const HALF_PI: f64 = FRAC_PI_2;
    /// Single refocusing pi pulse.
    pub const PI_PULSE: f64 = 0.0;
    /// Five-pulse composite pi: the (30, 0, 90, 0, 30) degree set shifted by
    /// -150 degrees so the ideal product is exactly a pi rotation about x.
    pub const COMPOSITE: [f64; 5] = [
        FRAC_PI_6 - 5.0 * FRAC_PI_6,
        -5.0 * FRAC_PI_6,
        FRAC_PI_2 - 5.0 * FRAC_PI_6,
        -5.0 * FRAC_PI_6,
        FRAC_PI_6 - 5.0 * FRAC_PI_6,
    ];
    /// Phase advance of half-block k in the phase variant: (k mod 2) (phi + pi).
    pub fn base(k: usize, phi: f64) -> f64 {
        if k % 2 == 1 {
            phi + PI
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    Free,
    Pulse,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    /// us; zero for instantaneous pulses.
    pub duration: f64,
    pub phase: f64,
    pub nominal_angle: f64,
    /// Rabi frequency in rad/us, `None` for an instantaneous pulse.
    pub rabi: Option<f64>,
    /// Detuning relative to the nominal Rabi frequency (delta = Delta / Omega).
    pub detuning_rel: f64,
    pub amplitude_factor: f64,
}

impl Segment {
    pub fn free(duration: f64) -> Self {
        Self {
            kind: SegmentKind::Free,
            duration,
            phase: 0.0,
            nominal_angle: 0.0,
            rabi: None,
            detuning_rel: 0.0,
            amplitude_factor: 1.0,
        }
    }

    pub fn pulse(angle: f64, phase: f64, rabi: Option<f64>) -> Self {
        // negative angles become positive rotations about the opposite axis
        let (angle, phase) = if angle < 0.0 {
            (-angle, phase + PI)
        } else {
            (angle, phase)
        };
        Self {
            kind: SegmentKind::Pulse,
            duration: rabi.map_or(0.0, |r| angle / r),
            phase: phase.rem_euclid(2.0 * PI),
            nominal_angle: angle,
            rabi,
            detuning_rel: 0.0,
            amplitude_factor: 1.0,
        }
    }

    pub fn is_pulse(&self) -> bool {
        self.kind == SegmentKind::Pulse
    }

    /// Absolute detuning Delta in rad/us (zero for free and instantaneous segments).
    pub fn detuning(&self) -> f64 {
        self.rabi.map_or(0.0, |r| self.detuning_rel * r)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentSchedule {
    pub segments: Vec<Segment>,
}

impl SegmentSchedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn pulses(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| s.is_pulse())
    }

    /// Centre time of every pulse, in schedule order.
    pub fn pulse_centers(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = Vec::new();
        for s in &self.segments {
            if s.is_pulse() {
                out.push(t + s.duration / 2.0);
            }
            t += s.duration;
        }
        out
    }

    pub fn extend(&mut self, other: &SegmentSchedule) {
        self.segments.extend_from_slice(&other.segments);
    }

    /// One segment per line: kind, duration_us, phase_rad, angle_rad, rabi_rad_per_us.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            let kind = match s.kind {
                SegmentKind::Free => "free",
                SegmentKind::Pulse => "pulse",
            };
            let rabi = match (s.kind, s.rabi) {
                (SegmentKind::Pulse, Some(r)) => format!("{r:.9e}"),
                (SegmentKind::Pulse, None) => "inf".to_string(),
                (SegmentKind::Free, _) => "0".to_string(),
            };
            let _ = writeln!(
                out,
                "{kind}\t{:.9e}\t{:.9e}\t{:.9e}\t{rabi}",
                s.duration, s.phase, s.nominal_angle
            );
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Phase,
    Duration,
    Composite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rabi {
    Finite(f64),
    Instantaneous,
}

impl Rabi {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Rabi::Finite(r) => Some(r),
            Rabi::Instantaneous => None,
        }
    }

    /// Duration of a pi pulse (zero when instantaneous).
    pub fn pi_duration(&self) -> f64 {
        self.value().map_or(0.0, |r| PI / r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub variant: Variant,
    pub tau: f64,
    pub phi: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// Number of 2 tau half-blocks.
    pub half_blocks: usize,
    pub rabi: Rabi,
}

impl SequenceSpec {
    pub fn phase(tau: f64, phi: f64, half_blocks: usize, rabi: Rabi) -> Self {
        Self {
            variant: Variant::Phase,
            tau,
            phi,
            tau1: 0.0,
            tau2: 0.0,
            half_blocks,
            rabi,
        }
    }

    pub fn duration(tau: f64, phi: f64, half_blocks: usize, rabi: Rabi) -> Self {
        Self {
            variant: Variant::Duration,
            ..Self::phase(tau, phi, half_blocks, rabi)
        }
    }

    pub fn composite(
        tau: f64,
        phi: f64,
        tau1: f64,
        tau2: f64,
        half_blocks: usize,
        rabi: Rabi,
    ) -> Self {
        Self {
            variant: Variant::Composite,
            tau,
            phi,
            tau1,
            tau2,
            half_blocks,
            rabi,
        }
    }

    pub fn with_half_blocks(&self, half_blocks: usize) -> Self {
        Self {
            half_blocks,
            ..*self
        }
    }

    pub fn total_time(&self) -> f64 {
        2.0 * self.tau * self.half_blocks as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return invalid(format!("tau must be positive, got {}", self.tau));
        }
        if !self.phi.is_finite() {
            return invalid("phi must be finite");
        }
        if let Rabi::Finite(r) = self.rabi {
            if !(r > 0.0) || !r.is_finite() {
                return invalid(format!("Rabi frequency must be positive, got {r}"));
            }
        }
        if self.variant == Variant::Composite {
            if self.tau1 < 0.0 || self.tau2 < 0.0 {
                return invalid("tau1 and tau2 must be non-negative");
            }
            let need = 2.0 * (self.tau1 + self.tau2) + 6.0 * self.rabi.pi_duration();
            if need > 2.0 * self.tau * (1.0 + 1e-12) {
                return Err(Error::ScheduleOverflow(format!(
                    "composite pulses need {need:.6} us but a half-block is {:.6} us",
                    2.0 * self.tau
                )));
            }
        } else {
            let need = 2.0 * self.rabi.pi_duration();
            if need > 2.0 * self.tau * (1.0 + 1e-12) {
                return Err(Error::ScheduleOverflow(format!(
                    "pulses need {need:.6} us but a half-block is {:.6} us",
                    2.0 * self.tau
                )));
            }
        }
        Ok(())
    }

    /// Centres of the refocusing pi pulses inside [0, 2 tau].
    pub fn pi_centers(&self) -> Vec<f64> {
        let tau = self.tau;
        match self.variant {
            Variant::Composite => {
                let p = self.rabi.pi_duration();
                let c1 = tau - self.tau1 - self.tau2 - 2.0 * p;
                let c2 = tau - self.tau2 - p;
                vec![c1, c2, tau, 2.0 * tau - c2, 2.0 * tau - c1]
            }
            _ => vec![tau],
        }
    }
}

/// Lay out one half-block: edge pi/2-type pulses plus centred pulses.
fn half_block(
    tau: f64,
    rabi: Rabi,
    first: (f64, f64),
    centered: &[(f64, f64, f64)],
    last: (f64, f64),
) -> Result<SegmentSchedule> {
    let r = rabi.value();
    let mut segs = Vec::with_capacity(2 * centered.len() + 3);
    let open = Segment::pulse(first.0, first.1, r);
    let close = Segment::pulse(last.0, last.1, r);
    let mut t = open.duration;
    segs.push(open);
    for &(center, angle, phase) in centered {
        let p = Segment::pulse(angle, phase, r);
        let start = center - p.duration / 2.0;
        let gap = start - t;
        if gap < -1e-12 {
            return Err(Error::ScheduleOverflow(format!(
                "pulse centred at {center:.6} us overlaps the previous pulse"
            )));
        }
        if gap > 0.0 {
            segs.push(Segment::free(gap));
        }
        t = start.max(t) + p.duration;
        segs.push(p);
    }
    let end = 2.0 * tau - close.duration;
    let gap = end - t;
    if gap < -1e-12 {
        return Err(Error::ScheduleOverflow(
            "closing pulse overlaps the refocusing pulses".into(),
        ));
    }
    if gap > 0.0 {
        segs.push(Segment::free(gap));
    }
    segs.push(close);
    Ok(SegmentSchedule { segments: segs })
}

/// (pi/2) - tau - pi - tau - (pi/2) with every phase of odd half-blocks advanced by phi + pi.
pub fn generate_phase_variant(spec: &SequenceSpec) -> Result<SegmentSchedule> {
    if spec.variant != Variant::Phase {
        return invalid("expected a phase-variant spec");
    }
    spec.validate()?;
    let mut out = SegmentSchedule::default();
    for k in 0..spec.half_blocks {
        let b = phases::base(k, spec.phi);
        let hp = (FRAC_PI_2, b + phases::HALF_PI);
        out.extend(&half_block(
            spec.tau,
            spec.rabi,
            hp,
            &[(spec.tau, PI, b + phases::PI_PULSE)],
            hp,
        )?);
    }
    Ok(out)
}

/// phi enters through the flanking rotation angles instead of the phases.
///
/// Even half-blocks: (pi/2)_90 - tau - pi_0 - tau - (phi - pi/2)_90, odd
/// half-blocks mirror the flanking angles. At phi = pi this is the phase
/// variant at phi = pi; a pair of half-blocks rotates the electron by 2 (phi - pi)
/// about y.
pub fn generate_duration_variant(spec: &SequenceSpec) -> Result<SegmentSchedule> {
    if spec.variant != Variant::Duration {
        return invalid("expected a duration-variant spec");
    }
    spec.validate()?;
    let a = spec.phi - FRAC_PI_2;
    if let Some(r) = spec.rabi.value() {
        let need = (FRAC_PI_2 + a.abs() + PI) / r;
        if need > 2.0 * spec.tau {
            return Err(Error::ScheduleOverflow(
                "duration-variant pulses do not fit in a half-block".into(),
            ));
        }
    }
    let mut out = SegmentSchedule::default();
    for k in 0..spec.half_blocks {
        let (first, last) = if k % 2 == 0 {
            (FRAC_PI_2, a)
        } else {
            (a, FRAC_PI_2)
        };
        out.extend(&half_block(
            spec.tau,
            spec.rabi,
            (first, phases::HALF_PI),
            &[(spec.tau, PI, phases::PI_PULSE)],
            (last, phases::HALF_PI),
        )?);
    }
    Ok(out)
}

/// Phase variant with each pi pulse replaced by five pi pulses, edge gaps [tau1, tau2, tau2, tau1].
pub fn generate_composite_variant(spec: &SequenceSpec) -> Result<SegmentSchedule> {
    if spec.variant != Variant::Composite {
        return invalid("expected a composite-variant spec");
    }
    spec.validate()?;
    let centers = spec.pi_centers();
    let mut out = SegmentSchedule::default();
    for k in 0..spec.half_blocks {
        let b = phases::base(k, spec.phi);
        let hp = (FRAC_PI_2, b + phases::HALF_PI);
        let pis: Vec<(f64, f64, f64)> = centers
            .iter()
            .zip(phases::COMPOSITE.iter())
            .map(|(&c, &p)| (c, PI, b + p))
            .collect();
        out.extend(&half_block(spec.tau, spec.rabi, hp, &pis, hp)?);
    }
    Ok(out)
}

pub fn generate(spec: &SequenceSpec) -> Result<SegmentSchedule> {
    match spec.variant {
        Variant::Phase => generate_phase_variant(spec),
        Variant::Duration => generate_duration_variant(spec),
        Variant::Composite => generate_composite_variant(spec),
    }
}

/// Uniform static control errors on every pulse; free segments untouched.
pub fn with_errors(schedule: &SegmentSchedule, delta_rel: f64, eps_amp: f64) -> SegmentSchedule {
    SegmentSchedule {
        segments: schedule
            .segments
            .iter()
            .map(|s| {
                if s.is_pulse() {
                    Segment {
                        detuning_rel: delta_rel,
                        amplitude_factor: 1.0 + eps_amp,
                        ..*s
                    }
                } else {
                    *s
                }
            })
            .collect(),
    }
}

/// One sign change of the modulation function inside [0, tau].
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Flip {
    pub center: f64,
    /// Half-width of the sinusoidal ramp; zero for instantaneous pulses.
    pub half_width: f64,
    /// Value after the flip.
    pub after: f64,
}

/// Piecewise description of f1 on [0, tau]: the opening ramp then a list of flips.
/// The last flip is the middle pi pulse, centred at tau.
pub(crate) fn flips(spec: &SequenceSpec) -> Result<(f64, Vec<Flip>)> {
    match spec.variant {
        Variant::Phase | Variant::Composite => {}
        Variant::Duration => {
            return invalid("modulation function is defined for the phase and composite variants")
        }
    }
    spec.validate()?;
    let h = spec.rabi.pi_duration() / 2.0;
    let centers = spec.pi_centers();
    let n = centers.len() / 2 + 1;
    let mut out = Vec::with_capacity(n);
    let mut value = 1.0;
    for &c in centers.iter().take(n) {
        value = -value;
        out.push(Flip {
            center: c,
            half_width: h,
            after: value,
        });
    }
    Ok((h, out))
}

/// f1(t): +-1 plateaus with sin ramps of width pi/Omega during pulses,
/// point-antisymmetric about tau and 2 tau periodic.
pub fn modulation_function(t: f64, spec: &SequenceSpec) -> Result<f64> {
    if t < 0.0 {
        return invalid("t must be non-negative");
    }
    let (open, fl) = flips(spec)?;
    let omega = spec.rabi.value();
    Ok(f1_eval(t, spec.tau, open, &fl, omega))
}

pub(crate) fn f1_eval(t: f64, tau: f64, open: f64, fl: &[Flip], omega: Option<f64>) -> f64 {
    let t = t.rem_euclid(2.0 * tau);
    if t > tau {
        return -f1_eval(2.0 * tau - t, tau, open, fl, omega);
    }
    if let Some(om) = omega {
        if t <= open {
            return (om * t).sin();
        }
    }
    let mut value = 1.0;
    for f in fl {
        if let Some(om) = omega {
            if (t - f.center).abs() <= f.half_width {
                // ramp from -after to after
                return f.after * (om * (t - f.center)).sin();
            }
        }
        if t < f.center {
            return value;
        }
        value = f.after;
    }
    value
}
