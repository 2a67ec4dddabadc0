//! Resonance conditions, effective couplings and delay calibration.
//!
//! A nucleus precessing at omega is resonant with the sequence when
//! tau omega / pi = n + 1/2 + s phi / (2 pi). Its effective coupling is the
//! overlap of the modulation function with the nuclear precession.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sequence::{flips, Rabi, SequenceSpec, Variant};

/// Resonance order n and orientation s of one nucleus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResonanceAssignment {
    pub order: u32,
    pub sign: i8,
}

impl ResonanceAssignment {
    pub fn new(order: u32, sign: i8) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return invalid(format!("resonance sign must be +1 or -1, got {sign}"));
        }
        Ok(Self { order, sign })
    }

    /// Sign of the y-y term of this nucleus in the zero-phase closed-form gate:
    /// +1 flip-flop, -1 flip-flip.
    ///
    /// Alone, a nucleus on (n, +) evolves under a flip-flop and one on (n, -)
    /// under a flip-flip, each with an electron-nucleus phase set by phi. At the
    /// two-nucleus gate time those phased generators give the same unitary as
    /// the zero-phase form with both signs exchanged, which is what this returns.
    pub fn interaction_sign(&self) -> i8 {
        -self.sign
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoupling {
    pub a_eff: f64,
    pub sign: i8,
}

/// tau = (n + 1/2 + s phi/(2 pi)) pi / omega.
pub fn resonance_tau(omega: f64, n: u32, sign: i8, phi: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return invalid(format!("omega must be positive, got {omega}"));
    }
    let sign = ResonanceAssignment::new(n, sign)?.sign as f64;
    let tau = (n as f64 + 0.5 + sign * phi / (2.0 * PI)) * PI / omega;
    if !(tau > 0.0) {
        return invalid(format!(
            "resonance ({n}, {sign:+}) at phi = {phi} gives tau = {tau}"
        ));
    }
    Ok(tau)
}

/// Relative residual of the resonance condition for one nucleus.
pub fn resonance_residual(omega: f64, tau: f64, n: u32, sign: i8, phi: f64) -> f64 {
    tau * omega / PI - (n as f64 + 0.5 + sign as f64 * phi / (2.0 * PI))
}

/// (phi, tau) with nucleus 1 on (0,+) and nucleus 2 on (1,-), omega1 < omega2 < 3 omega1.
///
/// `printed_prefactor` returns the value with a pi/2 prefactor instead of pi,
/// which does not satisfy the resonance condition and exists only for comparison.
pub fn phi_for_opposite_with(
    omega1: f64,
    omega2: f64,
    printed_prefactor: bool,
) -> Result<(f64, f64)> {
    if !(omega1 > 0.0) || !(omega2 > 0.0) {
        return invalid("frequencies must be positive");
    }
    let r = omega2 / omega1;
    if !(r > 1.0 && r < 3.0) {
        return Err(Error::NoSolution(format!(
            "opposite-direction resonances need 1 < omega2/omega1 < 3, got {r}"
        )));
    }
    let phi = PI * (3.0 - r) / (1.0 + r);
    let tau = resonance_tau(omega1, 0, 1, phi)?;
    let tau2 = resonance_tau(omega2, 1, -1, phi)?;
    if (tau - tau2).abs() > 1e-12 * tau.max(1.0) {
        return Err(Error::NumericalFailure(format!(
            "resonance times disagree: {tau} vs {tau2}"
        )));
    }
    if printed_prefactor {
        return Ok((phi / 2.0, tau));
    }
    Ok((phi, tau))
}

pub fn phi_for_opposite(omega1: f64, omega2: f64) -> Result<(f64, f64)> {
    phi_for_opposite_with(omega1, omega2, false)
}

/// Solution of phi_for_same: nucleus 1 on (n, s), nucleus 2 on (n+1, s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SameDirection {
    pub phi: f64,
    pub tau: f64,
    pub order: u32,
}

/// Solves (n + 1/2 + s x)/omega1 = (n + 3/2 + s x)/omega2 for x = phi/(2 pi).
/// `n = None` picks the smallest order with x in (0, 1).
pub fn phi_for_same(omega1: f64, omega2: f64, n: Option<u32>, sign: i8) -> Result<SameDirection> {
    ResonanceAssignment::new(0, sign)?;
    if !(omega1 > 0.0) || !(omega2 > omega1) {
        return invalid("need 0 < omega1 < omega2");
    }
    let r = omega2 / omega1;
    let s = sign as f64;
    let solve = |n: u32| -> f64 { (1.0 / (r - 1.0) - n as f64 - 0.5) * s };
    let order = match n {
        Some(n) => n,
        None => {
            // x is monotone in n; scan the admissible band
            let top = (1.0 / (r - 1.0)).ceil() as u32 + 1;
            (0..=top)
                .find(|&n| {
                    let x = solve(n);
                    x > 0.0 && x < 1.0
                })
                .ok_or_else(|| {
                    Error::NoSolution(format!("no order gives phi in (0, 2 pi) for r = {r}"))
                })?
        }
    };
    let x = solve(order);
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::NoSolution(format!(
            "order {order} gives phi/(2 pi) = {x}, outside (0, 1)"
        )));
    }
    let phi = 2.0 * PI * x;
    let tau = resonance_tau(omega1, order, sign, phi)?;
    let tau2 = resonance_tau(omega2, order + 1, sign, phi)?;
    if (tau - tau2).abs() > 1e-12 * tau.max(1.0) {
        return Err(Error::NumericalFailure(format!(
            "resonance times disagree: {tau} vs {tau2}"
        )));
    }
    Ok(SameDirection { phi, tau, order })
}

/// Instantaneous pulses: a_perp (1 - cos(omega tau)) / (2 tau omega).
pub fn a_eff_instant(a_perp: f64, omega: f64, tau: f64) -> f64 {
    a_perp * (1.0 - (omega * tau).cos()) / (2.0 * tau * omega)
}

/// Instantaneous composite pulses with delays tau1, tau2.
pub fn a_eff_composite(a_perp: f64, omega: f64, tau: f64, tau1: f64, tau2: f64) -> f64 {
    let w = omega;
    a_perp * (1.0 - (w * tau).cos() - 2.0 * (w * tau2).cos() + 2.0 * (w * (tau1 + tau2)).cos())
        / (2.0 * tau * w)
}

fn check_ratio(omega: f64, rabi: f64) -> Result<f64> {
    let e = omega / rabi;
    if !(rabi > 0.0) || !(e < 1.0) {
        return invalid(format!("need omega/rabi < 1, got {e}"));
    }
    Ok(e)
}

/// Exact coupling for rectangular finite composite pulses.
///
/// Sums the closed-form integrals of sin(omega (tau - t)) over every plateau
/// and sinusoidal ramp of the modulation function on [0, tau].
pub fn a_eff_finite(
    a_perp: f64,
    omega: f64,
    tau: f64,
    tau1: f64,
    tau2: f64,
    rabi: f64,
) -> Result<f64> {
    check_ratio(omega, rabi)?;
    let w = omega;
    let om = rabi;
    let pp = PI / om;
    let h = pp / 2.0;
    let c1 = tau - tau1 - tau2 - 2.0 * pp;
    let c2 = tau - tau2 - pp;
    if c1 - h < h - 1e-12 {
        return Err(Error::ScheduleOverflow(
            "composite pulses do not fit in tau".into(),
        ));
    }
    let plateau = |a: f64, b: f64, s: f64| s * ((w * (tau - b)).cos() - (w * (tau - a)).cos()) / w;
    // antiderivative of sin(w (tau - t)) sin(om (t - c))
    let g = |t: f64, c: f64| {
        0.5 * (-(w * tau + om * c - (w + om) * t).sin() / (w + om)
            - (w * tau - om * c + (om - w) * t).sin() / (om - w))
    };
    let ramp = |a: f64, b: f64, c: f64, s: f64| s * (g(b, c) - g(a, c));
    let total = ramp(0.0, h, 0.0, 1.0)
        + plateau(h, c1 - h, 1.0)
        + ramp(c1 - h, c1 + h, c1, -1.0)
        + plateau(c1 + h, c2 - h, -1.0)
        + ramp(c2 - h, c2 + h, c2, 1.0)
        + plateau(c2 + h, tau - h, 1.0)
        + ramp(tau - h, tau, tau, -1.0);
    Ok(a_perp * total / (2.0 * tau))
}

/// The finite-pulse expression as commonly printed, in e = omega/rabi.
///
/// Kept for comparison; it deviates from the exact overlap at order e.
pub fn a_eff_finite_printed(
    a_perp: f64,
    omega: f64,
    tau: f64,
    tau1: f64,
    tau2: f64,
    rabi: f64,
) -> Result<f64> {
    let e = check_ratio(omega, rabi)?;
    let w = omega;
    let s = tau1 + tau2;
    let hp = e * PI / 2.0;
    let br = -(hp - w * tau).cos()
        + hp.cos()
            * (1.0 - e * e + e * e * (s * w / e).cos() - 2.0 * (e * PI + tau2 * w).cos()
                + 2.0 * (2.0 * e * PI + s * w).cos())
        + e * ((w * tau).sin() + (e - hp.sin() * (s * w / e).sin()));
    Ok(a_perp * br / (2.0 * tau * w) / (1.0 - e * e))
}

/// Coupling per unit a_perp by quadrature:
/// (1 / (2 tau)) integral_0^tau sin(omega (tau - t)) f1(t) dt.
///
/// Integrates piecewise between the kinks of f1 so every piece is smooth.
pub fn fourier_overlap(spec: &SequenceSpec, omega: f64) -> Result<f64> {
    if spec.variant == Variant::Duration {
        return invalid("overlap is defined for the phase and composite variants");
    }
    let (open, fl) = flips(spec)?;
    let tau = spec.tau;
    let rabi = spec.rabi.value();
    let mut cuts = vec![0.0, tau];
    if rabi.is_some() {
        cuts.push(open);
        for f in &fl {
            cuts.push(f.center - f.half_width);
            cuts.push(f.center + f.half_width);
        }
    } else {
        cuts.extend(fl.iter().map(|f| f.center));
    }
    cuts.retain(|&t| (0.0..=tau).contains(&t));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-15 {
            continue;
        }
        // keep f1 inside the piece so jumps land on the boundaries
        let f = |t: f64| {
            let tt = t.clamp(a + 1e-13 * (b - a), b - 1e-13 * (b - a));
            (omega * (tau - t)).sin() * crate::sequence::f1_eval(tt, tau, open, &fl, rabi)
        };
        total += quadrature::double_exponential::integrate(f, a, b, 1e-12).integral;
    }
    Ok(total / (2.0 * tau))
}

/// Signed effective couplings of two nuclei for composite delays.
pub fn composite_couplings(
    spins: &[(f64, f64); 2],
    tau: f64,
    tau1: f64,
    tau2: f64,
    rabi: Rabi,
) -> Result<[f64; 2]> {
    let one = |(a, w): (f64, f64)| match rabi {
        Rabi::Finite(r) => a_eff_finite(a, w, tau, tau1, tau2, r),
        Rabi::Instantaneous => Ok(a_eff_composite(a, w, tau, tau1, tau2)),
    };
    Ok([one(spins[0])?, one(spins[1])?])
}

/// Secondary target for calibrate_delays.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagnitudeTarget {
    /// Largest min(|a1|, |a2|) on the ratio contour; gate time rounded up
    /// to whole super-periods.
    Fastest,
    /// hypot(a1, a2) such that the gate takes exactly this many 4 tau super-periods.
    SuperPeriods(u64),
    /// hypot(a1, a2) fixed in rad/us.
    Coupling(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub tau1: f64,
    pub tau2: f64,
    pub a1: f64,
    pub a2: f64,
    /// Super-periods needed for sin(hypot t / 4) = 1.
    pub super_periods: u64,
    /// |a1/a2 - ratio| / ratio at the solution.
    pub ratio_residual: f64,
    /// |hypot - target| / target at the solution.
    pub magnitude_residual: f64,
}

/// Composite delays (tau1, tau2) with a1 = target_ratio a2 and a prescribed
/// coupling magnitude.
///
/// `spins` holds (a_perp, omega) per nucleus. Grid search over the window
/// [0, (pi + phi)/(2 omega1)]^2 limited to schedules that fit, then damped
/// Newton on (ratio error, magnitude error).
pub fn calibrate_delays(
    spins: &[(f64, f64); 2],
    tau: f64,
    phi: f64,
    target_ratio: f64,
    rabi: Rabi,
    magnitude: MagnitudeTarget,
) -> Result<Calibration> {
    if !(target_ratio > 0.0) || !target_ratio.is_finite() {
        return invalid("target ratio must be positive");
    }
    let window = (PI + phi) / (2.0 * spins[0].1);
    let fit = tau - 3.0 * rabi.pi_duration();
    let feasible =
        |t1: f64, t2: f64| t1 >= 0.0 && t2 >= 0.0 && t1 <= window && t2 <= window && t1 + t2 <= fit;
    let eval = |t1: f64, t2: f64| composite_couplings(spins, tau, t1, t2, rabi);
    let ratio_err = |a: &[f64; 2]| a[0] - target_ratio * a[1];

    const N: usize = 200;
    let step = window / N as f64;
    let mut grid = vec![[f64::NAN; 2]; (N + 1) * (N + 1)];
    for i in 0..=N {
        for j in 0..=N {
            let (t1, t2) = (i as f64 * step, j as f64 * step);
            if feasible(t1, t2) {
                grid[i * (N + 1) + j] = eval(t1, t2)?;
            }
        }
    }
    // seeds: grid cells across which the ratio error changes sign
    let mut seeds: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..=N {
        for j in 0..=N {
            let a = grid[i * (N + 1) + j];
            if a[0].is_nan() {
                continue;
            }
            let d = ratio_err(&a);
            let neighbours = [(i + 1, j), (i, j + 1)];
            // a node can sit exactly on the contour up to rounding
            let on_contour = d.abs() <= 1e-12 * (a[0].abs() + target_ratio * a[1].abs());
            let crosses = on_contour
                || neighbours.iter().any(|&(k, l)| {
                    k <= N && l <= N && {
                        let b = grid[k * (N + 1) + l];
                        !b[0].is_nan() && d * ratio_err(&b) < 0.0
                    }
                });
            if crosses {
                seeds.push((a[0].abs().min(a[1].abs()), i as f64 * step, j as f64 * step));
            }
        }
    }
    if seeds.is_empty() {
        return Err(Error::CalibrationFailure {
            residual: f64::INFINITY,
            message: format!(
                "coupling ratio {target_ratio} is not reached inside the delay window"
            ),
        });
    }
    // strongest coupling first; near-ties (1e-9 relative) go to the shortest delays
    let top = seeds
        .iter()
        .map(|s| s.0)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let key = |s: &(f64, f64, f64)| (s.0 / top * 1e9).round() as i64;
    seeds.sort_by(|a, b| {
        key(b)
            .cmp(&key(a))
            .then((a.1 + a.2).total_cmp(&(b.1 + b.2)))
            .then(a.1.total_cmp(&b.1))
    });

    let mut best_residual = f64::INFINITY;
    for &(_, s1, s2) in seeds.iter().take(8) {
        let a = eval(s1, s2)?;
        let seed_hypot = a[0].hypot(a[1]);
        let (hyp_target, periods) = match magnitude {
            MagnitudeTarget::Fastest => {
                let k = (2.0 * PI / seed_hypot / (4.0 * tau)).ceil().max(1.0);
                (2.0 * PI / (k * 4.0 * tau), k as u64)
            }
            MagnitudeTarget::SuperPeriods(k) => {
                if k == 0 {
                    return invalid("super-period count must be positive");
                }
                (2.0 * PI / (k as f64 * 4.0 * tau), k)
            }
            MagnitudeTarget::Coupling(h) => {
                if !(h > 0.0) {
                    return invalid("coupling magnitude must be positive");
                }
                (h, (2.0 * PI / h / (4.0 * tau)).round().max(1.0) as u64)
            }
        };
        let residual = |t1: f64, t2: f64| -> Result<[f64; 2]> {
            let a = eval(t1, t2)?;
            Ok([
                ratio_err(&a) / hyp_target,
                a[0].hypot(a[1]) / hyp_target - 1.0,
            ])
        };
        match newton(residual, (s1, s2), window, &feasible) {
            Ok((t1, t2)) => {
                let a = eval(t1, t2)?;
                let rr = (a[0] / a[1] - target_ratio).abs() / target_ratio;
                let mr = (a[0].hypot(a[1]) - hyp_target).abs() / hyp_target;
                if rr < 1e-9 && mr < 1e-9 {
                    return Ok(Calibration {
                        tau1: t1,
                        tau2: t2,
                        a1: a[0],
                        a2: a[1],
                        super_periods: periods,
                        ratio_residual: rr,
                        magnitude_residual: mr,
                    });
                }
                best_residual = best_residual.min(rr.max(mr));
            }
            Err(r) => best_residual = best_residual.min(r),
        }
    }
    Err(Error::CalibrationFailure {
        residual: best_residual,
        message: "Newton polishing did not converge from any grid seed".into(),
    })
}

/// Damped Newton with a numerical Jacobian; the step is clamped to 10% of
/// the window and halved until the residual decreases and the point is feasible.
/// On failure returns the best residual norm.
fn newton(
    f: impl Fn(f64, f64) -> Result<[f64; 2]>,
    start: (f64, f64),
    window: f64,
    feasible: &impl Fn(f64, f64) -> bool,
) -> std::result::Result<(f64, f64), f64> {
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let (mut x, mut y) = start;
    let Ok(mut r) = f(x, y) else {
        return Err(f64::INFINITY);
    };
    let h = 1e-7 * window;
    for _ in 0..60 {
        if norm(r) < 1e-13 {
            return Ok((x, y));
        }
        let diff = |dx: f64, dy: f64| -> Option<[f64; 2]> {
            let xp = (x + dx, y + dy);
            let xm = (x - dx, y - dy);
            // one-sided at the window edges
            let (p, m, scale) = match (feasible(xp.0, xp.1), feasible(xm.0, xm.1)) {
                (true, true) => (f(xp.0, xp.1).ok()?, f(xm.0, xm.1).ok()?, 2.0),
                (true, false) => (f(xp.0, xp.1).ok()?, r, 1.0),
                (false, true) => (r, f(xm.0, xm.1).ok()?, 1.0),
                (false, false) => return None,
            };
            let d = dx + dy;
            Some([(p[0] - m[0]) / (scale * d), (p[1] - m[1]) / (scale * d)])
        };
        let (Some(jx), Some(jy)) = (diff(h, 0.0), diff(0.0, h)) else {
            return Err(norm(r));
        };
        let det = jx[0] * jy[1] - jy[0] * jx[1];
        if det.abs() < 1e-300 {
            return Err(norm(r));
        }
        let mut sx = -(r[0] * jy[1] - jy[0] * r[1]) / det;
        let mut sy = -(jx[0] * r[1] - r[0] * jx[1]) / det;
        let len = sx.hypot(sy);
        let clamp = 0.1 * window;
        if len > clamp {
            sx *= clamp / len;
            sy *= clamp / len;
        }
        let mut lambda = 1.0;
        loop {
            let (nx, ny) = (x + lambda * sx, y + lambda * sy);
            if feasible(nx, ny) {
                if let Ok(nr) = f(nx, ny) {
                    if norm(nr) < norm(r) {
                        x = nx;
                        y = ny;
                        r = nr;
                        break;
                    }
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return if norm(r) < 1e-11 {
                    Ok((x, y))
                } else {
                    Err(norm(r))
                };
            }
        }
    }
    if norm(r) < 1e-11 {
        Ok((x, y))
    } else {
        Err(norm(r))
    }
}
