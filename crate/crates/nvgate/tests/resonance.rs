mod common;

use nvgate::resonance::*;
use nvgate::sequence::{generate, modulation_function, Rabi, SequenceSpec};
use nvgate::Error;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, PI};

const W1: f64 = 2.0 * PI * 2.0;
const OMEGA_50: f64 = 2.0 * PI * 50.0;

/// (1/(2 tau)) int_0^tau sin(w (tau - t)) f1(t) dt by composite Simpson on the
/// schedule's own segment edges.
fn simpson_overlap(spec: &SequenceSpec, w: f64) -> f64 {
    let s = generate(&spec.with_half_blocks(1)).unwrap();
    let mut edges = vec![0.0];
    for seg in &s.segments {
        edges.push(edges.last().unwrap() + seg.duration);
    }
    edges.retain(|&t| t <= spec.tau + 1e-15);
    if *edges.last().unwrap() < spec.tau {
        edges.push(spec.tau);
    }
    let mut total = 0.0;
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        if b - a < 1e-14 {
            continue;
        }
        let n = 400;
        let h = (b - a) / n as f64;
        let f = |t: f64| {
            let tt = t.clamp(a + 1e-12 * h, b - 1e-12 * h);
            (w * (spec.tau - t)).sin() * modulation_function(tt, spec).unwrap()
        };
        let mut acc = f(a) + f(b);
        for k in 1..n {
            acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        total += acc * h / 3.0;
    }
    total / (2.0 * spec.tau)
}

#[test]
fn quarter_turn_coupling_constant() {
    let tau = resonance_tau(W1, 0, 1, FRAC_PI_2).unwrap();
    assert!((W1 * tau - 0.75 * PI).abs() < 1e-14);
    let want = (2.0 + 2f64.sqrt()) / (3.0 * PI);
    assert!((a_eff_instant(1.0, W1, tau) - want).abs() < 1e-12 * want);
    assert!((want - 0.3622).abs() < 1e-4);
    let spec = SequenceSpec::phase(tau, FRAC_PI_2, 2, Rabi::Instantaneous);
    assert!((fourier_overlap(&spec, W1).unwrap() - want).abs() < 1e-8);
    assert!((simpson_overlap(&spec, W1) - want).abs() < 1e-8);
}

#[test]
fn instant_coupling_special_points() {
    assert!(a_eff_instant(1.0, W1, 2.0 * PI / W1).abs() < 1e-15);
    let tau = resonance_tau(W1, 0, -1, FRAC_PI_2).unwrap();
    let want = 2.0 / PI * (1.0 - 0.5f64.sqrt());
    assert!((a_eff_instant(1.0, W1, tau) - want).abs() < 1e-12);
    assert!((want - 0.1865).abs() < 1e-4);
    // unpulsed square wave
    let spec = SequenceSpec::phase(0.17, 0.0, 2, Rabi::Instantaneous);
    let want = (1.0 - (W1 * 0.17).cos()) / (2.0 * 0.17 * W1);
    assert!((fourier_overlap(&spec, W1).unwrap() - want).abs() < 1e-12);
}

#[test]
fn resonance_positions() {
    let w = 1.0;
    for (n, s, want) in [(0, -1, 0.25), (0, 1, 0.75), (1, -1, 1.25)] {
        let tau = resonance_tau(w, n, s, FRAC_PI_2).unwrap();
        assert!((tau * w / PI - want).abs() < 1e-14);
    }
    for n in 0..4u32 {
        assert!((resonance_tau(w, n, 1, PI).unwrap() / PI - (n + 1) as f64).abs() < 1e-14);
        if n > 0 {
            assert!((resonance_tau(w, n, -1, PI).unwrap() / PI - n as f64).abs() < 1e-14);
        }
    }
    assert!(resonance_tau(w, 0, -1, PI).is_err());
    assert!(resonance_tau(w, 0, 2, 1.0).is_err());
    let tau = resonance_tau(W1, 0, 1, 2.4064).unwrap();
    assert!((tau - 0.2208).abs() < 1e-4);
    let tau2 = resonance_tau(1.265 * W1, 1, -1, 2.4064).unwrap();
    assert!((tau - tau2).abs() < 1e-4);
}

#[test]
fn opposite_direction_solutions() {
    let (phi, tau) = phi_for_opposite(W1, 5.0 / 3.0 * W1).unwrap();
    assert!((phi - FRAC_PI_2).abs() < 1e-14);
    assert!((tau * W1 / PI - 0.75).abs() < 1e-14);
    assert!((tau * 5.0 / 3.0 * W1 / PI - 1.25).abs() < 1e-14);

    let (phi, tau) = phi_for_opposite(W1, 1.265 * W1).unwrap();
    assert!((phi - 2.4064).abs() < 1e-4);
    assert!((tau - 0.2208).abs() < 5e-5);
    assert!(resonance_residual(W1, tau, 0, 1, phi).abs() < 1e-12);
    assert!(resonance_residual(1.265 * W1, tau, 1, -1, phi).abs() < 1e-12);

    let (phi, _) = phi_for_opposite(W1, (3.0 - 1e-9) * W1).unwrap();
    assert!(phi < 1e-8);
    assert!(matches!(
        phi_for_opposite(W1, 3.5 * W1),
        Err(Error::NoSolution(_))
    ));
    let (printed, _) = phi_for_opposite_with(W1, 1.265 * W1, true).unwrap();
    assert!((printed - 2.4064 / 2.0).abs() < 1e-4);
}

#[test]
fn same_direction_solutions() {
    let r = 1.045;
    let s = phi_for_same(W1, r * W1, None, -1).unwrap();
    assert_eq!(s.order, 22);
    let x = s.phi / (2.0 * PI);
    assert!((x - 0.2778).abs() < 1e-4);
    assert!(resonance_residual(W1, s.tau, 22, -1, s.phi).abs() < 1e-12);
    assert!(resonance_residual(r * W1, s.tau, 23, -1, s.phi).abs() < 1e-12);
    // r - 1 = 1/(n + 1/2 + s x)
    assert!((1.0 / (r - 1.0) - (22.0 + 0.5 - x)).abs() < 1e-12);

    let s = phi_for_same(W1, 2.0 * W1, Some(0), 1).unwrap();
    assert!((s.phi - PI).abs() < 1e-12);
    assert!(matches!(
        phi_for_same(W1, 2.0 * W1, Some(3), 1),
        Err(Error::NoSolution(_))
    ));
}

#[test]
fn composite_reduces_to_instant() {
    let tau = resonance_tau(W1, 0, 1, 2.4064).unwrap();
    let base = a_eff_instant(0.1, W1, tau);
    assert!((a_eff_composite(0.1, W1, tau, 0.0, 0.0) - base).abs() < 1e-15);
    for t2 in [0.01, 0.05, 0.1] {
        assert!((a_eff_composite(0.1, W1, tau, 0.0, t2) - base).abs() < 1e-15);
    }
}

#[test]
fn composite_against_simpson_oracle() {
    let tau = resonance_tau(W1, 0, 1, 2.4064).unwrap();
    let spec = SequenceSpec::composite(tau, 2.4064, 0.03, 0.02, 2, Rabi::Instantaneous);
    let closed = a_eff_composite(1.0, W1, tau, 0.03, 0.02);
    assert!((simpson_overlap(&spec, W1) - closed).abs() < 1e-6);
    assert!((fourier_overlap(&spec, W1).unwrap() - closed).abs() < 1e-6);
}

#[test]
fn finite_pulses_at_fifty_mhz() {
    let (phi, tau) = phi_for_opposite(W1, 1.265 * W1).unwrap();
    let plain = a_eff_finite(1.0, W1, tau, 0.0, 0.0, OMEGA_50).unwrap();
    let inst = a_eff_instant(1.0, W1, tau);
    assert!(((plain - inst) / inst).abs() < 0.05);
    let fin = a_eff_finite(1.0, W1, tau, 0.03, 0.02, OMEGA_50).unwrap();
    let spec = SequenceSpec::composite(tau, phi, 0.03, 0.02, 2, Rabi::Finite(OMEGA_50));
    assert!((fourier_overlap(&spec, W1).unwrap() - fin).abs() < 1e-6);
    assert!((simpson_overlap(&spec, W1) - fin).abs() < 1e-6);
}

#[test]
fn finite_pulses_approach_instant_limit() {
    let tau = resonance_tau(W1, 0, 1, FRAC_PI_2).unwrap();
    let want = (2.0 + 2f64.sqrt()) / (3.0 * PI);
    let gap = |rabi: f64| (a_eff_finite(1.0, W1, tau, 0.0, 0.0, rabi).unwrap() - want).abs() / want;
    assert!(gap(1e7 * W1) < 1e-6);
    // first-order convergence in omega / rabi
    let ratio = gap(1e4 * W1) / gap(1e5 * W1);
    assert!((ratio - 10.0).abs() < 0.1, "{ratio}");
    let comp = a_eff_composite(1.0, W1, tau, 0.02, 0.01);
    let fin = a_eff_finite(1.0, W1, tau, 0.02, 0.01, 1e7 * W1).unwrap();
    assert!(((fin - comp) / comp).abs() < 1e-6);
    assert!(a_eff_finite(1.0, W1, tau, 0.0, 0.0, 0.5 * W1).is_err());
}

#[test]
fn closed_forms_match_quadrature_on_random_sample() {
    let mut r = common::rng(2024);
    for _ in 0..20 {
        let w = 2.0 * PI * r.gen_range(1.0..3.0);
        let phi = r.gen_range(0.2..3.0);
        let n = r.gen_range(0..3u32);
        let tau = resonance_tau(w, n, 1, phi).unwrap();
        let rabi = 2.0 * PI * r.gen_range(30.0..80.0);
        let room = tau - 3.0 * PI / rabi;
        let t1 = r.gen_range(0.0..0.45 * room);
        let t2 = r.gen_range(0.0..0.45 * room);
        let ap = 1.0;
        let inst = SequenceSpec::composite(tau, phi, t1, t2, 2, Rabi::Instantaneous);
        let fin = SequenceSpec::composite(tau, phi, t1, t2, 2, Rabi::Finite(rabi));
        let plain = SequenceSpec::phase(tau, phi, 2, Rabi::Instantaneous);
        assert!(
            (a_eff_instant(ap, w, tau) - ap * fourier_overlap(&plain, w).unwrap()).abs()
                < 1e-6 * ap
        );
        assert!(
            (a_eff_composite(ap, w, tau, t1, t2) - ap * fourier_overlap(&inst, w).unwrap()).abs()
                < 1e-6 * ap
        );
        let exact = a_eff_finite(ap, w, tau, t1, t2, rabi).unwrap();
        assert!((exact - ap * fourier_overlap(&fin, w).unwrap()).abs() < 1e-6 * ap);
        assert!((exact - ap * simpson_overlap(&fin, w)).abs() < 1e-6 * ap);
    }
}

#[test]
fn printed_finite_formula_differs_at_first_order() {
    let (_, tau) = phi_for_opposite(W1, 1.265 * W1).unwrap();
    let exact = a_eff_finite(1.0, W1, tau, 0.03, 0.02, OMEGA_50).unwrap();
    let printed = a_eff_finite_printed(1.0, W1, tau, 0.03, 0.02, OMEGA_50).unwrap();
    assert!((exact - printed).abs() > 1e-6);
    let far = 1e5 * W1;
    let exact = a_eff_finite(1.0, W1, tau, 0.03, 0.02, far).unwrap();
    let printed = a_eff_finite_printed(1.0, W1, tau, 0.03, 0.02, far).unwrap();
    assert!((exact - printed).abs() < 1e-3 * exact.abs());
}

fn pair_spins() -> [(f64, f64); 2] {
    [(2.0 * PI * 0.020, W1), (2.0 * PI * 0.025, 1.265 * W1)]
}

#[test]
fn calibration_equal_couplings() {
    let spins = pair_spins();
    let (phi, tau) = phi_for_opposite(W1, 1.265 * W1).unwrap();
    let cal = calibrate_delays(
        &spins,
        tau,
        phi,
        1.0,
        Rabi::Finite(OMEGA_50),
        MagnitudeTarget::Fastest,
    )
    .unwrap();
    assert!(cal.ratio_residual < 1e-6);
    let check = |k: usize, a: f64| {
        let spec = SequenceSpec::composite(tau, phi, cal.tau1, cal.tau2, 2, Rabi::Finite(OMEGA_50));
        let q = spins[k].0 * fourier_overlap(&spec, spins[k].1).unwrap();
        assert!((q - a).abs() < 1e-6 * a.abs());
        q
    };
    let q1 = check(0, cal.a1);
    let q2 = check(1, cal.a2);
    assert!((q1 / q2 - 1.0).abs() < 1e-6);
}

#[test]
fn calibration_hadamard_ratio() {
    let spins = pair_spins();
    let (phi, tau) = phi_for_opposite(W1, 1.265 * W1).unwrap();
    let ratio = 2f64.sqrt() + 1.0;
    let cal = calibrate_delays(
        &spins,
        tau,
        phi,
        ratio,
        Rabi::Finite(OMEGA_50),
        MagnitudeTarget::Fastest,
    )
    .unwrap();
    assert!(cal.ratio_residual < 1e-6);
    assert!((cal.a1 / cal.a2 - ratio).abs() < 1e-6 * ratio);
}

#[test]
fn calibration_prescribed_magnitude() {
    let spins = pair_spins();
    let (phi, tau) = phi_for_opposite(W1, 1.265 * W1).unwrap();
    let rabi = Rabi::Finite(OMEGA_50);
    let cal = calibrate_delays(
        &spins,
        tau,
        phi,
        1.0,
        rabi,
        MagnitudeTarget::SuperPeriods(473),
    )
    .unwrap();
    assert_eq!(cal.super_periods, 473);
    let t = 2.0 * PI / cal.a1.hypot(cal.a2);
    assert!((t - 473.0 * 4.0 * tau).abs() < 1e-6 * t);
    assert!(cal.magnitude_residual < 1e-6);
    let target = 0.5 * cal.a1.hypot(cal.a2);
    let cal2 = calibrate_delays(
        &spins,
        tau,
        phi,
        1.0,
        rabi,
        MagnitudeTarget::Coupling(target),
    )
    .unwrap();
    assert!((cal2.a1.hypot(cal2.a2) / target - 1.0).abs() < 1e-6);
}

#[test]
fn calibration_root_at_origin() {
    let (phi, tau) = phi_for_opposite(W1, 1.265 * W1).unwrap();
    let a1 = 0.1;
    let a2 = a1 * a_eff_instant(1.0, W1, tau) / a_eff_instant(1.0, 1.265 * W1, tau);
    let spins = [(a1, W1), (a2, 1.265 * W1)];
    let h = a_eff_instant(a1, W1, tau) * 2f64.sqrt();
    let cal = calibrate_delays(
        &spins,
        tau,
        phi,
        1.0,
        Rabi::Instantaneous,
        MagnitudeTarget::Coupling(h),
    )
    .unwrap();
    assert!(cal.tau1.abs() < 1e-6 && cal.tau2.abs() < 1e-6, "{cal:?}");
}

#[test]
fn calibration_rejects_unreachable_targets() {
    let spins = pair_spins();
    let (phi, tau) = phi_for_opposite(W1, 1.265 * W1).unwrap();
    let r = calibrate_delays(
        &spins,
        tau,
        phi,
        1.0,
        Rabi::Finite(OMEGA_50),
        MagnitudeTarget::Coupling(10.0),
    );
    assert!(matches!(r, Err(Error::CalibrationFailure { .. })));
    assert!(calibrate_delays(
        &spins,
        tau,
        phi,
        -1.0,
        Rabi::Finite(OMEGA_50),
        MagnitudeTarget::Fastest
    )
    .is_err());
}

proptest! {
    #[test]
    fn resonance_tau_decreases_with_frequency(w in 0.5f64..20.0, dw in 0.01f64..5.0, n in 0u32..5, phi in 0.1f64..3.0, plus in prop::bool::ANY) {
        let s = if plus { 1 } else { -1 };
        let a = resonance_tau(w, n, s, phi);
        let b = resonance_tau(w + dw, n, s, phi);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!(b < a);
        }
    }

    #[test]
    fn composite_continuous_in_delays(t1 in 0.0f64..0.08, t2 in 0.0f64..0.08, d in -1e-7f64..1e-7) {
        let tau = resonance_tau(W1, 0, 1, 2.4064).unwrap();
        let a = a_eff_composite(1.0, W1, tau, t1, t2);
        let b = a_eff_composite(1.0, W1, tau, (t1 + d).max(0.0), (t2 + d).max(0.0));
        prop_assert!((a - b).abs() < 1e-5);
    }
}
