use nvgate::evolution::Propagator;
use nvgate::operator_core::max_abs_diff;
use nvgate::sequence::*;
use nvgate::spin_model::{Nucleus, SpinSystem};
use nvgate::Error;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

const OMEGA_50: f64 = 2.0 * PI * 50.0;

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if (2.0 * PI - y) < 1e-12 {
        0.0
    } else {
        y
    }
}

fn pulse_phases(s: &SegmentSchedule) -> Vec<f64> {
    s.pulses().map(|p| wrap(p.phase)).collect()
}

#[test]
fn xy_limit_repeats_one_half_block() {
    let s = generate(&SequenceSpec::phase(0.4, PI, 4, Rabi::Instantaneous)).unwrap();
    let ph = pulse_phases(&s);
    assert_eq!(ph.len(), 12);
    for blk in ph.chunks(3) {
        // pi/2 about y, pi about x, pi/2 about y
        assert!((blk[0] - FRAC_PI_2).abs() < 1e-12);
        assert!(blk[1].abs() < 1e-12);
        assert!((blk[2] - FRAC_PI_2).abs() < 1e-12);
    }
}

#[test]
fn quarter_turn_phase_pattern() {
    let s = generate(&SequenceSpec::phase(0.4, FRAC_PI_2, 2, Rabi::Instantaneous)).unwrap();
    let ph = pulse_phases(&s);
    let want = [FRAC_PI_2, 0.0, FRAC_PI_2, 0.0, 1.5 * PI, 0.0];
    for (a, b) in ph.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{ph:?}");
    }
}

#[test]
fn two_half_blocks_have_two_pi_and_four_half_pi_pulses() {
    for phi in [0.3, FRAC_PI_2, 2.4, PI] {
        for rabi in [Rabi::Instantaneous, Rabi::Finite(OMEGA_50)] {
            let s = generate(&SequenceSpec::phase(0.22, phi, 2, rabi)).unwrap();
            let n_pi = s
                .pulses()
                .filter(|p| (p.nominal_angle - PI).abs() < 1e-15)
                .count();
            let n_half = s
                .pulses()
                .filter(|p| (p.nominal_angle - FRAC_PI_2).abs() < 1e-15)
                .count();
            assert_eq!((n_pi, n_half), (2, 4));
            assert!((s.total_duration() - 0.88).abs() < 1e-12);
        }
    }
}

#[test]
fn duration_variant_matches_phase_variant_at_pi() {
    for rabi in [Rabi::Instantaneous, Rabi::Finite(OMEGA_50)] {
        let d = generate(&SequenceSpec::duration(0.3, PI, 4, rabi)).unwrap();
        let p = generate(&SequenceSpec::phase(0.3, PI, 4, rabi)).unwrap();
        assert_eq!(d.segments.len(), p.segments.len());
        for (a, b) in d.segments.iter().zip(&p.segments) {
            assert_eq!(a.kind, b.kind);
            assert!((a.duration - b.duration).abs() < 1e-15);
            assert!((a.nominal_angle - b.nominal_angle).abs() < 1e-15);
            assert!((wrap(a.phase) - wrap(b.phase)).abs() < 1e-12);
        }
    }
    let d = generate(&SequenceSpec::duration(0.3, 2.0, 2, Rabi::Finite(OMEGA_50))).unwrap();
    assert!((d.total_duration() - 1.2).abs() < 1e-12);
}

#[test]
fn coincident_composite_equals_single_pi() {
    let n = Nucleus::new(12.566, 0.3, 0.05, "a").unwrap();
    let prop = Propagator::new(&SpinSystem::new(vec![n]).unwrap());
    let c = generate(&SequenceSpec::composite(
        0.22,
        2.4,
        0.0,
        0.0,
        2,
        Rabi::Instantaneous,
    ))
    .unwrap();
    let p = generate(&SequenceSpec::phase(0.22, 2.4, 2, Rabi::Instantaneous)).unwrap();
    let uc = prop.schedule_unitary(&c).unwrap();
    let up = prop.schedule_unitary(&p).unwrap();
    assert!(max_abs_diff(&uc, &up) < 1e-12);
}

#[test]
fn composite_timing_at_fifty_mhz() {
    let spec = SequenceSpec::composite(0.22075, 2.40647, 0.03, 0.02, 2, Rabi::Finite(OMEGA_50));
    let s = generate(&spec).unwrap();
    for p in s.pulses().filter(|p| (p.nominal_angle - PI).abs() < 1e-15) {
        assert!((p.duration - 0.01).abs() < 1e-15);
    }
    let c = s.pulse_centers();
    let tau = spec.tau;
    let want = [tau - 0.05 - 0.02, tau - 0.02 - 0.01, tau];
    for (got, w) in c[1..4].iter().zip(want) {
        assert!((got - w).abs() < 1e-12);
    }
    // second half-block repeats the layout shifted by 2 tau
    assert!((c[8] - (2.0 * tau + want[0])).abs() < 1e-12);
}

#[test]
fn composite_overflow_is_reported() {
    let spec = SequenceSpec::composite(0.22, 2.4, 0.1, 0.1, 2, Rabi::Finite(OMEGA_50));
    assert!(matches!(generate(&spec), Err(Error::ScheduleOverflow(_))));
    let tight = SequenceSpec::phase(0.004, 1.0, 2, Rabi::Finite(OMEGA_50));
    assert!(matches!(generate(&tight), Err(Error::ScheduleOverflow(_))));
    assert!(generate(&SequenceSpec::phase(0.0, 1.0, 2, Rabi::Instantaneous)).is_err());
}

#[test]
fn error_injection() {
    let s = generate(&SequenceSpec::composite(
        0.22,
        2.4,
        0.03,
        0.02,
        2,
        Rabi::Finite(OMEGA_50),
    ))
    .unwrap();
    assert_eq!(with_errors(&s, 0.0, 0.0), s);
    let e = with_errors(&s, 0.04, 0.02);
    for (a, b) in e.segments.iter().zip(&s.segments) {
        assert_eq!(a.duration, b.duration);
        if a.is_pulse() {
            assert!((a.amplitude_factor * a.nominal_angle - 1.02 * b.nominal_angle).abs() < 1e-14);
            assert!((a.detuning() - 2.0 * PI * 2.0).abs() < 1e-12);
        } else {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn dump_has_one_line_per_segment() {
    let s = generate(&SequenceSpec::phase(0.3, 1.0, 2, Rabi::Finite(OMEGA_50))).unwrap();
    let d = s.dump();
    assert_eq!(d.lines().count(), s.segments.len());
    for (line, seg) in d.lines().zip(&s.segments) {
        let f: Vec<&str> = line.split('\t').collect();
        assert_eq!(f.len(), 5);
        assert_eq!(f[0], if seg.is_pulse() { "pulse" } else { "free" });
        assert!(
            (f[1].parse::<f64>().unwrap() - seg.duration).abs() < 1e-9 * seg.duration.max(1e-3)
        );
    }
}

#[test]
fn modulation_function_shape() {
    let spec = SequenceSpec::composite(0.22075, 2.40647, 0.03, 0.02, 2, Rabi::Finite(OMEGA_50));
    let tau = spec.tau;
    assert_eq!(modulation_function(0.03, &spec).unwrap(), 1.0);
    assert!(modulation_function(tau, &spec).unwrap().abs() < 1e-12);
    for i in 0..200 {
        let t = 0.0011 * i as f64;
        let a = modulation_function(t, &spec).unwrap();
        let b = modulation_function(t + 2.0 * tau, &spec).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a.abs() <= 1.0);
    }
    let inst = SequenceSpec::phase(0.3, 1.0, 2, Rabi::Instantaneous);
    assert_eq!(modulation_function(0.1, &inst).unwrap(), 1.0);
    assert_eq!(modulation_function(0.4, &inst).unwrap(), -1.0);
    assert!(modulation_function(-0.1, &inst).is_err());
}

#[test]
fn modulation_function_has_zero_mean() {
    let spec = SequenceSpec::composite(0.22075, 2.40647, 0.03, 0.02, 2, Rabi::Finite(OMEGA_50));
    let s = generate(&spec.with_half_blocks(1)).unwrap();
    // integrate piecewise between segment edges, where f1 is smooth
    let mut edges = vec![0.0];
    for seg in &s.segments {
        edges.push(edges.last().unwrap() + seg.duration);
    }
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += quadrature::double_exponential::integrate(
            |t| modulation_function(t, &spec).unwrap(),
            w[0],
            w[1],
            1e-13,
        )
        .integral;
    }
    assert!(total.abs() < 1e-10, "{total}");
}

fn spec_strategy() -> impl Strategy<Value = SequenceSpec> {
    (
        0.2f64..1.0,
        0.0f64..std::f64::consts::TAU,
        0.0f64..0.05,
        0.0f64..0.05,
        1usize..6,
        0usize..3,
        prop::bool::ANY,
    )
        .prop_map(|(tau, phi, t1, t2, r, v, finite)| {
            let rabi = if finite {
                Rabi::Finite(OMEGA_50)
            } else {
                Rabi::Instantaneous
            };
            match v {
                0 => SequenceSpec::phase(tau, phi, r, rabi),
                1 => SequenceSpec::duration(tau, phi, r, rabi),
                _ => SequenceSpec::composite(tau, phi, t1, t2, r, rabi),
            }
        })
}

proptest! {
    #[test]
    fn schedule_length_is_two_tau_per_half_block(spec in spec_strategy()) {
        let s = generate(&spec).unwrap();
        prop_assert!((s.total_duration() - 2.0 * spec.tau * spec.half_blocks as f64).abs() < 1e-12);
        prop_assert!(s.segments.iter().all(|x| x.duration >= 0.0));
    }
}
