mod common;

use nvgate::design::{design_direct_gate, simulate_direct};
use nvgate::error::Error;
use nvgate::experiments::config::ScenarioConfig;
use nvgate::fidelity::*;
use nvgate::operator_core::*;
use nvgate::sequence::{Rabi, SequenceSpec};
use nvgate::spin_model::Nucleus;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

fn random_unitary(seed: u64, dim: usize) -> CMat {
    let mut r = common::rng(seed);
    let h = common::random_hermitian(&mut r, dim);
    exp_hermitian(&h, 1.0, 1.0).unwrap()
}

#[test]
fn choi_overlap_by_definition() {
    // |<Psi(U)|Psi(V)>|^2 with Psi(U) = (U x 1) sum |i>|i> / sqrt(d)
    for (seed, d) in [(1u64, 2usize), (2, 4), (3, 8)] {
        let u = random_unitary(seed, d);
        let v = random_unitary(seed + 100, d);
        let choi = |m: &CMat| {
            let mut psi = nalgebra::DVector::zeros(d * d);
            for i in 0..d {
                for k in 0..d {
                    psi[k * d + i] = m[(k, i)] / (d as f64).sqrt();
                }
            }
            psi
        };
        let want = (choi(&u).adjoint() * choi(&v))[(0, 0)].norm_sqr();
        let f = process_fidelity(&u, &v).unwrap();
        assert!((f.value - want).abs() < 1e-14);
        assert_eq!(f.dim, d);
    }
}

#[test]
fn fidelity_examples() {
    let u = random_unitary(9, 16);
    assert!((process_fidelity(&u, &u).unwrap().value - 1.0).abs() < 1e-12);
    let z = embed(&sigma_z(), 0, 4).unwrap();
    assert!(process_fidelity(&identity(16), &z).unwrap().value < 1e-28);
    for theta in [0.0, 0.4, 1.3, PI, 2.9] {
        let v = exp_hermitian(&embed(&sigma_z().scale(0.5), 0, 4).unwrap(), theta, 1.0).unwrap();
        let f = process_fidelity(&identity(16), &v).unwrap().value;
        assert!((f - (theta / 2.0).cos().powi(2)).abs() < 1e-13);
    }
    assert!(matches!(
        process_fidelity(&identity(4), &identity(8)),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn subspace_examples() {
    let idx = encoded_subspace(2);
    let u = random_unitary(4, 8);
    assert!((subspace_process_fidelity(&u, &u, &idx).unwrap().value - 1.0).abs() < 1e-12);
    // x on nucleus 1 sends the block to {00, 11}
    let leak = embed(&sigma_x(), 1, 3).unwrap();
    assert!(
        subspace_process_fidelity(&identity(8), &leak, &idx)
            .unwrap()
            .value
            < 1e-28
    );
    assert!(subspace_process_fidelity(&u, &u, &[]).is_err());
    assert!(subspace_process_fidelity(&u, &u, &[8]).is_err());
    assert_eq!(encoded_subspace(3), vec![2, 3, 4, 5, 10, 11, 12, 13]);
}

#[test]
fn encoded_metric_ignores_a_decoupled_third_spin() {
    let cfg = ScenarioConfig::load(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/configs/encoded.toml"
    )))
    .unwrap();
    let d = design_direct_gate(&cfg.design_request().unwrap()).unwrap();
    let target = d.target().unwrap();
    let idx2 = encoded_subspace(2);
    let two = simulate_direct(&d, &[], 0.0, 0.0).unwrap();
    let f2 = subspace_process_fidelity(&two, &target, &idx2)
        .unwrap()
        .infidelity();
    let third = Nucleus::new(d.targets[0].omega_l, 0.0, 0.0, "free").unwrap();
    let three = simulate_direct(&d, &[third], 0.0, 0.0).unwrap();
    let f3 = subspace_process_fidelity(&three, &kron(&target, &identity(2)), &encoded_subspace(3))
        .unwrap()
        .infidelity();
    assert!((f2 - f3).abs() < 1e-6, "{f2} {f3}");
    assert!(f2 < 1e-3, "{f2}");
}

#[test]
fn pulse_examples() {
    let u = pulse_error_unitary(PI, 0.0, 0.0, 0.0);
    assert!(max_abs_diff(&u, &sigma_x().map(|z| z * c(0.0, -1.0))) < 1e-15);
    let u = pulse_error_unitary(PI, 0.0, 0.0, 0.01);
    let want = exp_hermitian(&sigma_x().scale(0.5), 1.01 * PI, 1.0).unwrap();
    assert!(max_abs_diff(&u, &want) < 1e-14);
    let h = (sigma_z().scale(0.1) + sigma_x()).scale(0.5);
    let u = pulse_error_unitary(PI, 0.0, 0.1, 0.0);
    assert!(max_abs_diff(&u, &common::taylor_exp(&h, PI, 1.0, 40)) < 1e-12);
    // phase pi/2 is a y rotation
    let u = pulse_error_unitary(FRAC_PI_2, FRAC_PI_2, 0.0, 0.0);
    assert!(
        max_abs_diff(
            &u,
            &exp_hermitian(&sigma_y().scale(0.5), FRAC_PI_2, 1.0).unwrap()
        ) < 1e-14
    );
}

fn phase(phi: f64, r: usize) -> SequenceSpec {
    SequenceSpec::phase(1.0, phi, r, Rabi::Finite(2.0 * PI * 50.0))
}

#[test]
fn amplitude_errors_cancel_to_first_order() {
    for phi in [0.3, 1.0, FRAC_PI_2, 2.40647, 3.0] {
        for r in [2usize, 4, 8, 16, 24, 32, 40] {
            let d = first_order_error_derivative(&phase(phi, r), ErrorKind::Amplitude).unwrap();
            assert!(d < 1e-3, "phi {phi} R {r}: {d}");
        }
    }
}

#[test]
fn detuning_term_vanishes_at_quarter_turn() {
    for r in [4usize, 8, 16, 32] {
        let d = first_order_error_derivative(&phase(FRAC_PI_2, r), ErrorKind::Detuning).unwrap();
        assert!(d < 1e-6, "R {r}: {d}");
    }
}

#[test]
fn detuning_term_is_bounded_independent_of_length() {
    // the norm follows |sin(N phi)| / sin(phi / 2) with N = R / 2
    for phi in [0.3f64, 1.0, 2.0, 2.40647] {
        let bound = 1.0 / (phi / 2.0).sin();
        for r in [4usize, 8, 16, 32, 64] {
            let d = first_order_error_derivative(&phase(phi, r), ErrorKind::Detuning).unwrap();
            assert!(d <= bound * (1.0 + 1e-6), "phi {phi} R {r}: {d} > {bound}");
            let n = (r / 2) as f64;
            let want = (n * phi).sin().abs() * bound;
            assert!(
                (d - want).abs() < 1e-4 * bound,
                "phi {phi} R {r}: {d} vs {want}"
            );
        }
    }
}

#[test]
fn duration_variant_follows_sin_n_phi() {
    for phi in [0.3f64, 1.0, 2.40647] {
        let ratios: Vec<f64> = [4usize, 8, 16, 32, 40, 64]
            .iter()
            .filter_map(|&r| {
                let s = ((r / 2) as f64 * phi).sin().abs();
                (s > 0.1).then(|| {
                    let spec = SequenceSpec::duration(1.0, phi, r, Rabi::Finite(2.0 * PI * 50.0));
                    first_order_error_derivative(&spec, ErrorKind::Detuning).unwrap() / s
                })
            })
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(ratios.len() >= 3);
        assert!(hi / lo - 1.0 < 0.1, "phi {phi}: {ratios:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn global_phase_invariance(seed in 0u64..10_000, theta in -10.0f64..10.0, k in 1usize..4) {
        let d = 1 << k;
        let u = random_unitary(seed, d);
        let v = u.map(|z| z * c(theta.cos(), theta.sin()));
        prop_assert!((process_fidelity(&u, &v).unwrap().value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_and_bounded(seed in 0u64..10_000, k in 1usize..4) {
        let d = 1 << k;
        let u = random_unitary(seed, d);
        let v = random_unitary(seed ^ 0xdead, d);
        let a = process_fidelity(&u, &v).unwrap().value;
        let b = process_fidelity(&v, &u).unwrap().value;
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        let s = subspace_process_fidelity(&u, &v, &[0, d - 1]).unwrap().value;
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
    }
}
