//! Configuration-driven scenario runners.

pub mod analysis;
pub mod config;

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::design::{
    corrected_unitary, design_direct_gate, simulate_direct, spectator_frequency,
    spectator_infidelity, GateDesign, Metric,
};
use crate::error::{Error, Result};
use crate::evolution::{electron_frame, electron_spectrum, polarization_spectrum_with};
use crate::fidelity::{first_order_error_derivative, ErrorKind};
use crate::gates::{sequential_reference_gate, SequentialGate};
use crate::operator_core::CMat;
use crate::resonance::MagnitudeTarget;
use crate::results::{Axis, ScanResult};
use crate::sequence::{Rabi, SequenceSpec};
use crate::spin_model::{Nucleus, SpinSystem};

pub use config::ScenarioConfig;

use analysis::{envelope, fwhm_around, local_maxima, threshold_window};

fn axis_required<'a>(cfg: &'a ScenarioConfig, name: &str) -> Result<&'a config::AxisBlock> {
    cfg.axis(name)
        .ok_or_else(|| Error::Config(format!("scan axis {name:?} is required")))
}

fn finish(mut r: ScanResult, cfg: &ScenarioConfig, started: Instant) -> Result<ScanResult> {
    if !r.all_finite() {
        return Err(Error::NumericalFailure(
            "scan produced non-finite values".into(),
        ));
    }
    r.metadata.insert(
        "config".into(),
        serde_json::to_value(cfg).expect("config serializes"),
    );
    r.metadata
        .insert("wall_time_s".into(), json!(started.elapsed().as_secs_f64()));
    Ok(r)
}

fn design_meta(d: &GateDesign) -> serde_json::Value {
    json!({
        "phi": d.spec.phi,
        "tau_us": d.spec.tau,
        "tau1_us": d.calibration.tau1,
        "tau2_us": d.calibration.tau2,
        "a1_eff": d.calibration.a1,
        "a2_eff": d.calibration.a2,
        "super_periods": d.super_periods,
        "gate_time_us": d.total_time,
        "omega_eff": d.omega_eff,
    })
}

/// Resonance positions tau omega / pi = n + 1/2 +- phi/(2 pi) inside [lo, hi].
pub fn predicted_resonances(phi: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for n in 0..=(hi.ceil() as i64 + 1) {
        for s in [-1.0, 1.0] {
            let x = n as f64 + 0.5 + s * phi / (2.0 * PI);
            if x >= lo - 1e-12
                && x <= hi + 1e-12
                && !out.iter().any(|&y: &f64| (y - x).abs() < 1e-9)
            {
                out.push(x);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Nuclear polarization transfer against tau omega / pi for the first nucleus.
pub fn run_spectrum(cfg: &ScenarioConfig) -> Result<ScanResult> {
    let started = Instant::now();
    let phi = cfg
        .phi()
        .ok_or_else(|| Error::Config("spectrum needs phi_rad or phi_over_pi".into()))?;
    let ax = axis_required(cfg, "tau_omega_over_pi")?;
    let n = cfg.system.nuclei[0].to_nucleus()?;
    let system = SpinSystem::new(vec![n.clone()])?;
    let x = ax.to_axis("");
    let taus: Vec<f64> = x.values.iter().map(|v| v * PI / n.omega_l).collect();
    let r = cfg.sequence.half_blocks.unwrap_or(200);
    let raw = match cfg.spectrum.observable {
        config::Observable::Polarization => {
            polarization_spectrum_with(&system, phi, &taus, r, cfg.rabi()?)?
        }
        config::Observable::Electron => electron_spectrum(&system, phi, &taus, r, cfg.rabi()?)?,
    };
    let values = raw.values.clone();
    let predicted = predicted_resonances(phi, ax.min, ax.max);
    let peaks = spectrum_peaks(&x.values, &values, 0.1);
    let r = ScanResult::new(vec![x], raw.field.clone(), values)?
        .with_meta("phi", phi)
        .with_meta("half_blocks", r as u64)
        .with_meta("predicted_resonances", json!(predicted))
        .with_meta("peaks", json!(peaks));
    finish(r, cfg, started)
}

/// Smallest |signal| counted as a resonance (1% of full transfer from a mixed nucleus).
pub const PEAK_FLOOR: f64 = 0.005;

/// Positions of local maxima of |y| above PEAK_FLOOR that dominate every
/// sample within `half_window` (drops sinc sidelobes).
pub fn spectrum_peaks(x: &[f64], y: &[f64], half_window: f64) -> Vec<f64> {
    let mags: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    local_maxima(&mags)
        .into_iter()
        .filter(|&i| mags[i] > PEAK_FLOOR)
        .filter(|&i| {
            x.iter()
                .zip(&mags)
                .all(|(xj, mj)| (xj - x[i]).abs() > half_window || *mj <= mags[i])
        })
        .map(|i| x[i])
        .collect()
}

/// Calibrated direct-gate design.
pub fn run_calibrate(cfg: &ScenarioConfig) -> Result<GateDesign> {
    design_direct_gate(&cfg.design_request()?)
}

/// Calibrated design as a one-point result: gate time against K, with the
/// delays, effective couplings and residuals in the metadata.
pub fn run_calibrate_report(cfg: &ScenarioConfig) -> Result<ScanResult> {
    let started = Instant::now();
    let d = run_calibrate(cfg)?;
    let r = ScanResult::new(
        vec![Axis::new("super_periods", "", vec![d.super_periods as f64])],
        "gate_time_us",
        vec![d.total_time],
    )?
    .with_meta("design", design_meta(&d))
    .with_meta("ratio_residual", d.calibration.ratio_residual)
    .with_meta("magnitude_residual", d.calibration.magnitude_residual);
    finish(r, cfg, started)
}

fn metric(cfg: &ScenarioConfig) -> Metric {
    cfg.intruder.as_ref().map_or(Metric::Full, |i| i.metric)
}

/// One simulated gate with the configured errors and spectators.
pub fn run_simulate(cfg: &ScenarioConfig) -> Result<ScanResult> {
    let started = Instant::now();
    let design = run_calibrate(cfg)?;
    let delta = cfg.delta_rel(cfg.errors.detuning_mhz)?;
    let u = simulate_direct(&design, &cfg.spectators()?, delta, cfg.errors.amplitude_rel)?;
    let inf = spectator_infidelity(&u, &design.target()?, metric(cfg))?;
    let r = ScanResult::new(
        vec![Axis::new(
            "super_periods",
            "",
            vec![design.super_periods as f64],
        )],
        "infidelity",
        vec![inf],
    )?
    .with_meta("design", design_meta(&design));
    finish(r, cfg, started)
}

/// Process infidelity over detuning (MHz) and relative amplitude error.
pub fn run_error_scan(cfg: &ScenarioConfig) -> Result<ScanResult> {
    let started = Instant::now();
    let design = run_calibrate(cfg)?;
    let target = design.target()?;
    let mut axes = Vec::new();
    for a in &cfg.scan.axes {
        match a.name.as_str() {
            "detuning_mhz" => axes.push(a.to_axis("MHz")),
            "amplitude_rel" => axes.push(a.to_axis("")),
            other => {
                return Err(Error::Config(format!(
                    "error scans take detuning_mhz / amplitude_rel axes, got {other:?}"
                )))
            }
        }
    }
    if axes.is_empty() {
        return Err(Error::Config("error scan needs at least one axis".into()));
    }
    let points = grid_points(&axes);
    let spectators = cfg.spectators()?;
    let m = metric(cfg);
    let values: Result<Vec<f64>> = points
        .par_iter()
        .map(|p| {
            let mut det = cfg.errors.detuning_mhz;
            let mut amp = cfg.errors.amplitude_rel;
            for (ax, v) in axes.iter().zip(p) {
                if ax.name == "detuning_mhz" {
                    det = *v;
                } else {
                    amp = *v;
                }
            }
            let u = simulate_direct(&design, &spectators, cfg.delta_rel(det)?, amp)?;
            spectator_infidelity(&u, &target, m)
        })
        .collect();
    let r = ScanResult::new(axes, "infidelity", values?)?.with_meta("design", design_meta(&design));
    finish(r, cfg, started)
}

fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    match axes {
        [a] => a.values.iter().map(|&x| vec![x]).collect(),
        [a, b] => a
            .values
            .iter()
            .flat_map(|&x| b.values.iter().map(move |&y| vec![x, y]))
            .collect(),
        _ => Vec::new(),
    }
}

fn intruder(cfg: &ScenarioConfig, omega: f64) -> Result<Nucleus> {
    let i = cfg
        .intruder
        .as_ref()
        .ok_or_else(|| Error::Config("an [intruder] block is required".into()))?;
    Nucleus::new(
        omega,
        config::khz(i.aperp_khz),
        config::khz(i.apar_khz),
        "intruder",
    )
}

/// Infidelity of the direct gate caused by a spectator at each omega3.
pub fn direct_intruder_curve(
    cfg: &ScenarioConfig,
    design: &GateDesign,
    omegas3: &[f64],
    delta: f64,
    amp: f64,
) -> Result<Vec<f64>> {
    let reference = simulate_direct(design, &[], delta, amp)?;
    let m = metric(cfg);
    omegas3
        .par_iter()
        .map(|&w| {
            let u = simulate_direct(design, &[intruder(cfg, w)?], delta, amp)?;
            spectator_infidelity(&u, &reference, m)
        })
        .collect()
}

/// Infidelity of the sequential reference caused by a spectator at each omega3.
pub fn sequential_intruder_curve(
    cfg: &ScenarioConfig,
    targets: &[Nucleus; 2],
    gate: &SequentialGate,
    omegas3: &[f64],
) -> Result<Vec<f64>> {
    let bare: Vec<f64> = targets.iter().map(|n| n.omega_l).collect();
    let reference = corrected_unitary(
        &SpinSystem::new(targets.to_vec())?,
        &gate.schedule,
        1,
        &bare,
    )?;
    let m = metric(cfg);
    omegas3
        .par_iter()
        .map(|&w| {
            let intr = intruder(cfg, w)?;
            let mut omegas = bare.clone();
            omegas.push(spectator_frequency(&intr, &gate.schedule, 4)?);
            let mut nuclei = targets.to_vec();
            nuclei.push(intr);
            let u = corrected_unitary(&SpinSystem::new(nuclei)?, &gate.schedule, 1, &omegas)?;
            spectator_infidelity(&u, &reference, m)
        })
        .collect()
}

fn design_with_periods(cfg: &ScenarioConfig, k: u64) -> Result<GateDesign> {
    let mut req = cfg.design_request()?;
    req.magnitude = MagnitudeTarget::SuperPeriods(k);
    design_direct_gate(&req)
}

fn threshold(cfg: &ScenarioConfig) -> f64 {
    cfg.intruder
        .as_ref()
        .and_then(|i| i.threshold)
        .unwrap_or(0.01)
}

/// Spectator scan over omega3 (MHz), optionally also over total gate time (us).
pub fn run_third_spin_scan(cfg: &ScenarioConfig) -> Result<ScanResult> {
    let started = Instant::now();
    let w_ax = axis_required(cfg, "omega3_mhz")?.to_axis("MHz");
    let omegas3: Vec<f64> = w_ax.values.iter().map(|&v| config::mhz(v)).collect();
    let delta = cfg.delta_rel(cfg.errors.detuning_mhz)?;
    let amp = cfg.errors.amplitude_rel;
    let base = run_calibrate(cfg)?;
    let w1 = base.targets[0].omega_l;
    let thr = threshold(cfg);
    let (designs, axes, time_first) = match cfg.axis("gate_time_us") {
        Some(t) => {
            let t_ax = t.to_axis("us");
            let designs = t_ax
                .values
                .iter()
                .map(|&tt| {
                    let k = (tt / (4.0 * base.spec.tau)).round().max(1.0) as u64;
                    design_with_periods(cfg, k)
                })
                .collect::<Result<Vec<_>>>()?;
            let first = cfg.scan.axes[0].name == "gate_time_us";
            let axes = if first {
                vec![t_ax, w_ax.clone()]
            } else {
                vec![w_ax.clone(), t_ax]
            };
            (designs, axes, first)
        }
        None => (vec![base.clone()], vec![w_ax.clone()], true),
    };
    let mut curves = Vec::with_capacity(designs.len());
    let mut windows = Vec::new();
    for d in &designs {
        let c = direct_intruder_curve(cfg, d, &omegas3, delta, amp)?;
        windows.push(json!({
            "gate_time_us": d.total_time,
            "super_periods": d.super_periods,
            "window_mhz": threshold_window(&w_ax.values, &c, w1 / (2.0 * PI), thr),
        }));
        curves.push(c);
    }
    let values: Vec<f64> = if time_first {
        curves.concat()
    } else {
        (0..omegas3.len())
            .flat_map(|i| curves.iter().map(move |c| c[i]))
            .collect()
    };
    let r = ScanResult::new(axes, "infidelity", values)?
        .with_meta("threshold", thr)
        .with_meta("windows", json!(windows))
        .with_meta("design", design_meta(&base));
    finish(r, cfg, started)
}

/// Summary numbers of the direct-versus-sequential comparison.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Comparison {
    pub direct_time_us: f64,
    pub sequential_time_us: f64,
    pub reduction: f64,
    pub direct_at_sequential_time_us: f64,
    pub fwhm_direct_fastest_mhz: Option<f64>,
    pub fwhm_direct_equal_time_mhz: Option<f64>,
    pub fwhm_sequential_envelope_mhz: Option<f64>,
    pub fwhm_ratio: Option<f64>,
}

/// Direct gate at its fastest time, direct gate at the sequential time, and
/// the sequential reference, each against a spectator swept in omega3 (MHz).
/// The second axis indexes those three curves.
pub fn run_comparison(cfg: &ScenarioConfig) -> Result<ScanResult> {
    let started = Instant::now();
    let w_ax = axis_required(cfg, "omega3_mhz")?.to_axis("MHz");
    let omegas3: Vec<f64> = w_ax.values.iter().map(|&v| config::mhz(v)).collect();
    let fastest = run_calibrate(cfg)?;
    let targets = fastest.targets.clone();
    let seq = sequential_reference_gate(
        &SpinSystem::new(targets.to_vec())?,
        targets[0].a_perp,
        targets[1].a_perp,
    )?;
    let k_eq = (seq.total_time / (4.0 * fastest.spec.tau)).round() as u64;
    let equal = design_with_periods(cfg, k_eq)?;
    let c_fast = direct_intruder_curve(cfg, &fastest, &omegas3, 0.0, 0.0)?;
    let c_eq = direct_intruder_curve(cfg, &equal, &omegas3, 0.0, 0.0)?;
    let c_seq = sequential_intruder_curve(cfg, &targets, &seq, &omegas3)?;
    let centre = targets[0].omega_l / (2.0 * PI);
    let x = &w_ax.values;
    let f_fast = fwhm_around(x, &c_fast, centre);
    let f_eq = fwhm_around(x, &c_eq, centre);
    let f_seq = fwhm_around(x, &envelope(&c_seq), centre);
    let summary = Comparison {
        direct_time_us: fastest.total_time,
        sequential_time_us: seq.total_time,
        reduction: 1.0 - fastest.total_time / seq.total_time,
        direct_at_sequential_time_us: equal.total_time,
        fwhm_direct_fastest_mhz: f_fast,
        fwhm_direct_equal_time_mhz: f_eq,
        fwhm_sequential_envelope_mhz: f_seq,
        fwhm_ratio: f_seq.zip(f_eq).map(|(s, d)| s / d),
    };
    let values: Vec<f64> = (0..x.len())
        .flat_map(|i| [c_fast[i], c_eq[i], c_seq[i]])
        .collect();
    let r = ScanResult::new(
        vec![w_ax.clone(), Axis::new("curve", "", vec![0.0, 1.0, 2.0])],
        "infidelity",
        values,
    )?
    .with_meta(
        "curves",
        json!(["direct_fastest", "direct_equal_time", "sequential"]),
    )
    .with_meta(
        "summary",
        serde_json::to_value(&summary).expect("summary serializes"),
    )
    .with_meta("design", design_meta(&fastest))
    .with_meta("sequential_blocks", json!(seq.block_periods));
    finish(r, cfg, started)
}

/// Pull the comparison summary back out of a result.
pub fn comparison_summary(r: &ScanResult) -> Option<&serde_json::Value> {
    r.metadata.get("summary")
}

pub const DIAGNOSTIC_SERIES: [&str; 4] = [
    "phase_amplitude",
    "phase_detuning",
    "duration_detuning",
    "abs_sin_n_phi",
];

/// First-order error norms against the number of half-blocks.
pub fn run_error_diagnostics(cfg: &ScenarioConfig) -> Result<ScanResult> {
    let started = Instant::now();
    let phi = cfg
        .phi()
        .ok_or_else(|| Error::Config("diagnostics need phi_rad or phi_over_pi".into()))?;
    let rabi = match cfg.rabi()? {
        Rabi::Instantaneous => Rabi::Finite(config::mhz(50.0)),
        r => r,
    };
    let rs: Vec<usize> = match cfg.axis("half_blocks") {
        Some(a) => a
            .to_axis("")
            .values
            .iter()
            .map(|v| v.round() as usize)
            .collect(),
        None => vec![4, 8, 16, 32, 64],
    };
    if rs.iter().any(|&r| r == 0 || r % 2 == 1) {
        return Err(Error::Config(
            "half_blocks values must be even and positive".into(),
        ));
    }
    let tau = cfg.sequence.tau_us.unwrap_or(1.0);
    let rows: Result<Vec<[f64; 4]>> = rs
        .par_iter()
        .map(|&r| {
            let p = SequenceSpec::phase(tau, phi, r, rabi);
            let d = SequenceSpec::duration(tau, phi, r, rabi);
            let n = (r / 2) as f64;
            Ok([
                first_order_error_derivative(&p, ErrorKind::Amplitude)?,
                first_order_error_derivative(&p, ErrorKind::Detuning)?,
                first_order_error_derivative(&d, ErrorKind::Detuning)?,
                (n * phi).sin().abs(),
            ])
        })
        .collect();
    let rows = rows?;
    let amp_max = rows.iter().map(|r| r[0]).fold(0.0, f64::max);
    let det: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let det_max = det.iter().cloned().fold(0.0, f64::max);
    let det_min = det.iter().cloned().fold(f64::INFINITY, f64::min);
    let track = rows
        .iter()
        .map(|r| (r[2] - r[3]).abs() / r[3].max(1e-12))
        .fold(0.0, f64::max);
    let r = ScanResult::new(
        vec![
            Axis::new("half_blocks", "", rs.iter().map(|&r| r as f64).collect()),
            Axis::new("series", "", vec![0.0, 1.0, 2.0, 3.0]),
        ],
        "first_order_norm",
        rows.concat(),
    )?
    .with_meta("series", json!(DIAGNOSTIC_SERIES))
    .with_meta("phi", phi)
    .with_meta(
        "verdicts",
        json!({
            "amplitude_max": amp_max,
            "amplitude_cancelled": amp_max < 1e-3,
            "detuning_max_over_min": det_max / det_min,
            "detuning_bounded_ratio": det_max / det_min < 2.0,
            "duration_tracking_max_rel": track,
            "duration_tracks_sin": track < 0.1,
        }),
    );
    finish(r, cfg, started)
}

/// Electron frame of a schedule, exposed for replay checks.
pub fn schedule_frame(design: &GateDesign) -> Result<CMat> {
    Ok(electron_frame(&design.schedule()?))
}
