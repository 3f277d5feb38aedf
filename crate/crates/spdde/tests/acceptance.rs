//! Acceptance suite: one test per certified capability, each printing a
//! pass/fail line with its measured margin. Every tolerance is pinned here.

use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use spdde::comparison::{
    comparison_certificate, derive_comparison_rates, dwell_envelope, dwell_time_threshold,
    halanay_lambda, verify_halanay_bound, ComparisonModel,
};
use spdde::drivers::{
    compensator_drift, sample_jumps, sample_wiener_increment, DriverRngs, JumpModel, JumpRngs,
    RngStream, StreamRole, WienerModel,
};
use spdde::history::HistorySegment;
use spdde::integrator::{
    integrate_mild, simulate_ensemble, yosida_gap, InitialDatum, LinearCoeffs, SPDDEProblem,
    Subsystem,
};
use spdde::presets::{
    adversarial_adt_signal, contracting_lyapunov_spec, contracting_problem, contracting_signal,
    linear_lyapunov_spec, linear_stable_problem, switched_lyapunov_spec, switched_stable_problem,
};
use spdde::spectral::{make_dirichlet_laplacian, FieldState};
use spdde::stability::{
    check_fixed_index_decrement, check_gasm, check_gasp, eval_generator, fit_kl_envelope,
    measure_curve, ClassK, LyapunovFunction, MonteCarloSettings,
};
use spdde::switching::generate_adt_signal;

fn verdict_line(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {:02} {name}: {} ({detail})",
        id,
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

/// Criterion 1: the Halanay rate against an independent bisection oracle.
#[test]
fn acceptance_01_halanay_root() {
    // oracle: plain bisection on λ − 3 + e^λ, written without reference to
    // the library routine
    let g = |l: f64| l - 3.0 + l.exp();
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);

    let root = halanay_lambda(-3.0, 1.0, 1.0).unwrap();
    let zero_delay = halanay_lambda(-2.0, 1.0, 0.0).unwrap();
    let pass = (root - oracle).abs() <= 1e-5 && (zero_delay - 1.0).abs() <= 1e-10;
    verdict_line(
        1,
        "halanay-root",
        pass,
        &format!("root {root} vs oracle {oracle}, zero-delay {zero_delay}"),
    );
}

/// Criterion 2: the Halanay envelope holds at the supremal rate and is
/// refuted at 1.5 times that rate.
#[test]
fn acceptance_02_halanay_envelope() {
    let lambda = halanay_lambda(-3.0, 1.0, 1.0).unwrap();
    let at_rate = verify_halanay_bound(-3.0, 1.0, 1.0, lambda, 10.0, 0.01).unwrap();
    let inflated = verify_halanay_bound(-3.0, 1.0, 1.0, 1.5 * lambda, 10.0, 0.01).unwrap();
    let pass = at_rate.verdict && !inflated.verdict;
    verdict_line(
        2,
        "halanay-envelope",
        pass,
        &format!(
            "margin at lambda* {}, margin at 1.5 lambda* {}",
            at_rate.margin, inflated.margin
        ),
    );
}

/// Criterion 3: dwell-time dichotomy in exact arithmetic on the iterated
/// envelope.
#[test]
fn acceptance_03_dwell_time_dichotomy() {
    let lambda = halanay_lambda(-3.0, 1.0, 1.0).unwrap();
    let mu = 2.0;
    let threshold = dwell_time_threshold(mu, lambda).unwrap();

    let log_slope = |gap: f64, cycles: usize| -> f64 {
        let resets: Vec<f64> = (1..=cycles).map(|k| k as f64 * gap).collect();
        let horizon = cycles as f64 * gap;
        let v = dwell_envelope(1.0, mu, lambda, &resets, 0.0, horizon).unwrap();
        v.ln() / horizon
    };
    let slow = log_slope(2.0 * threshold, 20);
    let fast = log_slope(0.5 * threshold, 20);
    let pass = slow <= -lambda / 2.0 + 1e-12
        && fast > 0.0
        && (threshold - 0.87513).abs() <= 1e-4;
    verdict_line(
        3,
        "dwell-time-dichotomy",
        pass,
        &format!("threshold {threshold}, slow slope {slow}, fast slope {fast}"),
    );
}

/// Criterion 4: the approximating strong system converges to the mild
/// solution along the ladder n = 10, 100, 1000.
#[test]
fn acceptance_04_yosida_convergence() {
    let prob = linear_stable_problem();
    let sig = spdde::switching::SwitchingSignal::constant(0);
    let h = prob.tau / 20.0;
    let gaps: Vec<f64> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&n| yosida_gap(&prob, &sig, n, 2.0, h, 2000, 424242).unwrap())
        .collect();
    let pass = gaps[1] <= gaps[0] && gaps[2] <= gaps[1] && gaps[2] <= 0.1 * gaps[0];
    verdict_line(
        4,
        "yosida-convergence",
        pass,
        &format!("gaps {gaps:?}"),
    );
}

/// Method-of-steps reference: RK4 on a fine grid for
/// `x' = μx + b x(t−τ)` with constant unit history.
fn reference_delay_solution(mu: f64, b: f64, tau: f64, horizon: f64, fine: f64) -> Vec<f64> {
    let lag = (tau / fine).round() as usize;
    let steps = (horizon / fine).round() as usize;
    let mut xs = vec![1.0f64; lag + 1];
    let delayed = |xs: &Vec<f64>, idx: f64| -> f64 {
        let lo = idx.floor() as usize;
        let frac = idx - idx.floor();
        if lo + 1 < xs.len() {
            xs[lo] * (1.0 - frac) + xs[lo + 1] * frac
        } else {
            xs[lo]
        }
    };
    for m in 0..steps {
        let i = lag + m;
        let x = xs[i];
        let f = |offset: f64, xv: f64, xs: &Vec<f64>| -> f64 {
            mu * xv + b * delayed(xs, i as f64 + offset - lag as f64)
        };
        let k1 = f(0.0, x, &xs);
        let k2 = f(0.5, x + 0.5 * fine * k1, &xs);
        let k3 = f(0.5, x + 0.5 * fine * k2, &xs);
        let k4 = f(1.0, x + fine * k3, &xs);
        xs.push(x + fine / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    }
    xs.split_off(lag)
}

/// Criterion 5: first-order convergence of the scheme in the deterministic
/// delay case, measured against the method-of-steps reference.
#[test]
fn acceptance_05_scheme_order() {
    let prob = SPDDEProblem {
        op: make_dirichlet_laplacian(1).unwrap(),
        wiener: WienerModel::inverse_square(1),
        jumps: JumpModel::none(),
        tau: 1.0,
        subsystems: vec![Subsystem::linear(LinearCoeffs {
            drift_self: 0.0,
            drift_delayed: 0.5,
            noise_self: 0.0,
            noise_delayed: 0.0,
            jump_scale: 0.0,
        })],
        initial: InitialDatum::constant(FieldState::new(vec![1.0])),
        lipschitz_budget: 1.0,
        fourth_moment_budget: 0.01,
    };
    let sig = spdde::switching::SwitchingSignal::constant(0);
    let max_error = |h: f64| -> f64 {
        let mut rngs = DriverRngs::for_trajectory(1, 0);
        let traj = integrate_mild(&prob, &sig, 3.0, h, &mut rngs).unwrap();
        let fine = h / 100.0;
        let reference = reference_delay_solution(-1.0, 0.5, 1.0, 3.0, fine);
        traj.states
            .iter()
            .enumerate()
            .map(|(m, s)| (s.coords[0] - reference[m * 100]).abs())
            .fold(0.0, f64::max)
    };
    let errors: Vec<f64> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&h| max_error(h)).collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.iter().all(|r| (1.5..=3.0).contains(r));
    verdict_line(
        5,
        "scheme-order",
        pass,
        &format!("errors {errors:?}, ratios {ratios:?}"),
    );
}

fn stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Criterion 6: driver statistics at 1e5 samples with 5-standard-error
/// tolerances.
#[test]
fn acceptance_06_driver_statistics() {
    let n = 100_000usize;

    // Q-Wiener per-mode variance and cross-mode covariance
    let wiener = WienerModel::inverse_square(2);
    let dt = 0.01;
    let mut rng = RngStream::new(606, 0, StreamRole::Wiener).materialize();
    let mut mode1 = Vec::with_capacity(n);
    let mut mode2 = Vec::with_capacity(n);
    for _ in 0..n {
        let inc = sample_wiener_increment(&wiener, dt, &mut rng).unwrap();
        mode1.push(inc.coords[0]);
        mode2.push(inc.coords[1]);
    }
    let (m1, v1) = stats(&mode1);
    let (m2, v2) = stats(&mode2);
    let mut pass = true;
    let mut detail = String::new();
    for (k, (v, lam)) in [(v1, 1.0), (v2, 0.25)].iter().enumerate() {
        let target = lam * dt;
        let se = target * (2.0 / (n as f64 - 1.0)).sqrt();
        detail.push_str(&format!("mode{} var {v} vs {target}; ", k + 1));
        pass &= (v - target).abs() <= 5.0 * se;
    }
    let cov = mode1
        .iter()
        .zip(&mode2)
        .map(|(a, b)| (a - m1) * (b - m2))
        .sum::<f64>()
        / (n as f64 - 1.0);
    let se_cov = (v1 * v2 / n as f64).sqrt();
    pass &= cov.abs() <= 5.0 * se_cov;
    detail.push_str(&format!("cov {cov}; "));

    // compensated jump integral over [0, 1]
    let jumps = JumpModel::new(vec![-0.2, 0.2], vec![1.0, 1.0]).unwrap();
    let x = FieldState::new(vec![0.5, -0.25]);
    let y = FieldState::new(vec![0.1, 0.1]);
    let jump_fn = |x: &FieldState, _y: &FieldState, u: f64| x.scaled(0.5 * u);
    let comp = compensator_drift(&jumps, jump_fn, &x, &y);
    let mut coord_sums = vec![Vec::with_capacity(n), Vec::with_capacity(n)];
    for p in 0..n {
        let mut rngs = JumpRngs {
            count: RngStream::new(607, p as u64, StreamRole::JumpCount).materialize(),
            time: RngStream::new(607, p as u64, StreamRole::JumpTime).materialize(),
            mark: RngStream::new(607, p as u64, StreamRole::JumpMark).materialize(),
        };
        let mut acc = FieldState::zeros(2);
        for s in 0..10 {
            for e in sample_jumps(&jumps, s as f64 * 0.1, 0.1, &mut rngs).unwrap() {
                acc.add_scaled(&jump_fn(&x, &y, e.mark), 1.0);
            }
            acc.add_scaled(&comp, -0.1);
        }
        coord_sums[0].push(acc.coords[0]);
        coord_sums[1].push(acc.coords[1]);
    }
    for coord in &coord_sums {
        let (mean, var) = stats(coord);
        let se = (var / n as f64).sqrt();
        pass &= mean.abs() <= 5.0 * se;
        detail.push_str(&format!("jump mean {mean}; "));
    }
    verdict_line(6, "driver-statistics", pass, &detail);
}

/// Criterion 7: the comparison certificate on the shipped linear problem
/// with algebraically derived rates.
#[test]
fn acceptance_07_comparison_certificate() {
    let prob = linear_stable_problem();
    let spec = linear_lyapunov_spec();
    let (gamma1, gamma2) = derive_comparison_rates(&prob).unwrap();
    assert!(gamma1 + gamma2 < 0.0);
    let psi0 = prob.initial.eval(0.0).norm_sq();
    let model = ComparisonModel::linear(gamma1, gamma2, move |_| psi0, prob.tau);
    let mc = MonteCarloSettings {
        trajectories: 2000,
        master_seed: 777,
        horizon: 5.0,
        step: prob.tau / 20.0,
    };
    let report = comparison_certificate(
        &prob,
        &spdde::switching::SwitchingSignal::constant(0),
        &spec,
        &model,
        &mc,
    )
    .unwrap();
    verdict_line(
        7,
        "comparison-certificate",
        report.verdict,
        &format!(
            "gamma1 {gamma1}, gamma2 {gamma2}, min margin {}",
            report.margin
        ),
    );
}

/// Criterion 8: the mean and probability stability pipeline on the switched
/// problem under a generated dwell-time signal with `τa = 2·threshold`.
#[test]
fn acceptance_08_gasm_gasp_pipeline() {
    let prob = switched_stable_problem();
    let spec = switched_lyapunov_spec();
    let (gamma1, gamma2) = derive_comparison_rates(&prob).unwrap();
    let lambda = halanay_lambda(gamma1, gamma2, prob.tau).unwrap();
    let mu = spec.v.mode_ratio_bound().unwrap();
    let threshold = dwell_time_threshold(mu, lambda).unwrap();

    let horizon = 5.0 * prob.tau;
    let step = prob.tau / 20.0;
    let mut sig_rng = ChaCha12Rng::seed_from_u64(4);
    let sig = generate_adt_signal(
        &[0, 1],
        2.0 * threshold,
        2.0,
        horizon,
        Some(step),
        &mut sig_rng,
    )
    .unwrap();
    assert!(sig.verify_adt(2.0 * threshold, 2.0).is_ok());
    assert!(sig.num_switches() >= 2, "scenario should actually switch");

    // training runs on two initial scales, fresh evaluation on a new seed
    let mut curves = Vec::new();
    for (j, scale) in [1.0f64, 2.0].iter().enumerate() {
        let mut scaled = prob.clone();
        scaled.initial = prob.initial.scaled(*scale);
        let segment =
            HistorySegment::from_fn(|theta| scaled.initial.eval(theta), prob.tau, step).unwrap();
        let r = spec.h0.eval(&segment);
        let trajs = simulate_ensemble(&scaled, &sig, horizon, step, 2000, 9000 + j as u64).unwrap();
        curves.push((r, measure_curve(&trajs, &spec.h).unwrap()));
    }
    let fit = fit_kl_envelope(&curves).unwrap();
    let mut pass = fit.is_kl;
    let mut detail = format!(
        "tau_a {} (threshold {threshold}), envelope c {}, rate {}; ",
        2.0 * threshold,
        fit.envelope.scale,
        fit.envelope.rate
    );

    let fresh = simulate_ensemble(&prob, &sig, horizon, step, 2000, 31337).unwrap();
    let fresh_curve = measure_curve(&fresh, &spec.h).unwrap();
    let segment =
        HistorySegment::from_fn(|theta| prob.initial.eval(theta), prob.tau, step).unwrap();
    let r = spec.h0.eval(&segment);
    let gasm = check_gasm(&fresh_curve, &fit.envelope, r);
    pass &= gasm.verdict;
    detail.push_str(&format!("gasm margin {}; ", gasm.margin));

    for eta in [0.5, 0.1, 0.05] {
        let gasp = check_gasp(&fresh, &spec.h, &fit.envelope, r, eta).unwrap();
        pass &= gasp.verdict;
        detail.push_str(&format!("gasp({eta}) margin {}; ", gasp.margin));
    }
    verdict_line(8, "gasm-gasp-pipeline", pass, &detail);
}

/// Criterion 9: the fixed-index decrement holds on the contracting scenario
/// and fails once the decrement function is inflated a millionfold.
#[test]
fn acceptance_09_fixed_index_decrement() {
    let prob = contracting_problem();
    let sig = contracting_signal();
    let spec = contracting_lyapunov_spec();
    let mc = MonteCarloSettings {
        trajectories: 500,
        master_seed: 4242,
        horizon: 2.5,
        step: prob.tau / 20.0,
    };
    let report = check_fixed_index_decrement(&prob, &sig, &spec, 1000.0, &mc).unwrap();

    let mut inflated = spec.clone();
    inflated.u_fn = ClassK::linear(0.05 * 1e6).unwrap();
    let inflated_report =
        check_fixed_index_decrement(&prob, &sig, &inflated, 1000.0, &mc).unwrap();

    let pass = report.verdict && !report.rows.is_empty() && !inflated_report.verdict;
    verdict_line(
        9,
        "fixed-index-decrement",
        pass,
        &format!(
            "{} pairs, margin {}, inflated margin {}",
            report.rows.len(),
            report.margin,
            inflated_report.margin
        ),
    );
}

/// Criterion 10: generated signals always satisfy their budget; the
/// adversarial fixture is rejected with its violating window.
#[test]
fn acceptance_10_adt_tooling() {
    let mut generated = 0usize;
    let mut all_ok = true;
    for (tau_a, chatter) in [
        (0.5, 1.0),
        (0.5, 2.0),
        (0.5, 5.0),
        (1.0, 1.0),
        (1.0, 2.0),
        (1.0, 5.0),
        (2.0, 1.0),
        (2.0, 2.0),
        (2.0, 5.0),
    ] {
        for seed in 0..12u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(seed * 31 + 1);
            let sig =
                generate_adt_signal(&[0, 1, 2], tau_a, chatter, 12.0, None, &mut rng).unwrap();
            all_ok &= sig.verify_adt(tau_a, chatter).is_ok();
            generated += 1;
        }
    }
    let violation = adversarial_adt_signal().verify_adt(1.0, 2.0);
    let fixture_rejected = match violation {
        Err(v) => v.count as f64 > v.bound && v.t2 <= 0.1,
        Ok(()) => false,
    };
    let pass = generated >= 100 && all_ok && fixture_rejected;
    verdict_line(
        10,
        "adt-tooling",
        pass,
        &format!("{generated} generated signals, fixture violation {violation:?}"),
    );
}

/// Criterion 11: generator evaluation against an independent
/// finite-difference expansion on random inputs.
#[test]
fn acceptance_11_generator_correctness() {
    let mut rng = ChaCha12Rng::seed_from_u64(1111);
    let dim = 4;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let weights: Vec<f64> = (0..dim).map(|_| 0.5 + rng.random::<f64>() * 2.0).collect();
        let v = LyapunovFunction::quadratic(vec![weights]).unwrap();
        let prob = SPDDEProblem {
            op: make_dirichlet_laplacian(dim).unwrap(),
            wiener: WienerModel::new((0..dim).map(|_| 0.1 + rng.random::<f64>()).collect())
                .unwrap(),
            jumps: JumpModel::new(vec![-0.3, 0.2], vec![0.7, 1.3]).unwrap(),
            tau: 0.5,
            subsystems: vec![Subsystem::linear(LinearCoeffs {
                drift_self: rng.random::<f64>() - 0.5,
                drift_delayed: rng.random::<f64>() - 0.5,
                noise_self: rng.random::<f64>() - 0.5,
                noise_delayed: rng.random::<f64>() - 0.5,
                jump_scale: rng.random::<f64>() - 0.5,
            })],
            initial: InitialDatum::constant(FieldState::zeros(dim)),
            lipschitz_budget: 100.0,
            fourth_moment_budget: 100.0,
        };
        let shift = rng.random::<f64>() * 2.0 - 1.0;
        let segment = HistorySegment::from_fn(
            |theta| {
                FieldState::new(
                    (0..dim)
                        .map(|k| ((k as f64 + 1.0) * (theta + shift)).sin() + 0.3)
                        .collect(),
                )
            },
            0.5,
            0.1,
        )
        .unwrap();

        let direct = eval_generator(&v, &prob, &segment, 0);

        // independent assembly: finite-difference derivatives of V, direct
        // trace and jump sums
        let x = segment.latest().clone();
        let x_tau = segment.delayed().clone();
        let sub = prob.subsystem(0);
        let delta = 0.25;
        let value = |state: &FieldState| v.value(state, 0);
        let shifted = |k: usize, d: f64| {
            let mut s = x.clone();
            s.coords[k] += d;
            s
        };
        let grad: Vec<f64> = (0..dim)
            .map(|k| (value(&shifted(k, delta)) - value(&shifted(k, -delta))) / (2.0 * delta))
            .collect();
        let hess: Vec<f64> = (0..dim)
            .map(|k| {
                (value(&shifted(k, delta)) - 2.0 * value(&x) + value(&shifted(k, -delta)))
                    / (delta * delta)
            })
            .collect();
        let mut drift = prob.op.apply(&x);
        drift.add_scaled(&(sub.drift)(&x, &x_tau), 1.0);
        let mut oracle: f64 = grad.iter().zip(&drift.coords).map(|(g, d)| g * d).sum();
        let gains = (sub.diffusion)(&x, &x_tau);
        for k in 0..dim {
            oracle += 0.5 * hess[k] * prob.wiener.q_eigenvalues[k] * gains.coords[k].powi(2);
        }
        for (u, lam) in prob.jumps.marks.iter().zip(&prob.jumps.intensities) {
            let jump = (sub.jump)(&x, &x_tau, *u);
            let mut moved = x.clone();
            moved.add_scaled(&jump, 1.0);
            let inner: f64 = grad.iter().zip(&jump.coords).map(|(g, j)| g * j).sum();
            oracle += lam * (value(&moved) - value(&x) - inner);
        }
        worst = worst.max((direct - oracle).abs());
    }
    verdict_line(
        11,
        "generator-correctness",
        worst <= 1e-8,
        &format!("worst deviation {worst:.3e}"),
    );
}

/// Criterion 12: byte-identical outputs across reruns and worker counts.
#[test]
fn acceptance_12_determinism() {
    let bin = env!("CARGO_BIN_EXE_spdde");
    let fixture_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let base = tempfile::tempdir().unwrap();

    let mut runs: Vec<(std::path::PathBuf, Vec<u8>)> = Vec::new();
    for (i, workers) in ["1", "2", "8", "1"].iter().enumerate() {
        let out = base.path().join(format!("run{i}"));
        let sim = Command::new(bin)
            .args([
                "simulate",
                "--config",
                fixture_dir.join("linear.json").to_str().unwrap(),
                "--trajectories",
                "300",
                "--threads",
                workers,
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(sim.status.success(), "simulate failed: {sim:?}");
        let cert = Command::new(bin)
            .args([
                "certify",
                "gasm",
                "--config",
                fixture_dir.join("switched.json").to_str().unwrap(),
                "--trajectories",
                "300",
                "--threads",
                workers,
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(cert.status.success(), "certify failed: {cert:?}");
        let mut blob = Vec::new();
        let mut names: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        names.sort();
        for path in names {
            blob.extend_from_slice(path.file_name().unwrap().as_encoded_bytes());
            blob.extend_from_slice(&std::fs::read(&path).unwrap());
        }
        runs.push((out, blob));
    }
    let pass = runs.iter().all(|(_, blob)| *blob == runs[0].1);
    verdict_line(
        12,
        "determinism",
        pass,
        &format!(
            "{} output sets compared across worker counts 1/2/8 and a rerun",
            runs.len()
        ),
    );
}
