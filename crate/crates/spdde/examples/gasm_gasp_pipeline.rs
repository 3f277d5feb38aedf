//! The full two-measure pipeline on the switched problem: generate a
//! dwell-time signal above the certified threshold, fit a KL envelope on
//! training seeds, then certify mean stability on fresh seeds and
//! probability stability via the Chebyshev construction.
//!
//! ```bash
//! cargo run --release -p spdde --example gasm_gasp_pipeline
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use spdde::comparison::{derive_comparison_rates, dwell_time_threshold, halanay_lambda};
use spdde::history::HistorySegment;
use spdde::integrator::simulate_ensemble;
use spdde::presets::{switched_lyapunov_spec, switched_stable_problem};
use spdde::stability::{check_gasm, check_gasp, fit_kl_envelope, measure_curve};
use spdde::switching::generate_adt_signal;

fn main() {
    let problem = switched_stable_problem();
    let spec = switched_lyapunov_spec();
    let step = problem.tau / 20.0;
    let horizon = 5.0 * problem.tau;

    // dwell-time budget from the certified decay and the mode-comparability
    // constant of the weighted Lyapunov family
    let (gamma1, gamma2) = derive_comparison_rates(&problem).unwrap();
    let lambda = halanay_lambda(gamma1, gamma2, problem.tau).unwrap();
    let mu = spec.v.mode_ratio_bound().unwrap();
    let threshold = dwell_time_threshold(mu, lambda).unwrap();
    println!("rates ({gamma1:.4}, {gamma2:.4}), lambda* = {lambda:.4}, mu = {mu}");
    println!("dwell-time threshold {threshold:.4}; generating a signal with tau_a = {:.4}\n", 2.0 * threshold);

    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let signal =
        generate_adt_signal(&[0, 1], 2.0 * threshold, 2.0, horizon, Some(step), &mut rng).unwrap();
    println!("signal: {} switches, budget verified: {}", signal.num_switches(), signal.verify_adt(2.0 * threshold, 2.0).is_ok());

    // training curves on two initial scales
    let mut curves = Vec::new();
    for (j, scale) in [1.0f64, 2.0].iter().enumerate() {
        let mut scaled = problem.clone();
        scaled.initial = problem.initial.scaled(*scale);
        let segment =
            HistorySegment::from_fn(|theta| scaled.initial.eval(theta), problem.tau, step).unwrap();
        let r = spec.h0.eval(&segment);
        let trajectories =
            simulate_ensemble(&scaled, &signal, horizon, step, 2000, 9000 + j as u64).unwrap();
        curves.push((r, measure_curve(&trajectories, &spec.h).unwrap()));
    }
    let fit = fit_kl_envelope(&curves).unwrap();
    println!(
        "fitted envelope beta(r, t) = {:.4} r e^(-{:.4} t), KL: {}\n",
        fit.envelope.scale, fit.envelope.rate, fit.is_kl
    );

    // fresh-seed certification
    let fresh = simulate_ensemble(&problem, &signal, horizon, step, 2000, 31337).unwrap();
    let curve = measure_curve(&fresh, &spec.h).unwrap();
    let segment =
        HistorySegment::from_fn(|theta| problem.initial.eval(theta), problem.tau, step).unwrap();
    let r = spec.h0.eval(&segment);

    let gasm = check_gasm(&curve, &fit.envelope, r);
    println!("mean stability on fresh seeds: {} (margin {:.4e})", gasm.verdict, gasm.margin);

    for eta in [0.5, 0.1, 0.05] {
        let gasp = check_gasp(&fresh, &spec.h, &fit.envelope, r, eta).unwrap();
        println!(
            "probability stability at eta = {eta}: {} (worst frequency margin {:.3})",
            gasp.verdict, gasp.margin
        );
    }
}
