//! The fixed-index decrement certificate: between consecutive activations
//! of the same subsystem, the expected Lyapunov value must drop by at least
//! the decrement function of the initial window size.
//!
//! ```bash
//! cargo run --release -p spdde --example fixed_index_decrement
//! ```

use spdde::comparison::solve_reset_comparison;
use spdde::integrator::simulate_yosida_ensemble;
use spdde::presets::{contracting_lyapunov_spec, contracting_problem, contracting_signal};
use spdde::stability::{check_fixed_index_decrement, ClassK, MonteCarloSettings};

fn main() {
    let problem = contracting_problem();
    let signal = contracting_signal();
    let spec = contracting_lyapunov_spec();
    let mc = MonteCarloSettings {
        trajectories: 500,
        master_seed: 4242,
        horizon: 2.5,
        step: problem.tau / 20.0,
    };

    let report = check_fixed_index_decrement(&problem, &signal, &spec, 1000.0, &mc)
        .expect("valid grid and settings");
    println!("decrement certificate with U(r) = 0.05 r:");
    for note in &report.notes {
        println!("  {note}");
    }
    println!("verdict: {} (min margin {:.4e})\n", report.verdict, report.margin);

    let mut inflated = spec.clone();
    inflated.u_fn = ClassK::linear(0.05 * 1e6).unwrap();
    let report = check_fixed_index_decrement(&problem, &signal, &inflated, 1000.0, &mc)
        .expect("valid grid and settings");
    println!(
        "same data with U inflated a millionfold: verdict {} (margin {:.4e})\n",
        report.verdict, report.margin
    );

    // reset comparison system: decay between switch instants, reset to the
    // Monte Carlo estimate of E V at each instant
    let trajectories = simulate_yosida_ensemble(
        &problem,
        &signal,
        1000.0,
        mc.horizon,
        mc.step,
        mc.trajectories,
        mc.master_seed,
    )
    .unwrap();
    let instants: Vec<f64> = signal.instants().collect();
    let reset_values: Vec<f64> = instants
        .iter()
        .map(|&t| {
            let m = trajectories[0].grid_index_of(t).unwrap();
            let p = trajectories[0].indices[m];
            trajectories
                .iter()
                .map(|traj| spec.v.value(&traj.states[m], p))
                .sum::<f64>()
                / trajectories.len() as f64
        })
        .collect();
    let z0 = spec.v.value(&problem.initial.eval(0.0), 0);
    let decay = |z: f64| spec.decay.eval(spec.alpha2.inverse(z));
    let curve =
        solve_reset_comparison(decay, &reset_values, &instants, z0, mc.horizon, mc.step).unwrap();
    println!("reset comparison system (resets from the E V estimates at switch instants):");
    for (m, value) in curve.values.iter().enumerate().step_by(40) {
        println!("  zeta({:.2}) = {value:.5}", curve.time(m));
    }
}
