//! The Halanay rate, the exponential envelope it certifies, and the
//! dwell-time threshold it induces.
//!
//! ```bash
//! cargo run --release -p spdde --example halanay_threshold
//! ```

use spdde::comparison::{
    dwell_time_threshold, halanay_lambda, solve_impulsive_comparison, verify_halanay_bound,
};

fn main() {
    let (a1, a2, tau) = (-3.0, 1.0, 1.0);
    let lambda = halanay_lambda(a1, a2, tau).expect("feasible coefficients");
    println!("u' <= {a1} u + {a2} sup u_t with delay {tau}");
    println!("sharpest certified decay rate: lambda* = {lambda:.6}");

    let report = verify_halanay_bound(a1, a2, tau, lambda, 10.0, 0.01).expect("valid parameters");
    println!(
        "envelope e^(-lambda* t) holds on [0, 10]: {} (min margin {:.3e})",
        report.verdict, report.margin
    );
    let report =
        verify_halanay_bound(a1, a2, tau, 1.5 * lambda, 10.0, 0.01).expect("valid parameters");
    println!(
        "envelope at 1.5 lambda* is refuted:      {} (min margin {:.3e})",
        !report.verdict, report.margin
    );

    let mu = 2.0;
    let threshold = dwell_time_threshold(mu, lambda).expect("mu > 1");
    println!("\nreset factor mu = {mu}: average dwell-time threshold ln(mu)/lambda* = {threshold:.6}");

    for (label, gap) in [("2.0 x threshold", 2.0 * threshold), ("0.5 x threshold", 0.5 * threshold)] {
        let h = gap / 400.0;
        let resets: Vec<f64> = (1..=10).map(|k| k as f64 * gap).collect();
        let horizon = 10.0 * gap;
        let curve = solve_impulsive_comparison(a1, a2, mu, tau_snapped(tau, h), &resets, 1.0, horizon, h)
            .expect("valid grid");
        let end = curve.values.last().unwrap();
        println!("impulsive system, resets every {label}: xi({horizon:.2}) = {end:.3e}");
    }
}

// keep the delay an exact multiple of the integration step
fn tau_snapped(tau: f64, h: f64) -> f64 {
    (tau / h).round() * h
}
