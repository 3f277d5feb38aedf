//! Numerical laboratory for switched stochastic partial differential delay
//! equations driven by Q-Wiener noise and compensated Poisson jumps, with
//! stability certification in terms of two measures.
//!
//! The state space is a diagonal spectral truncation: the generator, the
//! semigroup, the Yosida approximation, and the noise covariance all act
//! mode by mode against one fixed eigenbasis, so the only discretization
//! errors are the time step and the Monte Carlo sample size.
//!
//! Module map:
//!
//! - [`spectral`] — the operator `A`, its contraction semigroup `T(t)`, and
//!   the Yosida approximation `R(n) = n R(n, A)`.
//! - [`drivers`] — Karhunen–Loève sampling of the Q-Wiener increments, the
//!   compensated Poisson measure, and reproducible splittable RNG streams.
//! - [`history`] — càdlàg delay windows with the sup-norm `‖·‖_D`.
//! - [`switching`] — switching signals, average dwell-time verification and
//!   generation, fixed-index recurrences.
//! - [`integrator`] — exponential-Euler stepping of the mild solution and
//!   of the Yosida approximating system, plus their convergence gap.
//! - [`stability`] — Lyapunov generator evaluation, two-measure estimation,
//!   mean/probability/fixed-index certificates, KL-envelope fitting.
//! - [`comparison`] — scalar comparison systems, the Halanay rate and its
//!   envelope, impulsive resets, and the dwell-time threshold.
//! - [`presets`] — the shipped example problems.
//! - [`config`], [`harness`], [`output`] — JSON experiment configs, the
//!   subcommand drivers behind the `spdde` binary, deterministic file
//!   emission.
//!
//! Each major capability has a runnable example under `examples/`:
//!
//! ```bash
//! cargo run --release -p spdde --example simulate_linear
//! cargo run --release -p spdde --example yosida_convergence
//! cargo run --release -p spdde --example halanay_threshold
//! cargo run --release -p spdde --example adt_signals
//! cargo run --release -p spdde --example comparison_certificate
//! cargo run --release -p spdde --example gasm_gasp_pipeline
//! cargo run --release -p spdde --example fixed_index_decrement
//! ```

// `!(x > 0.0)` is used for parameter validation on purpose: unlike
// `x <= 0.0`, it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod comparison;
pub mod config;
pub mod drivers;
pub mod error;
pub mod harness;
pub mod history;
pub mod integrator;
pub mod output;
pub mod presets;
pub mod spectral;
pub mod stability;
pub mod switching;

pub use error::{Error, Result};
pub use spectral::FieldState;
