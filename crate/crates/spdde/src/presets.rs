//! Shipped example problems: a stable linear baseline, a stable switched
//! variant for the dwell-time pipeline, a strongly contracting scenario for
//! the fixed-index decrement check, and the adversarial switching fixture.
//!
//! The declared Lipschitz and fourth-moment budgets are loose closed-form
//! bounds for the linear family; the sampled hypothesis checks stay well
//! inside them.

use crate::drivers::{JumpModel, WienerModel};
use crate::integrator::{InitialDatum, LinearCoeffs, SPDDEProblem, Subsystem};
use crate::spectral::{make_dirichlet_laplacian, FieldState};
use crate::stability::{ClassK, LyapunovFunction, LyapunovSpec, Measure};
use crate::switching::SwitchingSignal;

/// Default truncation dimension.
pub const DEFAULT_DIM: usize = 8;

/// Spread unit-norm initial state: every coordinate `1/√M`, so `‖x‖² = 1`
/// exactly for `M = 8`.
pub fn spread_initial(dim: usize) -> FieldState {
    FieldState::new(vec![1.0 / (dim as f64).sqrt(); dim])
}

fn base_problem(dim: usize, tau: f64, subsystems: Vec<Subsystem>) -> SPDDEProblem {
    SPDDEProblem {
        op: make_dirichlet_laplacian(dim).expect("positive dimension"),
        wiener: WienerModel::inverse_square(dim),
        jumps: JumpModel::new(vec![-0.2, 0.2], vec![1.0, 1.0]).expect("valid jump model"),
        tau,
        subsystems,
        initial: InitialDatum::constant(spread_initial(dim)),
        lipschitz_budget: 0.5,
        fourth_moment_budget: 0.01,
    }
}

/// Stable linear problem with a single subsystem; the baseline for the
/// comparison certificate and the Yosida convergence ladder.
pub fn linear_stable_problem() -> SPDDEProblem {
    base_problem(
        DEFAULT_DIM,
        0.5,
        vec![Subsystem::linear(LinearCoeffs {
            drift_self: 0.2,
            drift_delayed: 0.3,
            noise_self: 0.2,
            noise_delayed: 0.1,
            jump_scale: 0.5,
        })],
    )
}

/// Certification data for [`linear_stable_problem`]: `V = ‖x‖²`,
/// `h = ‖φ(0)‖²`, `h° = ‖φ‖_D²`.
pub fn linear_lyapunov_spec() -> LyapunovSpec {
    LyapunovSpec {
        v: LyapunovFunction::quadratic(vec![vec![1.0; DEFAULT_DIM]]).expect("positive weights"),
        alpha1: ClassK::identity(),
        alpha2: ClassK::identity(),
        h0: Measure::sup_norm_sq(),
        h: Measure::norm_sq_at_zero(),
        mu_ratio: 2.0,
        decay: ClassK::identity(),
        u_fn: ClassK::linear(0.05).expect("positive slope"),
        rho: ClassK::identity(),
        q: 2.0,
    }
}

/// Stable switched problem with two subsystems of different drift, noise,
/// and jump intensities.
pub fn switched_stable_problem() -> SPDDEProblem {
    base_problem(
        DEFAULT_DIM,
        0.5,
        vec![
            Subsystem::linear(LinearCoeffs {
                drift_self: 0.1,
                drift_delayed: 0.2,
                noise_self: 0.2,
                noise_delayed: 0.1,
                jump_scale: 0.5,
            }),
            Subsystem::linear(LinearCoeffs {
                drift_self: 0.2,
                drift_delayed: 0.1,
                noise_self: 0.1,
                noise_delayed: 0.2,
                jump_scale: 0.25,
            }),
        ],
    )
}

/// Certification data for [`switched_stable_problem`]: per-index weights 1
/// and 2, giving mode-comparability constant `μ = 2`.
pub fn switched_lyapunov_spec() -> LyapunovSpec {
    LyapunovSpec {
        v: LyapunovFunction::quadratic(vec![
            vec![1.0; DEFAULT_DIM],
            vec![2.0; DEFAULT_DIM],
        ])
        .expect("positive weights"),
        alpha1: ClassK::identity(),
        alpha2: ClassK::linear(2.0).expect("positive slope"),
        h0: Measure::sup_norm_sq(),
        h: Measure::norm_sq_at_zero(),
        mu_ratio: 2.0,
        decay: ClassK::identity(),
        u_fn: ClassK::linear(0.05).expect("positive slope"),
        rho: ClassK::linear(2.0).expect("positive slope"),
        q: 2.0,
    }
}

/// Strongly contracting two-subsystem problem for the fixed-index
/// decrement scenario.
pub fn contracting_problem() -> SPDDEProblem {
    let mut prob = base_problem(
        4,
        0.25,
        vec![
            Subsystem::linear(LinearCoeffs {
                drift_self: -0.5,
                drift_delayed: 0.1,
                noise_self: 0.1,
                noise_delayed: 0.0,
                jump_scale: 0.2,
            }),
            Subsystem::linear(LinearCoeffs {
                drift_self: -0.3,
                drift_delayed: 0.1,
                noise_self: 0.1,
                noise_delayed: 0.0,
                jump_scale: 0.2,
            }),
        ],
    );
    prob.initial = InitialDatum::constant(spread_initial(4));
    prob
}

/// Alternating signal with recurrences of both indices, aligned with the
/// `τ/20` grid of [`contracting_problem`].
pub fn contracting_signal() -> SwitchingSignal {
    SwitchingSignal::new(0, vec![(0.5, 1), (1.0, 0), (1.5, 1), (2.0, 0)], None)
        .expect("valid fixture")
}

/// Certification data for the decrement scenario; `U(r) = 0.05 r`.
pub fn contracting_lyapunov_spec() -> LyapunovSpec {
    LyapunovSpec {
        v: LyapunovFunction::quadratic(vec![vec![1.0; 4], vec![1.0; 4]])
            .expect("positive weights"),
        alpha1: ClassK::identity(),
        alpha2: ClassK::identity(),
        h0: Measure::sup_norm_sq(),
        h: Measure::norm_sq_at_zero(),
        mu_ratio: 1.5,
        decay: ClassK::identity(),
        u_fn: ClassK::linear(0.05).expect("positive slope"),
        rho: ClassK::identity(),
        q: 2.0,
    }
}

/// Fixture violating any reasonable dwell-time budget: five switches inside
/// `[0, 0.1]`.
pub fn adversarial_adt_signal() -> SwitchingSignal {
    SwitchingSignal::new(
        0,
        vec![(0.02, 1), (0.04, 0), (0.06, 1), (0.08, 0), (0.1, 1)],
        None,
    )
    .expect("valid fixture")
}
