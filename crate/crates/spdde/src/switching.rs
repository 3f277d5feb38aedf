//! Switching signals `σ : R₊ → S`: piecewise-constant index maps with
//! right-continuous switching, average-dwell-time (ADT) verification and
//! generation, and fixed-index recurrence extraction.
//!
//! The ADT condition bounds switch counts by `N_σ(t1, t2) ≤ N0 + (t2−t1)/τa`
//! over every window. Because the bound is linear in the endpoints and the
//! count is piecewise constant, it suffices to check windows whose endpoints
//! are switch instants, which is the implemented reduction.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average dwell-time budget: `τa` and the chatter bound `N0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdtBudget {
    pub tau_a: f64,
    pub chatter: f64,
}

/// A window on which the ADT inequality fails.
///
/// The window is the closed limit `[t1, t2]` with both endpoints at switch
/// instants; `count` switches fall in it while the budget only admits
/// `bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdtViolation {
    pub t1: f64,
    pub t2: f64,
    pub count: usize,
    pub bound: f64,
}

impl std::fmt::Display for AdtViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "window [{}, {}] holds {} switches but the budget admits {:.6}",
            self.t1, self.t2, self.count, self.bound
        )
    }
}

/// Piecewise-constant switching signal with strictly increasing switch
/// instants; the index listed for an instant is active on `[τ_j, τ_{j+1})`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwitchingSignal {
    pub initial_index: usize,
    switches: Vec<(f64, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adt: Option<AdtBudget>,
}

impl SwitchingSignal {
    /// Signal that never switches.
    pub fn constant(initial_index: usize) -> Self {
        Self {
            initial_index,
            switches: vec![],
            adt: None,
        }
    }

    pub fn new(
        initial_index: usize,
        switches: Vec<(f64, usize)>,
        adt: Option<AdtBudget>,
    ) -> Result<Self> {
        let mut previous_time = 0.0;
        let mut previous_index = initial_index;
        for &(t, p) in &switches {
            if t <= previous_time {
                return Err(Error::Config(format!(
                    "switch instants must be strictly increasing and positive, got {t}"
                )));
            }
            if p == previous_index {
                return Err(Error::Config(format!(
                    "consecutive indices must differ at instant {t}"
                )));
            }
            previous_time = t;
            previous_index = p;
        }
        Ok(Self {
            initial_index,
            switches,
            adt,
        })
    }

    pub fn instants(&self) -> impl Iterator<Item = f64> + '_ {
        self.switches.iter().map(|&(t, _)| t)
    }

    pub fn switches(&self) -> &[(f64, usize)] {
        &self.switches
    }

    pub fn num_switches(&self) -> usize {
        self.switches.len()
    }

    /// Active index at time `t`; right-continuous at switch instants.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) {
            return Err(Error::OutOfRange {
                what: "time",
                value: t,
            });
        }
        let mut active = self.initial_index;
        for &(instant, p) in &self.switches {
            if instant <= t {
                active = p;
            } else {
                break;
            }
        }
        Ok(active)
    }

    /// Number of switch instants in the half-open window `[t1, t2)`.
    pub fn switch_count(&self, t1: f64, t2: f64) -> Result<usize> {
        if !(t1 >= 0.0) || !(t2 > t1) {
            return Err(Error::OutOfRange {
                what: "window",
                value: t2 - t1,
            });
        }
        Ok(self
            .switches
            .iter()
            .filter(|&&(t, _)| t >= t1 && t < t2)
            .count())
    }

    /// Checks `N_σ(t1, t2) ≤ N0 + (t2−t1)/τa` over all windows, reduced to
    /// windows with endpoints at switch instants. Returns the first
    /// violating window if the check fails.
    pub fn verify_adt(&self, tau_a: f64, chatter: f64) -> std::result::Result<(), AdtViolation> {
        let n = self.switches.len();
        for i in 0..n {
            for j in i..n {
                let t1 = self.switches[i].0;
                let t2 = self.switches[j].0;
                let count = j - i + 1;
                let bound = chatter + (t2 - t1) / tau_a;
                if count as f64 > bound + 1e-9 {
                    return Err(AdtViolation {
                        t1,
                        t2,
                        count,
                        bound,
                    });
                }
            }
        }
        Ok(())
    }

    /// Instants at which index `p` becomes active, including `t = 0` when
    /// `p` is the initial index. Restricted to `[0, horizon]`.
    pub fn activation_instants(&self, p: usize, horizon: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if self.initial_index == p {
            out.push(0.0);
        }
        for &(t, q) in &self.switches {
            if q == p && t <= horizon {
                out.push(t);
            }
        }
        out
    }

    /// All pairs `(τ_i, τ_j)` of consecutive activations of index `p` with
    /// no intermediate activation of `p`.
    pub fn fixed_index_pairs(&self, p: usize, horizon: f64) -> Vec<(f64, f64)> {
        let activations = self.activation_instants(p, horizon);
        activations.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Generates a signal satisfying the ADT budget on `[0, horizon]`.
///
/// Candidate inter-switch gaps are exponential with mean `τa`; a switch that
/// would violate the budget is postponed to the earliest feasible instant.
/// With `grid_step` set, instants are snapped up to the grid (postponement
/// keeps the budget satisfied). Indices are drawn uniformly among those
/// differing from the currently active one.
pub fn generate_adt_signal<R: RngCore>(
    indices: &[usize],
    tau_a: f64,
    chatter: f64,
    horizon: f64,
    grid_step: Option<f64>,
    rng: &mut R,
) -> Result<SwitchingSignal> {
    if !(tau_a > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau_a",
            value: tau_a,
        });
    }
    if !(chatter >= 1.0) {
        return Err(Error::InvalidParameter {
            name: "chatter",
            value: chatter,
        });
    }
    if !(horizon > 0.0) {
        return Err(Error::Generation(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if indices.len() < 2 {
        return Err(Error::Generation(
            "need at least two indices to switch between".into(),
        ));
    }
    if let Some(h) = grid_step {
        if !(h > 0.0) {
            return Err(Error::InvalidStep(h));
        }
    }

    let initial_index = indices[rng.random_range(0..indices.len())];
    let mut instants: Vec<f64> = Vec::new();
    let mut current = initial_index;
    let mut switches = Vec::new();
    let mut t = 0.0f64;
    loop {
        let gap = (-tau_a * (1.0 - rng.random::<f64>()).ln()).max(tau_a * 1e-12);
        let mut candidate = t + gap;
        // earliest instant keeping every window budget satisfied
        let existing = instants.len();
        for (i, &ti) in instants.iter().enumerate() {
            let needed = ti + tau_a * ((existing - i + 1) as f64 - chatter);
            if needed > candidate {
                candidate = needed;
            }
        }
        if let Some(h) = grid_step {
            candidate = (candidate / h - 1e-9).ceil() * h;
            if candidate <= t {
                candidate += h;
            }
        }
        if candidate >= horizon {
            break;
        }
        let choices: Vec<usize> = indices.iter().copied().filter(|&p| p != current).collect();
        let next = choices[rng.random_range(0..choices.len())];
        instants.push(candidate);
        switches.push((candidate, next));
        current = next;
        t = candidate;
    }
    let signal = SwitchingSignal::new(
        initial_index,
        switches,
        Some(AdtBudget { tau_a, chatter }),
    )?;
    debug_assert!(signal.verify_adt(tau_a, chatter).is_ok());
    Ok(signal)
}
