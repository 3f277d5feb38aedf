//! Càdlàg history segments: the delay window `X_t = {X(t+θ) : −τ ≤ θ ≤ 0}`
//! sampled on a uniform grid, with the sup-norm over the window.
//!
//! The step is constrained so `τ` is an exact grid multiple, which makes the
//! delayed value `X(t−τ)` a stored sample and removes interpolation error
//! from the delay term. Lookups use the piecewise-constant right-continuous
//! step convention.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::spectral::FieldState;

/// Absolute slack when snapping times to the grid.
const GRID_EPS: f64 = 1e-9;

/// Checks that `len / step` is integral and returns it.
pub(crate) fn grid_multiple(len: f64, step: f64, what: &str) -> Result<usize> {
    if !(step > 0.0) {
        return Err(Error::InvalidStep(step));
    }
    let ratio = len / step;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > GRID_EPS * ratio.abs().max(1.0) {
        return Err(Error::GridMismatch(format!(
            "{what} = {len} is not a positive multiple of the step {step}"
        )));
    }
    Ok(rounded as usize)
}

/// Ring buffer of `τ/h + 1` states at offsets `θ = −τ, −τ+h, …, 0`.
#[derive(Debug, Clone)]
pub struct HistorySegment {
    tau: f64,
    step: f64,
    samples: VecDeque<FieldState>,
}

impl HistorySegment {
    /// Fills the buffer from the initial function `ξ` evaluated on the
    /// offset grid: `samples_j = ξ(−τ + j·h)`.
    pub fn from_fn(xi: impl Fn(f64) -> FieldState, tau: f64, step: f64) -> Result<Self> {
        let m = grid_multiple(tau, step, "delay")?;
        let samples = (0..=m)
            .map(|j| xi(-tau + j as f64 * step))
            .collect::<VecDeque<_>>();
        Ok(Self { tau, step, samples })
    }

    /// Constant history equal to `x` over the whole window.
    pub fn constant(x: FieldState, tau: f64, step: f64) -> Result<Self> {
        Self::from_fn(|_| x.clone(), tau, step)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = &FieldState> {
        self.samples.iter()
    }

    /// Most recently pushed state, i.e. the value at offset 0.
    pub fn latest(&self) -> &FieldState {
        self.samples.back().expect("nonempty buffer")
    }

    /// Oldest stored state, i.e. the value at offset `−τ`.
    pub fn delayed(&self) -> &FieldState {
        self.samples.front().expect("nonempty buffer")
    }

    /// Value at the largest grid offset `≤ θ` (right-continuous steps).
    pub fn value_at(&self, theta: f64) -> Result<&FieldState> {
        if theta < -self.tau - GRID_EPS || theta > GRID_EPS {
            return Err(Error::OutOfRange {
                what: "history offset",
                value: theta,
            });
        }
        let idx = ((theta + self.tau) / self.step + GRID_EPS).floor() as usize;
        Ok(&self.samples[idx.min(self.samples.len() - 1)])
    }

    /// Advances the window by one step: drops the oldest sample and appends
    /// `x` at offset 0. Returns the new segment, leaving `self` untouched.
    pub fn push(&self, x: FieldState) -> HistorySegment {
        let mut next = self.clone();
        next.advance(x);
        next
    }

    /// In-place variant of [`push`](Self::push) for hot loops that own their
    /// window.
    pub fn advance(&mut self, x: FieldState) {
        self.samples.pop_front();
        self.samples.push_back(x);
    }

    /// `‖·‖_D`: max Hilbert norm over the stored window.
    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(FieldState::norm).fold(0.0, f64::max)
    }

    /// Max of `Σ_k x_k²` over the stored window.
    pub fn sup_norm_sq(&self) -> f64 {
        self.samples
            .iter()
            .map(FieldState::norm_sq)
            .fold(0.0, f64::max)
    }
}
