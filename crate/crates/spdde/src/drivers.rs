//! Stochastic drivers: truncated Karhunen–Loève sampling of the Q-Wiener
//! process and the compensated Poisson random measure.
//!
//! The Q-Wiener eigenbasis coincides with the operator eigenbasis, so an
//! increment over `dt` is a vector of independent centered Gaussians with
//! per-mode variance `λ_k dt`. The mark space is a finite set of atoms, which
//! keeps every `∫ … λ(du)` an exact finite sum.
//!
//! Randomness is organized as keyed splittable streams: each
//! `(master_seed, trajectory, role)` triple keys an independent ChaCha
//! stream, so trajectories are reproducible bit-for-bit regardless of worker
//! count or scheduling, and the mild/Yosida integrators can couple pathwise
//! by replaying the same streams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::spectral::FieldState;

/// Trace-class covariance spectrum of the Q-Wiener process.
#[derive(Debug, Clone)]
pub struct WienerModel {
    pub q_eigenvalues: Vec<f64>,
}

impl WienerModel {
    pub fn new(q_eigenvalues: Vec<f64>) -> Result<Self> {
        for &l in &q_eigenvalues {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "q_eigenvalue",
                    value: l,
                });
            }
        }
        Ok(Self { q_eigenvalues })
    }

    /// `λ_k = k^{-2}`, the shipped trace-class spectrum.
    pub fn inverse_square(dim: usize) -> Self {
        Self {
            q_eigenvalues: (1..=dim).map(|k| 1.0 / ((k * k) as f64)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.q_eigenvalues.len()
    }

    pub fn trace(&self) -> f64 {
        self.q_eigenvalues.iter().sum()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.q_eigenvalues.iter().cloned().fold(0.0, f64::max)
    }
}

/// Finite-atom jump measure: marks `u_i` with intensities `λ_i`.
#[derive(Debug, Clone)]
pub struct JumpModel {
    pub marks: Vec<f64>,
    pub intensities: Vec<f64>,
}

impl JumpModel {
    pub fn new(marks: Vec<f64>, intensities: Vec<f64>) -> Result<Self> {
        if marks.len() != intensities.len() {
            return Err(Error::Config(
                "jump marks and intensities must have equal length".into(),
            ));
        }
        for &l in &intensities {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "jump_intensity",
                    value: l,
                });
            }
        }
        for i in 0..marks.len() {
            for j in (i + 1)..marks.len() {
                if marks[i] == marks[j] {
                    return Err(Error::Config(format!(
                        "duplicate jump mark {}",
                        marks[i]
                    )));
                }
            }
        }
        Ok(Self { marks, intensities })
    }

    /// Jump-free model (`Λ = 0`).
    pub fn none() -> Self {
        Self {
            marks: vec![],
            intensities: vec![],
        }
    }

    pub fn total_intensity(&self) -> f64 {
        self.intensities.iter().sum()
    }

    /// `Σ_i λ_i u_i²`, used by the generator-rate bounds.
    pub fn second_mark_moment(&self) -> f64 {
        self.marks
            .iter()
            .zip(&self.intensities)
            .map(|(u, l)| l * u * u)
            .sum()
    }

    /// `Σ_i λ_i u_i⁴`, used by the fourth-moment budget check.
    pub fn fourth_mark_moment(&self) -> f64 {
        self.marks
            .iter()
            .zip(&self.intensities)
            .map(|(u, l)| l * u.powi(4))
            .sum()
    }
}

/// Role tag distinguishing the independent per-trajectory streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Wiener,
    JumpCount,
    JumpTime,
    JumpMark,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Wiener => 1,
            StreamRole::JumpCount => 2,
            StreamRole::JumpTime => 3,
            StreamRole::JumpMark => 4,
        }
    }
}

/// Value-type handle for one reproducible random stream.
///
/// Distinct `(master_seed, trajectory, role)` triples yield statistically
/// independent ChaCha streams; the same triple replays the identical
/// sequence on any machine, thread count, or schedule.
#[derive(Debug, Clone, Copy)]
pub struct RngStream {
    pub master_seed: u64,
    pub trajectory: u64,
    pub role: StreamRole,
}

impl RngStream {
    pub fn new(master_seed: u64, trajectory: u64, role: StreamRole) -> Self {
        Self {
            master_seed,
            trajectory,
            role,
        }
    }

    /// Materializes the stream into a generator positioned at its start.
    pub fn materialize(&self) -> ChaCha12Rng {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.trajectory.to_le_bytes());
        seed[16..24].copy_from_slice(&self.role.tag().to_le_bytes());
        // domain separator
        seed[24..32].copy_from_slice(&0x7370_6464_655f_7631u64.to_le_bytes());
        ChaCha12Rng::from_seed(seed)
    }
}

/// The three jump-sampling streams of one trajectory.
pub struct JumpRngs<R: RngCore> {
    pub count: R,
    pub time: R,
    pub mark: R,
}

/// All driver streams of one trajectory.
pub struct DriverRngs<R: RngCore> {
    pub wiener: R,
    pub jumps: JumpRngs<R>,
}

impl DriverRngs<ChaCha12Rng> {
    pub fn for_trajectory(master_seed: u64, trajectory: u64) -> Self {
        let s = |role| RngStream::new(master_seed, trajectory, role).materialize();
        DriverRngs {
            wiener: s(StreamRole::Wiener),
            jumps: JumpRngs {
                count: s(StreamRole::JumpCount),
                time: s(StreamRole::JumpTime),
                mark: s(StreamRole::JumpMark),
            },
        }
    }
}

/// One Q-Wiener increment over a step of length `dt`: mode `k` is an
/// independent `N(0, λ_k dt)` draw.
pub fn sample_wiener_increment<R: RngCore>(
    wiener: &WienerModel,
    dt: f64,
    rng: &mut R,
) -> Result<FieldState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidStep(dt));
    }
    let coords = wiener
        .q_eigenvalues
        .iter()
        .map(|&l| {
            let z: f64 = StandardNormal.sample(rng);
            (l * dt).sqrt() * z
        })
        .collect();
    Ok(FieldState::new(coords))
}

/// A single jump event: occurrence time and mark value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: f64,
}

/// Samples the Poisson events on `[t0, t0 + dt)`: the count is
/// `Poisson(Λ dt)`, marks are drawn with probability `λ_i / Λ`, times are
/// uniform in the step. Returned events are sorted by time.
pub fn sample_jumps<R: RngCore>(
    jumps: &JumpModel,
    t0: f64,
    dt: f64,
    rngs: &mut JumpRngs<R>,
) -> Result<Vec<JumpEvent>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidStep(dt));
    }
    let total = jumps.total_intensity();
    if total == 0.0 {
        return Ok(vec![]);
    }
    let count = Poisson::new(total * dt)
        .expect("positive rate")
        .sample(&mut rngs.count) as usize;
    let mut events = Vec::with_capacity(count);
    for _ in 0..count {
        let time = t0 + rngs.time.random::<f64>() * dt;
        let mut pick = rngs.mark.random::<f64>() * total;
        let mut mark = *jumps.marks.last().expect("nonempty marks");
        for (u, l) in jumps.marks.iter().zip(&jumps.intensities) {
            if pick < *l {
                mark = *u;
                break;
            }
            pick -= l;
        }
        events.push(JumpEvent { time, mark });
    }
    events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    Ok(events)
}

/// Per-unit-time compensator `Σ_i λ_i L(x, y, u_i)` of the jump term; the
/// integrator subtracts `dt` times this so that the applied jumps form a
/// martingale increment.
pub fn compensator_drift(
    jumps: &JumpModel,
    jump_fn: impl Fn(&FieldState, &FieldState, f64) -> FieldState,
    x: &FieldState,
    y: &FieldState,
) -> FieldState {
    let mut acc = FieldState::zeros(x.dim());
    for (u, l) in jumps.marks.iter().zip(&jumps.intensities) {
        acc.add_scaled(&jump_fn(x, y, *u), *l);
    }
    acc
}
