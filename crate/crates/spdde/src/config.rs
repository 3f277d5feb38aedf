//! JSON experiment configuration: versioned schema, strict key checking,
//! and construction of problems, signals, and certification data.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;

use crate::drivers::{JumpModel, WienerModel};
use crate::error::{Error, Result};
use crate::integrator::{InitialDatum, LinearCoeffs, SPDDEProblem, Subsystem};
use crate::spectral::{make_dirichlet_laplacian, FieldState, SpectralOperator};
use crate::stability::{ClassK, LyapunovFunction, LyapunovSpec, Measure};
use crate::switching::{generate_adt_signal, AdtBudget, SwitchingSignal};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub problem: ProblemConfig,
    pub signal: SignalConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub certify: Option<CertifyConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dimension: usize,
    pub eigenvalues: SpectrumConfig,
    pub q_spectrum: SpectrumConfig,
    pub jump_marks: Vec<f64>,
    pub jump_intensities: Vec<f64>,
    pub subsystems: Vec<SubsystemConfig>,
    pub delay: f64,
    pub initial: InitialConfig,
    pub lipschitz_budget: f64,
    pub fourth_moment_budget: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum SpectrumConfig {
    #[serde(rename = "dirichlet")]
    Dirichlet,
    #[serde(rename = "inverse_square")]
    InverseSquare,
    #[serde(rename = "explicit")]
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemConfig {
    pub drift_self: f64,
    pub drift_delayed: f64,
    pub noise_self: f64,
    pub noise_delayed: f64,
    pub jump_scale: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum InitialConfig {
    #[serde(rename = "constant")]
    Constant {
        coords: Vec<f64>,
        #[serde(default)]
        scale: Option<f64>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SignalConfig {
    #[serde(rename = "constant")]
    Constant { index: usize },
    #[serde(rename = "explicit")]
    Explicit {
        initial_index: usize,
        switches: Vec<(f64, usize)>,
        #[serde(default)]
        tau_a: Option<f64>,
        #[serde(default)]
        chatter: Option<f64>,
    },
    #[serde(rename = "generate_adt")]
    GenerateAdt {
        indices: Vec<usize>,
        tau_a: f64,
        chatter: f64,
        signal_seed: u64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: f64,
    pub step: f64,
    pub trajectories: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub export_trajectories: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub lyapunov_weights: Vec<Vec<f64>>,
    /// Comparison rates; derived from the coefficients when absent.
    #[serde(default)]
    pub rates: Option<RatesConfig>,
    #[serde(default)]
    pub mu_ratio: Option<f64>,
    #[serde(default)]
    pub eta: Option<Vec<f64>>,
    #[serde(default)]
    pub envelope: Option<EnvelopeConfig>,
    #[serde(default)]
    pub decrement_scale: Option<f64>,
    #[serde(default)]
    pub yosida_n: Option<f64>,
    #[serde(default)]
    pub yosida_ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub gamma1: f64,
    pub gamma2: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub training_scales: Vec<f64>,
    pub training_seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {}, expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        let p = &self.problem;
        if p.dimension == 0 {
            return Err(Error::Config("problem.dimension must be positive".into()));
        }
        if p.subsystems.is_empty() {
            return Err(Error::Config("problem.subsystems must be nonempty".into()));
        }
        if !(p.delay > 0.0) {
            return Err(Error::Config("problem.delay must be positive".into()));
        }
        if !(p.lipschitz_budget > 0.0) || !(p.fourth_moment_budget > 0.0) {
            return Err(Error::Config("declared budgets must be positive".into()));
        }
        if p.jump_marks.len() != p.jump_intensities.len() {
            return Err(Error::Config(
                "jump_marks and jump_intensities must have equal length".into(),
            ));
        }
        let r = &self.run;
        if !(r.horizon > 0.0) || !(r.step > 0.0) || r.trajectories == 0 {
            return Err(Error::Config(
                "run.horizon, run.step, and run.trajectories must be positive".into(),
            ));
        }
        for (name, len) in [("delay", p.delay), ("horizon", r.horizon)] {
            let ratio = len / r.step;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                return Err(Error::Config(format!(
                    "{name} = {len} is not a positive multiple of run.step = {}",
                    r.step
                )));
            }
        }
        let InitialConfig::Constant { coords, .. } = &p.initial;
        if coords.len() != p.dimension {
            return Err(Error::Config(format!(
                "initial.coords has length {}, expected dimension {}",
                coords.len(),
                p.dimension
            )));
        }
        let index_bound = p.subsystems.len();
        let check_index = |i: usize| -> Result<()> {
            if i >= index_bound {
                return Err(Error::Config(format!(
                    "signal references index {i} but only {index_bound} subsystems are declared"
                )));
            }
            Ok(())
        };
        match &self.signal {
            SignalConfig::Constant { index } => check_index(*index)?,
            SignalConfig::Explicit {
                initial_index,
                switches,
                ..
            } => {
                check_index(*initial_index)?;
                for (_, i) in switches {
                    check_index(*i)?;
                }
            }
            SignalConfig::GenerateAdt { indices, .. } => {
                for i in indices {
                    check_index(*i)?;
                }
            }
        }
        if let Some(c) = &self.certify {
            if c.lyapunov_weights.len() != p.subsystems.len() {
                return Err(Error::Config(format!(
                    "lyapunov_weights has {} rows, expected one per subsystem ({})",
                    c.lyapunov_weights.len(),
                    p.subsystems.len()
                )));
            }
            for row in &c.lyapunov_weights {
                if row.len() != p.dimension {
                    return Err(Error::Config(format!(
                        "lyapunov_weights row has length {}, expected {}",
                        row.len(),
                        p.dimension
                    )));
                }
            }
            if let Some(etas) = &c.eta {
                for &e in etas {
                    if !(e > 0.0 && e <= 1.0) {
                        return Err(Error::Config(format!("eta {e} outside (0, 1]")));
                    }
                }
            }
        }
        Ok(())
    }

    fn spectrum(&self, which: &SpectrumConfig, dim: usize) -> Result<Vec<f64>> {
        match which {
            SpectrumConfig::Dirichlet => {
                Ok((1..=dim).map(|k| -((k * k) as f64)).collect())
            }
            SpectrumConfig::InverseSquare => {
                Ok((1..=dim).map(|k| 1.0 / ((k * k) as f64)).collect())
            }
            SpectrumConfig::Explicit { values } => {
                if values.len() != dim {
                    return Err(Error::Config(format!(
                        "explicit spectrum has {} values, expected {dim}",
                        values.len()
                    )));
                }
                Ok(values.clone())
            }
        }
    }

    pub fn build_problem(&self) -> Result<SPDDEProblem> {
        let p = &self.problem;
        let dim = p.dimension;
        let op = match &p.eigenvalues {
            SpectrumConfig::Dirichlet => make_dirichlet_laplacian(dim)?,
            other => SpectralOperator::new(self.spectrum(other, dim)?, "configured")?,
        };
        let wiener = WienerModel::new(self.spectrum(&p.q_spectrum, dim)?)?;
        let jumps = if p.jump_marks.is_empty() {
            JumpModel::none()
        } else {
            JumpModel::new(p.jump_marks.clone(), p.jump_intensities.clone())?
        };
        let subsystems = p
            .subsystems
            .iter()
            .map(|s| {
                Subsystem::linear(LinearCoeffs {
                    drift_self: s.drift_self,
                    drift_delayed: s.drift_delayed,
                    noise_self: s.noise_self,
                    noise_delayed: s.noise_delayed,
                    jump_scale: s.jump_scale,
                })
            })
            .collect();
        let initial = match &p.initial {
            InitialConfig::Constant { coords, scale } => {
                let x = FieldState::new(coords.clone()).scaled(scale.unwrap_or(1.0));
                InitialDatum::constant(x)
            }
        };
        Ok(SPDDEProblem {
            op,
            wiener,
            jumps,
            tau: p.delay,
            subsystems,
            initial,
            lipschitz_budget: p.lipschitz_budget,
            fourth_moment_budget: p.fourth_moment_budget,
        })
    }

    /// Builds the switching signal; generated signals snap to the run grid.
    pub fn build_signal(&self) -> Result<SwitchingSignal> {
        match &self.signal {
            SignalConfig::Constant { index } => Ok(SwitchingSignal::constant(*index)),
            SignalConfig::Explicit {
                initial_index,
                switches,
                tau_a,
                chatter,
            } => {
                let adt = match (tau_a, chatter) {
                    (Some(t), Some(n)) => Some(AdtBudget {
                        tau_a: *t,
                        chatter: *n,
                    }),
                    _ => None,
                };
                SwitchingSignal::new(*initial_index, switches.clone(), adt)
            }
            SignalConfig::GenerateAdt {
                indices,
                tau_a,
                chatter,
                signal_seed,
            } => {
                let mut rng = ChaCha12Rng::seed_from_u64(*signal_seed);
                generate_adt_signal(
                    indices,
                    *tau_a,
                    *chatter,
                    self.run.horizon,
                    Some(self.run.step),
                    &mut rng,
                )
            }
        }
    }

    /// Builds the certification data from the certify block. The sandwich
    /// functions default to the tight linear pair for the quadratic family:
    /// `α1 = (min weight)·r` against `h`, `α2 = (max weight)·r` against `h°`.
    pub fn build_spec(&self) -> Result<LyapunovSpec> {
        let c = self
            .certify
            .as_ref()
            .ok_or_else(|| Error::Config("certify block required for this subcommand".into()))?;
        let v = LyapunovFunction::quadratic(c.lyapunov_weights.clone())?;
        let w_min = c
            .lyapunov_weights
            .iter()
            .flatten()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let w_max = c
            .lyapunov_weights
            .iter()
            .flatten()
            .cloned()
            .fold(0.0, f64::max);
        let mu_ratio = c
            .mu_ratio
            .or_else(|| v.mode_ratio_bound())
            .unwrap_or(2.0)
            .max(1.0 + 1e-9);
        let q = c.q.unwrap_or(2.0);
        // the exact-arithmetic squared-norm path for the common q = 2
        let (h, h0) = if q == 2.0 {
            (Measure::norm_sq_at_zero(), Measure::sup_norm_sq())
        } else {
            (Measure::norm_pow_at_zero(q), Measure::sup_norm_pow(q))
        };
        let spec = LyapunovSpec {
            v,
            alpha1: ClassK::linear(w_min)?,
            alpha2: ClassK::linear(w_max)?,
            h0,
            h,
            mu_ratio,
            decay: ClassK::identity(),
            u_fn: ClassK::linear(c.decrement_scale.unwrap_or(0.05))?,
            rho: ClassK::linear((w_max / w_min).max(1.0))?,
            q,
        };
        spec.validate()?;
        Ok(spec)
    }
}
