//! Lyapunov machinery: generator evaluation, two-measure estimation, and
//! the mean / probability / fixed-index stability certificates.
//!
//! Every expectation in the certified conditions is replaced by a Monte
//! Carlo estimate with a 3-standard-error tolerance band; verdicts always
//! carry margins, never bare booleans.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::history::HistorySegment;
use crate::integrator::{simulate_yosida_ensemble, SPDDEProblem, Trajectory};
use crate::spectral::FieldState;
use crate::switching::SwitchingSignal;

/// Parametric class-K∞ function; both shipped shapes have exact inverses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassK {
    Linear { slope: f64 },
    Power { scale: f64, exponent: f64 },
}

impl ClassK {
    pub fn identity() -> Self {
        ClassK::Linear { slope: 1.0 }
    }

    pub fn linear(slope: f64) -> Result<Self> {
        if !(slope > 0.0) {
            return Err(Error::InvalidParameter {
                name: "class_k_slope",
                value: slope,
            });
        }
        Ok(ClassK::Linear { slope })
    }

    pub fn power(scale: f64, exponent: f64) -> Result<Self> {
        if !(scale > 0.0) || !(exponent > 0.0) {
            return Err(Error::InvalidParameter {
                name: "class_k_power",
                value: scale.min(exponent),
            });
        }
        Ok(ClassK::Power { scale, exponent })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            ClassK::Linear { slope } => slope * r,
            ClassK::Power { scale, exponent } => scale * r.powf(exponent),
        }
    }

    pub fn inverse(&self, r: f64) -> f64 {
        match *self {
            ClassK::Linear { slope } => r / slope,
            ClassK::Power { scale, exponent } => (r / scale).powf(1.0 / exponent),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match *self {
            ClassK::Linear { slope } => ClassK::Linear { slope: c * slope },
            ClassK::Power { scale, exponent } => ClassK::Power {
                scale: c * scale,
                exponent,
            },
        }
    }

    /// Sampled-grid class-K check: vanishing at zero and strictly
    /// increasing along the supplied grid.
    pub fn is_class_k_on_grid(&self, grid: &[f64]) -> bool {
        if self.eval(0.0) != 0.0 {
            return false;
        }
        let mut last = 0.0;
        for &r in grid {
            let v = self.eval(r);
            if r > 0.0 && v <= last {
                return false;
            }
            last = v;
        }
        true
    }
}

/// Measure on history segments, e.g. `h(φ) = ‖φ(0)‖²` or `h°(φ) = ‖φ‖_D²`.
#[derive(Clone)]
pub struct Measure {
    f: Arc<dyn Fn(&HistorySegment) -> f64 + Send + Sync>,
    pub label: String,
}

impl Measure {
    pub fn from_fn(
        label: &str,
        f: impl Fn(&HistorySegment) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            f: Arc::new(f),
            label: label.to_string(),
        }
    }

    /// `h(φ) = ‖φ(0)‖²`.
    pub fn norm_sq_at_zero() -> Self {
        Self::from_fn("norm_sq_at_zero", |seg| seg.latest().norm_sq())
    }

    /// `h°(φ) = ‖φ‖_D²` (squared sup norm over the window).
    pub fn sup_norm_sq() -> Self {
        Self::from_fn("sup_norm_sq", |seg| seg.sup_norm_sq())
    }

    /// `h(φ) = ‖φ(0)‖^q`.
    pub fn norm_pow_at_zero(q: f64) -> Self {
        Self::from_fn("norm_pow_at_zero", move |seg| seg.latest().norm().powf(q))
    }

    /// `h°(φ) = ‖φ‖_D^q`.
    pub fn sup_norm_pow(q: f64) -> Self {
        Self::from_fn("sup_norm_pow", move |seg| seg.sup_norm().powf(q))
    }

    pub fn eval(&self, seg: &HistorySegment) -> f64 {
        (self.f)(seg)
    }
}

/// Lyapunov function `V(·, p)` with gradient and Hessian-diagonal oracles.
///
/// The shipped family is quadratic, `V(x, p) = Σ_k w_{p,k} x_k²`, which
/// keeps the diffusion trace and the jump bracket closed-form.
#[derive(Clone)]
pub struct LyapunovFunction {
    value: Arc<dyn Fn(&FieldState, usize) -> f64 + Send + Sync>,
    gradient: Arc<dyn Fn(&FieldState, usize) -> FieldState + Send + Sync>,
    hessian_diag: Arc<dyn Fn(&FieldState, usize) -> Vec<f64> + Send + Sync>,
    /// Per-index mode weights when the function is the quadratic family.
    pub quadratic_weights: Option<Vec<Vec<f64>>>,
}

impl LyapunovFunction {
    pub fn new(
        value: impl Fn(&FieldState, usize) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&FieldState, usize) -> FieldState + Send + Sync + 'static,
        hessian_diag: impl Fn(&FieldState, usize) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian_diag: Arc::new(hessian_diag),
            quadratic_weights: None,
        }
    }

    pub fn quadratic(weights: Vec<Vec<f64>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("need weights for at least one index".into()));
        }
        for row in &weights {
            for &w in row {
                if !(w > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "lyapunov_weight",
                        value: w,
                    });
                }
            }
        }
        let w_value = weights.clone();
        let w_grad = weights.clone();
        let w_hess = weights.clone();
        Ok(Self {
            value: Arc::new(move |x, p| {
                w_value[p]
                    .iter()
                    .zip(&x.coords)
                    .map(|(w, c)| w * c * c)
                    .sum()
            }),
            gradient: Arc::new(move |x, p| {
                FieldState::new(
                    w_grad[p]
                        .iter()
                        .zip(&x.coords)
                        .map(|(w, c)| 2.0 * w * c)
                        .collect(),
                )
            }),
            hessian_diag: Arc::new(move |_x, p| w_hess[p].iter().map(|w| 2.0 * w).collect()),
            quadratic_weights: Some(weights),
        })
    }

    pub fn value(&self, x: &FieldState, p: usize) -> f64 {
        (self.value)(x, p)
    }

    pub fn gradient(&self, x: &FieldState, p: usize) -> FieldState {
        (self.gradient)(x, p)
    }

    pub fn hessian_diag(&self, x: &FieldState, p: usize) -> Vec<f64> {
        (self.hessian_diag)(x, p)
    }

    /// Tight mode-comparability constant `μ` with
    /// `V(x, p1) ≤ μ V(x, p2)` for the quadratic family.
    pub fn mode_ratio_bound(&self) -> Option<f64> {
        let weights = self.quadratic_weights.as_ref()?;
        let mut mu = 1.0f64;
        for w1 in weights {
            for w2 in weights {
                for (a, b) in w1.iter().zip(w2) {
                    mu = mu.max(a / b);
                }
            }
        }
        Some(mu)
    }
}

/// Certification data: Lyapunov function, comparison functions, and the two
/// measures.
#[derive(Clone)]
pub struct LyapunovSpec {
    pub v: LyapunovFunction,
    pub alpha1: ClassK,
    pub alpha2: ClassK,
    pub h0: Measure,
    pub h: Measure,
    /// Mode-comparability constant, `> 1`.
    pub mu_ratio: f64,
    /// Decay function α of the reset comparison system.
    pub decay: ClassK,
    /// Decrement function U of the fixed-index condition.
    pub u_fn: ClassK,
    pub rho: ClassK,
    /// Moment order of the certified statement.
    pub q: f64,
}

impl LyapunovSpec {
    pub fn validate(&self) -> Result<()> {
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        for (name, f) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("decay", self.decay),
            ("u_fn", self.u_fn),
            ("rho", self.rho),
        ] {
            if !f.is_class_k_on_grid(&grid) {
                return Err(Error::HypothesisViolated(format!(
                    "{name} fails the sampled class-K check"
                )));
            }
        }
        if !(self.mu_ratio > 1.0) {
            return Err(Error::InvalidParameter {
                name: "mu_ratio",
                value: self.mu_ratio,
            });
        }
        if !(self.q >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "q",
                value: self.q,
            });
        }
        Ok(())
    }
}

/// One checked grid point (or sample) of a certificate.
#[derive(Debug, Clone, Copy)]
pub struct ReportRow {
    pub t: f64,
    pub estimate: f64,
    pub bound: f64,
    pub stderr: f64,
    /// Slack that must stay `≥ −3·stderr` for the row to pass.
    pub margin: f64,
}

/// Outcome of a statistical stability check.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub name: String,
    pub verdict: bool,
    /// Minimum slack over the checked grid.
    pub margin: f64,
    pub rows: Vec<ReportRow>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    /// Standard rule: every row must satisfy `margin ≥ −3·stderr`, with a
    /// relative rounding allowance so exact-equality margins survive
    /// floating-point noise.
    pub fn from_rows(name: &str, rows: Vec<ReportRow>, notes: Vec<String>) -> Self {
        let verdict = rows.iter().all(|r| {
            let rounding = 1e-12 * r.estimate.abs().max(r.bound.abs()).max(1.0);
            r.margin >= -3.0 * r.stderr - rounding
        });
        let margin = rows
            .iter()
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min)
            .min(f64::INFINITY);
        Self {
            name: name.to_string(),
            verdict,
            margin: if rows.is_empty() { 0.0 } else { margin },
            rows,
            notes,
        }
    }
}

/// Generator value `(𝓛V)(φ, p)`:
///
/// ```text
/// ⟨V_x, Aφ(0) + F_p(φ(0), φ^τ)⟩
///   + ½ tr(V_xx G_p Q G_p*)
///   + Σ_i λ_i [ V(φ(0)+L_p(φ(0),φ^τ,u_i), p) − V(φ(0), p) − ⟨V_x, L_p⟩ ]
/// ```
///
/// with `φ^τ = φ(−τ)` and the trace reduced to a finite sum by diagonality.
pub fn eval_generator(
    v: &LyapunovFunction,
    prob: &SPDDEProblem,
    segment: &HistorySegment,
    p: usize,
) -> f64 {
    let x = segment.latest();
    let x_tau = segment.delayed();
    let sub = prob.subsystem(p);

    let grad = v.gradient(x, p);
    let mut drift_term = prob.op.apply(x);
    drift_term.add_scaled(&(sub.drift)(x, x_tau), 1.0);
    let mut total = grad.dot(&drift_term);

    let gains = (sub.diffusion)(x, x_tau);
    let hess = v.hessian_diag(x, p);
    total += 0.5
        * hess
            .iter()
            .zip(&prob.wiener.q_eigenvalues)
            .zip(&gains.coords)
            .map(|((h, l), g)| h * l * g * g)
            .sum::<f64>();

    let v0 = v.value(x, p);
    for (u, lam) in prob.jumps.marks.iter().zip(&prob.jumps.intensities) {
        let jump = (sub.jump)(x, x_tau, *u);
        let shifted = {
            let mut s = x.clone();
            s.add_scaled(&jump, 1.0);
            s
        };
        total += lam * (v.value(&shifted, p) - v0 - grad.dot(&jump));
    }
    total
}

/// Mean curve of a measure along an ensemble: per-grid-time sample mean and
/// standard error of `measure(X_t)`.
#[derive(Debug, Clone)]
pub struct MeasureCurve {
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample mean and standard error of the measure applied to the history
/// segment ending at grid time `t`.
pub fn estimate_mean_measure(
    trajectories: &[Trajectory],
    measure: &Measure,
    t: f64,
) -> Result<(f64, f64)> {
    if trajectories.is_empty() {
        return Err(Error::InvalidSampleCount);
    }
    let idx = trajectories[0].grid_index_of(t)?;
    let values: Vec<f64> = trajectories
        .iter()
        .map(|traj| measure.eval(&traj.segment_at(idx)))
        .collect();
    Ok(mean_and_stderr(&values))
}

/// Measure evaluated along one trajectory's rolling delay window, one value
/// per grid time. Equivalent to `measure(traj.segment_at(m))` for every `m`
/// but linear in the grid size.
pub fn measure_along(traj: &Trajectory, measure: &Measure) -> Vec<f64> {
    let mut window = traj.segment_at(0);
    let mut values = Vec::with_capacity(traj.len());
    values.push(measure.eval(&window));
    for m in 1..traj.len() {
        window.advance(traj.states[m].clone());
        values.push(measure.eval(&window));
    }
    values
}

/// Per-trajectory measure tracks, indexed `[trajectory][grid time]`.
fn measure_tracks(trajectories: &[Trajectory], measure: &Measure) -> Vec<Vec<f64>> {
    trajectories
        .par_iter()
        .map(|traj| measure_along(traj, measure))
        .collect()
}

/// Full measure curve over the trajectory grid.
pub fn measure_curve(trajectories: &[Trajectory], measure: &Measure) -> Result<MeasureCurve> {
    if trajectories.is_empty() {
        return Err(Error::InvalidSampleCount);
    }
    let grid = trajectories[0].len();
    let step = trajectories[0].step;
    let tracks = measure_tracks(trajectories, measure);
    let per_time: Vec<(f64, f64)> = (0..grid)
        .map(|m| {
            let values: Vec<f64> = tracks.iter().map(|track| track[m]).collect();
            mean_and_stderr(&values)
        })
        .collect();
    Ok(MeasureCurve {
        times: (0..grid).map(|m| m as f64 * step).collect(),
        means: per_time.iter().map(|x| x.0).collect(),
        stderrs: per_time.iter().map(|x| x.1).collect(),
    })
}

/// Checks the two-sided sandwich `α1(h(φ)) ≤ V(φ(0), p) ≤ α2(h°(φ))` on the
/// supplied segments for every index.
///
/// The inequalities are exact, not statistical; rows carry zero stderr and
/// the verdict tolerates only rounding-scale violations.
pub fn check_sandwich(
    spec: &LyapunovSpec,
    segments: &[HistorySegment],
    num_indices: usize,
) -> CertificateReport {
    let mut rows = Vec::with_capacity(segments.len() * num_indices * 2);
    for (i, seg) in segments.iter().enumerate() {
        let h_val = spec.h.eval(seg);
        let h0_val = spec.h0.eval(seg);
        for p in 0..num_indices {
            let v = spec.v.value(seg.latest(), p);
            rows.push(ReportRow {
                t: i as f64,
                estimate: v,
                bound: spec.alpha1.eval(h_val),
                stderr: 0.0,
                margin: v - spec.alpha1.eval(h_val),
            });
            rows.push(ReportRow {
                t: i as f64,
                estimate: v,
                bound: spec.alpha2.eval(h0_val),
                stderr: 0.0,
                margin: spec.alpha2.eval(h0_val) - v,
            });
        }
    }
    let verdict = rows
        .iter()
        .all(|r| r.margin >= -1e-12 * r.estimate.abs().max(r.bound.abs()).max(1.0));
    let margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    CertificateReport {
        name: "sandwich".into(),
        verdict,
        margin: if rows.is_empty() { 0.0 } else { margin },
        rows,
        notes: vec!["exact check with 1e-12 relative rounding tolerance".into()],
    }
}

/// Exponential KL envelope `β(r, t) = scale · r · e^{−rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlEnvelope {
    pub scale: f64,
    pub rate: f64,
}

impl KlEnvelope {
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        self.scale * r * (-self.rate * t).exp()
    }
}

/// Result of fitting the KL envelope family to measured mean curves.
#[derive(Debug, Clone, Copy)]
pub struct KlFit {
    pub envelope: KlEnvelope,
    /// False when the fitted rate is not positive, i.e. the data admit no
    /// decaying envelope from this family.
    pub is_kl: bool,
}

/// Least-squares fit of `β(r, t) = c · r · e^{−λ t}` on the pooled log
/// ratios `ln(curve/r)` of several initial scales.
///
/// The rate comes from the regression slope; the intercept is then lifted
/// so the envelope dominates every training point's upper 3-standard-error
/// band, which keeps the certificate meaningful on fresh seeds. Exact data
/// (zero stderr, zero residuals) are recovered unchanged.
pub fn fit_kl_envelope(curves: &[(f64, MeasureCurve)]) -> Result<KlFit> {
    if curves.len() < 2 {
        return Err(Error::Fit("need curves for at least two initial scales".into()));
    }
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    let mut ys_upper = Vec::new();
    for (r, curve) in curves {
        if !(*r > 0.0) {
            return Err(Error::Fit(format!("non-positive initial measure {r}")));
        }
        for ((t, mean), se) in curve
            .times
            .iter()
            .zip(&curve.means)
            .zip(&curve.stderrs)
        {
            if !(*mean > 0.0) {
                return Err(Error::Fit(format!("non-positive curve value {mean} at t = {t}")));
            }
            ts.push(*t);
            ys.push((mean / r).ln());
            ys_upper.push(((mean + 3.0 * se) / r).ln());
        }
    }
    let n = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - t_mean) * (t - t_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate time grid".into()));
    }
    let sxy: f64 = ts
        .iter()
        .zip(&ys)
        .map(|(t, y)| (t - t_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let lift = ts
        .iter()
        .zip(&ys_upper)
        .map(|(t, y)| y - (intercept + slope * t))
        .fold(0.0f64, f64::max);
    let rate = -slope;
    Ok(KlFit {
        envelope: KlEnvelope {
            scale: (intercept + lift).exp(),
            rate,
        },
        is_kl: rate > 0.0,
    })
}

/// Mean-stability check: `E[h(X_t)] ≤ β(h°(ξ), t) + 3·SE(t)` at every grid
/// time.
pub fn check_gasm(curve: &MeasureCurve, beta: &KlEnvelope, h0_of_xi: f64) -> CertificateReport {
    let rows = curve
        .times
        .iter()
        .zip(curve.means.iter().zip(&curve.stderrs))
        .map(|(&t, (&est, &se))| {
            let bound = beta.eval(h0_of_xi, t);
            ReportRow {
                t,
                estimate: est,
                bound,
                stderr: se,
                margin: bound - est,
            }
        })
        .collect();
    CertificateReport::from_rows("gasm", rows, vec![])
}

/// Probability-stability check via the Chebyshev construction: with
/// `β̃ = 2β/η`, the empirical frequency of `h(X_t) ≥ β̃(h°(ξ), t)` must stay
/// strictly below `η` at every grid time.
pub fn check_gasp(
    trajectories: &[Trajectory],
    measure_h: &Measure,
    beta: &KlEnvelope,
    h0_of_xi: f64,
    eta: f64,
) -> Result<CertificateReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::OutOfRange {
            what: "eta",
            value: eta,
        });
    }
    if trajectories.is_empty() {
        return Err(Error::InvalidSampleCount);
    }
    let n = trajectories.len() as f64;
    let grid = trajectories[0].len();
    let step = trajectories[0].step;
    let tracks = measure_tracks(trajectories, measure_h);
    let rows: Vec<ReportRow> = (0..grid)
        .map(|m| {
            let t = m as f64 * step;
            let threshold = 2.0 * beta.eval(h0_of_xi, t) / eta;
            let exceed = tracks.iter().filter(|track| track[m] >= threshold).count();
            let freq = exceed as f64 / n;
            ReportRow {
                t,
                estimate: freq,
                bound: eta,
                stderr: (freq * (1.0 - freq) / n).sqrt(),
                margin: eta - freq,
            }
        })
        .collect();
    // the exceedance frequency must be strictly below η
    let verdict = rows.iter().all(|r| r.margin > 0.0);
    let margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    Ok(CertificateReport {
        name: "gasp".into(),
        verdict,
        margin,
        rows,
        notes: vec![format!("eta = {eta}, threshold = 2*beta/eta")],
    })
}

/// Monte Carlo run parameters shared by the certificate drivers.
#[derive(Debug, Clone, Copy)]
pub struct MonteCarloSettings {
    pub trajectories: usize,
    pub master_seed: u64,
    pub horizon: f64,
    pub step: f64,
}

/// Fixed-index decrement check: for every recurrence pair `(τ_i, τ_j)` of
/// every index `p`, the paired estimate of
/// `V(X^n(τ_j), p) − V(X^n(τ_i), p) + U(h°(X^n_{τ_i}))` must be `≤ 3·SE`.
pub fn check_fixed_index_decrement(
    prob: &SPDDEProblem,
    sig: &SwitchingSignal,
    spec: &LyapunovSpec,
    n: f64,
    mc: &MonteCarloSettings,
) -> Result<CertificateReport> {
    let trajectories = simulate_yosida_ensemble(
        prob,
        sig,
        n,
        mc.horizon,
        mc.step,
        mc.trajectories,
        mc.master_seed,
    )?;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut total_pairs = 0usize;
    for p in 0..prob.subsystems.len() {
        let pairs = sig.fixed_index_pairs(p, mc.horizon);
        for (ti, tj) in pairs {
            total_pairs += 1;
            let i = trajectories[0].grid_index_of(ti)?;
            let j = trajectories[0].grid_index_of(tj)?;
            let diffs: Vec<f64> = trajectories
                .iter()
                .map(|traj| {
                    let vi = spec.v.value(&traj.states[i], p);
                    let vj = spec.v.value(&traj.states[j], p);
                    let u = spec.u_fn.eval(spec.h0.eval(&traj.segment_at(i)));
                    vj - vi + u
                })
                .collect();
            let (mean, se) = mean_and_stderr(&diffs);
            rows.push(ReportRow {
                t: tj,
                estimate: mean,
                bound: 0.0,
                stderr: se,
                margin: -mean,
            });
            notes.push(format!(
                "index {p}: pair ({ti}, {tj}) decrement {mean} (se {se})"
            ));
        }
    }
    if total_pairs == 0 {
        notes.push("no pairs".into());
    }
    Ok(CertificateReport::from_rows(
        "fixed_index_decrement",
        rows,
        notes,
    ))
}
