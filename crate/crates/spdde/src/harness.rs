//! Experiment orchestration behind the command-line interface: subcommand
//! drivers that load a config, run the requested study, and emit
//! deterministic CSV/report files.
//!
//! Every driver returns `Ok(true)` on pass, `Ok(false)` on a failed
//! certificate or violated fixture, and `Err(_)` for configuration or
//! hypothesis errors; the binary maps these to exit codes 0, 1, and 2.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::comparison::{
    comparison_certificate, derive_comparison_rates, dwell_time_threshold, halanay_lambda,
    ComparisonModel, ScalarCurve,
};
use crate::config::{CertifyConfig, ExperimentConfig};
use crate::error::{Error, Result};
use crate::history::HistorySegment;
use crate::integrator::{simulate_ensemble, yosida_gap, SPDDEProblem};
use crate::output::{
    fmt_f64, write_curve_csv, write_gap_table, write_moments_csv, write_report,
    write_trajectory_csv,
};
use crate::stability::{
    check_fixed_index_decrement, check_gasm, check_gasp, fit_kl_envelope, measure_curve,
    CertificateReport, KlFit, LyapunovSpec, Measure, MonteCarloSettings, ReportRow,
};
use crate::switching::{generate_adt_signal, SwitchingSignal};

/// Shared flags of the config-driven subcommands. The seed priority is
/// `--seed` flag, then the `SPDDE_SEED` environment variable, then the
/// config's `run.master_seed`.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub trajectories: Option<usize>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertKind {
    Gasm,
    Gasp,
    Comparison,
    FixedIndex,
}

impl CertKind {
    pub fn label(self) -> &'static str {
        match self {
            CertKind::Gasm => "gasm",
            CertKind::Gasp => "gasp",
            CertKind::Comparison => "comparison",
            CertKind::FixedIndex => "fixed_index",
        }
    }
}

fn resolve_seed(flag: Option<u64>, config_seed: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("SPDDE_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| Error::Config(format!("SPDDE_SEED is not a u64: {text}"))),
        Err(_) => Ok(config_seed),
    }
}

/// Runs `work` inside a dedicated rayon pool when a worker count is given.
/// Results must not depend on the pool size; this only bounds parallelism.
fn with_pool<T: Send>(threads: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

struct LoadedExperiment {
    config: ExperimentConfig,
    problem: SPDDEProblem,
    signal: SwitchingSignal,
    seed: u64,
    trajectories: usize,
}

fn load_experiment(opts: &RunOptions) -> Result<LoadedExperiment> {
    let config = ExperimentConfig::load(&opts.config)?;
    let problem = config.build_problem()?;
    let signal = config.build_signal()?;
    let seed = resolve_seed(opts.seed, config.run.master_seed)?;
    let trajectories = opts.trajectories.unwrap_or(config.run.trajectories);
    if trajectories == 0 {
        return Err(Error::Config("trajectory count must be positive".into()));
    }
    std::fs::create_dir_all(&opts.out)?;
    Ok(LoadedExperiment {
        config,
        problem,
        signal,
        seed,
        trajectories,
    })
}

fn mc_settings(exp: &LoadedExperiment) -> MonteCarloSettings {
    MonteCarloSettings {
        trajectories: exp.trajectories,
        master_seed: exp.seed,
        horizon: exp.config.run.horizon,
        step: exp.config.run.step,
    }
}

/// Initial-datum size `h°(ξ)` on the run grid.
fn h0_of_initial(problem: &SPDDEProblem, spec: &LyapunovSpec, step: f64) -> Result<f64> {
    let segment = HistorySegment::from_fn(|theta| problem.initial.eval(theta), problem.tau, step)?;
    Ok(spec.h0.eval(&segment))
}

/// `simulate`: trajectory CSV exports plus the mean-square-norm moment
/// curve.
pub fn run_simulate(opts: &RunOptions) -> Result<bool> {
    let exp = load_experiment(opts)?;
    exp.problem.validate_hypotheses(1000, exp.seed ^ 0x4832)?;
    let trajs = with_pool(opts.threads, || {
        simulate_ensemble(
            &exp.problem,
            &exp.signal,
            exp.config.run.horizon,
            exp.config.run.step,
            exp.trajectories,
            exp.seed,
        )
    })??;
    let exported = exp
        .config
        .run
        .export_trajectories
        .unwrap_or(1)
        .min(trajs.len());
    for (i, traj) in trajs.iter().take(exported).enumerate() {
        write_trajectory_csv(&opts.out.join(format!("trajectory_{i:03}.csv")), traj)?;
    }
    let moments = measure_curve(&trajs, &Measure::norm_sq_at_zero())?;
    write_moments_csv(&opts.out.join("moments.csv"), &moments)?;
    println!(
        "simulate: {} trajectories on [0, {}], outputs in {}",
        trajs.len(),
        exp.config.run.horizon,
        opts.out.display()
    );
    Ok(true)
}

/// `yosida-converge`: the strong-approximation gap over the configured
/// ladder; passes when the gap is non-increasing in `n`.
pub fn run_yosida_converge(opts: &RunOptions) -> Result<bool> {
    let exp = load_experiment(opts)?;
    let ladder = exp
        .config
        .certify
        .as_ref()
        .and_then(|c| c.yosida_ladder.clone())
        .unwrap_or_else(|| vec![10.0, 100.0, 1000.0]);
    if ladder.is_empty() {
        return Err(Error::Config("yosida_ladder must be nonempty".into()));
    }
    let gaps = with_pool(opts.threads, || -> Result<Vec<f64>> {
        ladder
            .iter()
            .map(|&n| {
                yosida_gap(
                    &exp.problem,
                    &exp.signal,
                    n,
                    exp.config.run.horizon,
                    exp.config.run.step,
                    exp.trajectories,
                    exp.seed,
                )
            })
            .collect()
    })??;
    write_gap_table(&opts.out.join("yosida_gaps.csv"), &ladder, &gaps)?;
    let mut pass = true;
    for (i, (n, gap)) in ladder.iter().zip(&gaps).enumerate() {
        println!("yosida n = {n}: max mean-square gap = {}", fmt_f64(*gap));
        if i > 0 && *gap > gaps[i - 1] {
            pass = false;
        }
    }
    if !pass {
        println!("yosida-converge: FAIL (gap not non-increasing along the ladder)");
    }
    Ok(pass)
}

fn comparison_model_for(
    problem: &SPDDEProblem,
    spec: &LyapunovSpec,
    certify: &CertifyConfig,
) -> Result<(ComparisonModel, f64, f64)> {
    let (gamma1, gamma2) = match &certify.rates {
        Some(r) => (r.gamma1, r.gamma2),
        None => derive_comparison_rates(problem)?,
    };
    if gamma1 + gamma2 >= 0.0 {
        return Err(Error::Infeasible(gamma1 + gamma2));
    }
    // ψ(θ) = max_p V(ξ(θ), p) dominates the initial history by construction
    let initial = problem.initial.clone();
    let v = spec.v.clone();
    let indices = problem.subsystems.len();
    let psi = move |theta: f64| {
        let x = initial.eval(theta);
        (0..indices)
            .map(|p| v.value(&x, p))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    Ok((
        ComparisonModel::linear(gamma1, gamma2, psi, problem.tau),
        gamma1,
        gamma2,
    ))
}

fn fit_envelope(
    exp: &LoadedExperiment,
    spec: &LyapunovSpec,
) -> Result<(KlFit, f64)> {
    let certify = exp.config.certify.as_ref().expect("spec built from certify");
    let (scales, training_seed) = match &certify.envelope {
        Some(env) => {
            if env.training_scales.len() < 2 {
                return Err(Error::Config(
                    "envelope.training_scales needs at least two scales".into(),
                ));
            }
            (env.training_scales.clone(), env.training_seed)
        }
        None => (vec![1.0, 2.0], exp.seed.wrapping_add(1000)),
    };
    let mut curves = Vec::with_capacity(scales.len());
    for (j, &scale) in scales.iter().enumerate() {
        if !(scale > 0.0) {
            return Err(Error::Config(format!("training scale {scale} must be positive")));
        }
        let mut scaled = exp.problem.clone();
        scaled.initial = exp.problem.initial.scaled(scale);
        let r = h0_of_initial(&scaled, spec, exp.config.run.step)?;
        let trajs = simulate_ensemble(
            &scaled,
            &exp.signal,
            exp.config.run.horizon,
            exp.config.run.step,
            exp.trajectories,
            training_seed.wrapping_add(j as u64),
        )?;
        curves.push((r, measure_curve(&trajs, &spec.h)?));
    }
    let fit = fit_kl_envelope(&curves)?;
    let r_fresh = h0_of_initial(&exp.problem, spec, exp.config.run.step)?;
    Ok((fit, r_fresh))
}

fn not_kl_report(name: &str, fit: &KlFit) -> CertificateReport {
    CertificateReport {
        name: name.to_string(),
        verdict: false,
        margin: f64::NEG_INFINITY,
        rows: vec![],
        notes: vec![format!(
            "fitted envelope is not KL: rate = {} (must be positive)",
            fmt_f64(fit.envelope.rate)
        )],
    }
}

/// `certify <kind>`: runs one stability certificate, writes the report and
/// any companion curves, and returns the verdict.
pub fn run_certify(kind: CertKind, opts: &RunOptions) -> Result<bool> {
    let exp = load_experiment(opts)?;
    let spec = exp.config.build_spec()?;
    exp.problem.validate_hypotheses(1000, exp.seed ^ 0x4832)?;
    let mc = mc_settings(&exp);

    let report = with_pool(opts.threads, || -> Result<CertificateReport> {
        match kind {
            CertKind::Comparison => {
                let certify = exp.config.certify.as_ref().expect("spec built from certify");
                let (model, gamma1, gamma2) =
                    comparison_model_for(&exp.problem, &spec, certify)?;
                let mut report =
                    comparison_certificate(&exp.problem, &exp.signal, &spec, &model, &mc)?;
                report.notes.push(format!(
                    "rates gamma1 = {}, gamma2 = {}",
                    fmt_f64(gamma1),
                    fmt_f64(gamma2)
                ));
                Ok(report)
            }
            CertKind::Gasm => {
                let (fit, r) = fit_envelope(&exp, &spec)?;
                if !fit.is_kl {
                    return Ok(not_kl_report("gasm", &fit));
                }
                let trajs = simulate_ensemble(
                    &exp.problem,
                    &exp.signal,
                    mc.horizon,
                    mc.step,
                    mc.trajectories,
                    mc.master_seed,
                )?;
                let curve = measure_curve(&trajs, &spec.h)?;
                let mut report = check_gasm(&curve, &fit.envelope, r);
                report.notes.push(format!(
                    "envelope scale = {}, rate = {}, h0(xi) = {}",
                    fmt_f64(fit.envelope.scale),
                    fmt_f64(fit.envelope.rate),
                    fmt_f64(r)
                ));
                Ok(report)
            }
            CertKind::Gasp => {
                let certify = exp.config.certify.as_ref().expect("spec built from certify");
                let (fit, r) = fit_envelope(&exp, &spec)?;
                if !fit.is_kl {
                    return Ok(not_kl_report("gasp", &fit));
                }
                let trajs = simulate_ensemble(
                    &exp.problem,
                    &exp.signal,
                    mc.horizon,
                    mc.step,
                    mc.trajectories,
                    mc.master_seed,
                )?;
                let etas = certify
                    .eta
                    .clone()
                    .unwrap_or_else(|| vec![0.5, 0.1, 0.05]);
                let mut verdict = true;
                let mut margin = f64::INFINITY;
                let mut rows: Vec<ReportRow> = Vec::new();
                let mut notes = vec![format!(
                    "envelope scale = {}, rate = {}, h0(xi) = {}",
                    fmt_f64(fit.envelope.scale),
                    fmt_f64(fit.envelope.rate),
                    fmt_f64(r)
                )];
                for &eta in &etas {
                    let sub = check_gasp(&trajs, &spec.h, &fit.envelope, r, eta)?;
                    verdict &= sub.verdict;
                    margin = margin.min(sub.margin);
                    notes.push(format!(
                        "eta = {eta}: {} (worst frequency margin {})",
                        if sub.verdict { "pass" } else { "fail" },
                        fmt_f64(sub.margin)
                    ));
                    rows.extend(sub.rows);
                }
                Ok(CertificateReport {
                    name: "gasp".into(),
                    verdict,
                    margin,
                    rows,
                    notes,
                })
            }
            CertKind::FixedIndex => {
                let certify = exp.config.certify.as_ref().expect("spec built from certify");
                let n = certify.yosida_n.unwrap_or(1000.0);
                check_fixed_index_decrement(&exp.problem, &exp.signal, &spec, n, &mc)
            }
        }
    })??;

    write_report(
        &opts.out.join(format!("report_{}.txt", kind.label())),
        &report,
    )?;
    if matches!(kind, CertKind::Comparison | CertKind::Gasm) {
        let curve = ScalarCurve {
            step: mc.step,
            values: report.rows.iter().map(|r| r.estimate).collect(),
        };
        let envelope: Vec<f64> = report.rows.iter().map(|r| r.bound).collect();
        write_curve_csv(
            &opts.out.join(format!("{}_curve.csv", kind.label())),
            &curve,
            Some(&envelope),
        )?;
    }
    println!(
        "certify {}: {} (margin {})",
        kind.label(),
        if report.verdict { "PASS" } else { "FAIL" },
        fmt_f64(report.margin)
    );
    Ok(report.verdict)
}

/// `halanay`: prints the sharpest feasible rate and the dwell-time
/// threshold `ln μ / λ*`.
pub fn run_halanay(a1: f64, a2: f64, tau: f64, mu: f64) -> Result<bool> {
    let lambda = halanay_lambda(a1, a2, tau)?;
    let threshold = dwell_time_threshold(mu, lambda)?;
    println!("lambda_star = {}", fmt_f64(lambda));
    println!("dwell_time_threshold = {}", fmt_f64(threshold));
    Ok(true)
}

/// `adt verify`: checks a serialized signal against its dwell-time budget
/// (or an explicitly supplied one) and reports the first violating window.
pub fn run_adt_verify(
    signal_path: &Path,
    tau_a: Option<f64>,
    chatter: Option<f64>,
) -> Result<bool> {
    let text = std::fs::read_to_string(signal_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", signal_path.display())))?;
    let signal: SwitchingSignal =
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let budget = match (tau_a, chatter) {
        (Some(t), Some(n)) => (t, n),
        (None, None) => match signal.adt {
            Some(b) => (b.tau_a, b.chatter),
            None => {
                return Err(Error::Config(
                    "signal carries no budget; pass --tau-a and --chatter".into(),
                ))
            }
        },
        _ => {
            return Err(Error::Config(
                "pass both --tau-a and --chatter or neither".into(),
            ))
        }
    };
    match signal.verify_adt(budget.0, budget.1) {
        Ok(()) => {
            println!(
                "adt verify: PASS ({} switches, tau_a = {}, chatter = {})",
                signal.num_switches(),
                budget.0,
                budget.1
            );
            Ok(true)
        }
        Err(violation) => {
            println!("adt verify: FAIL — {violation}");
            Ok(false)
        }
    }
}

/// `adt generate`: draws a signal meeting the budget and serializes it.
#[allow(clippy::too_many_arguments)]
pub fn run_adt_generate(
    indices: &[usize],
    tau_a: f64,
    chatter: f64,
    horizon: f64,
    grid_step: Option<f64>,
    seed: u64,
    out: &Path,
) -> Result<bool> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let signal = generate_adt_signal(indices, tau_a, chatter, horizon, grid_step, &mut rng)?;
    std::fs::create_dir_all(out)?;
    let path = out.join("signal.json");
    let text =
        serde_json::to_string_pretty(&signal).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&path, text)?;
    println!(
        "adt generate: {} switches on [0, {horizon}], written to {}",
        signal.num_switches(),
        path.display()
    );
    Ok(true)
}
