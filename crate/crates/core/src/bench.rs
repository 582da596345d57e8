//! Experiment configuration, runs, sweeps and reports behind the CLI.

use std::fmt::Write as _;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{self, CatalogEntry, CATALOG_IDS};
use crate::constants::{ada_convexity, ada_smoothness, delta_used, holder_approx_constant, AdaConstants};
use crate::diagnostics::certificate_check;
use crate::error::{Error, Result};
use crate::model::{domain_violation, relaxed_objective, ProblemInstance, SaddleData};
use crate::oracle::Fixture;
use crate::rufcm::{
    boundary_gap, choose_k, doubling_ladder, initial_gap, prox_budget, restart_plan, rufcm, rung_budget,
    LadderConfig,
};
use crate::schedule::check_conditions;
use crate::trace::Trace;
use crate::ufcm::{iteration_bound, prox_bound, ufcm_observed, NuNorm, SolverConfig};
use crate::Vector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Ufcm,
    Rufcm,
    Ladder,
}

/// How `r` is chosen from `eps`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RPolicy {
    Fixed {
        value: f64,
    },
    /// `scale * sqrt(eps)`
    SqrtEps { scale: f64 },
    /// `D_lambda * sqrt(eps)`
    #[default]
    DLambdaSqrtEps,
    /// `scale * eps^(3/4)`
    EpsThreeQuarters { scale: f64 },
}

impl RPolicy {
    pub fn resolve(&self, epsilon: f64, d_lambda: f64) -> f64 {
        match *self {
            RPolicy::Fixed { value } => value,
            RPolicy::SqrtEps { scale } => scale * epsilon.sqrt(),
            RPolicy::DLambdaSqrtEps => d_lambda * epsilon.sqrt(),
            RPolicy::EpsThreeQuarters { scale } => scale * epsilon.powf(0.75),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepPolicy {
    Explicit {
        c: f64,
        delta: f64,
    },
    /// `C = D_lambda / D_x`, `Delta = C / (2 L_ADA)`
    #[default]
    Standard,
}

/// Instance parameters for the parametric entries (`holder_power`, `square`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceParams {
    pub p: Option<f64>,
    pub kappa: Option<f64>,
    pub scale: Option<f64>,
}

fn default_seed() -> u64 {
    7
}

fn default_trace_every() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Output file stem; derived from instance, solver and eps when absent.
    pub name: Option<String>,
    pub instance: String,
    #[serde(default)]
    pub params: InstanceParams,
    #[serde(default)]
    pub solver: SolverKind,
    pub epsilon: f64,
    #[serde(default)]
    pub r: RPolicy,
    #[serde(default)]
    pub steps: StepPolicy,
    /// Outer iterations for `ufcm`; the iteration bound when absent.
    pub horizon: Option<usize>,
    /// Restart count for `rufcm`; chosen from the initial gap when absent.
    pub k: Option<usize>,
    pub max_rungs: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub sweep_epsilons: Vec<f64>,
    /// Use the strong-convexity cap inside `L_ADA`.
    #[serde(default)]
    pub fully_general: bool,
    /// Check the certificate after every iteration to find the first `t` reaching (eps, r)-optimality.
    #[serde(default = "default_true")]
    pub track_certificate: bool,
}

impl ExperimentConfig {
    pub fn new(instance: &str, solver: SolverKind, epsilon: f64) -> Self {
        Self {
            name: None,
            instance: instance.to_string(),
            params: InstanceParams::default(),
            solver,
            epsilon,
            r: RPolicy::default(),
            steps: StepPolicy::default(),
            horizon: None,
            k: None,
            max_rungs: None,
            seed: default_seed(),
            trace_every: 1,
            out_dir: None,
            sweep_epsilons: Vec::new(),
            fully_general: false,
            track_certificate: true,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.trace_every == 0 {
            return bad("trace_every must be at least 1".into());
        }
        if let Some(e) = self.sweep_epsilons.iter().find(|e| !(**e > 0.0)) {
            return bad(format!("sweep epsilon {e} must be positive"));
        }
        if let StepPolicy::Explicit { c, delta } = self.steps {
            if !(c > 0.0 && delta > 0.0) {
                return bad("explicit C and Delta must be positive".into());
            }
        }
        if self.max_rungs == Some(0) {
            return bad("max_rungs must be at least 1".into());
        }
        if self.k == Some(0) {
            return bad("K must be at least 1".into());
        }
        if self.horizon == Some(0) {
            return bad("horizon must be at least 1".into());
        }
        match self.instance.as_str() {
            "holder_power" if self.params.p.is_none() => bad("holder_power needs params.p".into()),
            "holder_power" | "square" => Ok(()),
            id => catalog::bare(id).map(|_| ()),
        }
    }

    pub fn stem(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let solver = match self.solver {
                SolverKind::Ufcm => "ufcm",
                SolverKind::Rufcm => "rufcm",
                SolverKind::Ladder => "ladder",
            };
            format!("{}_{}_eps{:e}", self.instance, solver, self.epsilon)
        })
    }

    /// The instance with its reference saddle.
    pub fn entry(&self) -> Result<CatalogEntry> {
        match self.instance.as_str() {
            "holder_power" => catalog::holder_power(self.params.p.unwrap_or(1.0), self.params.kappa.unwrap_or(1.0)),
            "square" => catalog::scaled_square(self.params.scale.unwrap_or(1.0)).with_computed_saddle(),
            id => catalog::instance(id),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub instance: String,
    pub solver: SolverKind,
    pub epsilon: f64,
    pub r: f64,
    pub c: f64,
    pub delta: f64,
    pub l_ada: f64,
    pub mu_ada: f64,
    /// `None` for nonsmooth composers.
    pub l_h: Option<f64>,
    pub predicted_n: f64,
    pub predicted_p: Option<f64>,
    pub iterations: usize,
    pub gradient_evals: usize,
    pub prox_evals: usize,
    pub iterations_to_eps: Option<usize>,
    /// Objective with `g(x)` projected onto `dom h`; see `feasibility` for the violation.
    pub final_objective: Option<f64>,
    pub objective_gap: Option<f64>,
    pub feasibility: f64,
    pub certificate_gap: f64,
    pub certificate_perturbation: f64,
    pub certificate_pass: bool,
    /// Gap at each restart boundary (`rufcm` only).
    pub stage_gaps: Vec<f64>,
    pub restart_k: Option<usize>,
    pub best_rung: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub trace: Trace,
}

impl RunOutcome {
    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.summary.name));
        let json = dir.join(format!("{}.json", self.summary.name));
        self.trace.save_csv(&csv)?;
        std::fs::write(&json, serde_json::to_string_pretty(&self.summary)? + "\n")?;
        Ok((csv, json))
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Constants and stepsizes implied by a config for its instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolvedConstants {
    pub r: f64,
    pub ada: AdaConstants,
    pub c: f64,
    pub delta: f64,
    pub l_h: f64,
}

pub fn resolve_constants(config: &ExperimentConfig, problem: &ProblemInstance, saddle: &SaddleData) -> Result<ResolvedConstants> {
    let r = config.r.resolve(config.epsilon, saddle.d_lambda);
    let ada = AdaConstants::compute(
        &problem.holder_profiles(),
        &problem.convexity_profiles(),
        &saddle.lambda_star,
        r,
        config.epsilon,
        saddle.d_x,
        config.fully_general,
    )?;
    let (c, delta) = match config.steps {
        StepPolicy::Explicit { c, delta } => (c, delta),
        StepPolicy::Standard => {
            let c = saddle.d_lambda / saddle.d_x;
            (c, c / (2.0 * ada.l_ada))
        }
    };
    Ok(ResolvedConstants {
        r,
        ada,
        c,
        delta,
        l_h: problem.composer().smoothness_lh(),
    })
}

/// Loads the instance, resolves constants, runs the solver and measures the output.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let entry = config.entry()?;
    let problem = &entry.problem;
    let saddle = problem
        .known_saddle()
        .cloned()
        .ok_or_else(|| Error::Fixture(format!("no reference saddle for {}", config.instance)))?;
    let k = resolve_constants(config, problem, &saddle)?;
    let eps = config.epsilon;
    let base = SolverConfig {
        epsilon: eps,
        r: k.r,
        c: k.c,
        delta: k.delta,
        l_ada: Some(k.ada.l_ada),
        horizon: config
            .horizon
            .unwrap_or_else(|| iteration_bound(k.ada.l_ada, saddle.d_x, eps).ceil() as usize)
            .max(1),
        trace_every: config.trace_every,
        nu_norm: NuNorm::Frobenius,
        record_schedule: false,
        d_x: Some(saddle.d_x),
    };

    let mut summary = RunSummary {
        name: config.stem(),
        instance: config.instance.clone(),
        solver: config.solver,
        epsilon: eps,
        r: k.r,
        c: k.c,
        delta: k.delta,
        l_ada: k.ada.l_ada,
        mu_ada: k.ada.mu_ada,
        l_h: finite(k.l_h),
        predicted_n: 0.0,
        predicted_p: None,
        iterations: 0,
        gradient_evals: 0,
        prox_evals: 0,
        iterations_to_eps: None,
        final_objective: None,
        objective_gap: None,
        feasibility: 0.0,
        certificate_gap: f64::NAN,
        certificate_perturbation: f64::NAN,
        certificate_pass: false,
        stage_gaps: Vec::new(),
        restart_k: None,
        best_rung: None,
        seed: config.seed,
    };

    let (x_bar, trace) = match config.solver {
        SolverKind::Ufcm => {
            let mut first_hit = None;
            let out = ufcm_observed(problem, &entry.x0, &entry.lambda0, &base, |view| {
                if config.track_certificate && first_hit.is_none() {
                    if let Ok(c) = certificate_check(problem, view.x_bar, &saddle, k.r, eps) {
                        if c.eps_r_pass {
                            first_hit = Some(view.t);
                        }
                    }
                }
                ControlFlow::Continue(())
            })?;
            summary.predicted_n = iteration_bound(k.ada.l_ada, saddle.d_x, eps);
            summary.predicted_p = Some(prox_bound(
                k.ada.l_ada,
                saddle.d_x,
                saddle.d_lambda,
                saddle.grad_norm_bound_m,
                eps,
            ));
            summary.iterations = out.iterations;
            summary.gradient_evals = out.gradient_evals;
            summary.prox_evals = out.prox_evals;
            summary.iterations_to_eps = first_hit;
            (out.x_bar, out.trace)
        }
        SolverKind::Rufcm => {
            let kk = match config.k {
                Some(kk) => kk,
                None => choose_k(initial_gap(problem, &entry.x0, &entry.lambda0, &saddle)?.max(0.0), eps)?,
            };
            let plan = restart_plan(
                eps,
                k.r,
                saddle.d_x,
                saddle.d_lambda,
                k.ada.l_ada,
                k.ada.mu_ada.max(f64::MIN_POSITIVE),
                k.l_h,
                kk,
            )?;
            let out = rufcm(problem, &entry.x0, &entry.lambda0, &plan, &base)?;
            summary.predicted_n = plan.gradient_budget() as f64;
            summary.predicted_p = Some(prox_budget(&plan, saddle.grad_norm_bound_m));
            summary.iterations = plan.gradient_budget();
            summary.gradient_evals = out.gradient_evals;
            summary.prox_evals = out.prox_evals;
            summary.restart_k = Some(kk);
            summary.stage_gaps = out
                .stages
                .iter()
                .map(|s| boundary_gap(problem, s, &saddle))
                .collect::<Result<_>>()?;
            (out.x_bar, out.trace)
        }
        SolverKind::Ladder => {
            let ladder = LadderConfig {
                epsilon: eps,
                d_x: saddle.d_x,
                d_lambda: saddle.d_lambda,
                r: k.r,
                max_rungs: config.max_rungs.unwrap_or(8),
                trace_every: config.trace_every,
            };
            let out = doubling_ladder(problem, &entry.x0, &entry.lambda0, &ladder)?;
            summary.predicted_n = (0..ladder.max_rungs).map(|j| rung_budget(j, saddle.d_x, eps) as f64).sum();
            summary.iterations = out.rungs.iter().map(|r| r.budget).sum();
            summary.gradient_evals = out.gradient_evals;
            summary.prox_evals = out.prox_evals;
            summary.best_rung = Some(out.best_rung);
            (out.x_bar, out.trace)
        }
    };

    let obj = relaxed_objective(problem, &x_bar)?;
    summary.final_objective = finite(obj);
    summary.objective_gap = finite(obj - saddle.p_star);
    summary.feasibility = domain_violation(problem.composer().handle(), &problem.values(&x_bar)?);
    if let Ok(cert) = certificate_check(problem, &x_bar, &saddle, k.r, eps) {
        summary.certificate_gap = cert.lagrangian_gap;
        summary.certificate_perturbation = cert.perturbation_norm;
        summary.certificate_pass = cert.eps_r_pass;
    }
    Ok(RunOutcome { summary, trace })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub outcomes: Vec<RunOutcome>,
    /// Least-squares slope of `log(iterations_to_eps)` against `log(eps)`.
    pub slope: Option<f64>,
}

impl SweepOutcome {
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["epsilon", "iterations_to_eps", "gradient_evals", "prox_evals", "predicted_n"])?;
        for o in &self.outcomes {
            let s = &o.summary;
            w.write_record([
                s.epsilon.to_string(),
                s.iterations_to_eps.map(|v| v.to_string()).unwrap_or_default(),
                s.gradient_evals.to_string(),
                s.prox_evals.to_string(),
                s.predicted_n.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the config once per entry of `sweep_epsilons`, one worker thread per run.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    config.validate()?;
    if config.sweep_epsilons.is_empty() {
        return Err(Error::Config("sweep needs sweep_epsilons".into()));
    }
    let configs: Vec<ExperimentConfig> = config
        .sweep_epsilons
        .iter()
        .map(|&eps| {
            let mut c = config.clone();
            c.epsilon = eps;
            c.sweep_epsilons.clear();
            c.name = Some(format!("{}_eps{eps:e}", config.name.clone().unwrap_or_else(|| config.instance.clone())));
            c
        })
        .collect();
    let results: Vec<Result<RunOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || run_experiment(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Config("sweep worker panicked".into()))))
            .collect()
    });
    let outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = outcomes
        .iter()
        .filter_map(|o| o.summary.iterations_to_eps.map(|t| (o.summary.epsilon, t as f64)))
        .collect();
    let slope = if points.len() == outcomes.len() { loglog_slope(&points) } else { None };
    Ok(SweepOutcome { outcomes, slope })
}

/// Table of the aggregate constants for an instance and the budgets they predict.
pub fn constants_report(id: &str, epsilon: f64, r: Option<f64>) -> Result<String> {
    let entry = catalog::instance(id)?;
    let problem = &entry.problem;
    let saddle = problem.known_saddle().expect("catalog instances carry a saddle");
    let r = r.unwrap_or(saddle.d_lambda * epsilon.sqrt());
    let holder = problem.holder_profiles();
    let convexity = problem.convexity_profiles();
    let lam = &saddle.lambda_star;
    let mu_ada = ada_convexity(&convexity, lam, epsilon)?;
    let l_general = ada_smoothness(&holder, lam, r, epsilon, saddle.d_x, None)?;
    let l_full = if mu_ada > 0.0 {
        Some(ada_smoothness(&holder, lam, r, epsilon, saddle.d_x, Some(mu_ada))?)
    } else {
        None
    };
    let smooth = holder
        .iter()
        .all(|h| h.p == 1.0)
        .then(|| holder.iter().zip(lam.iter()).map(|(h, l)| (l + r) * h.l).sum::<f64>());
    let delta = delta_used(l_general, epsilon, saddle.d_x);
    let l_h = problem.composer().smoothness_lh();

    let mut out = String::new();
    let _ = writeln!(out, "instance {id}  eps {epsilon:e}  r {r:e}  D_x {:.6}  D_lambda {:.6}", saddle.d_x, saddle.d_lambda);
    let _ = writeln!(out, "{:<4} {:<20} {:>10} {:>6} {:>10} {:>6} {:>12} {:>14}", "j", "component", "L_j", "p_j", "mu_j", "q_j", "lambda*_j", "L_delta");
    for (j, c) in problem.components().iter().enumerate() {
        let h = c.holder();
        let cv = c.convexity();
        let _ = writeln!(
            out,
            "{:<4} {:<20} {:>10.4} {:>6.2} {:>10.4} {:>6.2} {:>12.6} {:>14.6e}",
            j,
            c.name(),
            h.l,
            h.p,
            cv.mu,
            cv.q,
            lam[j],
            holder_approx_constant(h.l, h.p, delta)
        );
    }
    let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"));
    let _ = writeln!(out, "L_ADA smooth          {}", show(smooth));
    let _ = writeln!(out, "L_ADA general         {}", show(Some(l_general)));
    let _ = writeln!(out, "L_ADA fully general   {}", show(l_full));
    let _ = writeln!(out, "mu_ADA                {mu_ada:.6e}");
    let _ = writeln!(out, "L_h                   {}", show(finite(l_h)));
    let strong = mu_ada >= 4.0 * epsilon / (saddle.d_x * saddle.d_x);
    let smooth_h = l_h <= saddle.d_lambda * saddle.d_lambda / epsilon;
    let cell = match (strong, smooth_h) {
        (false, false) => "convex, nonsmooth h",
        (false, true) => "convex, smooth h",
        (true, false) => "strongly convex, nonsmooth h",
        (true, true) => "strongly convex, smooth h",
    };
    let m = saddle.grad_norm_bound_m;
    let _ = writeln!(out, "active cell           {cell}");
    let _ = writeln!(out, "predicted N (single)  {:.1}", iteration_bound(l_general, saddle.d_x, epsilon));
    let _ = writeln!(out, "predicted P (single)  {:.1}", prox_bound(l_general, saddle.d_x, saddle.d_lambda, m, epsilon));
    if strong || smooth_h {
        let q0 = initial_gap(problem, &entry.x0, &entry.lambda0, saddle)?.max(0.0);
        let kk = choose_k(q0, epsilon)?;
        let plan = restart_plan(epsilon, r, saddle.d_x, saddle.d_lambda, l_general, mu_ada.max(f64::MIN_POSITIVE), l_h, kk)?;
        let _ = writeln!(out, "predicted N (restart) {} (K = {kk})", plan.gradient_budget());
        let _ = writeln!(out, "predicted P (restart) {:.1}", prox_budget(&plan, m));
    }
    Ok(out)
}

/// Side-by-side summary of two runs.
pub fn compare(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<String> {
    let (ra, rb) = (run_experiment(a)?.summary, run_experiment(b)?.summary);
    let mut out = String::new();
    let _ = writeln!(out, "{:<20} {:>16} {:>16}", "metric", ra.name, rb.name);
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
    let opt_u = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
    let rows: [(&str, String, String); 8] = [
        ("L_ADA", format!("{:.6e}", ra.l_ada), format!("{:.6e}", rb.l_ada)),
        ("iterations", ra.iterations.to_string(), rb.iterations.to_string()),
        ("gradient evals", ra.gradient_evals.to_string(), rb.gradient_evals.to_string()),
        ("prox evals", ra.prox_evals.to_string(), rb.prox_evals.to_string()),
        ("iterations to eps", opt_u(ra.iterations_to_eps), opt_u(rb.iterations_to_eps)),
        ("objective gap", opt(ra.objective_gap), opt(rb.objective_gap)),
        ("feasibility", format!("{:.3e}", ra.feasibility), format!("{:.3e}", rb.feasibility)),
        ("certificate", ra.certificate_pass.to_string(), rb.certificate_pass.to_string()),
    ];
    for (k, x, y) in rows {
        let _ = writeln!(out, "{k:<20} {x:>16} {y:>16}");
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    /// `(check, passed, detail)`
    pub lines: Vec<(String, bool, String)>,
    pub fixture_mismatch: bool,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.lines.iter().all(|l| l.1)
    }
}

/// Recomputes every stored fixture and runs short schedule-validity checks.
pub fn validate(horizon: usize) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    for id in CATALOG_IDS {
        let bare = catalog::bare(id)?;
        let fresh = Fixture::from_result(id, &bare.reference()?);
        let stored = catalog::stored_fixture(id)?;
        let dev = stored.max_deviation(&fresh);
        let ok = dev <= 1e-9 && fresh.residual <= 1e-8;
        report.fixture_mismatch |= !ok;
        report
            .lines
            .push((format!("fixture {id}"), ok, format!("deviation {dev:.1e}, residual {:.1e}", fresh.residual)));

        let entry = catalog::instance(id)?;
        let saddle = entry.problem.known_saddle().expect("stored saddle").clone();
        let mut cfg = ExperimentConfig::new(id, SolverKind::Ufcm, 1e-2);
        if id == "max_smooth_lipschitz" {
            cfg.r = RPolicy::EpsThreeQuarters { scale: 1.0 };
        }
        let k = resolve_constants(&cfg, &entry.problem, &saddle)?;
        let solver = SolverConfig {
            epsilon: cfg.epsilon,
            r: k.r,
            c: k.c,
            delta: k.delta,
            l_ada: Some(k.ada.l_ada),
            horizon,
            trace_every: horizon,
            nu_norm: NuNorm::Frobenius,
            record_schedule: true,
            d_x: Some(saddle.d_x),
        };
        let out = crate::ufcm::ufcm(&entry.problem, &entry.x0, &entry.lambda0, &solver)?;
        let sched = &out.schedule;
        let cond = check_conditions(sched.outer.as_ref().expect("recorded"), &sched.inner, &sched.nu_norms)?;
        report.lines.push((
            format!("schedule {id}"),
            cond.pass(),
            format!("{} violations over T = {horizon}", cond.violations.len()),
        ));
    }
    Ok(report)
}

/// Convenience for examples: the stored start point and saddle of a catalog id.
pub fn start_and_saddle(id: &str) -> Result<(Vector, Vector, SaddleData)> {
    let e = catalog::instance(id)?;
    let s = e.problem.known_saddle().cloned().expect("catalog saddle");
    Ok((e.x0, e.lambda0, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip_and_defaults() {
        let text = r#"
instance = "affine_qp"
epsilon = 0.01
r = { kind = "sqrt-eps", scale = 2.0 }
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.solver, SolverKind::Ufcm);
        assert_eq!(cfg.steps, StepPolicy::Standard);
        assert_eq!(cfg.r.resolve(0.01, 5.0), 0.2);
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_rejects_unknowns() {
        assert!(ExperimentConfig::from_toml("instance = \"nope\"\nepsilon = 0.1").is_err());
        assert!(ExperimentConfig::from_toml("instance = \"qcqp\"\nepsilon = -1").is_err());
        assert!(ExperimentConfig::from_toml("instance = \"qcqp\"\nepsilon = 0.1\nbogus = 1").is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3].iter().map(|&e: &f64| (e, 3.0 * e.powf(-0.5))).collect();
        assert!((loglog_slope(&pts).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }
}
