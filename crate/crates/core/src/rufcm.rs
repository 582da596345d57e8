//! Restarted executions with shrinking distance bounds, and the geometric
//! doubling ladder for an unknown `L_ADA`.

use std::ops::ControlFlow;

use crate::error::{check_positive, Error, Result};
use crate::model::{domain_violation, lagrangian_value, objective_value, AnchoredConjugate, ProblemInstance, SaddleData};
use crate::trace::Trace;
use crate::ufcm::{ufcm, ufcm_observed, SolverConfig, UfcmOutput};
use crate::Vector;

/// One execution of the restart schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartStage {
    /// Outer budget, applied as `ceil(t_budget)`.
    pub t_budget: f64,
    pub dx: f64,
    pub dlam: f64,
    /// Whether the output multipliers seed the next stage.
    pub restart_dual: bool,
    pub c: f64,
    pub delta: f64,
}

impl RestartStage {
    pub fn horizon(&self) -> usize {
        (self.t_budget.ceil() as usize).max(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartPlan {
    pub epsilon: f64,
    pub r: f64,
    pub l_ada: f64,
    pub mu_ada: f64,
    pub l_h: f64,
    pub d_x: f64,
    pub d_lambda: f64,
    /// `mu_ADA >= 4 eps / D_x^2`: outputs seed the next stage and `D_x` shrinks.
    pub restart_primal: bool,
    pub stages: Vec<RestartStage>,
}

impl RestartPlan {
    pub fn k(&self) -> usize {
        self.stages.len()
    }

    /// `sum_k ceil(T_k)`.
    pub fn gradient_budget(&self) -> usize {
        self.stages.iter().map(RestartStage::horizon).sum()
    }
}

/// Builds the `K`-stage schedule. `l_h` may be `+inf`.
#[allow(clippy::too_many_arguments)]
pub fn restart_plan(
    epsilon: f64,
    r: f64,
    d_x: f64,
    d_lambda: f64,
    l_ada: f64,
    mu_ada: f64,
    l_h: f64,
    k: usize,
) -> Result<RestartPlan> {
    check_positive("epsilon", epsilon)?;
    check_positive("r", r)?;
    check_positive("D_x", d_x)?;
    check_positive("D_lambda", d_lambda)?;
    check_positive("L_ada", l_ada)?;
    check_positive("mu_ada", mu_ada)?;
    if l_h.is_nan() || l_h <= 0.0 {
        return Err(Error::InvalidParameter(format!("L_h must be positive, got {l_h}")));
    }
    if k < 1 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let pow = |e: i64| 2f64.powi(e as i32);
    let kk = k as i64;
    let restart_primal = mu_ada >= 4.0 * epsilon / (d_x * d_x);
    let mut stages = Vec::with_capacity(k);
    let mut dx = if restart_primal {
        (pow(kk + 1) * epsilon / mu_ada).sqrt()
    } else {
        d_x
    };
    let mut dlam = d_lambda.min((pow(kk + 1) * epsilon * l_h).sqrt());
    for stage in 0..kk {
        let t_budget = if restart_primal {
            (96.0 * l_ada / mu_ada).sqrt()
        } else {
            (24.0 * l_ada * d_x * d_x / (pow(kk - stage - 1) * epsilon)).sqrt()
        };
        let dual_bound = (pow(kk - stage) * epsilon * l_h).sqrt();
        let restart_dual = dual_bound <= d_lambda;
        let c = dlam / dx;
        stages.push(RestartStage {
            t_budget,
            dx,
            dlam,
            restart_dual,
            c,
            delta: c / (2.0 * l_ada),
        });
        if restart_primal {
            dx = (pow(kk - stage) * epsilon / mu_ada).sqrt();
        }
        dlam = if restart_dual { dual_bound } else { d_lambda };
    }
    Ok(RestartPlan {
        epsilon,
        r,
        l_ada,
        mu_ada,
        l_h,
        d_x,
        d_lambda,
        restart_primal,
        stages,
    })
}

/// `max(1, ceil(log2((Q0 + eps) / eps)))`.
pub fn choose_k(q0: f64, epsilon: f64) -> Result<usize> {
    check_positive("epsilon", epsilon)?;
    if q0.is_nan() || q0 < 0.0 {
        return Err(Error::InvalidParameter(format!("Q0 must be nonnegative, got {q0}")));
    }
    let k = ((q0 + epsilon) / epsilon).log2().ceil();
    Ok(if k.is_finite() && k >= 1.0 { k as usize } else { 1 })
}

/// `Q((x0; lambda0, grad g(x0)), (x*; lambda*, grad g(x0)))`.
pub fn initial_gap(problem: &ProblemInstance, x0: &Vector, lambda0: &Vector, saddle: &SaddleData) -> Result<f64> {
    let nu0 = AnchoredConjugate::at(problem, x0)?;
    let a = lagrangian_value(problem, x0, &saddle.lambda_star, &nu0)?;
    let b = lagrangian_value(problem, &saddle.x_star, lambda0, &nu0)?;
    Ok(a - b)
}

/// `Q((xbar; lambdabar, nubar), (x*; lambda*, grad g(xbar)))` at the end of a stage.
pub fn boundary_gap(problem: &ProblemInstance, stage: &StageReport, saddle: &SaddleData) -> Result<f64> {
    let nu_hat = AnchoredConjugate::at(problem, &stage.x_bar)?;
    let a = lagrangian_value(problem, &stage.x_bar, &saddle.lambda_star, &nu_hat)?;
    let b = lagrangian_value(problem, &saddle.x_star, &stage.lambda_bar, &stage.nu_bar)?;
    Ok(a - b)
}

/// Per-stage prox budget `ceil(T_k) + ceil(T_k)^2 Delta_k M`, summed.
pub fn prox_budget(plan: &RestartPlan, m_bound: f64) -> f64 {
    plan.stages
        .iter()
        .map(|s| {
            let t = s.horizon() as f64;
            t + t * t * s.delta * m_bound
        })
        .sum()
}

/// Output of one stage, kept for boundary measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct StageReport {
    pub x_start: Vector,
    pub lambda_start: Vector,
    pub x_bar: Vector,
    pub lambda_bar: Vector,
    pub nu_bar: AnchoredConjugate,
    pub gradient_evals: usize,
    pub prox_evals: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RufcmOutput {
    pub x_bar: Vector,
    pub lambda_bar: Vector,
    pub nu_bar: AnchoredConjugate,
    /// Per-stage traces tagged with the stage index in the `run` column.
    pub trace: Trace,
    pub gradient_evals: usize,
    pub prox_evals: usize,
    pub stages: Vec<StageReport>,
}

/// Runs the stages of `plan`. `base` supplies tracing and norm options; its
/// stepsize fields are replaced per stage.
pub fn rufcm(
    problem: &ProblemInstance,
    x0: &Vector,
    lambda0: &Vector,
    plan: &RestartPlan,
    base: &SolverConfig,
) -> Result<RufcmOutput> {
    if plan.stages.is_empty() {
        return Err(Error::InvalidParameter("plan has no stages".into()));
    }
    let mut x = x0.clone();
    let mut lambda = lambda0.clone();
    let mut trace = Trace::default();
    let mut reports = Vec::with_capacity(plan.k());
    let (mut grads, mut proxes) = (0, 0);
    let mut last: Option<UfcmOutput> = None;
    for (k, stage) in plan.stages.iter().enumerate() {
        let config = SolverConfig {
            epsilon: plan.epsilon,
            r: plan.r,
            c: stage.c,
            delta: stage.delta,
            l_ada: Some(plan.l_ada),
            horizon: stage.horizon(),
            d_x: Some(stage.dx),
            ..base.clone()
        };
        let out = ufcm(problem, &x, &lambda, &config)?;
        trace.append_run(&out.trace, k, grads, proxes);
        grads += out.gradient_evals;
        proxes += out.prox_evals;
        reports.push(StageReport {
            x_start: x.clone(),
            lambda_start: lambda.clone(),
            x_bar: out.x_bar.clone(),
            lambda_bar: out.lambda_bar.clone(),
            nu_bar: out.nu_bar.clone(),
            gradient_evals: out.gradient_evals,
            prox_evals: out.prox_evals,
        });
        x = if plan.restart_primal { out.x_bar.clone() } else { x0.clone() };
        lambda = if stage.restart_dual {
            out.lambda_bar.clone()
        } else {
            lambda0.clone()
        };
        last = Some(out);
    }
    let last = last.expect("at least one stage");
    Ok(RufcmOutput {
        x_bar: last.x_bar,
        lambda_bar: last.lambda_bar,
        nu_bar: last.nu_bar,
        trace,
        gradient_evals: grads,
        prox_evals: proxes,
        stages: reports,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderConfig {
    pub epsilon: f64,
    pub d_x: f64,
    pub d_lambda: f64,
    pub r: f64,
    pub max_rungs: usize,
    pub trace_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RungReport {
    pub rung: usize,
    pub l_trial: f64,
    pub budget: usize,
    pub objective: f64,
    pub feasibility: f64,
    /// Gradient and prox calls through the last completed iteration.
    pub gradient_evals: usize,
    pub prox_evals: usize,
    /// The run hit the divergence guard or the inner-step cap.
    pub aborted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadderOutput {
    pub best_rung: usize,
    pub x_bar: Vector,
    pub lambda_bar: Vector,
    pub trace: Trace,
    pub gradient_evals: usize,
    pub prox_evals: usize,
    pub rungs: Vec<RungReport>,
}

/// `N_j = ceil(sqrt(24 * 2^j * D_x^2 / eps))`.
pub fn rung_budget(rung: usize, d_x: f64, epsilon: f64) -> usize {
    let l = 2f64.powi(rung as i32);
    ((24.0 * l * d_x * d_x / epsilon).sqrt().ceil() as usize).max(1)
}

/// Tries `L_j = 2^j` for `j = 0..max_rungs` and keeps the best output.
/// Rungs that abort on divergence are recorded but never selected.
pub fn doubling_ladder(
    problem: &ProblemInstance,
    x0: &Vector,
    lambda0: &Vector,
    config: &LadderConfig,
) -> Result<LadderOutput> {
    doubling_ladder_until(problem, x0, lambda0, config, |_, _| ControlFlow::Continue(()))
}

/// As [`doubling_ladder`], stopping after the first rung for which `stop`
/// returns `Break` (used with an external certificate such as an oracle optimum).
pub fn doubling_ladder_until(
    problem: &ProblemInstance,
    x0: &Vector,
    lambda0: &Vector,
    config: &LadderConfig,
    mut stop: impl FnMut(&RungReport, Option<&UfcmOutput>) -> ControlFlow<()>,
) -> Result<LadderOutput> {
    if config.max_rungs < 1 {
        return Err(Error::InvalidParameter("max_rungs must be at least 1".into()));
    }
    check_positive("D_x", config.d_x)?;
    check_positive("D_lambda", config.d_lambda)?;
    let c = config.d_lambda / config.d_x;
    let mut trace = Trace::default();
    let mut rungs = Vec::new();
    let mut best: Option<(usize, UfcmOutput)> = None;
    let mut last_abort = None;
    let (mut grads, mut proxes) = (0, 0);
    for j in 0..config.max_rungs {
        let l_trial = 2f64.powi(j as i32);
        let budget = rung_budget(j, config.d_x, config.epsilon);
        let solver = SolverConfig {
            epsilon: config.epsilon,
            r: config.r,
            c,
            delta: c / (2.0 * l_trial),
            l_ada: Some(l_trial),
            horizon: budget,
            trace_every: config.trace_every,
            nu_norm: Default::default(),
            record_schedule: false,
            d_x: Some(config.d_x),
        };
        let mut counts = (0, 0);
        let run = ufcm_observed(problem, x0, lambda0, &solver, |v| {
            counts = (v.gradient_evals, v.prox_evals);
            ControlFlow::Continue(())
        });
        let out = match run {
            Ok(out) => Some(out),
            Err(e @ (Error::Diverged { .. } | Error::InnerBudget { .. })) => {
                last_abort = Some(e);
                None
            }
            Err(e) => return Err(e),
        };
        let report = match &out {
            Some(out) => {
                trace.append_run(&out.trace, j, grads, proxes);
                RungReport {
                    rung: j,
                    l_trial,
                    budget,
                    objective: objective_value(problem, &out.x_bar)?,
                    feasibility: domain_violation(problem.composer().handle(), &problem.values(&out.x_bar)?),
                    gradient_evals: out.gradient_evals,
                    prox_evals: out.prox_evals,
                    aborted: false,
                }
            }
            None => RungReport {
                rung: j,
                l_trial,
                budget,
                objective: f64::INFINITY,
                feasibility: f64::INFINITY,
                gradient_evals: counts.0,
                prox_evals: counts.1,
                aborted: true,
            },
        };
        grads += report.gradient_evals;
        proxes += report.prox_evals;
        let flow = stop(&report, out.as_ref());
        rungs.push(report);
        if let Some(out) = out {
            let better = match &best {
                None => true,
                Some((b, _)) => prefer(&rungs[j], &rungs[*b], &rungs),
            };
            if better {
                best = Some((j, out));
            }
        }
        if flow.is_break() {
            break;
        }
    }
    let Some((best_rung, out)) = best else {
        return Err(last_abort.expect("every rung aborted"));
    };
    Ok(LadderOutput {
        best_rung,
        x_bar: out.x_bar,
        lambda_bar: out.lambda_bar,
        trace,
        gradient_evals: grads,
        prox_evals: proxes,
        rungs,
    })
}

/// Objective order when every candidate is finite, else feasibility then objective.
fn prefer(a: &RungReport, b: &RungReport, all: &[RungReport]) -> bool {
    if all.iter().filter(|r| !r.aborted).all(|r| r.objective.is_finite()) {
        a.objective < b.objective
    } else {
        (a.feasibility, a.objective) < (b.feasibility, b.objective)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn strongly_convex_case_has_constant_budget() {
        let plan = restart_plan(0.01, 0.1, 1.0, 1.0, 24.0, 1.0, f64::INFINITY, 3).unwrap();
        assert!(plan.restart_primal);
        for s in &plan.stages {
            assert_relative_eq!(s.t_budget, 48.0, max_relative = 1e-14);
            assert!(!s.restart_dual);
            assert_eq!(s.dlam, 1.0);
        }
        assert_relative_eq!(plan.stages[0].dx, 0.4, max_relative = 1e-14);
        assert_relative_eq!(plan.stages[1].dx, (8.0f64 * 0.01).sqrt(), max_relative = 1e-14);
        assert_eq!(plan.gradient_budget(), 144);
    }

    #[test]
    fn convex_case_doubles_accuracy() {
        let plan = restart_plan(0.01, 0.1, 1.0, 1.0, 1.0, 1e-6, f64::INFINITY, 2).unwrap();
        assert!(!plan.restart_primal);
        assert_relative_eq!(plan.stages[0].t_budget, 1200f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(plan.stages[1].t_budget, 2400f64.sqrt(), max_relative = 1e-14);
        let plan = restart_plan(0.01, 0.1, 1.0, 1.0, 24.0, 1e-6, f64::INFINITY, 2).unwrap();
        assert_relative_eq!(plan.stages[0].t_budget, 28800f64.sqrt(), max_relative = 1e-14);
        assert_eq!(plan.stages[1].dx, 1.0);
    }

    #[test]
    fn smooth_composer_shrinks_dual_bound() {
        // sqrt(2^(K-k) eps L_h) with K = 3, eps = 0.01, L_h = 2: 0.4, 0.28, 0.2
        let plan = restart_plan(0.01, 0.1, 1.0, 0.3, 1.0, 1.0, 2.0, 3).unwrap();
        let flags: Vec<bool> = plan.stages.iter().map(|s| s.restart_dual).collect();
        assert_eq!(flags, vec![false, true, true]);
        assert_relative_eq!(plan.stages[0].dlam, 0.3);
        assert_eq!(plan.stages[1].dlam, 0.3);
        assert_relative_eq!(plan.stages[2].dlam, (4.0f64 * 0.01 * 2.0).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn k_must_be_positive() {
        assert!(restart_plan(0.01, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn choose_k_examples() {
        assert_eq!(choose_k(15.0, 1.0).unwrap(), 4);
        assert_eq!(choose_k(7.0, 1.0).unwrap(), 3);
        assert_eq!(choose_k(0.0, 1.0).unwrap(), 1);
        assert!(choose_k(-1.0, 1.0).is_err());
    }

    #[test]
    fn rung_budgets() {
        assert_eq!(rung_budget(0, 1.0, 24.0), 1);
        assert_eq!(rung_budget(2, 1.0, 0.24), 20);
    }
}
