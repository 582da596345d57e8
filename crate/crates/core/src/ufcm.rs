//! The sliding solver: momentum outer loop with one gradient per iteration and
//! an inner loop of alternating prox steps on `u` and `h*`.

use std::ops::ControlFlow;

use crate::constants::AdaConstants;
use crate::error::{check_dim, check_positive, Error, Result};
use crate::model::{
    domain_violation, lagrangian_value, relaxed_objective, AnchoredConjugate, ProblemInstance, SaddleData,
};
use crate::schedule::{build_schedule, inner_step, InnerSchedule, OuterSchedule};
use crate::trace::{Trace, TraceRow};
use crate::{Matrix, Vector};

/// Norm used for `M_t = |nu^t|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NuNorm {
    #[default]
    Frobenius,
    /// Power-iteration estimate of the operator norm (20 iterations).
    Spectral,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub r: f64,
    pub c: f64,
    pub delta: f64,
    /// Computed from the known saddle when absent.
    pub l_ada: Option<f64>,
    pub horizon: usize,
    /// Record a trace row every this many iterations (the last one is always recorded).
    pub trace_every: usize,
    pub nu_norm: NuNorm,
    /// Keep the realized schedules for condition checking.
    pub record_schedule: bool,
    /// Scale of the divergence guard `1e12 (1 + D_x)`; defaults to the saddle's `D_x`.
    pub d_x: Option<f64>,
}

impl SolverConfig {
    /// `r = D_lambda sqrt(eps)`, `C = D_lambda / D_x`, `Delta = C / (2 L)`, `T = ceil(sqrt(24 L D_x^2 / eps))`.
    pub fn standard(l_ada: f64, d_x: f64, d_lambda: f64, epsilon: f64) -> Result<Self> {
        check_positive("L_ada", l_ada)?;
        check_positive("D_x", d_x)?;
        check_positive("D_lambda", d_lambda)?;
        check_positive("epsilon", epsilon)?;
        let c = d_lambda / d_x;
        Ok(Self {
            epsilon,
            r: d_lambda * epsilon.sqrt(),
            c,
            delta: c / (2.0 * l_ada),
            l_ada: Some(l_ada),
            horizon: iteration_bound(l_ada, d_x, epsilon).ceil() as usize,
            trace_every: 1,
            nu_norm: NuNorm::Frobenius,
            record_schedule: true,
            d_x: Some(d_x),
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("epsilon", self.epsilon)?;
        check_positive("r", self.r)?;
        check_positive("C", self.c)?;
        check_positive("Delta", self.delta)?;
        if let Some(l) = self.l_ada {
            check_positive("L_ada", l)?;
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        if self.trace_every == 0 {
            return Err(Error::InvalidParameter("trace_every must be at least 1".into()));
        }
        Ok(())
    }

    /// `L_ADA` from the override or from the known saddle (Hölder form).
    pub fn resolve_l_ada(&self, problem: &ProblemInstance) -> Result<f64> {
        if let Some(l) = self.l_ada {
            return Ok(l);
        }
        let saddle = problem
            .known_saddle()
            .ok_or_else(|| Error::Config("L_ada not given and the instance has no known saddle".into()))?;
        let c = AdaConstants::compute(
            &problem.holder_profiles(),
            &problem.convexity_profiles(),
            &saddle.lambda_star,
            self.r,
            self.epsilon,
            saddle.d_x,
            false,
        )?;
        Ok(c.l_ada)
    }
}

/// Per-iteration cap on inner steps; beyond it the run is treated as diverged.
pub const MAX_INNER_STEPS: usize = 10_000_000;

/// `N = sqrt(24 L D_x^2 / eps)`.
pub fn iteration_bound(l_ada: f64, d_x: f64, epsilon: f64) -> f64 {
    (24.0 * l_ada * d_x * d_x / epsilon).sqrt()
}

/// `P = N + 48 M D_x D_lambda / eps + 1`.
pub fn prox_bound(l_ada: f64, d_x: f64, d_lambda: f64, m_bound: f64, epsilon: f64) -> f64 {
    iteration_bound(l_ada, d_x, epsilon) + 48.0 * m_bound * d_x * d_lambda / epsilon + 1.0
}

/// Right-hand side bounding `sum_t omega_t Q(z^t, z)` for smooth components:
/// `(C/Delta + 2L)/2 |x0 - x|^2 + 1/(2 C Delta) |lambda0 - lambda|^2`.
pub fn weighted_gap_bound(l_ada: f64, c: f64, delta: f64, dist_x0: f64, dist_lambda0: f64) -> f64 {
    0.5 * (c / delta + 2.0 * l_ada) * dist_x0 * dist_x0 + dist_lambda0 * dist_lambda0 / (2.0 * c * delta)
}

/// Carried inner-loop state `(y_0, lambda_0, lambda_{-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct WarmStart {
    pub y0: Vector,
    pub lambda0: Vector,
    pub lambda_prev: Vector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerResult {
    pub x_t: Vector,
    pub lambda_tilde: Vector,
    pub warm: WarmStart,
    pub prox_count: usize,
}

/// Stepsizes of one inner loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerStepsizes {
    pub s: usize,
    pub eta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
}

/// Runs `S_t` alternating prox steps and returns the uniform averages.
pub fn inner_sliding(
    problem: &ProblemInstance,
    x_prev: &Vector,
    x_under: &Vector,
    nu_t: &AnchoredConjugate,
    nu_prev: &AnchoredConjugate,
    warm: &WarmStart,
    steps: InnerStepsizes,
) -> Result<InnerResult> {
    let InnerStepsizes { s, eta, beta, gamma, rho } = steps;
    if s == 0 {
        return Err(Error::InvalidParameter("S_t must be at least 1".into()));
    }
    check_positive("eta", eta)?;
    check_positive("beta", beta)?;
    check_positive("gamma", gamma)?;
    let g_under = nu_t
        .anchor_values()
        .ok_or_else(|| Error::InvalidParameter("nu^t must be anchored".into()))?;
    let rows = nu_t.rows();
    let u = problem.regularizer();
    let h = problem.composer();

    let mut y = warm.y0.clone();
    let mut lam = warm.lambda0.clone();
    let mut lam_prev = warm.lambda_prev.clone();
    let mut y_sum = Vector::zeros(y.len());
    let mut lam_sum = Vector::zeros(lam.len());
    let weight = eta + beta;
    for step in 1..=s {
        let htil = if step == 1 {
            rows.tr_mul(&lam) + nu_prev.rows().tr_mul(&(&lam - &lam_prev)) * rho
        } else {
            rows.tr_mul(&lam) + rows.tr_mul(&(&lam - &lam_prev))
        };
        let center = (x_prev * eta + &y * beta - htil) / weight;
        let y_next = u.prox(&center, weight)?;
        let mut arg = rows * (&y_next - x_under);
        arg += g_under;
        arg /= gamma;
        arg += &lam;
        let lam_next = h.conjugate_prox(&arg, gamma)?;
        y_sum += &y_next;
        lam_sum += &lam_next;
        y = y_next;
        lam_prev = std::mem::replace(&mut lam, lam_next);
    }
    let sf = s as f64;
    Ok(InnerResult {
        x_t: y_sum / sf,
        lambda_tilde: lam_sum / sf,
        warm: WarmStart {
            y0: y,
            lambda0: lam,
            lambda_prev: lam_prev,
        },
        prox_count: s,
    })
}

/// Schedules realized by one run; `nu_norms[t]` for `t = 0..=T`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RealizedSchedule {
    pub outer: Option<OuterSchedule>,
    pub inner: InnerSchedule,
    pub nu_norms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UfcmOutput {
    pub x_bar: Vector,
    pub lambda_bar: Vector,
    pub nu_bar: AnchoredConjugate,
    pub trace: Trace,
    pub gradient_evals: usize,
    pub prox_evals: usize,
    /// Outer iterations actually executed (less than `T` only when an observer stopped the run).
    pub iterations: usize,
    pub schedule: RealizedSchedule,
}

/// Read-only view handed to observers after each outer iteration.
pub struct IterateView<'a> {
    pub t: usize,
    pub x_t: &'a Vector,
    pub lambda_tilde: &'a Vector,
    pub x_bar: &'a Vector,
    pub lambda_bar: &'a Vector,
    pub gradient_evals: usize,
    pub prox_evals: usize,
    pub weighted_gap: Option<f64>,
    /// Right-hand side the weighted gap is compared against.
    pub gap_bound: Option<f64>,
}

/// Runs `config.horizon` outer iterations from `(x0, lambda0)`.
pub fn ufcm(problem: &ProblemInstance, x0: &Vector, lambda0: &Vector, config: &SolverConfig) -> Result<UfcmOutput> {
    ufcm_observed(problem, x0, lambda0, config, |_| ControlFlow::Continue(()))
}

/// As [`ufcm`], calling `observer` after every outer iteration. Returning
/// `Break` ends the run early; the prefix of a run equals a shorter run
/// because no schedule entry depends on `T`.
pub fn ufcm_observed(
    problem: &ProblemInstance,
    x0: &Vector,
    lambda0: &Vector,
    config: &SolverConfig,
    observer: impl FnMut(&IterateView<'_>) -> ControlFlow<()>,
) -> Result<UfcmOutput> {
    config.validate()?;
    let l_ada = config.resolve_l_ada(problem)?;
    let outer = build_schedule(l_ada, config.c, config.delta, config.horizon)?;
    ufcm_with_schedule(problem, x0, lambda0, config, outer, observer)
}

/// Runs with a caller-supplied outer schedule (its length sets the horizon).
pub fn ufcm_with_schedule(
    problem: &ProblemInstance,
    x0: &Vector,
    lambda0: &Vector,
    config: &SolverConfig,
    outer: OuterSchedule,
    mut observer: impl FnMut(&IterateView<'_>) -> ControlFlow<()>,
) -> Result<UfcmOutput> {
    config.validate()?;
    let (m, n) = (problem.m(), problem.n());
    check_dim("x0", n, x0.len())?;
    check_dim("lambda0", m, lambda0.len())?;
    if problem.composer().conjugate(lambda0)? == f64::INFINITY {
        return Err(Error::InvalidParameter("lambda0 must lie in dom h*".into()));
    }
    if problem.regularizer().value(x0) == f64::INFINITY {
        return Err(Error::InvalidParameter("x0 must lie in X".into()));
    }
    let horizon = outer.len();
    let (c, delta) = (outer.c, outer.delta);
    let saddle = problem.known_saddle();
    let d_x = config.d_x.or(saddle.map(|s| s.d_x)).unwrap_or(1.0);
    let guard = 1e12 * (1.0 + d_x);

    let reference = match saddle {
        Some(s) => Some(Reference::new(problem, s, x0, lambda0, &outer)?),
        None => None,
    };

    let nu0 = AnchoredConjugate::at(problem, x0)?;
    let mut gradient_evals = 1;
    let mut prox_evals = 0;
    let mut schedule = RealizedSchedule {
        outer: None,
        inner: InnerSchedule::default(),
        nu_norms: Vec::new(),
    };
    let mut prev_mtil: Option<f64> = None;
    if config.record_schedule {
        schedule.nu_norms.push(nu_norm(&nu0, config.nu_norm));
    }

    let mut x_prev2 = x0.clone();
    let mut x_prev = x0.clone();
    let mut x_under = x0.clone();
    let mut warm = WarmStart {
        y0: x0.clone(),
        lambda0: lambda0.clone(),
        lambda_prev: lambda0.clone(),
    };
    let mut nu_prev = nu0.clone();

    let mut weight_sum = 0.0;
    let mut x_acc = Vector::zeros(n);
    let mut lam_acc = Vector::zeros(m);
    let mut nu_acc = Matrix::zeros(m, n);
    let mut conj_acc = Vector::zeros(m);
    let mut lam_weight = Vector::zeros(m);
    let mut weighted_gap = 0.0;
    let mut trace = Trace::default();
    let mut iterations = 0;

    for t in 1..=horizon {
        let (omega, tau, eta, theta) = outer.at(t);
        let x_tilde = &x_prev + (&x_prev - &x_prev2) * theta;
        x_under = (x_under * tau + x_tilde) / (1.0 + tau);
        let under_norm = x_under.norm();
        if !(under_norm <= guard) {
            return Err(Error::Diverged { t, norm: under_norm, guard });
        }
        // tau_1 = theta_1 = 0 puts the first anchor at x0, where nu^0 is already known
        let nu_t = if t == 1 && x_under == *x0 {
            nu0.clone()
        } else {
            gradient_evals += 1;
            AnchoredConjugate::at(problem, &x_under)?
        };
        let m_t = nu_norm(&nu_t, config.nu_norm);
        let step = inner_step(m_t, t, c, delta, prev_mtil);
        if step.s > MAX_INNER_STEPS {
            return Err(Error::InnerBudget { t, steps: step.s, cap: MAX_INNER_STEPS });
        }
        prev_mtil = Some(step.mtil);
        let res = inner_sliding(
            problem,
            &x_prev,
            &x_under,
            &nu_t,
            &nu_prev,
            &warm,
            InnerStepsizes {
                s: step.s,
                eta,
                beta: step.beta,
                gamma: step.gamma,
                rho: step.rho,
            },
        )?;
        prox_evals += res.prox_count;
        if config.record_schedule {
            schedule.inner.push(m_t, step, omega);
            schedule.nu_norms.push(m_t);
        }
        let x_norm = res.x_t.norm();
        if !(x_norm <= guard) {
            return Err(Error::Diverged { t, norm: x_norm, guard });
        }

        weight_sum += omega;
        x_acc.axpy(omega, &res.x_t, 1.0);
        lam_acc.axpy(omega, &res.lambda_tilde, 1.0);
        let conj_t = nu_t.conjugates();
        for j in 0..m {
            let w = omega * res.lambda_tilde[j];
            if w != 0.0 {
                lam_weight[j] += w;
                conj_acc[j] += w * conj_t[j];
                let mut row = nu_acc.row_mut(j);
                row += nu_t.rows().row(j) * w;
            }
        }
        if let Some(rf) = &reference {
            weighted_gap += omega * rf.gap(problem, &res.x_t, &res.lambda_tilde, &nu_t)?;
        }
        iterations = t;

        let x_bar = &x_acc / weight_sum;
        let lambda_bar = &lam_acc / weight_sum;
        if t % config.trace_every == 0 || t == horizon {
            trace.push(trace_row(
                problem,
                t,
                gradient_evals,
                prox_evals,
                &x_bar,
                &lambda_bar,
                reference.as_ref().map(|r| (r, weighted_gap)),
            )?);
        }
        let flow = observer(&IterateView {
            t,
            x_t: &res.x_t,
            lambda_tilde: &res.lambda_tilde,
            x_bar: &x_bar,
            lambda_bar: &lambda_bar,
            gradient_evals,
            prox_evals,
            weighted_gap: reference.as_ref().map(|_| weighted_gap),
            gap_bound: reference.as_ref().map(|r| r.bound),
        });

        x_prev2 = std::mem::replace(&mut x_prev, res.x_t);
        warm = res.warm;
        nu_prev = nu_t;
        if flow.is_break() {
            if t % config.trace_every != 0 && t != horizon {
                trace.push(trace_row(
                    problem,
                    t,
                    gradient_evals,
                    prox_evals,
                    &x_bar,
                    &lambda_bar,
                    reference.as_ref().map(|r| (r, weighted_gap)),
                )?);
            }
            break;
        }
    }

    let mut rows = Matrix::zeros(m, n);
    let mut conj = Vector::zeros(m);
    for j in 0..m {
        if lam_weight[j] > 0.0 {
            rows.row_mut(j).copy_from(&(nu_acc.row(j) / lam_weight[j]));
            conj[j] = conj_acc[j] / lam_weight[j];
        } else {
            rows.row_mut(j).copy_from(&nu0.rows().row(j));
            conj[j] = nu0.conjugates()[j];
        }
    }
    if config.record_schedule {
        let mut realized = outer;
        realized.omega.truncate(iterations);
        realized.tau.truncate(iterations);
        realized.eta.truncate(iterations);
        realized.theta.truncate(iterations);
        schedule.outer = Some(realized);
    }
    Ok(UfcmOutput {
        x_bar: x_acc / weight_sum,
        lambda_bar: lam_acc / weight_sum,
        nu_bar: AnchoredConjugate::from_averages(rows, conj)?,
        trace,
        gradient_evals,
        prox_evals,
        iterations,
        schedule,
    })
}

fn nu_norm(nu: &AnchoredConjugate, kind: NuNorm) -> f64 {
    match kind {
        NuNorm::Frobenius => nu.norm(),
        NuNorm::Spectral => spectral_estimate(nu.rows()),
    }
}

fn spectral_estimate(a: &Matrix) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let mut v = Vector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..20 {
        let w = a.tr_mul(&(a * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        est = norm.sqrt();
        v = w / norm;
    }
    est
}

/// Saddle-side quantities shared by the trace and the observers.
struct Reference {
    x_star: Vector,
    lambda_star: Vector,
    nu_star: AnchoredConjugate,
    bound: f64,
}

impl Reference {
    fn new(
        problem: &ProblemInstance,
        s: &SaddleData,
        x0: &Vector,
        lambda0: &Vector,
        outer: &OuterSchedule,
    ) -> Result<Self> {
        let bound = weighted_gap_bound(
            outer.l_ada,
            outer.c,
            outer.delta,
            (x0 - &s.x_star).norm(),
            (lambda0 - &s.lambda_star).norm(),
        );
        Ok(Self {
            x_star: s.x_star.clone(),
            lambda_star: s.lambda_star.clone(),
            nu_star: AnchoredConjugate::at(problem, &s.x_star)?,
            bound,
        })
    }

    /// `Q(z^t, z*)` with `z^t = (x^t; lambdatilde^t, nu^t)`.
    fn gap(&self, problem: &ProblemInstance, x: &Vector, lambda: &Vector, nu: &AnchoredConjugate) -> Result<f64> {
        let a = lagrangian_value(problem, x, &self.lambda_star, &self.nu_star)?;
        let b = lagrangian_value(problem, &self.x_star, lambda, nu)?;
        Ok(a - b)
    }
}

fn trace_row(
    problem: &ProblemInstance,
    t: usize,
    grad_evals: usize,
    prox_evals: usize,
    x_bar: &Vector,
    lambda_bar: &Vector,
    reference: Option<(&Reference, f64)>,
) -> Result<TraceRow> {
    let g = problem.values(x_bar)?;
    Ok(TraceRow {
        run: 0,
        t,
        grad_evals,
        prox_evals,
        objective: relaxed_objective(problem, x_bar)?,
        feasibility: domain_violation(problem.composer().handle(), &g),
        dist_x: reference.map(|(r, _)| (x_bar - &r.x_star).norm()),
        dist_lambda: reference.map(|(r, _)| (lambda_bar - &r.lambda_star).norm()),
        gap_bound: reference.map(|(r, _)| r.bound),
        weighted_gap: reference.map(|(_, w)| w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Component;
    use crate::prox::ProxHandle;
    use crate::schedule::check_conditions;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn square() -> ProblemInstance {
        let g = Component::quadratic("x^2", Matrix::from_element(1, 1, 2.0), v(&[0.0]), 0.0).unwrap();
        ProblemInstance::builder(1).component(g).build().unwrap()
    }

    fn config(l: f64, horizon: usize) -> SolverConfig {
        SolverConfig {
            epsilon: 1e-3,
            r: 1e-6,
            c: 1.0,
            delta: 0.1,
            l_ada: Some(l),
            horizon,
            trace_every: 1,
            nu_norm: NuNorm::Frobenius,
            record_schedule: true,
            d_x: Some(1.0),
        }
    }

    #[test]
    fn counters_are_exact() {
        let p = square();
        let out = ufcm(&p, &v(&[1.0]), &v(&[1.0]), &config(2.0, 25)).unwrap();
        assert_eq!(out.gradient_evals, 25);
        assert_eq!(out.prox_evals, out.schedule.inner.s.iter().sum::<usize>());
        let o = out.schedule.outer.as_ref().unwrap();
        assert!(check_conditions(o, &out.schedule.inner, &out.schedule.nu_norms).unwrap().pass());
    }

    #[test]
    fn unconstrained_y_step_is_weighted_center() {
        let p = square();
        let x_prev = v(&[0.7]);
        let x_under = v(&[0.4]);
        let nu = AnchoredConjugate::at(&p, &x_under).unwrap();
        let warm = WarmStart {
            y0: v(&[0.9]),
            lambda0: v(&[1.0]),
            lambda_prev: v(&[1.0]),
        };
        let steps = InnerStepsizes {
            s: 1,
            eta: 3.0,
            beta: 2.0,
            gamma: 5.0,
            rho: 7.0,
        };
        let res = inner_sliding(&p, &x_prev, &x_under, &nu, &nu, &warm, steps).unwrap();
        // htil = nu^T lambda0 = 0.8; the rho term vanishes with lambda0 = lambda_{-1}
        let want = (3.0 * 0.7 + 2.0 * 0.9 - 0.8) / 5.0;
        assert!((res.x_t[0] - want).abs() < 1e-15);
        assert_eq!(res.lambda_tilde, v(&[1.0]));
    }

    #[test]
    fn indicator_dual_step_is_projected_ascent() {
        let p = ProblemInstance::builder(1)
            .component(Component::affine("1-x", v(&[-1.0]), 1.0).unwrap())
            .composer(ProxHandle::NonpositiveIndicator)
            .build()
            .unwrap();
        let x_under = v(&[0.25]);
        let nu = AnchoredConjugate::at(&p, &x_under).unwrap();
        let warm = WarmStart {
            y0: v(&[0.0]),
            lambda0: v(&[0.1]),
            lambda_prev: v(&[0.1]),
        };
        let steps = InnerStepsizes {
            s: 1,
            eta: 1.0,
            beta: 1.0,
            gamma: 2.0,
            rho: 1.0,
        };
        let res = inner_sliding(&p, &v(&[0.0]), &x_under, &nu, &nu, &warm, steps).unwrap();
        let y = res.x_t[0];
        let want = (0.1 + (-(y - 0.25) + 0.75) / 2.0f64).max(0.0);
        assert!((res.lambda_tilde[0] - want).abs() < 1e-15);
    }

    #[test]
    fn smooth_bound_dominates_on_square() {
        let p = square();
        let (l, d_x, d_lambda) = (2.0, 1.0, 1e-3);
        let mut cfg = SolverConfig::standard(l, d_x, d_lambda, 1e-6).unwrap();
        cfg.horizon = 1000;
        let (c, delta, r) = (cfg.c, cfg.delta, cfg.r);
        let out = ufcm_observed(&p, &v(&[1.0]), &v(&[1.0]), &cfg, |view| {
            let t = view.t as f64;
            let f = view.x_bar[0] * view.x_bar[0];
            let bound = ((c / delta + 2.0 * l) * d_x * d_x + 2.0 / (c * delta) * (r * r)) / (t * t);
            assert!(f <= bound, "t={t} F={f} bound={bound}");
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(out.iterations, 1000);
    }

    #[test]
    fn observer_can_stop_early() {
        let p = square();
        let out = ufcm_observed(&p, &v(&[1.0]), &v(&[1.0]), &config(2.0, 100), |view| {
            if view.t == 7 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .unwrap();
        assert_eq!(out.iterations, 7);
        assert_eq!(out.gradient_evals, 7);
        assert_eq!(out.trace.last().unwrap().t, 7);
    }

    #[test]
    fn zero_momentum_is_stable() {
        let p = square();
        let cfg = config(2.0, 500);
        let mut outer = build_schedule(2.0, cfg.c, cfg.delta, 500).unwrap();
        outer.theta.iter_mut().for_each(|t| *t = 0.0);
        let out = ufcm_with_schedule(&p, &v(&[1.0]), &v(&[1.0]), &cfg, outer, |_| ControlFlow::Continue(())).unwrap();
        assert!(out.trace.rows.iter().all(|r| r.objective <= 1.0 + 1e-12));
    }

    #[test]
    fn unused_multipliers_fall_back_to_initial_gradient() {
        let p = ProblemInstance::builder(1)
            .objective(Component::quadratic("x^2", Matrix::from_element(1, 1, 2.0), v(&[0.0]), 0.0).unwrap())
            .component(Component::affine("x-5", v(&[1.0]), -5.0).unwrap())
            .composer(ProxHandle::NonpositiveIndicator)
            .build()
            .unwrap();
        let out = ufcm(&p, &v(&[1.0]), &v(&[1.0, 0.0]), &config(2.0, 30)).unwrap();
        assert_eq!(out.nu_bar.rows()[(1, 0)], 1.0);
        assert_eq!(out.nu_bar.conjugates()[1], 5.0);
    }
}
