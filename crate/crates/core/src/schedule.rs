//! Outer and inner stepsize schedules and the eight validity conditions.

use std::fmt;

use crate::error::{check_positive, Error, Result};

/// Outer schedule for `t = 1..=T` (index `t - 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct OuterSchedule {
    pub l_ada: f64,
    pub c: f64,
    pub delta: f64,
    pub omega: Vec<f64>,
    pub tau: Vec<f64>,
    pub eta: Vec<f64>,
    pub theta: Vec<f64>,
}

impl OuterSchedule {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// `(omega_t, tau_t, eta_t, theta_t)` for `t >= 1`.
    pub fn at(&self, t: usize) -> (f64, f64, f64, f64) {
        let i = t - 1;
        (self.omega[i], self.tau[i], self.eta[i], self.theta[i])
    }
}

fn tau_of(t: usize) -> f64 {
    (t as f64 - 1.0) / 2.0
}

/// `omega_t = t`, `tau_t = (t-1)/2`, `eta_t = L / tau_{t+1}`, `theta_t = tau_t / (tau_{t-1} + 1)`.
pub fn build_schedule(l_ada: f64, c: f64, delta: f64, horizon: usize) -> Result<OuterSchedule> {
    check_positive("L_ada", l_ada)?;
    check_positive("C", c)?;
    check_positive("Delta", delta)?;
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut s = OuterSchedule {
        l_ada,
        c,
        delta,
        omega: Vec::with_capacity(horizon),
        tau: Vec::with_capacity(horizon),
        eta: Vec::with_capacity(horizon),
        theta: Vec::with_capacity(horizon),
    };
    for t in 1..=horizon {
        let tau = tau_of(t);
        s.omega.push(t as f64);
        s.tau.push(tau);
        s.eta.push(l_ada / tau_of(t + 1));
        // tau_0 = -1/2 gives theta_1 = 0
        let tau_prev = (t as f64 - 2.0) / 2.0;
        s.theta.push(tau / (tau_prev + 1.0));
    }
    Ok(s)
}

/// Inner schedule realized at run time from the gradient norms `M_t`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InnerSchedule {
    pub m: Vec<f64>,
    pub s: Vec<usize>,
    pub mtil: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
    pub omegatil: Vec<f64>,
}

/// One step of the inner schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerStep {
    pub s: usize,
    pub mtil: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
}

/// `S_t = max(1, ceil(M_t Delta t))`, `Mtil = S_t/(Delta t)`, `beta = C Mtil`, `gamma = Mtil / C`.
pub fn inner_step(m_t: f64, t: usize, c: f64, delta: f64, prev_mtil: Option<f64>) -> InnerStep {
    let tf = t as f64;
    let s = ((m_t * delta * tf).ceil() as usize).max(1);
    let mtil = s as f64 / (delta * tf);
    InnerStep {
        s,
        mtil,
        beta: c * mtil,
        gamma: mtil / c,
        rho: prev_mtil.map_or(1.0, |p| mtil / p),
    }
}

impl InnerSchedule {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn push(&mut self, m_t: f64, step: InnerStep, omega_t: f64) {
        self.m.push(m_t);
        self.s.push(step.s);
        self.mtil.push(step.mtil);
        self.beta.push(step.beta);
        self.gamma.push(step.gamma);
        self.rho.push(step.rho);
        self.omegatil.push(omega_t / step.s as f64);
    }

    pub fn last_mtil(&self) -> Option<f64> {
        self.mtil.last().copied()
    }
}

/// Labels of the validity conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    A1,
    A2,
    A3,
    A4,
    B3,
    C1,
    C2,
    C3,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::A1 => "(a1)",
            Condition::A2 => "(a2)",
            Condition::A3 => "(a3)",
            Condition::A4 => "(a4)",
            Condition::B3 => "(b3)",
            Condition::C1 => "(c1)",
            Condition::C2 => "(c2)",
            Condition::C3 => "(c3)",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConditionReport {
    pub violations: Vec<Violation>,
}

impl ConditionReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, condition: Condition, t: usize) -> bool {
        self.violations.iter().any(|v| v.condition == condition && v.t == t)
    }
}

const REL_TOL: f64 = 1e-12;

fn holds_ge(lhs: f64, rhs: f64) -> bool {
    lhs >= rhs - REL_TOL * lhs.abs().max(rhs.abs())
}

/// Evaluates (a1)-(c3). `nu_norms[t]` is `|nu^t|` for `t = 0..=T`.
pub fn check_conditions(outer: &OuterSchedule, inner: &InnerSchedule, nu_norms: &[f64]) -> Result<ConditionReport> {
    let horizon = outer.len();
    if inner.len() != horizon || nu_norms.len() != horizon + 1 || horizon == 0 {
        return Err(Error::HorizonMismatch {
            outer: horizon,
            inner: inner.len(),
            norms: nu_norms.len(),
        });
    }
    let l = outer.l_ada;
    let mut report = ConditionReport::default();
    let check = |report: &mut ConditionReport, condition: Condition, t: usize, lhs: f64, rhs: f64| {
        if !holds_ge(lhs, rhs) {
            report.violations.push(Violation { condition, t, lhs, rhs });
        }
    };
    for t in 1..=horizon {
        let i = t - 1;
        let (omega, tau, eta, theta) = outer.at(t);
        if t >= 2 {
            let (omega_p, tau_p, eta_p, _) = outer.at(t - 1);
            check(&mut report, Condition::A1, t, omega_p * eta_p, omega * eta);
            check(&mut report, Condition::A2, t, omega_p * (tau_p + 1.0), omega * tau);
            check(&mut report, Condition::A3, t, eta_p * tau, theta * l);
            let ratio = omega_p / omega;
            if (theta - ratio).abs() > REL_TOL * ratio.abs().max(theta.abs()) {
                report.violations.push(Violation {
                    condition: Condition::A3,
                    t,
                    lhs: theta,
                    rhs: ratio,
                });
            }
        } else if theta != 0.0 {
            report.violations.push(Violation {
                condition: Condition::A3,
                t,
                lhs: theta,
                rhs: 0.0,
            });
        }
        let gb = inner.gamma[i] * inner.beta[i];
        check(&mut report, Condition::B3, t, gb, nu_norms[t] * nu_norms[t]);
        let rho = if t == 1 {
            inner.rho[0]
        } else {
            inner.omegatil[i - 1] / inner.omegatil[i]
        };
        if t >= 2 && (inner.rho[i] - rho).abs() > 1e-10 * rho.abs().max(1.0) {
            report.violations.push(Violation {
                condition: Condition::C3,
                t,
                lhs: inner.rho[i],
                rhs: rho,
            });
        }
        check(&mut report, Condition::C3, t, gb, rho * rho * nu_norms[t - 1] * nu_norms[t - 1]);
        if t < horizon {
            check(
                &mut report,
                Condition::C1,
                t,
                inner.omegatil[i] * inner.beta[i],
                inner.omegatil[i + 1] * inner.beta[i + 1],
            );
            check(
                &mut report,
                Condition::C2,
                t,
                inner.omegatil[i] * inner.gamma[i],
                inner.omegatil[i + 1] * inner.gamma[i + 1],
            );
        }
    }
    let (_, tau_t, eta_t, _) = outer.at(horizon);
    check(&mut report, Condition::A4, horizon, eta_t * (tau_t + 1.0), l);
    Ok(report)
}
