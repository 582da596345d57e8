//! Reference solvers producing ground-truth saddle data for desk-scale
//! instances. None of them share an iteration with the sliding solver.

use std::fmt;
use std::path::Path;

use nalgebra::linalg::LU;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::model::{objective_value, Component, ProblemInstance, SaddleData, Shape};
use crate::prox::{conjugate_prox, ProxHandle};
use crate::{Matrix, Vector};

/// Smallest distance bound written into [`SaddleData`]; a start placed on
/// the saddle would otherwise give a zero stepsize ratio.
pub const DISTANCE_FLOOR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    /// KKT enumeration over constraint activity patterns (quadratic objective, affine constraints).
    ActiveSet,
    /// Method of multipliers with BFGS inner solves.
    AugmentedLagrangian,
    /// BFGS on a smooth composite objective, multipliers from the composer gradient.
    SmoothDescent,
    /// 1-D grid scan, golden-section refinement and kink location.
    Grid,
    /// A closed-form saddle checked against the KKT residual.
    HandKkt,
}

impl fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleMethod::ActiveSet => "active-set",
            OracleMethod::AugmentedLagrangian => "augmented-lagrangian",
            OracleMethod::SmoothDescent => "smooth-descent",
            OracleMethod::Grid => "grid",
            OracleMethod::HandKkt => "hand-kkt",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleOptions {
    pub tol: f64,
    pub seed: u64,
    /// Points sampled to bound `|grad g|` on the ball around `x*`.
    pub samples: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            seed: 7,
            samples: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub saddle: SaddleData,
    pub method: OracleMethod,
    pub residual: f64,
    pub seed: u64,
    pub runtime_note: String,
}

/// `|x - prox_u(x - J(x)' lambda)| + |lambda - prox_{h*,1}(lambda + g(x))|`, zero exactly at saddle points.
pub fn kkt_residual(problem: &ProblemInstance, x: &Vector, lambda: &Vector) -> Result<f64> {
    let jac = problem.jacobian(x)?;
    let g = problem.values(x)?;
    let primal = x - problem.regularizer().prox(&(x - jac.tr_mul(lambda)), 1.0)?;
    let dual = lambda - conjugate_prox(problem.composer().handle(), 1.0, &(lambda + g))?;
    Ok(primal.norm() + dual.norm())
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / (2h)`.
pub fn finite_difference_gradient(component: &Component, x: &Vector, h: f64) -> Result<Vector> {
    check_positive("h", h)?;
    let mut out = Vector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = component.value(&probe);
        probe[i] = x[i] - h;
        let fm = component.value(&probe);
        probe[i] = x[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
    Ok(out)
}

/// Picks a method from the instance structure and solves to `opts.tol`.
pub fn reference_saddle(
    problem: &ProblemInstance,
    x0: &Vector,
    lambda0: &Vector,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    let method = if active_set_applies(problem) {
        OracleMethod::ActiveSet
    } else if constrained(problem) {
        OracleMethod::AugmentedLagrangian
    } else if problem.n() == 1 {
        OracleMethod::Grid
    } else {
        OracleMethod::SmoothDescent
    };
    reference_saddle_with(method, problem, x0, lambda0, opts)
}

/// Solves with a given method; `HandKkt` is not accepted here (see [`hand_kkt`]).
pub fn reference_saddle_with(
    method: OracleMethod,
    problem: &ProblemInstance,
    x0: &Vector,
    lambda0: &Vector,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    check_positive("tol", opts.tol)?;
    if problem.n() > 10 || problem.m() > 11 {
        return Err(Error::Oracle("reference oracles are limited to n <= 10, m <= 10".into()));
    }
    let (x, lambda, note) = match method {
        OracleMethod::ActiveSet => active_set(problem)?,
        OracleMethod::AugmentedLagrangian => augmented_lagrangian(problem, x0, lambda0, opts.tol)?,
        OracleMethod::SmoothDescent => smooth_descent(problem, x0)?,
        OracleMethod::Grid => grid_1d(problem, x0)?,
        OracleMethod::HandKkt => {
            return Err(Error::Oracle("hand KKT needs a supplied saddle".into()));
        }
    };
    finish(problem, method, x, lambda, x0, lambda0, opts, note)
}

/// Checks a closed-form saddle and fills in the remaining fields.
pub fn hand_kkt(
    problem: &ProblemInstance,
    x_star: Vector,
    lambda_star: Vector,
    x0: &Vector,
    lambda0: &Vector,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    finish(
        problem,
        OracleMethod::HandKkt,
        x_star,
        lambda_star,
        x0,
        lambda0,
        opts,
        "closed form".into(),
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &ProblemInstance,
    method: OracleMethod,
    x: Vector,
    lambda: Vector,
    x0: &Vector,
    lambda0: &Vector,
    opts: &OracleOptions,
    note: String,
) -> Result<OracleResult> {
    let residual = kkt_residual(problem, &x, &lambda)?;
    if !(residual <= opts.tol) {
        return Err(Error::Oracle(format!(
            "{method} residual {residual:e} above tolerance {:e}",
            opts.tol
        )));
    }
    // rounding can leave x* a hair outside an indicator domain; the Lagrangian
    // form agrees with F at a saddle and stays finite
    let p_star = match objective_value(problem, &x)? {
        f if f.is_finite() => f,
        _ => {
            let g = problem.values(&x)?;
            lambda.dot(&g) - problem.composer().conjugate(&lambda)? + problem.regularizer().value(&x)
        }
    };
    let d_x = (x0 - &x).norm().max(DISTANCE_FLOOR);
    let d_lambda = (lambda0 - &lambda).norm().max(DISTANCE_FLOOR);
    let m_bound = sample_gradient_bound(problem, &x, 27f64.sqrt() * d_x, opts.samples, opts.seed)?;
    Ok(OracleResult {
        saddle: SaddleData {
            x_star: x,
            lambda_star: lambda,
            p_star,
            grad_norm_bound_m: m_bound,
            d_x,
            d_lambda,
        },
        method,
        residual,
        seed: opts.seed,
        runtime_note: note,
    })
}

/// Largest Frobenius norm of the Jacobian over `samples` uniform points of `B(center, radius)` plus the center.
pub fn sample_gradient_bound(
    problem: &ProblemInstance,
    center: &Vector,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = problem.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = problem.jacobian(center)?.norm();
    for _ in 0..samples {
        let dir = Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        let scale = radius * rng.random::<f64>().powf(1.0 / n as f64) / norm;
        let point = center + dir * scale;
        if let Ok(j) = problem.jacobian(&point) {
            best = best.max(j.norm());
        }
    }
    Ok(best)
}

fn constrained(problem: &ProblemInstance) -> bool {
    match problem.composer().handle() {
        ProxHandle::NonpositiveIndicator => true,
        ProxHandle::Absorbed(inner) => matches!(**inner, ProxHandle::NonpositiveIndicator),
        _ => false,
    }
}

fn quadratic_parts(c: &Component) -> Option<(&Matrix, &Vector, f64)> {
    match c.shape() {
        Shape::Quadratic { q, b, c } => Some((q, b, *c)),
        Shape::Opaque => None,
    }
}

fn is_affine(c: &Component) -> bool {
    quadratic_parts(c).is_some_and(|(q, _, _)| q.amax() == 0.0)
}

fn active_set_applies(problem: &ProblemInstance) -> bool {
    if !matches!(problem.regularizer().handle(), ProxHandle::Zero) {
        return false;
    }
    let comps = problem.components();
    match problem.composer().handle() {
        ProxHandle::Absorbed(inner) if matches!(**inner, ProxHandle::NonpositiveIndicator) => {
            quadratic_parts(&comps[0]).is_some() && comps[1..].iter().all(is_affine)
        }
        ProxHandle::IdentitySum => comps.iter().all(|c| quadratic_parts(c).is_some()),
        _ => false,
    }
}

fn active_set(problem: &ProblemInstance) -> Result<(Vector, Vector, String)> {
    if !active_set_applies(problem) {
        return Err(Error::Oracle("active-set enumeration needs a quadratic objective and affine constraints".into()));
    }
    let n = problem.n();
    let comps = problem.components();
    let m = comps.len();
    if matches!(problem.composer().handle(), ProxHandle::IdentitySum) {
        let mut q = Matrix::zeros(n, n);
        let mut b = Vector::zeros(n);
        for c in comps {
            let (qc, bc, _) = quadratic_parts(c).expect("checked");
            q += qc;
            b += bc;
        }
        let x = LU::new(q)
            .solve(&(-b))
            .ok_or_else(|| Error::Oracle("singular quadratic objective".into()))?;
        return Ok((x, Vector::from_element(m, 1.0), "single linear solve".into()));
    }
    let (q0, b0, _) = quadratic_parts(&comps[0]).expect("checked");
    let cons: Vec<(&Vector, f64)> = comps[1..]
        .iter()
        .map(|c| {
            let (_, a, k) = quadratic_parts(c).expect("checked");
            (a, k)
        })
        .collect();
    let mc = cons.len();
    let mut best: Option<(f64, Vector, Vector)> = None;
    let mut solved = 0usize;
    for mask in 0u32..(1u32 << mc) {
        let active: Vec<usize> = (0..mc).filter(|i| mask & (1 << i) != 0).collect();
        if active.len() > n {
            continue;
        }
        let k = active.len();
        let mut kkt = Matrix::zeros(n + k, n + k);
        let mut rhs = Vector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(q0);
        rhs.rows_mut(0, n).copy_from(&(-b0));
        for (row, &i) in active.iter().enumerate() {
            let (a, c) = cons[i];
            kkt.view_mut((n + row, 0), (1, n)).copy_from(&a.transpose());
            kkt.view_mut((0, n + row), (n, 1)).copy_from(a);
            rhs[n + row] = -c;
        }
        let Some(sol) = LU::new(kkt).solve(&rhs) else { continue };
        if sol.iter().any(|v| !v.is_finite()) {
            continue;
        }
        solved += 1;
        let x = sol.rows(0, n).into_owned();
        let mut lambda = Vector::zeros(m);
        lambda[0] = 1.0;
        let mut ok = true;
        for (row, &i) in active.iter().enumerate() {
            let l = sol[n + row];
            if l < -1e-12 {
                ok = false;
            }
            lambda[1 + i] = l.max(0.0);
        }
        for (a, c) in &cons {
            if a.dot(&x) + c > 1e-10 * (1.0 + a.norm() * x.norm() + c.abs()) {
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let f = comps[0].value(&x);
        if best.as_ref().is_none_or(|(bf, _, _)| f < *bf) {
            best = Some((f, x, lambda));
        }
    }
    let (_, x, lambda) = best.ok_or_else(|| Error::Oracle("no KKT point among activity patterns".into()))?;
    Ok((x, lambda, format!("{solved} of {} activity patterns solvable", 1u32 << mc)))
}

/// Gradient of a differentiable composer at `z`.
fn composer_gradient(h: &ProxHandle, z: &Vector) -> Result<Vector> {
    Ok(match h {
        ProxHandle::Zero => Vector::zeros(z.len()),
        ProxHandle::IdentitySum => Vector::from_element(z.len(), 1.0),
        ProxHandle::LogSumExp { eta } => {
            let top = z.max();
            let w = z.map(|v| ((v - top) / eta).exp());
            let s = w.sum();
            w / s
        }
        ProxHandle::SquaredHinge { eta } => z.map(|v| 2.0 * v.max(0.0) / (eta * eta)),
        ProxHandle::Absorbed(inner) => {
            let tail = composer_gradient(inner, &z.rows(1, z.len() - 1).into_owned())?;
            let mut out = Vector::zeros(z.len());
            out[0] = 1.0;
            out.rows_mut(1, tail.len()).copy_from(&tail);
            out
        }
        other => return Err(Error::Oracle(format!("composer {other:?} is not differentiable"))),
    })
}

fn smooth_descent(problem: &ProblemInstance, x0: &Vector) -> Result<(Vector, Vector, String)> {
    if !matches!(problem.regularizer().handle(), ProxHandle::Zero) {
        return Err(Error::Oracle("smooth descent needs u = 0".into()));
    }
    let h = problem.composer().handle();
    composer_gradient(h, &problem.values(x0)?)?;
    let f = |x: &Vector| -> Result<(f64, Vector)> {
        let g = problem.values(x)?;
        let grad = problem.jacobian(x)?.tr_mul(&composer_gradient(h, &g)?);
        Ok((problem.composer().value(&g), grad))
    };
    let (x, iters) = bfgs(f, x0.clone(), 1e-13, 5000)?;
    let lambda = composer_gradient(h, &problem.values(&x)?)?;
    Ok((x, lambda, format!("{iters} BFGS iterations")))
}

fn augmented_lagrangian(
    problem: &ProblemInstance,
    x0: &Vector,
    lambda0: &Vector,
    tol: f64,
) -> Result<(Vector, Vector, String)> {
    if !constrained(problem) || !matches!(problem.regularizer().handle(), ProxHandle::Zero) {
        return Err(Error::Oracle("augmented Lagrangian needs an indicator composer and u = 0".into()));
    }
    let offset = usize::from(problem.composer().absorbs_objective());
    let m = problem.m();
    let comps = problem.components();
    let mut lam = lambda0.rows(offset, m - offset).map(|v| v.max(0.0));
    let mut x = x0.clone();
    let mut rho = 10.0;
    let mut prev_viol = f64::INFINITY;
    let mut total = 0;
    for outer in 0..400 {
        let lam_k = lam.clone();
        let phi = |y: &Vector| -> Result<(f64, Vector)> {
            let mut val = 0.0;
            let mut grad = Vector::zeros(y.len());
            if offset == 1 {
                val += comps[0].value(y);
                grad += comps[0].gradient(y);
            }
            for (i, c) in comps[offset..].iter().enumerate() {
                let shifted = (lam_k[i] + rho * c.value(y)).max(0.0);
                val += (shifted * shifted - lam_k[i] * lam_k[i]) / (2.0 * rho);
                if shifted > 0.0 {
                    grad += c.gradient(y) * shifted;
                }
            }
            Ok((val, grad))
        };
        let (xn, iters) = bfgs(phi, x, 1e-14, 5000)?;
        total += iters;
        x = xn;
        let g = problem.values(&x)?;
        let gc = g.rows(offset, m - offset);
        let viol = gc
            .iter()
            .zip(lam.iter())
            .map(|(&gi, &li)| gi.max(-li / rho).abs())
            .fold(0.0, f64::max);
        for i in 0..lam.len() {
            lam[i] = (lam[i] + rho * gc[i]).max(0.0);
        }
        let mut full = Vector::zeros(m);
        if offset == 1 {
            full[0] = 1.0;
        }
        full.rows_mut(offset, m - offset).copy_from(&lam);
        if kkt_residual(problem, &x, &full)? <= 0.1 * tol {
            let note = match newton_polish(problem, &x, &full)? {
                Some((xp, lp)) if kkt_residual(problem, &xp, &lp)? < kkt_residual(problem, &x, &full)? => {
                    x = xp;
                    full = lp;
                    "with Newton polish"
                }
                _ => "",
            };
            return Ok((x, full, format!("{} outer, {total} BFGS iterations {note}", outer + 1).trim_end().to_string()));
        }
        if viol > 0.25 * prev_viol {
            rho = (rho * 4.0).min(1e8);
        }
        prev_viol = viol;
    }
    Err(Error::Oracle("augmented Lagrangian did not reach the residual target".into()))
}

/// Newton steps on the equality KKT system of the active constraints when
/// every component is quadratic.
fn newton_polish(problem: &ProblemInstance, x: &Vector, lambda: &Vector) -> Result<Option<(Vector, Vector)>> {
    let parts: Option<Vec<_>> = problem.components().iter().map(quadratic_parts).collect();
    let Some(parts) = parts else { return Ok(None) };
    let offset = usize::from(problem.composer().absorbs_objective());
    let n = problem.n();
    let active: Vec<usize> = (offset..problem.m()).filter(|&j| lambda[j] > 1e-10).collect();
    let k = active.len();
    let (mut x, mut lam) = (x.clone(), lambda.clone());
    for _ in 0..8 {
        let mut hess = Matrix::zeros(n, n);
        let mut grad = Vector::zeros(n);
        for (j, (q, b, _)) in parts.iter().enumerate() {
            hess += *q * lam[j];
            grad += (*q * &x + *b) * lam[j];
        }
        let mut kkt = Matrix::zeros(n + k, n + k);
        let mut rhs = Vector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
        rhs.rows_mut(0, n).copy_from(&(-grad));
        for (row, &j) in active.iter().enumerate() {
            let (q, b, c) = parts[j];
            let gj = q * &x + b;
            kkt.view_mut((n + row, 0), (1, n)).copy_from(&gj.transpose());
            kkt.view_mut((0, n + row), (n, 1)).copy_from(&gj);
            rhs[n + row] = -(0.5 * x.dot(&(q * &x)) + b.dot(&x) + c);
        }
        let Some(step) = LU::new(kkt).solve(&rhs) else { return Ok(None) };
        x += step.rows(0, n);
        for (row, &j) in active.iter().enumerate() {
            lam[j] += step[n + row];
        }
        if step.norm() <= 1e-16 * (1.0 + x.norm()) {
            break;
        }
    }
    Ok(Some((x, lam)))
}

/// Minimizes `F` on the line: coarse scan, golden section, then kink location for max composers.
fn grid_1d(problem: &ProblemInstance, x0: &Vector) -> Result<(Vector, Vector, String)> {
    if problem.n() != 1 {
        return Err(Error::Oracle("grid oracle is one-dimensional".into()));
    }
    let c = x0[0];
    let span = 100.0 * (1.0 + c.abs());
    let (mut lo, mut hi) = (c - span, c + span);
    match problem.regularizer().handle() {
        ProxHandle::Zero => {}
        ProxHandle::Box { lo: bl, hi: bh } => {
            lo = lo.max(bl[0]);
            hi = hi.min(bh[0]);
        }
        other => return Err(Error::Oracle(format!("grid oracle does not handle u = {other:?}"))),
    }
    let f = |t: f64| objective_value(problem, &Vector::from_element(1, t)).unwrap_or(f64::INFINITY);
    const CELLS: usize = 20_000;
    let step = (hi - lo) / CELLS as f64;
    let (mut best_i, mut best_f) = (0, f64::INFINITY);
    for i in 0..=CELLS {
        let v = f(lo + step * i as f64);
        if v < best_f {
            best_f = v;
            best_i = i;
        }
    }
    let mut a = (lo + step * (best_i as f64 - 1.0)).max(lo);
    let mut b = (lo + step * (best_i as f64 + 1.0)).min(hi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let x1 = b - ratio * (b - a);
        let x2 = a + ratio * (b - a);
        if f(x1) <= f(x2) {
            b = x2;
        } else {
            a = x1;
        }
        if b - a <= 4.0 * f64::EPSILON * (1.0 + a.abs()) {
            break;
        }
    }
    let mut t = 0.5 * (a + b);
    for edge in [lo, hi] {
        if f(edge) <= f(t) {
            t = edge;
        }
    }
    let h = problem.composer().handle();
    let lambda = match h {
        ProxHandle::FiniteMax => {
            let (tk, lam) = max_kink(problem, t)?;
            t = tk;
            lam
        }
        _ => composer_gradient(h, &problem.values(&Vector::from_element(1, t))?)?,
    };
    Ok((Vector::from_element(1, t), lambda, format!("{CELLS} cells then golden section")))
}

/// Multipliers of a 1-D max at its minimizer, snapping to the crossing of two active pieces.
fn max_kink(problem: &ProblemInstance, t: f64) -> Result<(f64, Vector)> {
    let m = problem.m();
    let at = |s: f64| problem.values(&Vector::from_element(1, s));
    let slope = |s: f64| -> Result<Vector> { Ok(problem.jacobian(&Vector::from_element(1, s))?.column(0).into_owned()) };
    let g = at(t)?;
    let top = g.max();
    let active: Vec<usize> = (0..m).filter(|&j| g[j] >= top - 1e-7 * (1.0 + top.abs())).collect();
    let d = slope(t)?;
    let mut lambda = Vector::zeros(m);
    if active.len() == 1 {
        lambda[active[0]] = 1.0;
        return Ok((t, lambda));
    }
    let (i, j) = active
        .iter()
        .flat_map(|&i| active.iter().map(move |&j| (i, j)))
        .find(|&(i, j)| d[i] < 0.0 && d[j] > 0.0)
        .ok_or_else(|| Error::Oracle("no descent-ascent pair among active pieces".into()))?;
    let diff = |s: f64| -> Result<f64> {
        let g = at(s)?;
        Ok(g[i] - g[j])
    };
    let width = 1e-5 * (1.0 + t.abs());
    let (mut a, mut b) = (t - width, t + width);
    let (fa, fb) = (diff(a)?, diff(b)?);
    if fa.signum() == fb.signum() {
        return Err(Error::Oracle("active pieces do not cross near the minimizer".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if diff(mid)?.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    let ts = if diff(a)?.abs() <= diff(b)?.abs() { a } else { b };
    let d = slope(ts)?;
    lambda[i] = d[j] / (d[j] - d[i]);
    lambda[j] = -d[i] / (d[j] - d[i]);
    Ok((ts, lambda))
}

/// Dense BFGS with a backtracking line search; returns the point and iteration count.
fn bfgs(
    f: impl Fn(&Vector) -> Result<(f64, Vector)>,
    x0: Vector,
    gtol: f64,
    max_iter: usize,
) -> Result<(Vector, usize)> {
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut gx) = f(&x)?;
    let mut hinv = Matrix::identity(n, n);
    for it in 0..max_iter {
        if gx.norm() <= gtol {
            return Ok((x, it));
        }
        let mut d = -(&hinv * &gx);
        if d.dot(&gx) >= 0.0 {
            hinv = Matrix::identity(n, n);
            d = -gx.clone();
        }
        let slope = d.dot(&gx);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let xn = &x + &d * step;
            if let Ok((fn_, gn)) = f(&xn) {
                let armijo = fn_ <= fx + 1e-4 * step * slope;
                let flat = fn_ <= fx + 1e-15 * fx.abs() && gn.norm() < gx.norm();
                if armijo || flat {
                    accepted = Some((xn, fn_, gn));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return Ok((x, it));
        };
        let s = &xn - &x;
        let y = &gn - &gx;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let eye = Matrix::identity(n, n);
            let left = &eye - &s * y.transpose() * rho;
            let right = &eye - &y * s.transpose() * rho;
            hinv = &left * &hinv * &right + &s * s.transpose() * rho;
        }
        x = xn;
        fx = fn_;
        gx = gn;
    }
    Ok((x, max_iter))
}

/// On-disk oracle record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub id: String,
    pub method: OracleMethod,
    pub x_star: Vec<f64>,
    pub lambda_star: Vec<f64>,
    pub p_star: f64,
    pub residual: f64,
    pub seed: u64,
    pub d_x: f64,
    pub d_lambda: f64,
    pub m_bound: f64,
}

impl Fixture {
    pub fn from_result(id: &str, r: &OracleResult) -> Self {
        Self {
            id: id.to_string(),
            method: r.method,
            x_star: r.saddle.x_star.iter().copied().collect(),
            lambda_star: r.saddle.lambda_star.iter().copied().collect(),
            p_star: r.saddle.p_star,
            residual: r.residual,
            seed: r.seed,
            d_x: r.saddle.d_x,
            d_lambda: r.saddle.d_lambda,
            m_bound: r.saddle.grad_norm_bound_m,
        }
    }

    pub fn saddle(&self) -> SaddleData {
        SaddleData {
            x_star: Vector::from_column_slice(&self.x_star),
            lambda_star: Vector::from_column_slice(&self.lambda_star),
            p_star: self.p_star,
            grad_norm_bound_m: self.m_bound,
            d_x: self.d_x,
            d_lambda: self.d_lambda,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Fixture(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Fixture(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Largest absolute difference in the saddle fields, `+inf` on a shape mismatch.
    pub fn max_deviation(&self, other: &Fixture) -> f64 {
        if self.id != other.id || self.x_star.len() != other.x_star.len() || self.lambda_star.len() != other.lambda_star.len()
        {
            return f64::INFINITY;
        }
        let pairs = self
            .x_star
            .iter()
            .zip(&other.x_star)
            .chain(self.lambda_star.iter().zip(&other.lambda_star))
            .chain([(&self.p_star, &other.p_star), (&self.d_x, &other.d_x), (&self.d_lambda, &other.d_lambda)]);
        pairs.map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HolderProfile, ConvexityProfile};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn half_norm(n: usize) -> Component {
        Component::quadratic("half-norm", Matrix::identity(n, n), Vector::zeros(n), 0.0).unwrap()
    }

    fn halfplane() -> ProblemInstance {
        ProblemInstance::builder(3)
            .objective(half_norm(3))
            .component(Component::affine("1-x1", v(&[-1.0, 0.0, 0.0]), 1.0).unwrap())
            .composer(ProxHandle::NonpositiveIndicator)
            .build()
            .unwrap()
    }

    #[test]
    fn halfplane_by_enumeration() {
        let p = halfplane();
        let r = reference_saddle(&p, &v(&[0.0; 3]), &v(&[1.0, 0.0]), &OracleOptions::default()).unwrap();
        assert_eq!(r.method, OracleMethod::ActiveSet);
        assert_eq!(r.saddle.x_star, v(&[1.0, 0.0, 0.0]));
        assert_eq!(r.saddle.lambda_star, v(&[1.0, 1.0]));
        assert_eq!(r.saddle.p_star, 0.5);
    }

    #[test]
    fn halfplane_by_multipliers() {
        let p = halfplane();
        let opts = OracleOptions::default();
        let r = reference_saddle_with(OracleMethod::AugmentedLagrangian, &p, &v(&[0.0; 3]), &v(&[1.0, 0.0]), &opts)
            .unwrap();
        assert!((r.saddle.x_star - v(&[1.0, 0.0, 0.0])).norm() < 1e-8);
        assert!((r.saddle.lambda_star[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn unconstrained_square() {
        let p = ProblemInstance::builder(1)
            .component(Component::quadratic("x^2", Matrix::from_element(1, 1, 2.0), v(&[0.0]), 0.0).unwrap())
            .build()
            .unwrap();
        let r = reference_saddle(&p, &v(&[1.0]), &v(&[1.0]), &OracleOptions::default()).unwrap();
        assert_eq!(r.saddle.x_star, v(&[0.0]));
        assert_eq!(r.saddle.lambda_star, v(&[1.0]));
        assert_eq!(r.saddle.p_star, 0.0);
        assert_eq!(r.saddle.d_lambda, DISTANCE_FLOOR);
    }

    #[test]
    fn max_of_square_and_kink() {
        let shifted = Component::new(
            "|x-2|-1",
            |x: &Vector| (x[0] - 2.0).abs() - 1.0,
            |x: &Vector| Vector::from_element(1, (x[0] - 2.0).signum()),
            HolderProfile::lipschitz(1.0),
            ConvexityProfile::convex(),
        );
        let p = ProblemInstance::builder(1)
            .component(Component::quadratic("x^2", Matrix::from_element(1, 1, 2.0), v(&[0.0]), 0.0).unwrap())
            .component(shifted)
            .composer(ProxHandle::FiniteMax)
            .build()
            .unwrap();
        let r = reference_saddle(&p, &v(&[1.0]), &v(&[0.5, 0.5]), &OracleOptions::default()).unwrap();
        assert_eq!(r.method, OracleMethod::Grid);
        let xs = (5f64.sqrt() - 1.0) / 2.0;
        assert!((r.saddle.x_star[0] - xs).abs() < 1e-14);
        assert!((r.saddle.lambda_star[0] - 1.0 / (1.0 + 2.0 * xs)).abs() < 1e-14);
        assert!((r.saddle.lambda_star.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn finite_differences() {
        let sq = Component::quadratic("x^2", Matrix::from_element(1, 1, 2.0), v(&[0.0]), 0.0).unwrap();
        assert!((finite_difference_gradient(&sq, &v(&[3.0]), 1e-6).unwrap()[0] - 6.0).abs() < 1e-6);
        let aff = Component::affine("a", v(&[1.5, -2.0]), 0.3).unwrap();
        let g = finite_difference_gradient(&aff, &v(&[0.2, 0.7]), 1e-6).unwrap();
        assert!((g - v(&[1.5, -2.0])).norm() < 1e-9);
    }

    #[test]
    fn fixture_roundtrip() {
        let p = halfplane();
        let r = reference_saddle(&p, &v(&[0.0; 3]), &v(&[1.0, 0.0]), &OracleOptions::default()).unwrap();
        let fx = Fixture::from_result("halfplane", &r);
        let back = Fixture::from_toml(&fx.to_toml().unwrap()).unwrap();
        assert_eq!(back, fx);
        assert_eq!(fx.max_deviation(&back), 0.0);
    }
}
