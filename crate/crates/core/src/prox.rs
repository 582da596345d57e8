//! Exact proximal operators for the composer and regularizer catalog.
//!
//! Convention: `prox_step(f, tau, x) = argmin_y f(y) + tau/2 |y - x|^2`.
//! The conjugate side uses closed forms per kind where they exist; the
//! generic Moreau route is kept as [`conjugate_prox_moreau`] and doubles as
//! an independent check in the tests.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, check_positive, Error, Result};
use crate::Vector;

/// Tolerance used when testing membership in the domain of a conjugate.
pub const DOMAIN_TOL: f64 = 1e-9;

const ROOT_TOL: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 200;

pub type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type ProxFn = Arc<dyn Fn(&Vector, f64) -> Vector + Send + Sync>;

/// User-supplied prox kind.
#[derive(Clone)]
pub struct CustomProx {
    pub name: String,
    pub value: ValueFn,
    pub prox: ProxFn,
    pub conjugate: Option<ValueFn>,
    pub smoothness: f64,
    pub monotone: bool,
}

/// Catalog tag plus parameters.
#[derive(Clone)]
pub enum ProxHandle {
    Zero,
    /// `h(z) = sum_j z_j`
    IdentitySum,
    /// Indicator of the nonpositive orthant.
    NonpositiveIndicator,
    /// `h(z) = max_j z_j`
    FiniteMax,
    /// `h(z) = eta * log sum_j exp(z_j / eta)`
    LogSumExp { eta: f64 },
    /// `h(z) = sum_j max(z_j / eta, 0)^2`
    SquaredHinge { eta: f64 },
    /// Indicator of `[lo, hi]` (infinite bounds allowed).
    Box { lo: Vector, hi: Vector },
    /// Indicator of a Euclidean ball.
    L2Ball { center: Vector, radius: f64 },
    /// `weight * |x|_1`
    L1 { weight: f64 },
    /// `weight / 2 * |x|^2`
    Quadratic { weight: f64 },
    /// `h(z_0, z) = z_0 + inner(z)`: the composer after absorbing an objective component.
    Absorbed(Box<ProxHandle>),
    Custom(Arc<CustomProx>),
}

impl fmt::Debug for ProxHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxHandle::LogSumExp { eta } => write!(f, "logsumexp(eta={eta})"),
            ProxHandle::SquaredHinge { eta } => write!(f, "squared-hinge(eta={eta})"),
            ProxHandle::L2Ball { radius, .. } => write!(f, "l2-ball(radius={radius})"),
            ProxHandle::L1 { weight } => write!(f, "l1(weight={weight})"),
            ProxHandle::Quadratic { weight } => write!(f, "quadratic(weight={weight})"),
            ProxHandle::Absorbed(inner) => write!(f, "absorbed({inner:?})"),
            ProxHandle::Custom(c) => write!(f, "custom({})", c.name),
            other => f.write_str(other.tag()),
        }
    }
}

impl ProxHandle {
    pub fn tag(&self) -> &'static str {
        match self {
            ProxHandle::Zero => "zero",
            ProxHandle::IdentitySum => "identity-sum",
            ProxHandle::NonpositiveIndicator => "nonpositive-indicator",
            ProxHandle::FiniteMax => "finite-max",
            ProxHandle::LogSumExp { .. } => "logsumexp",
            ProxHandle::SquaredHinge { .. } => "squared-hinge",
            ProxHandle::Box { .. } => "box",
            ProxHandle::L2Ball { .. } => "l2-ball",
            ProxHandle::L1 { .. } => "l1",
            ProxHandle::Quadratic { .. } => "quadratic",
            ProxHandle::Absorbed(_) => "absorbed",
            ProxHandle::Custom(_) => "custom",
        }
    }

    pub fn absorbed(inner: ProxHandle) -> Self {
        ProxHandle::Absorbed(Box::new(inner))
    }

    /// Box `[lo, hi]^n` with scalar bounds.
    pub fn uniform_box(n: usize, lo: f64, hi: f64) -> Self {
        ProxHandle::Box {
            lo: Vector::from_element(n, lo),
            hi: Vector::from_element(n, hi),
        }
    }

    /// Componentwise nondecreasing; required of a composer.
    pub fn is_monotone(&self) -> bool {
        match self {
            ProxHandle::Zero
            | ProxHandle::IdentitySum
            | ProxHandle::NonpositiveIndicator
            | ProxHandle::FiniteMax
            | ProxHandle::LogSumExp { .. }
            | ProxHandle::SquaredHinge { .. } => true,
            ProxHandle::Absorbed(inner) => inner.is_monotone(),
            ProxHandle::Custom(c) => c.monotone,
            _ => false,
        }
    }

    /// Gradient Lipschitz constant `L_h`; `+inf` for nonsmooth kinds.
    ///
    /// Linear kinds report `+inf` as well: their conjugate is an indicator of
    /// a single point, so the dual distance never shrinks and no restart can
    /// use it.
    pub fn smoothness(&self) -> f64 {
        match self {
            ProxHandle::LogSumExp { eta } => 1.0 / eta,
            ProxHandle::SquaredHinge { eta } => 2.0 / (eta * eta),
            ProxHandle::Quadratic { weight } => *weight,
            ProxHandle::Absorbed(inner) => inner.smoothness(),
            ProxHandle::Custom(c) => c.smoothness,
            _ => f64::INFINITY,
        }
    }

    /// Validates parameters against the dimension the handle will act on.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ProxHandle::LogSumExp { eta } | ProxHandle::SquaredHinge { eta } => check_positive("eta", *eta),
            ProxHandle::Box { lo, hi } => {
                check_dim("box lower bound", dim, lo.len())?;
                check_dim("box upper bound", dim, hi.len())?;
                if lo.iter().zip(hi.iter()).any(|(l, h)| !(l <= h)) {
                    return Err(Error::InvalidParameter("box requires lo <= hi".into()));
                }
                Ok(())
            }
            ProxHandle::L2Ball { center, radius } => {
                check_dim("ball center", dim, center.len())?;
                check_positive("radius", *radius)
            }
            ProxHandle::L1 { weight } | ProxHandle::Quadratic { weight } => check_positive("weight", *weight),
            ProxHandle::Absorbed(inner) => {
                if dim == 0 {
                    return Err(Error::InvalidParameter("absorbed composer needs m >= 1".into()));
                }
                inner.validate(dim - 1)
            }
            _ => Ok(()),
        }
    }

    /// Function value, `+inf` outside the domain.
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            ProxHandle::Zero => 0.0,
            ProxHandle::IdentitySum => x.iter().sum(),
            ProxHandle::NonpositiveIndicator => indicator(x.iter().all(|&v| v <= 0.0)),
            ProxHandle::FiniteMax => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ProxHandle::LogSumExp { eta } => {
                let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = x.iter().map(|&v| ((v - top) / eta).exp()).sum();
                top + eta * s.ln()
            }
            ProxHandle::SquaredHinge { eta } => x.iter().map(|&v| (v / eta).max(0.0).powi(2)).sum(),
            ProxHandle::Box { lo, hi } => {
                indicator(x.iter().zip(lo.iter().zip(hi.iter())).all(|(v, (l, h))| *l <= *v && *v <= *h))
            }
            ProxHandle::L2Ball { center, radius } => indicator((x - center).norm() <= radius * (1.0 + 1e-12)),
            ProxHandle::L1 { weight } => weight * x.lp_norm(1),
            ProxHandle::Quadratic { weight } => 0.5 * weight * x.norm_squared(),
            ProxHandle::Absorbed(inner) => {
                let rest = tail(x);
                x[0] + inner.value(&rest)
            }
            ProxHandle::Custom(c) => (c.value)(x),
        }
    }

    /// Closed-form Fenchel conjugate, `+inf` outside its domain.
    pub fn conjugate_value(&self, s: &Vector) -> Result<f64> {
        let v = match self {
            ProxHandle::Zero => indicator(s.amax() <= DOMAIN_TOL),
            ProxHandle::IdentitySum => indicator(s.iter().all(|&v| (v - 1.0).abs() <= DOMAIN_TOL)),
            ProxHandle::NonpositiveIndicator => indicator(s.iter().all(|&v| v >= -DOMAIN_TOL)),
            ProxHandle::FiniteMax => indicator(on_simplex(s)),
            ProxHandle::LogSumExp { eta } => {
                if on_simplex(s) {
                    eta * s.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
                } else {
                    f64::INFINITY
                }
            }
            ProxHandle::SquaredHinge { eta } => {
                if s.iter().all(|&v| v >= -DOMAIN_TOL) {
                    0.25 * eta * eta * s.iter().map(|&v| v.max(0.0).powi(2)).sum::<f64>()
                } else {
                    f64::INFINITY
                }
            }
            ProxHandle::Box { lo, hi } => {
                let mut acc = 0.0;
                for ((&si, &l), &h) in s.iter().zip(lo.iter()).zip(hi.iter()) {
                    if si > 0.0 {
                        acc += si * h;
                    } else if si < 0.0 {
                        acc += si * l;
                    }
                }
                acc
            }
            ProxHandle::L2Ball { center, radius } => center.dot(s) + radius * s.norm(),
            ProxHandle::L1 { weight } => indicator(s.amax() <= weight * (1.0 + DOMAIN_TOL)),
            ProxHandle::Quadratic { weight } => s.norm_squared() / (2.0 * weight),
            ProxHandle::Absorbed(inner) => {
                if (s[0] - 1.0).abs() > DOMAIN_TOL {
                    f64::INFINITY
                } else {
                    inner.conjugate_value(&tail(s))?
                }
            }
            ProxHandle::Custom(c) => match &c.conjugate {
                Some(f) => f(s),
                None => return Err(Error::Unsupported(format!("custom kind {} has no conjugate", c.name))),
            },
        };
        if v.is_nan() {
            return Err(Error::NonFinite(format!("conjugate of {self:?}")));
        }
        Ok(v)
    }
}

fn indicator(inside: bool) -> f64 {
    if inside {
        0.0
    } else {
        f64::INFINITY
    }
}

fn on_simplex(s: &Vector) -> bool {
    s.iter().all(|&v| v >= -DOMAIN_TOL) && (s.sum() - 1.0).abs() <= DOMAIN_TOL
}

fn tail(x: &Vector) -> Vector {
    x.rows(1, x.len() - 1).into_owned()
}

fn with_head(head: f64, rest: &Vector) -> Vector {
    let mut out = Vector::zeros(rest.len() + 1);
    out[0] = head;
    out.rows_mut(1, rest.len()).copy_from(rest);
    out
}

/// `argmin_y f(y) + tau/2 |y - x|^2`.
pub fn prox_step(f: &ProxHandle, tau: f64, x: &Vector) -> Result<Vector> {
    check_positive("tau", tau)?;
    let out = match f {
        ProxHandle::Zero => x.clone(),
        ProxHandle::IdentitySum => x.add_scalar(-1.0 / tau),
        ProxHandle::NonpositiveIndicator => x.map(|v| v.min(0.0)),
        ProxHandle::FiniteMax => x - project_simplex(&(x * tau))? / tau,
        ProxHandle::LogSumExp { eta } => x - entropy_simplex_prox(eta * tau, &(x * tau))? / tau,
        ProxHandle::SquaredHinge { eta } => {
            let shrink = tau / (tau + 2.0 / (eta * eta));
            x.map(|v| if v <= 0.0 { v } else { shrink * v })
        }
        ProxHandle::Box { lo, hi } => {
            check_dim("box prox", lo.len(), x.len())?;
            Vector::from_iterator(x.len(), x.iter().zip(lo.iter().zip(hi.iter())).map(|(v, (l, h))| v.max(*l).min(*h)))
        }
        ProxHandle::L2Ball { center, radius } => {
            let d = x - center;
            let norm = d.norm();
            if norm <= *radius {
                x.clone()
            } else {
                center + d * (radius / norm)
            }
        }
        ProxHandle::L1 { weight } => {
            let k = weight / tau;
            x.map(|v| v.signum() * (v.abs() - k).max(0.0))
        }
        ProxHandle::Quadratic { weight } => x * (tau / (weight + tau)),
        ProxHandle::Absorbed(inner) => {
            if x.is_empty() {
                return Err(Error::InvalidParameter("absorbed composer on empty vector".into()));
            }
            with_head(x[0] - 1.0 / tau, &prox_step(inner, tau, &tail(x))?)
        }
        ProxHandle::Custom(c) => (c.prox)(x, tau),
    };
    finite_or_err(out, f)
}

/// `argmin_y h*(y) + tau/2 |y - x|^2`, closed form per catalog kind.
pub fn conjugate_prox(h: &ProxHandle, tau: f64, x: &Vector) -> Result<Vector> {
    check_positive("tau", tau)?;
    let out = match h {
        ProxHandle::Zero => Vector::zeros(x.len()),
        ProxHandle::IdentitySum => Vector::from_element(x.len(), 1.0),
        ProxHandle::NonpositiveIndicator => x.map(|v| v.max(0.0)),
        ProxHandle::FiniteMax => project_simplex(x)?,
        ProxHandle::LogSumExp { eta } => entropy_simplex_prox(eta / tau, x)?,
        ProxHandle::SquaredHinge { eta } => {
            let shrink = tau / (tau + 0.5 * eta * eta);
            x.map(|v| (shrink * v).max(0.0))
        }
        ProxHandle::Absorbed(inner) => {
            if x.is_empty() {
                return Err(Error::InvalidParameter("absorbed composer on empty vector".into()));
            }
            with_head(1.0, &conjugate_prox(inner, tau, &tail(x))?)
        }
        _ => return conjugate_prox_moreau(h, tau, x),
    };
    finite_or_err(out, h)
}

/// `prox_{h*,tau}(x) = x - prox_{h,1/tau}(tau x) / tau`.
pub fn conjugate_prox_moreau(h: &ProxHandle, tau: f64, x: &Vector) -> Result<Vector> {
    check_positive("tau", tau)?;
    let p = prox_step(h, 1.0 / tau, &(x * tau))?;
    finite_or_err(x - p / tau, h)
}

fn finite_or_err(v: Vector, f: &ProxHandle) -> Result<Vector> {
    if v.iter().all(|a| a.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("prox output of {f:?}")))
    }
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(v: &Vector) -> Result<Vector> {
    if v.is_empty() {
        return Err(Error::InvalidParameter("simplex projection of an empty vector".into()));
    }
    if v.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("simplex projection input".into()));
    }
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumulative += uk;
        let candidate = (cumulative - 1.0) / (k as f64 + 1.0);
        if uk - candidate > 0.0 {
            theta = candidate;
        }
    }
    Ok(v.map(|a| (a - theta).max(0.0)))
}

/// `argmin_{l in simplex} a * sum l_j log l_j + 1/2 |l - v|^2`.
///
/// Each coordinate solves `l + a log l = v_j - a - theta`; the multiplier
/// `theta` is found by safeguarded Newton on `sum_j l_j(theta) = 1`.
pub fn entropy_simplex_prox(a: f64, v: &Vector) -> Result<Vector> {
    let m = v.len();
    if m == 0 {
        return Err(Error::InvalidParameter("entropy prox of an empty vector".into()));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("entropy weight must be nonnegative, got {a}")));
    }
    if a == 0.0 {
        return project_simplex(v);
    }
    if m == 1 {
        return Ok(Vector::from_element(1, 1.0));
    }
    let vmax = v.max();
    let coord = |theta: f64| -> Vector { v.map(|vj| log_root(a, vj - a - theta).exp()) };
    let residual = |l: &Vector| l.sum() - 1.0;

    let mut lo = vmax - a - 1.0;
    let mut hi = vmax - a - 1.0 / m as f64 + a * (m as f64).ln();
    let mut theta = 0.5 * (lo + hi);
    let mut l = coord(theta);
    for _ in 0..ROOT_MAX_ITER {
        let psi = residual(&l);
        if psi.abs() <= ROOT_TOL {
            break;
        }
        if psi > 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        let slope: f64 = -l.iter().map(|&lj| lj / (lj + a)).sum::<f64>();
        let newton = theta - psi / slope;
        theta = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= f64::EPSILON * (1.0 + theta.abs()) {
            l = coord(theta);
            break;
        }
        l = coord(theta);
    }
    let total = l.sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::NonFinite("entropy prox root".into()));
    }
    Ok(l / total)
}

/// Solves `e^u + a u = c` for `u` (`a > 0`) by Newton from the right of the root.
fn log_root(a: f64, c: f64) -> f64 {
    let mut u = if c >= 1.0 { c.ln() } else { (c / a).min(0.0) };
    for _ in 0..ROOT_MAX_ITER {
        let eu = u.exp();
        let step = (eu + a * u - c) / (eu + a);
        u -= step;
        if step.abs() <= 1e-15 * (1.0 + u.abs()) {
            break;
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn zero_prox_is_identity() {
        let x = v(&[1.5, -2.0]);
        assert_eq!(prox_step(&ProxHandle::Zero, 3.0, &x).unwrap(), x);
    }

    #[test]
    fn box_projection() {
        let b = ProxHandle::uniform_box(2, 0.0, 1.0);
        assert_eq!(prox_step(&b, 1.0, &v(&[2.0, -1.0])).unwrap(), v(&[1.0, 0.0]));
    }

    #[test]
    fn absolute_value_prox() {
        // argmin |y| + (y - 2)^2 / 2: for y > 0 stationarity gives y = 1
        let out = prox_step(&ProxHandle::L1 { weight: 1.0 }, 1.0, &v(&[2.0])).unwrap();
        assert_eq!(out, v(&[1.0]));
    }

    #[test]
    fn conjugate_prox_examples() {
        let x = v(&[0.3, -0.7, 2.0]);
        assert_eq!(
            conjugate_prox(&ProxHandle::NonpositiveIndicator, 0.4, &x).unwrap(),
            v(&[0.3, 0.0, 2.0])
        );
        let s = v(&[0.2, 0.5, 0.3]);
        assert_relative_eq!(conjugate_prox(&ProxHandle::FiniteMax, 2.0, &s).unwrap(), s, epsilon = 1e-15);
        assert_eq!(
            conjugate_prox(&ProxHandle::IdentitySum, 5.0, &x).unwrap(),
            Vector::from_element(3, 1.0)
        );
    }

    #[test]
    fn nonpositive_moreau_route_matches_closed_form() {
        let x = v(&[0.3, -0.7, 2.0]);
        let h = ProxHandle::NonpositiveIndicator;
        let a = conjugate_prox(&h, 0.4, &x).unwrap();
        let b = conjugate_prox_moreau(&h, 0.4, &x).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-14);
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(project_simplex(&v(&[0.5, 0.5])).unwrap(), v(&[0.5, 0.5]));
        assert_eq!(project_simplex(&v(&[2.0, 0.0])).unwrap(), v(&[1.0, 0.0]));
        let p = project_simplex(&v(&[0.4, 0.2, 0.1])).unwrap();
        assert_relative_eq!(p, v(&[0.5, 0.3, 0.2]), epsilon = 1e-15);
        assert!(project_simplex(&Vector::zeros(0)).is_err());
    }

    #[test]
    fn simplex_ties_include_equal_entries() {
        let p = project_simplex(&v(&[1.0, 1.0, 1.0])).unwrap();
        assert_relative_eq!(p, v(&[1.0 / 3.0; 3]), epsilon = 1e-15);
    }

    #[test]
    fn entropy_prox_satisfies_kkt() {
        let x = v(&[0.9, -0.3, 0.25, 2.0]);
        let a = 0.7;
        let l = entropy_simplex_prox(a, &x).unwrap();
        assert_relative_eq!(l.sum(), 1.0, epsilon = 1e-14);
        // l_j - x_j + a (log l_j + 1) must be the same for every j
        let k: Vec<f64> = l.iter().zip(x.iter()).map(|(lj, xj)| lj - xj + a * (lj.ln() + 1.0)).collect();
        for w in k.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-11, "{k:?}");
        }
    }

    #[test]
    fn entropy_prox_large_and_small_weights() {
        let x = v(&[50.0, -40.0, 3.0]);
        let l = entropy_simplex_prox(1e-6, &x).unwrap();
        assert_relative_eq!(l, v(&[1.0, 0.0, 0.0]), epsilon = 1e-9);
        let l = entropy_simplex_prox(1e6, &x).unwrap();
        assert_relative_eq!(l, v(&[1.0 / 3.0; 3]), epsilon = 1e-4);
    }

    #[test]
    fn squared_hinge_conjugate_matches_definition() {
        // phi(z) = (z/eta)^2 on z > 0, phi*(s) = sup_z s z - z^2/eta^2 = eta^2 s^2 / 4
        let eta = 0.5;
        let h = ProxHandle::SquaredHinge { eta };
        let s = 1.3;
        let brute = (0..200_000)
            .map(|i| i as f64 * 1e-5)
            .map(|z| s * z - (z / eta).powi(2))
            .fold(f64::NEG_INFINITY, f64::max);
        let closed = h.conjugate_value(&v(&[s])).unwrap();
        assert!((closed - brute).abs() < 1e-8, "{closed} vs {brute}");
    }

    #[test]
    fn nonpositive_tau_rejected() {
        assert!(prox_step(&ProxHandle::Zero, 0.0, &v(&[1.0])).is_err());
        assert!(conjugate_prox(&ProxHandle::FiniteMax, -1.0, &v(&[1.0])).is_err());
    }

    #[test]
    fn absorbed_composer_keeps_objective_multiplier() {
        let h = ProxHandle::absorbed(ProxHandle::NonpositiveIndicator);
        let out = conjugate_prox(&h, 2.0, &v(&[5.0, -1.0, 0.5])).unwrap();
        assert_eq!(out, v(&[1.0, 0.0, 0.5]));
        assert_eq!(h.value(&v(&[2.0, -1.0])), 2.0);
        assert_eq!(h.value(&v(&[2.0, 1.0])), f64::INFINITY);
    }
}
