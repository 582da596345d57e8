//! Solution quality: (eps, r)-optimality certificates, KKT residuals and
//! growth checks of the gap function.

use crate::error::{Error, Result};
use crate::model::{gap_value, AnchoredConjugate, PrimalDualPoint, ProblemInstance, SaddleData};
use crate::prox::{conjugate_prox, project_simplex, ProxHandle};
use crate::{Matrix, Vector};

/// Witness pair `(g_hat, lambda_hat)` with `lambda_hat` in the subdifferential of `h` at `g_hat`.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub g_hat: Vector,
    pub lambda_hat: Vector,
    /// `<lambda_hat, g(x)> - h*(lambda_hat) + u(x) - p*`.
    pub lagrangian_gap: f64,
    /// `|g(x) - g_hat|`.
    pub perturbation_norm: f64,
    /// `g_hat = g(x)` with `lambda_hat` the nearest subgradient to `lambda*`.
    pub degenerate: bool,
    pub eps_r_pass: bool,
}

/// `<lambda, g(x)> - h*(lambda) + u(x) - p*`, which equals
/// `h(g_hat) + <lambda, g(x) - g_hat> + u(x) - p*` whenever `lambda` is a subgradient at `g_hat`.
pub fn lagrangian_gap(problem: &ProblemInstance, x: &Vector, lambda: &Vector, p_star: f64) -> Result<f64> {
    let g = problem.values(x)?;
    let hstar = problem.composer().conjugate(lambda)?;
    Ok(lambda.dot(&g) - hstar + problem.regularizer().value(x) - p_star)
}

/// Projection of `lambda` onto the subdifferential of `h` at `z`; `None` when it is empty.
pub fn project_subdifferential(h: &ProxHandle, z: &Vector, lambda: &Vector) -> Result<Option<Vector>> {
    let m = z.len();
    let out = match h {
        ProxHandle::Zero => Some(Vector::zeros(m)),
        ProxHandle::IdentitySum => Some(Vector::from_element(m, 1.0)),
        ProxHandle::NonpositiveIndicator => {
            if z.iter().any(|&v| v > 0.0) {
                None
            } else {
                Some(Vector::from_iterator(
                    m,
                    z.iter().zip(lambda.iter()).map(|(&zj, &lj)| if zj == 0.0 { lj.max(0.0) } else { 0.0 }),
                ))
            }
        }
        ProxHandle::FiniteMax => {
            let top = z.max();
            let tol = 1e-12 * (1.0 + top.abs());
            let face: Vec<usize> = (0..m).filter(|&j| z[j] >= top - tol).collect();
            let sub = Vector::from_iterator(face.len(), face.iter().map(|&j| lambda[j]));
            let proj = project_simplex(&sub)?;
            let mut out = Vector::zeros(m);
            for (k, &j) in face.iter().enumerate() {
                out[j] = proj[k];
            }
            Some(out)
        }
        ProxHandle::LogSumExp { eta } => {
            let top = z.max();
            let w = z.map(|v| ((v - top) / eta).exp());
            let s = w.sum();
            Some(w / s)
        }
        ProxHandle::SquaredHinge { eta } => Some(z.map(|v| 2.0 * v.max(0.0) / (eta * eta))),
        ProxHandle::Absorbed(inner) => {
            let tail = z.rows(1, m - 1).into_owned();
            let ltail = lambda.rows(1, m - 1).into_owned();
            project_subdifferential(inner, &tail, &ltail)?.map(|p| {
                let mut out = Vector::zeros(m);
                out[0] = 1.0;
                out.rows_mut(1, m - 1).copy_from(&p);
                out
            })
        }
        other => return Err(Error::Unsupported(format!("certificate for composer {other:?}"))),
    };
    Ok(out)
}

/// Builds `g_hat` in `argmin h(w) - <lambda*, w> + r |w - g(x)|` and checks
/// `gap <= eps` and `r |g(x) - g_hat| <= eps`.
///
/// The minimizer sits on the path `w_s = g - s (lambda_s - lambda*)` with
/// `lambda_s = prox_{h*, s}(lambda* + g / s)`; `s` is found by bisection so that
/// `|lambda_s - lambda*| = r`. When the nearest subgradient at `g(x)` is
/// already within `r`, the minimizer is `g(x)` itself.
pub fn certificate_check(
    problem: &ProblemInstance,
    x: &Vector,
    saddle: &SaddleData,
    r: f64,
    epsilon: f64,
) -> Result<Certificate> {
    crate::error::check_positive("r", r)?;
    crate::error::check_positive("epsilon", epsilon)?;
    let h = problem.composer().handle();
    let g = problem.values(x)?;
    let lstar = &saddle.lambda_star;
    crate::error::check_dim("lambda*", g.len(), lstar.len())?;

    let nearest = project_subdifferential(h, &g, lstar)?;
    let (g_hat, lambda_hat, degenerate) = match nearest {
        Some(p) if (&p - lstar).norm() <= r => (g.clone(), p, true),
        _ => {
            let s = path_parameter(h, &g, lstar, r)?;
            let lam = conjugate_prox(h, s, &(lstar + &g / s))?;
            let g_hat = &g - (&lam - lstar) * s;
            (g_hat, lam, false)
        }
    };
    let gap = lagrangian_gap(problem, x, &lambda_hat, saddle.p_star)?;
    let perturbation_norm = (&g - &g_hat).norm();
    Ok(Certificate {
        eps_r_pass: gap <= epsilon && r * perturbation_norm <= epsilon,
        g_hat,
        lambda_hat,
        lagrangian_gap: gap,
        perturbation_norm,
        degenerate,
    })
}

fn path_parameter(h: &ProxHandle, g: &Vector, lstar: &Vector, r: f64) -> Result<f64> {
    let dist = |s: f64| -> Result<f64> { Ok((conjugate_prox(h, s, &(lstar + g / s))? - lstar).norm()) };
    // dist is nonincreasing in s
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while dist(lo)? < r {
        lo *= 0.1;
        if lo < 1e-300 {
            return Err(Error::Degenerate("certificate path does not reach radius r".into()));
        }
    }
    while dist(hi)? > r {
        hi *= 10.0;
        if hi > 1e300 {
            return Err(Error::Degenerate("certificate path does not shrink below r".into()));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let d = dist(mid)?;
        if (d - r).abs() <= 1e-13 * r {
            return Ok(mid);
        }
        if d > r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-15 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct KktReport {
    pub lagrangian_stationarity_gap: f64,
    pub feasibility: f64,
    pub complementarity: f64,
    pub dual_feasibility: bool,
}

fn constraint_span(problem: &ProblemInstance) -> Result<usize> {
    match problem.composer().handle() {
        ProxHandle::NonpositiveIndicator => Ok(0),
        ProxHandle::Absorbed(inner) if matches!(**inner, ProxHandle::NonpositiveIndicator) => Ok(1),
        other => Err(Error::Unsupported(format!("KKT report needs an indicator composer, got {other:?}"))),
    }
}

/// KKT residuals at `(x, lambda)`. `lambda` holds either all `m` multipliers
/// or only the constraint multipliers.
///
/// The stationarity entry is the Lagrangian gap to `p*` when given, else
/// `|x - prox_u(x - sum_j lambda_j grad g_j(x))|`.
pub fn kkt_report(problem: &ProblemInstance, x: &Vector, lambda: &Vector, p_star: Option<f64>) -> Result<KktReport> {
    let offset = constraint_span(problem)?;
    let m = problem.m();
    let full = if lambda.len() == m {
        lambda.clone()
    } else if offset == 1 && lambda.len() == m - 1 {
        let mut v = Vector::zeros(m);
        v[0] = 1.0;
        v.rows_mut(1, m - 1).copy_from(lambda);
        v
    } else {
        return Err(Error::Dimension {
            context: "KKT multipliers".into(),
            expected: m - offset,
            got: lambda.len(),
        });
    };
    let g = problem.values(x)?;
    let gc = g.rows(offset, m - offset);
    let lc = full.rows(offset, m - offset);
    let stationarity = match p_star {
        Some(p) => full.dot(&g) + problem.regularizer().value(x) - p,
        None => {
            let jac: Matrix = problem.jacobian(x)?;
            let step = x - jac.tr_mul(&full);
            (x - problem.regularizer().prox(&step, 1.0)?).norm()
        }
    };
    Ok(KktReport {
        lagrangian_stationarity_gap: stationarity.abs(),
        feasibility: gc.map(|v| v.max(0.0)).norm(),
        complementarity: lc.dot(&gc).abs(),
        dual_feasibility: lc.iter().all(|&l| l >= 0.0) && (offset == 0 || full[0] == 1.0),
    })
}

/// Growth of the gap function around a saddle point.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFunctions {
    terms: Vec<(f64, f64)>,
    l_h: f64,
}

impl GrowthFunctions {
    pub fn new(problem: &ProblemInstance, saddle: &SaddleData) -> Self {
        let terms = problem
            .convexity_profiles()
            .iter()
            .zip(saddle.lambda_star.iter())
            .map(|(c, &l)| (l * c.mu / (c.q + 1.0), c.q))
            .collect();
        Self {
            terms,
            l_h: problem.composer().smoothness_lh(),
        }
    }

    /// `G_x(t) = sum_j lambda*_j mu_j / (q_j + 1) t^(q_j + 1)`.
    pub fn g_x(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(a, q)| if a == 0.0 { 0.0 } else { a * t.powf(q + 1.0) }).sum()
    }

    /// `G_lambda(t) = t^2 / (2 L_h)`, zero for nonsmooth composers.
    pub fn g_lambda(&self, t: f64) -> f64 {
        if self.l_h.is_finite() {
            t * t / (2.0 * self.l_h)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Compares `Q(z, (x*; lambda*, grad g(x)))` with `G_x(|x - x*|) + G_lambda(|lambda - lambda*|)`.
pub fn growth_check(problem: &ProblemInstance, z: &PrimalDualPoint, saddle: &SaddleData) -> Result<GrowthCheck> {
    let zhat = PrimalDualPoint {
        x: saddle.x_star.clone(),
        lambda: saddle.lambda_star.clone(),
        nu: AnchoredConjugate::at(problem, &z.x)?,
    };
    let lhs = gap_value(problem, z, &zhat)?;
    let growth = GrowthFunctions::new(problem, saddle);
    let rhs = growth.g_x((&z.x - &saddle.x_star).norm()) + growth.g_lambda((&z.lambda - &saddle.lambda_star).norm());
    Ok(GrowthCheck {
        lhs,
        rhs,
        pass: lhs >= rhs - 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Component, Regularizer};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn half_norm(n: usize) -> Component {
        Component::quadratic("half-norm", Matrix::identity(n, n), Vector::zeros(n), 0.0).unwrap()
    }

    fn linear_constrained() -> (ProblemInstance, SaddleData) {
        let p = ProblemInstance::builder(1)
            .objective(Component::affine("x", v(&[1.0]), 0.0).unwrap())
            .component(Component::affine("1-x", v(&[-1.0]), 1.0).unwrap())
            .composer(ProxHandle::NonpositiveIndicator)
            .build()
            .unwrap();
        let s = SaddleData {
            x_star: v(&[1.0]),
            lambda_star: v(&[1.0, 1.0]),
            p_star: 1.0,
            grad_norm_bound_m: 1.0,
            d_x: 1.0,
            d_lambda: 1.0,
        };
        (p, s)
    }

    fn ball_constrained() -> ProblemInstance {
        ProblemInstance::builder(2)
            .objective(half_norm(2))
            .component(Component::affine("1-x1", v(&[-1.0, 0.0]), 1.0).unwrap())
            .composer(ProxHandle::NonpositiveIndicator)
            .build()
            .unwrap()
    }

    #[test]
    fn linear_constraint_gap_is_zero_at_unit_multiplier() {
        let (p, s) = linear_constrained();
        let x = v(&[1.001]);
        let gap = lagrangian_gap(&p, &x, &v(&[1.0, 1.0]), 1.0).unwrap();
        assert!(gap.abs() < 1e-15);
        let cert = certificate_check(&p, &x, &s, 1e-3, 1e-3).unwrap();
        assert!(cert.eps_r_pass);
        // lambda_hat stays on the sphere of radius r around lambda*
        assert!(((&cert.lambda_hat - &s.lambda_star).norm() - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn optimum_certifies_with_zero_gap() {
        let (p, s) = linear_constrained();
        let cert = certificate_check(&p, &s.x_star, &s, 0.1, 1e-8).unwrap();
        assert!(cert.degenerate);
        assert_eq!(cert.perturbation_norm, 0.0);
        assert_eq!(cert.lagrangian_gap, 0.0);
        assert!(cert.eps_r_pass);
    }

    #[test]
    fn sum_composer_reduces_to_suboptimality() {
        let p = ProblemInstance::builder(1).component(half_norm(1)).build().unwrap();
        let s = SaddleData {
            x_star: v(&[0.0]),
            lambda_star: v(&[1.0]),
            p_star: 0.0,
            grad_norm_bound_m: 1.0,
            d_x: 1.0,
            d_lambda: 1.0,
        };
        for (x, pass) in [(0.1, false), (0.01, true)] {
            let cert = certificate_check(&p, &v(&[x]), &s, 0.5, 1e-3).unwrap();
            assert_eq!(cert.lagrangian_gap, 0.5 * x * x);
            assert_eq!(cert.eps_r_pass, pass);
        }
    }

    #[test]
    fn max_face_projection() {
        let out = project_subdifferential(&ProxHandle::FiniteMax, &v(&[1.0, 1.0, 0.0]), &v(&[0.9, 0.3, 0.5]))
            .unwrap()
            .unwrap();
        assert!((out - v(&[0.8, 0.2, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn kkt_examples() {
        let p = ball_constrained();
        let at_opt = kkt_report(&p, &v(&[1.0, 0.0]), &v(&[1.0]), Some(0.5)).unwrap();
        assert_eq!(at_opt.lagrangian_stationarity_gap, 0.0);
        assert_eq!(at_opt.feasibility, 0.0);
        assert_eq!(at_opt.complementarity, 0.0);
        assert!(at_opt.dual_feasibility);
        let off = kkt_report(&p, &v(&[2.0, 0.0]), &v(&[1.0]), None).unwrap();
        assert_eq!(off.lagrangian_stationarity_gap, 1.0);
        assert_eq!(off.feasibility, 0.0);
        assert_eq!(off.complementarity, 1.0);
    }

    #[test]
    fn kkt_inactive_constraint() {
        let p = ProblemInstance::builder(1)
            .objective(half_norm(1))
            .component(Component::affine("x-1", v(&[1.0]), -1.0).unwrap())
            .composer(ProxHandle::NonpositiveIndicator)
            .build()
            .unwrap();
        let r = kkt_report(&p, &v(&[0.0]), &v(&[0.0]), None).unwrap();
        assert_eq!(r.lagrangian_stationarity_gap, 0.0);
        assert_eq!(r.complementarity, 0.0);
    }

    #[test]
    fn kkt_rejects_other_composers() {
        let p = ProblemInstance::builder(1).component(half_norm(1)).build().unwrap();
        assert!(kkt_report(&p, &v(&[0.0]), &v(&[1.0]), None).is_err());
    }

    #[test]
    fn growth_on_unit_quadratic() {
        let p = ProblemInstance::builder(1)
            .component(half_norm(1))
            .regularizer(Regularizer::zero())
            .build()
            .unwrap();
        let s = SaddleData {
            x_star: v(&[0.0]),
            lambda_star: v(&[1.0]),
            p_star: 0.0,
            grad_norm_bound_m: 1.0,
            d_x: 1.0,
            d_lambda: 1.0,
        };
        let at = PrimalDualPoint::anchored(&p, v(&[0.0]), v(&[1.0]), &v(&[0.0])).unwrap();
        let c = growth_check(&p, &at, &s).unwrap();
        assert_eq!((c.lhs, c.rhs, c.pass), (0.0, 0.0, true));
        let z = PrimalDualPoint::anchored(&p, v(&[1.0]), v(&[1.0]), &v(&[1.0])).unwrap();
        let c = growth_check(&p, &z, &s).unwrap();
        assert_eq!(c.rhs, 0.5);
        assert!(c.lhs >= 0.5 && c.pass);
    }
}
