//! Aggregate smoothness and convexity constants.
//!
//! Both implicit definitions reduce to finding the positive root of
//! `sum_j a_j x^(-k_j) = 1` with `a_j >= 0` and `k_j > 0`, which is strictly
//! decreasing in `x`.

use crate::error::{check_positive, Error, Result};
use crate::model::{ConvexityProfile, HolderProfile};
use crate::Vector;

const RESIDUAL_TOL: f64 = 1e-10;

/// Constants realized for one `(eps, r, D_x)` configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaConstants {
    pub l_ada: f64,
    pub mu_ada: f64,
    pub epsilon: f64,
    pub r: f64,
    pub d_x: f64,
    pub delta_used: f64,
}

impl AdaConstants {
    /// Solves `mu_ada` first, then `l_ada` (optionally in the fully general form).
    pub fn compute(
        holder: &[HolderProfile],
        convexity: &[ConvexityProfile],
        lambda_star: &Vector,
        r: f64,
        epsilon: f64,
        d_x: f64,
        fully_general: bool,
    ) -> Result<Self> {
        let mu_ada = ada_convexity(convexity, lambda_star, epsilon)?;
        let mu = if fully_general && mu_ada > 0.0 { Some(mu_ada) } else { None };
        let l_ada = ada_smoothness(holder, lambda_star, r, epsilon, d_x, mu)?;
        Ok(Self {
            l_ada,
            mu_ada,
            epsilon,
            r,
            d_x,
            delta_used: delta_used(l_ada, epsilon, d_x),
        })
    }
}

/// `delta = eps / sqrt(24 L D_x^2 / eps)`.
pub fn delta_used(l_ada: f64, epsilon: f64, d_x: f64) -> f64 {
    epsilon / (24.0 * l_ada * d_x * d_x / epsilon).sqrt()
}

/// `L_delta = [((1-p)/(1+p)) / delta]^((1-p)/(1+p)) * L^(2/(1+p))`, with `0^0 = 1`.
pub fn holder_approx_constant(l: f64, p: f64, delta: f64) -> f64 {
    let e = (1.0 - p) / (1.0 + p);
    let bracket = if e == 0.0 { 1.0 } else { (e / delta).powf(e) };
    bracket * l.powf(2.0 / (1.0 + p))
}

/// One term `a x^(-k)` of a power-sum equation.
#[derive(Clone, Copy, Debug)]
struct PowerTerm {
    a: f64,
    k: f64,
}

/// `L_ADA`: weighted sum when every `p_j = 1`, otherwise the positive root of
/// `L = sum_j [c_j m sqrt(L) W / eps]^(c_j) [(lambda_j + r) L_j]^(2/(1+p_j))`
/// where `c_j = (1-p_j)/(1+p_j)` and `W = 2 sqrt(6) D_x / sqrt(eps)`, capped by
/// `4 sqrt(6) / sqrt(mu_ada)` when `mu_ada` is supplied.
pub fn ada_smoothness(
    holder: &[HolderProfile],
    lambda_star: &Vector,
    r: f64,
    epsilon: f64,
    d_x: f64,
    mu_ada: Option<f64>,
) -> Result<f64> {
    if holder.len() != lambda_star.len() {
        return Err(Error::Dimension {
            context: "holder profiles vs multipliers",
            expected: lambda_star.len(),
            got: holder.len(),
        });
    }
    check_positive("r", r)?;
    check_positive("epsilon", epsilon)?;
    check_positive("D_x", d_x)?;
    if lambda_star.iter().any(|&l| l < 0.0) {
        return Err(Error::InvalidParameter("lambda* must be nonnegative".into()));
    }
    let weights: Vec<f64> = holder.iter().zip(lambda_star.iter()).map(|(h, l)| (l + r) * h.l).collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::Degenerate("every (lambda_j + r) L_j vanishes".into()));
    }
    if holder.iter().all(|h| h.p == 1.0) {
        return Ok(weights.iter().sum());
    }
    let m = holder.len() as f64;
    let mut width = 2.0 * 6f64.sqrt() * d_x / epsilon.sqrt();
    if let Some(mu) = mu_ada {
        if mu > 0.0 {
            width = width.min(4.0 * 6f64.sqrt() / mu.sqrt());
        }
    }
    let terms: Vec<PowerTerm> = holder
        .iter()
        .zip(weights.iter())
        .filter(|(_, &w)| w > 0.0)
        .map(|(h, &w)| {
            let c = (1.0 - h.p) / (1.0 + h.p);
            let bracket = if c == 0.0 { 1.0 } else { (c * m * width / epsilon).powf(c) };
            PowerTerm {
                a: bracket * w.powf(2.0 / (1.0 + h.p)),
                k: (1.0 + 3.0 * h.p) / (2.0 * (1.0 + h.p)),
            }
        })
        .collect();
    solve_power_sum(&terms)
}

/// Residual `sum_j a_j L^(-k_j) - 1` of the smoothness equation at a trial `L`.
///
/// Strictly decreasing in `L`; positive below the root, negative above.
pub fn ada_smoothness_residual(
    holder: &[HolderProfile],
    lambda_star: &Vector,
    r: f64,
    epsilon: f64,
    d_x: f64,
    trial: f64,
) -> f64 {
    let m = holder.len() as f64;
    let width = 2.0 * 6f64.sqrt() * d_x / epsilon.sqrt();
    let mut acc = 0.0;
    for (h, l) in holder.iter().zip(lambda_star.iter()) {
        let w = (l + r) * h.l;
        if w == 0.0 {
            continue;
        }
        let c = (1.0 - h.p) / (1.0 + h.p);
        let bracket = if c == 0.0 { 1.0 } else { (c * m * width / epsilon).powf(c) };
        let k = (1.0 + 3.0 * h.p) / (2.0 * (1.0 + h.p));
        acc += bracket * w.powf(2.0 / (1.0 + h.p)) * trial.powf(-k);
    }
    acc - 1.0
}

/// `mu_ADA`: positive root of `mu/2 = sum_j lambda_j mu_j/(q_j+1) (eps/mu)^((q_j-1)/2)`,
/// or 0 when no component carries curvature.
pub fn ada_convexity(convexity: &[ConvexityProfile], lambda_star: &Vector, epsilon: f64) -> Result<f64> {
    if convexity.len() != lambda_star.len() {
        return Err(Error::Dimension {
            context: "convexity profiles vs multipliers",
            expected: lambda_star.len(),
            got: convexity.len(),
        });
    }
    check_positive("epsilon", epsilon)?;
    if lambda_star.iter().any(|&l| l < 0.0) {
        return Err(Error::InvalidParameter("lambda* must be nonnegative".into()));
    }
    let weighted: Vec<f64> = convexity.iter().zip(lambda_star.iter()).map(|(c, l)| l * c.mu).collect();
    if weighted.iter().all(|&w| w == 0.0) {
        return Ok(0.0);
    }
    if convexity.iter().all(|c| c.q == 1.0) {
        return Ok(weighted.iter().sum());
    }
    let terms: Vec<PowerTerm> = convexity
        .iter()
        .zip(weighted.iter())
        .filter(|(_, &w)| w > 0.0)
        .map(|(c, &w)| PowerTerm {
            a: 2.0 * w / (c.q + 1.0) * epsilon.powf((c.q - 1.0) / 2.0),
            k: (c.q + 1.0) / 2.0,
        })
        .collect();
    solve_power_sum(&terms)
}

/// Positive root of `sum_j a_j x^(-k_j) = 1` by log-scale bisection and Newton polish.
fn solve_power_sum(terms: &[PowerTerm]) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::Degenerate("no positive terms".into()));
    }
    // work in s = ln x; f(s) = sum exp(ln a_j - k_j s) - 1
    let f = |s: f64| -> f64 { terms.iter().map(|t| (t.a.ln() - t.k * s).exp()).sum::<f64>() - 1.0 };
    let df = |s: f64| -> f64 { -terms.iter().map(|t| t.k * (t.a.ln() - t.k * s).exp()).sum::<f64>() };
    let count = terms.len() as f64;
    // the root lies between max_j a_j^(1/k_j) and max_j (count a_j)^(1/k_j)
    let lower = terms.iter().map(|t| t.a.ln() / t.k).fold(f64::NEG_INFINITY, f64::max);
    let upper = terms.iter().map(|t| (count * t.a).ln() / t.k).fold(f64::NEG_INFINITY, f64::max);
    let mut lo = (1e-12f64).ln().min(lower - 1.0);
    let mut hi = (upper.exp().max(1.0) * 1e6).ln().max(upper + 1.0);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NonFinite("power-sum bracket".into()));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..3 {
        let fs = f(s);
        let next = s - fs / df(s);
        if next.is_finite() && f(next).abs() < fs.abs() {
            s = next;
        }
    }
    let root = s.exp();
    let residual = f(s).abs();
    if residual > RESIDUAL_TOL {
        return Err(Error::Degenerate(format!("power-sum residual {residual:e} above tolerance")));
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn holder_constant_examples() {
        assert_eq!(holder_approx_constant(2.0, 0.0, 0.5), 8.0);
        assert_eq!(holder_approx_constant(5.0, 1.0, 1e-9), 5.0);
        assert_relative_eq!(holder_approx_constant(1.0, 0.5, 1.0), (1.0f64 / 3.0).cbrt(), max_relative = 1e-15);
        assert_relative_eq!(holder_approx_constant(1.0, 0.5, 1.0), 0.693361, epsilon = 1e-6);
    }

    #[test]
    fn smooth_weighted_sum() {
        let l = ada_smoothness(&[HolderProfile::smooth(10.0)], &v(&[0.5]), 0.1, 1e-2, 1.0, None).unwrap();
        assert_relative_eq!(l, 6.0, max_relative = 1e-15);
    }

    #[test]
    fn single_component_closed_form() {
        let (p, l, eps, d, r) = (0.3, 2.0, 1e-2, 1.5, 1e-3);
        let got = ada_smoothness(&[HolderProfile { l, p }], &v(&[1.0]), r, eps, d, None).unwrap();
        let c = (1.0 - p) / (1.0 + p);
        let want = (1.0 + r).powf(4.0 / (1.0 + 3.0 * p))
            * (c * 2.0 * 6f64.sqrt() * d / (eps * eps.sqrt())).powf((2.0 - 2.0 * p) / (1.0 + 3.0 * p))
            * l.powf(4.0 / (1.0 + 3.0 * p));
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }

    #[test]
    fn root_is_a_fixed_point_of_the_holder_constant() {
        // L_ADA equals L_delta summed at delta = eps / sqrt(24 L D^2 / eps) with m folded in
        let holder = [HolderProfile { l: 3.0, p: 0.0 }, HolderProfile { l: 1.0, p: 0.6 }];
        let lam = v(&[0.7, 1.2]);
        let (r, eps, d) = (0.05, 1e-2, 2.0);
        let l = ada_smoothness(&holder, &lam, r, eps, d, None).unwrap();
        let delta = delta_used(l, eps, d) / holder.len() as f64;
        let sum: f64 = holder
            .iter()
            .zip(lam.iter())
            .map(|(h, li)| holder_approx_constant((li + r) * h.l, h.p, delta))
            .sum();
        assert_relative_eq!(l, sum, max_relative = 1e-10);
    }

    #[test]
    fn residual_signs_bracket_root() {
        let holder = [HolderProfile { l: 1.0, p: 0.25 }];
        let lam = v(&[1.0]);
        let l = ada_smoothness(&holder, &lam, 0.1, 1e-3, 1.0, None).unwrap();
        assert!(ada_smoothness_residual(&holder, &lam, 0.1, 1e-3, 1.0, l * (1.0 - 1e-3)) > 0.0);
        assert!(ada_smoothness_residual(&holder, &lam, 0.1, 1e-3, 1.0, l * (1.0 + 1e-3)) < 0.0);
    }

    #[test]
    fn degenerate_smoothness() {
        let r = ada_smoothness(&[HolderProfile::smooth(0.0)], &v(&[1.0]), 0.1, 1e-2, 1.0, None);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn convexity_examples() {
        let c = [ConvexityProfile::strong(3.0), ConvexityProfile::strong(1.0)];
        assert_eq!(ada_convexity(&c, &v(&[1.0, 2.0]), 1e-2).unwrap(), 5.0);
        let z = [ConvexityProfile::convex(), ConvexityProfile::convex()];
        assert_eq!(ada_convexity(&z, &v(&[1.0, 2.0]), 1e-2).unwrap(), 0.0);
        let (mu, q, eps) = (2.0, 3.0, 1e-2);
        let got = ada_convexity(&[ConvexityProfile { mu, q }], &v(&[1.0]), eps).unwrap();
        let want = (2.0 * mu / (1.0 + q)).powf(2.0 / (1.0 + q)) * eps.powf((q - 1.0) / (q + 1.0));
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }

    #[test]
    fn fully_general_width_only_tightens() {
        let holder = [HolderProfile { l: 1.0, p: 0.0 }];
        let lam = v(&[1.0]);
        let plain = ada_smoothness(&holder, &lam, 0.1, 1e-3, 10.0, None).unwrap();
        let capped = ada_smoothness(&holder, &lam, 0.1, 1e-3, 10.0, Some(1.0)).unwrap();
        assert!(capped <= plain);
    }

    #[test]
    fn delta_used_matches_definition() {
        let c = AdaConstants::compute(
            &[HolderProfile { l: 1.0, p: 0.5 }],
            &[ConvexityProfile::convex()],
            &v(&[1.0]),
            0.01,
            1e-2,
            1.0,
            false,
        )
        .unwrap();
        assert_relative_eq!(c.delta_used, 1e-2 / (24.0 * c.l_ada / 1e-2).sqrt(), max_relative = 1e-15);
    }
}
