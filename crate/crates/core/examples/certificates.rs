//! Optimality certificate, KKT residuals and growth check at a few points.

use ufcm::catalog;
use ufcm::diagnostics::{certificate_check, growth_check, kkt_report};
use ufcm::model::PrimalDualPoint;
use ufcm::Vector;

fn main() -> ufcm::Result<()> {
    let e = catalog::instance("affine_qp")?;
    let p = &e.problem;
    let s = p.known_saddle().unwrap().clone();
    let (eps, r) = (1e-3, 1e-2);
    for shift in [0.0, 1e-3, 1e-1] {
        let x = s.x_star.add_scalar(shift);
        let c = certificate_check(p, &x, &s, r, eps)?;
        let k = kkt_report(p, &x, &s.lambda_star, Some(s.p_star))?;
        println!(
            "shift {shift:.0e}: gap {:.2e}, |g - g_hat| {:.2e}, pass {} | stationarity {:.2e}, feasibility {:.2e}, complementarity {:.2e}",
            c.lagrangian_gap, c.perturbation_norm, c.eps_r_pass, k.lagrangian_stationarity_gap, k.feasibility, k.complementarity
        );
    }

    let q = catalog::instance("qcqp")?;
    let qs = q.problem.known_saddle().unwrap().clone();
    let x = &qs.x_star + Vector::from_column_slice(&[0.3, -0.2]);
    let z = PrimalDualPoint::anchored(&q.problem, x.clone(), qs.lambda_star.clone(), &x)?;
    let g = growth_check(&q.problem, &z, &qs)?;
    println!("qcqp growth: Q = {:.4e} >= G = {:.4e}: {}", g.lhs, g.rhs, g.pass);
    Ok(())
}
