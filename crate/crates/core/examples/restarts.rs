//! Restarted solver on the strongly convex QCQP, with the gap at each restart.

use ufcm::catalog;
use ufcm::constants::AdaConstants;
use ufcm::prelude::*;
use ufcm::rufcm::{boundary_gap, initial_gap, prox_budget};

fn main() -> ufcm::Result<()> {
    let e = catalog::instance("qcqp")?;
    let p = &e.problem;
    let s = p.known_saddle().unwrap().clone();
    let eps: f64 = 1e-5;
    let r = s.d_lambda * eps.sqrt();
    let ada = AdaConstants::compute(&p.holder_profiles(), &p.convexity_profiles(), &s.lambda_star, r, eps, s.d_x, false)?;
    let k = choose_k(initial_gap(p, &e.x0, &e.lambda0, &s)?.max(0.0), eps)?;
    let plan = restart_plan(eps, r, s.d_x, s.d_lambda, ada.l_ada, ada.mu_ada, p.composer().smoothness_lh(), k)?;
    println!("L_ADA {:.4}, mu_ADA {:.4}, K = {k}, budget {} gradients, {:.0} prox", ada.l_ada, ada.mu_ada, plan.gradient_budget(), prox_budget(&plan, s.grad_norm_bound_m));

    let base = SolverConfig::standard(ada.l_ada, s.d_x, s.d_lambda, eps)?;
    let out = rufcm(p, &e.x0, &e.lambda0, &plan, &base)?;
    for (i, st) in out.stages.iter().enumerate() {
        let bound = 2f64.powi((k - i - 1) as i32) * eps;
        println!("stage {i:>2}: T = {:>3}  gap {:.3e}  (target {bound:.1e})", plan.stages[i].horizon(), boundary_gap(p, st, &s)?);
    }
    println!("{} gradients, {} prox steps", out.gradient_evals, out.prox_evals);
    Ok(())
}
