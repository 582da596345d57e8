//! Builds a constrained problem from parts, finds a reference saddle and solves it.
//!
//! min |x - a|^2 / 2  s.t.  |x|^2 / 2 - 1/2 <= 0

use ufcm::catalog::CatalogEntry;
use ufcm::prelude::*;

fn main() -> ufcm::Result<()> {
    let a = Vector::from_column_slice(&[1.0, 2.0]);
    let objective = Component::quadratic("distance", Matrix::identity(2, 2), -&a, a.norm_squared() / 2.0)?;
    let ball = Component::quadratic("ball", Matrix::identity(2, 2), Vector::zeros(2), -0.5)?;
    let problem = ProblemInstance::builder(2)
        .id("custom")
        .objective(objective)
        .component(ball)
        .composer(ProxHandle::NonpositiveIndicator)
        .build()?;
    let entry = CatalogEntry {
        problem,
        x0: Vector::zeros(2),
        lambda0: Vector::from_column_slice(&[1.0, 0.0]),
        closed_form: None,
    }
    .with_computed_saddle()?;
    let saddle = entry.problem.known_saddle().unwrap().clone();
    println!("reference x* = {:.6?}, lambda* = {:.6?}, p* = {:.8}", saddle.x_star.as_slice(), saddle.lambda_star.as_slice(), saddle.p_star);

    let eps: f64 = 1e-4;
    let r = saddle.d_lambda * eps.sqrt();
    let ada = ufcm::constants::AdaConstants::compute(
        &entry.problem.holder_profiles(),
        &entry.problem.convexity_profiles(),
        &saddle.lambda_star,
        r,
        eps,
        saddle.d_x,
        false,
    )?;
    let mut cfg = SolverConfig::standard(ada.l_ada, saddle.d_x, saddle.d_lambda, eps)?;
    cfg.trace_every = cfg.horizon / 5;
    let out = ufcm(&entry.problem, &entry.x0, &entry.lambda0, &cfg)?;
    for row in &out.trace.rows {
        println!("t {:>5}  F {:.8}  violation {:.2e}", row.t, row.objective, row.feasibility);
    }
    let cert = certificate_check(&entry.problem, &out.x_bar, &saddle, r, eps)?;
    println!(
        "{} gradients, {} prox steps, gap {:.2e}, (eps, r)-optimal: {}",
        out.gradient_evals, out.prox_evals, cert.lagrangian_gap, cert.eps_r_pass
    );
    Ok(())
}
