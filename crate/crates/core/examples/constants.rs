//! Aggregate smoothness and convexity constants across accuracies.

use ufcm::constants::{ada_convexity, ada_smoothness, holder_approx_constant};
use ufcm::model::{ConvexityProfile, HolderProfile};
use ufcm::Vector;

fn main() -> ufcm::Result<()> {
    // a Lipschitz piece, a Hölder piece and a smooth piece
    let holder = [HolderProfile::new(2.0, 0.0)?, HolderProfile::new(1.0, 0.5)?, HolderProfile::smooth(3.0)];
    let convexity = [ConvexityProfile::strong(1.0), ConvexityProfile::new(2.0, 3.0)?, ConvexityProfile::convex()];
    let lambda = Vector::from_column_slice(&[0.5, 1.0, 2.0]);
    let (r, d_x) = (0.1, 1.0);

    println!("{:>8} {:>14} {:>12}", "eps", "L_ADA", "mu_ADA");
    for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
        let l = ada_smoothness(&holder, &lambda, r, eps, d_x, None)?;
        let mu = ada_convexity(&convexity, &lambda, eps)?;
        println!("{eps:>8.0e} {l:>14.6e} {mu:>12.6}");
    }

    println!("\nL_delta for L = 1:");
    for p in [0.0, 0.5, 1.0] {
        let row: Vec<String> = [1.0, 0.1, 0.01].iter().map(|&d| format!("{:10.4}", holder_approx_constant(1.0, p, d))).collect();
        println!("  p = {p:.1}: {}", row.join(" "));
    }
    Ok(())
}
