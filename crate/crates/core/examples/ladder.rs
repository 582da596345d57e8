//! Doubling search over the smoothness constant when it is not known.

use std::ops::ControlFlow;

use ufcm::catalog;
use ufcm::rufcm::{doubling_ladder_until, LadderConfig};

fn main() -> ufcm::Result<()> {
    // 3 x^2, so the true constant is 6
    let e = catalog::scaled_square(3.0).with_computed_saddle()?;
    let s = e.problem.known_saddle().unwrap().clone();
    let eps = 1e-4;
    let cfg = LadderConfig { epsilon: eps, d_x: s.d_x, d_lambda: s.d_lambda, r: 1e-3, max_rungs: 10, trace_every: 1000 };
    let out = doubling_ladder_until(&e.problem, &e.x0, &e.lambda0, &cfg, |rung, _| {
        let gap = rung.objective - s.p_star;
        println!(
            "rung {} L = {:>4}  budget {:>5}  gap {:>10.3e}{}",
            rung.rung,
            rung.l_trial,
            rung.budget,
            gap,
            if rung.aborted { "  (aborted)" } else { "" }
        );
        if gap <= eps {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    println!("best rung {}, {} gradients in total", out.best_rung, out.gradient_evals);
    Ok(())
}
