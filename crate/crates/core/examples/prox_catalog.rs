//! Every catalog operator on one input, with the Moreau identity residual.

use ufcm::prox::{conjugate_prox, project_simplex, prox_step, ProxHandle};
use ufcm::Vector;

fn main() -> ufcm::Result<()> {
    let x = Vector::from_column_slice(&[1.5, -0.5, 0.25]);
    let tau = 2.0;
    let kinds = [
        ProxHandle::Zero,
        ProxHandle::IdentitySum,
        ProxHandle::NonpositiveIndicator,
        ProxHandle::FiniteMax,
        ProxHandle::LogSumExp { eta: 0.5 },
        ProxHandle::SquaredHinge { eta: 1.0 },
        ProxHandle::uniform_box(3, 0.0, 1.0),
        ProxHandle::L2Ball { center: Vector::zeros(3), radius: 1.0 },
        ProxHandle::L1 { weight: 1.0 },
        ProxHandle::Quadratic { weight: 1.0 },
    ];
    for h in &kinds {
        let p = prox_step(h, tau, &x)?;
        let d = conjugate_prox(h, 1.0 / tau, &(&x * tau))?;
        let moreau = (&p + &d / tau - &x).norm();
        println!("{:<22} prox {:<36} moreau {moreau:.1e}", format!("{h:?}"), format!("{:.4?}", p.as_slice()));
    }
    println!("simplex({:?}) = {:.4?}", x.as_slice(), project_simplex(&x)?.as_slice());
    Ok(())
}
