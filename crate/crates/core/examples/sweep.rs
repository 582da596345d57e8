//! Accuracy sweep through the benchmark harness, with the fitted log-log slope.

use ufcm::bench::{sweep, ExperimentConfig, RPolicy, SolverKind};

fn main() -> ufcm::Result<()> {
    let mut cfg = ExperimentConfig::new("holder_power", SolverKind::Ufcm, 1e-2);
    cfg.params.p = Some(0.5);
    cfg.r = RPolicy::SqrtEps { scale: 1e-3 };
    cfg.sweep_epsilons = vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    cfg.trace_every = 1000;
    let out = sweep(&cfg)?;
    print!("{}", out.to_csv_string()?);
    if let Some(s) = out.slope {
        println!("slope {s:.3} (theory -0.8)");
    }
    Ok(())
}
