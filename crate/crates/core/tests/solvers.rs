use std::ops::ControlFlow;

use approx::assert_relative_eq;
use ufcm::catalog::{self, CATALOG_IDS};
use ufcm::constants::ada_smoothness;
use ufcm::diagnostics::{certificate_check, kkt_report};
use ufcm::model::{objective_value, Component, HolderProfile, ProblemInstance};
use ufcm::oracle::{kkt_residual, reference_saddle_with, OracleMethod, OracleOptions};
use ufcm::prelude::*;
use ufcm::rufcm::{doubling_ladder_until, LadderConfig};

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

#[test]
fn holder_constant_tends_to_weighted_sum() {
    let lam = v(&[0.5, 2.0]);
    let smooth = ada_smoothness(&[HolderProfile::smooth(3.0), HolderProfile::smooth(1.0)], &lam, 0.1, 1e-2, 1.0, None).unwrap();
    let mut last_err = f64::INFINITY;
    for k in 2..=8 {
        let p = 1.0 - 10f64.powi(-k);
        let h = [HolderProfile { l: 3.0, p }, HolderProfile { l: 1.0, p }];
        let err = (ada_smoothness(&h, &lam, 0.1, 1e-2, 1.0, None).unwrap() - smooth).abs() / smooth;
        assert!(err <= last_err * 1.0000001, "k={k}: {err} after {last_err}");
        last_err = err;
    }
    assert!(last_err < 1e-5, "{last_err}");
}

#[test]
fn ufcm_reaches_accuracy_on_every_smooth_instance() {
    for id in ["affine_qp", "qcqp", "logsumexp", "squared_hinge"] {
        let e = catalog::instance(id).unwrap();
        let s = e.problem.known_saddle().unwrap().clone();
        let eps = 1e-3;
        let l = SolverConfig::standard(1.0, s.d_x, s.d_lambda, eps).unwrap().resolve_l_ada(&e.problem).unwrap();
        let cfg = SolverConfig::standard(l, s.d_x, s.d_lambda, eps).unwrap();
        let out = ufcm(&e.problem, &e.x0, &e.lambda0, &cfg).unwrap();
        assert_eq!(out.gradient_evals, cfg.horizon, "{id}");
        let cert = certificate_check(&e.problem, &out.x_bar, &s, cfg.r, eps).unwrap();
        assert!(cert.eps_r_pass, "{id}: {cert:?}");
    }
}

#[test]
fn single_restart_equals_plain_run() {
    let e = catalog::instance("qcqp").unwrap();
    let s = e.problem.known_saddle().unwrap().clone();
    let eps = 1e-2;
    let base = SolverConfig::standard(2.5, s.d_x, s.d_lambda, eps).unwrap();
    let plan = restart_plan(eps, base.r, s.d_x, s.d_lambda, 2.5, 2.0, f64::INFINITY, 1).unwrap();
    let restarted = rufcm(&e.problem, &e.x0, &e.lambda0, &plan, &base).unwrap();
    let mut single_cfg = base.clone();
    single_cfg.horizon = plan.stages[0].horizon();
    single_cfg.c = plan.stages[0].c;
    single_cfg.delta = plan.stages[0].delta;
    single_cfg.l_ada = Some(plan.l_ada);
    let single = ufcm(&e.problem, &e.x0, &e.lambda0, &single_cfg).unwrap();
    assert_eq!(restarted.x_bar, single.x_bar);
    assert_eq!(restarted.lambda_bar, single.lambda_bar);
    assert_eq!(restarted.gradient_evals, single.gradient_evals);
}

#[test]
fn restart_gradient_count_is_stage_budget_sum() {
    let e = catalog::instance("squared_hinge").unwrap();
    let s = e.problem.known_saddle().unwrap().clone();
    let eps = 1e-3;
    let base = SolverConfig::standard(1.1, s.d_x, s.d_lambda, eps).unwrap();
    let plan = restart_plan(eps, base.r, s.d_x, s.d_lambda, 1.1, 1.0, 2.0, 5).unwrap();
    let out = rufcm(&e.problem, &e.x0, &e.lambda0, &plan, &base).unwrap();
    let budget: usize = plan.stages.iter().map(|st| st.t_budget.ceil() as usize).sum();
    assert_eq!(out.gradient_evals, budget);
    assert_eq!(out.stages.len(), 5);
}

#[test]
fn ladder_on_small_constant_stops_at_first_rung() {
    // true L = 0.5 < 1
    let e = catalog::scaled_square(0.25).with_computed_saddle().unwrap();
    let s = e.problem.known_saddle().unwrap().clone();
    let eps = 1e-3;
    let cfg = LadderConfig { epsilon: eps, d_x: s.d_x, d_lambda: s.d_lambda, r: 1e-4, max_rungs: 5, trace_every: 10 };
    let mut first = None;
    doubling_ladder_until(&e.problem, &e.x0, &e.lambda0, &cfg, |r, _| {
        if r.objective - s.p_star <= eps {
            first = Some(r.rung);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .unwrap();
    assert_eq!(first, Some(0));
}

#[test]
fn ladder_records_aborted_rungs() {
    let e = catalog::scaled_square(3.0).with_computed_saddle().unwrap();
    let s = e.problem.known_saddle().unwrap().clone();
    let cfg = LadderConfig { epsilon: 1e-3, d_x: s.d_x, d_lambda: s.d_lambda, r: 1e-4, max_rungs: 4, trace_every: 100 };
    let out = doubling_ladder(&e.problem, &e.x0, &e.lambda0, &cfg).unwrap();
    assert!(out.rungs[0].aborted);
    assert!(!out.rungs[out.best_rung].aborted);
    assert!(out.rungs[3].l_trial >= 6.0 && !out.rungs[3].aborted);
    assert!(objective_value(&e.problem, &out.x_bar).unwrap() - s.p_star <= 1e-3);
}

#[test]
fn kkt_on_shifted_quadratic() {
    // min (x1-1)^2 + x2^2 s.t. x1 - 1 <= 0, unconstrained optimum (1, 0) lies on the boundary
    let g0 = Component::quadratic("obj", Matrix::identity(2, 2) * 2.0, v(&[-2.0, 0.0]), 1.0).unwrap();
    let g1 = Component::affine("x1-1", v(&[1.0, 0.0]), -1.0).unwrap();
    let p = ProblemInstance::builder(2)
        .objective(g0)
        .component(g1)
        .composer(ProxHandle::NonpositiveIndicator)
        .build()
        .unwrap();
    let rep = kkt_report(&p, &v(&[1.0, 0.0]), &v(&[0.0]), Some(0.0)).unwrap();
    assert!(rep.lagrangian_stationarity_gap.abs() < 1e-12);
    assert_eq!(rep.feasibility, 0.0);
    assert_eq!(rep.complementarity, 0.0);
}

#[test]
fn independent_oracles_agree_on_qcqp() {
    let e = catalog::bare("qcqp").unwrap();
    let opts = OracleOptions::default();
    let al = reference_saddle_with(OracleMethod::AugmentedLagrangian, &e.problem, &e.x0, &e.lambda0, &opts).unwrap();
    let stored = catalog::stored_fixture("qcqp").unwrap();
    assert!((al.saddle.x_star - stored.saddle().x_star).amax() < 1e-8);
    // nearest point of the unit ball to a = (2, 1) is a / |a|
    let a = v(&[2.0, 1.0]);
    let x = &a / a.norm();
    let direct = objective_value(&e.problem, &x).unwrap();
    assert_relative_eq!(direct, stored.p_star, max_relative = 1e-9);
}

#[test]
fn fixtures_match_regeneration() {
    for id in CATALOG_IDS {
        let e = catalog::bare(id).unwrap();
        let fresh = ufcm::oracle::Fixture::from_result(id, &e.reference().unwrap());
        let stored = catalog::stored_fixture(id).unwrap();
        assert!(stored.max_deviation(&fresh) <= 1e-9, "{id}");
        assert!(stored.residual <= 1e-8, "{id}: residual {}", stored.residual);
        let saddle = stored.saddle();
        let r = kkt_residual(&e.problem, &saddle.x_star, &saddle.lambda_star).unwrap();
        assert!(r <= 1e-8, "{id}: {r}");
    }
}

#[test]
fn fixture_files_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    for id in CATALOG_IDS {
        let f = catalog::stored_fixture(id).unwrap();
        let path = dir.path().join(format!("{id}.toml"));
        f.save(&path).unwrap();
        assert_eq!(ufcm::oracle::Fixture::load(&path).unwrap(), f);
    }
}

#[test]
fn hetero_sum_matches_closed_form() {
    let e = catalog::instance("hetero_sum").unwrap();
    let (x, _) = e.closed_form.clone().unwrap();
    assert_eq!(x, v(&[1.5, -1.0]));
    let s = e.problem.known_saddle().unwrap();
    assert!((&s.x_star - x).amax() < 1e-10);
    assert_relative_eq!(s.p_star, 1.5, max_relative = 1e-12);
}

#[test]
fn experiment_outputs_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ufcm::bench::ExperimentConfig::new("logsumexp", ufcm::bench::SolverKind::Ufcm, 1e-2);
    cfg.trace_every = 5;
    let out = ufcm::bench::run_experiment(&cfg).unwrap();
    let (csv, json) = out.write(dir.path()).unwrap();
    let back = Trace::read_csv(&csv).unwrap();
    assert_eq!(back, out.trace);
    let summary: ufcm::bench::RunSummary = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(summary.gradient_evals, out.summary.gradient_evals);
    assert!(summary.iterations_to_eps.unwrap() <= summary.predicted_n.ceil() as usize);
}

#[test]
fn smooth_sweep_slope() {
    let mut cfg = ufcm::bench::ExperimentConfig::new("affine_qp", ufcm::bench::SolverKind::Ufcm, 1e-2);
    cfg.sweep_epsilons = vec![1e-1, 1e-2, 1e-3];
    cfg.trace_every = 1000;
    let out = ufcm::bench::sweep(&cfg).unwrap();
    let budget_slope = ufcm::bench::loglog_slope(
        &out.outcomes.iter().map(|o| (o.summary.epsilon, o.summary.predicted_n)).collect::<Vec<_>>(),
    )
    .unwrap();
    assert!((budget_slope + 0.5).abs() <= 0.15, "{budget_slope}");
    assert!(out.slope.is_some());
}

#[test]
fn constants_report_lists_every_component() {
    let text = ufcm::bench::constants_report("hetero_sum", 1e-1, None).unwrap();
    assert!(text.contains("L_ADA general"));
    assert!(text.contains("active cell"));
    let e = catalog::instance("hetero_sum").unwrap();
    for c in e.problem.components() {
        assert!(text.contains(c.name()), "{}", c.name());
    }
}
