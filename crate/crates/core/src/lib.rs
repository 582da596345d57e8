//! Universal fast composite method for `min h(g_1(x), ..., g_m(x)) + u(x)`.
//!
//! The crate houses the problem model and extended Lagrangian ([`model`]),
//! an exact prox catalog ([`prox`]), the aggregate constants ([`constants`]),
//! the sliding solver ([`ufcm`]) and its restarted variant ([`rufcm`]),
//! solution diagnostics ([`diagnostics`]), independent reference oracles
//! ([`oracle`]) and a benchmark harness ([`bench`]).
//!
//! ```
//! use ufcm::prelude::*;
//!
//! let g = Component::quadratic("x^2", Matrix::from_element(1, 1, 2.0), Vector::zeros(1), 0.0).unwrap();
//! let problem = ProblemInstance::builder(1).component(g).build().unwrap();
//! let x = Vector::from_element(1, 2.0);
//! assert_eq!(objective_value(&problem, &x).unwrap(), 4.0);
//! ```

pub mod bench;
pub mod catalog;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod oracle;
pub mod prox;
pub mod rufcm;
pub mod schedule;
pub mod trace;
pub mod ufcm;

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::constants::{ada_convexity, ada_smoothness, holder_approx_constant, AdaConstants};
    pub use crate::error::{Error, Result};
    pub use crate::diagnostics::{certificate_check, growth_check, kkt_report, Certificate, KktReport};
    pub use crate::model::{
        gap_value, lagrangian_value, objective_value, relaxed_objective, AnchoredConjugate, Component, Composer, ConvexityProfile,
        HolderProfile, PrimalDualPoint, ProblemInstance, Regularizer, SaddleData,
    };
    pub use crate::prox::{conjugate_prox, project_simplex, prox_step, ProxHandle};
    pub use crate::schedule::{build_schedule, check_conditions, Condition, ConditionReport, OuterSchedule};
    pub use crate::trace::{Trace, TraceRow, TRACE_HEADER};
    pub use crate::ufcm::{ufcm, ufcm_observed, NuNorm, SolverConfig, UfcmOutput};
    pub use crate::rufcm::{choose_k, doubling_ladder, restart_plan, rufcm, LadderConfig, RestartPlan};
    pub use crate::{Matrix, Vector};
}
