//! Desk-scale instances with start points and stored reference saddles.

use crate::error::{Error, Result};
use crate::model::{Component, ConvexityProfile, HolderProfile, ProblemInstance, Regularizer};
use crate::oracle::{hand_kkt, reference_saddle, Fixture, OracleOptions, OracleResult};
use crate::prox::ProxHandle;
use crate::{Matrix, Vector};

/// Ids of the instances that ship with a stored reference saddle.
pub const CATALOG_IDS: [&str; 6] = [
    "affine_qp",
    "qcqp",
    "max_smooth_lipschitz",
    "hetero_sum",
    "logsumexp",
    "squared_hinge",
];

/// An instance with its start point.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub problem: ProblemInstance,
    pub x0: Vector,
    pub lambda0: Vector,
    /// Closed-form saddle, when one is known.
    pub closed_form: Option<(Vector, Vector)>,
}

impl CatalogEntry {
    /// Runs the reference oracle (closed form when available).
    pub fn reference(&self) -> Result<OracleResult> {
        let opts = OracleOptions::default();
        match &self.closed_form {
            Some((x, l)) => hand_kkt(&self.problem, x.clone(), l.clone(), &self.x0, &self.lambda0, &opts),
            None => reference_saddle(&self.problem, &self.x0, &self.lambda0, &opts),
        }
    }

    /// Attaches the stored reference saddle.
    pub fn with_stored_saddle(mut self) -> Result<Self> {
        let fx = stored_fixture(self.problem.id())?;
        self.problem = self.problem.with_saddle(fx.saddle());
        Ok(self)
    }

    /// Attaches a freshly computed reference saddle.
    pub fn with_computed_saddle(mut self) -> Result<Self> {
        let r = self.reference()?;
        self.problem = self.problem.with_saddle(r.saddle);
        Ok(self)
    }
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

/// Fixture text compiled into the library.
pub fn stored_fixture_text(id: &str) -> Option<&'static str> {
    Some(match id {
        "affine_qp" => include_str!("../fixtures/affine_qp.toml"),
        "qcqp" => include_str!("../fixtures/qcqp.toml"),
        "max_smooth_lipschitz" => include_str!("../fixtures/max_smooth_lipschitz.toml"),
        "hetero_sum" => include_str!("../fixtures/hetero_sum.toml"),
        "logsumexp" => include_str!("../fixtures/logsumexp.toml"),
        "squared_hinge" => include_str!("../fixtures/squared_hinge.toml"),
        _ => return None,
    })
}

pub fn stored_fixture(id: &str) -> Result<Fixture> {
    let text = stored_fixture_text(id).ok_or_else(|| Error::Fixture(format!("no stored fixture for {id}")))?;
    Fixture::from_toml(text)
}

/// Catalog instance without a saddle attached.
pub fn bare(id: &str) -> Result<CatalogEntry> {
    match id {
        "affine_qp" => affine_qp(),
        "qcqp" => qcqp(),
        "max_smooth_lipschitz" => max_smooth_lipschitz(),
        "hetero_sum" => hetero_sum(),
        "logsumexp" => logsumexp(),
        "squared_hinge" => squared_hinge(),
        "square" => Ok(scaled_square(1.0)),
        "linear_constraint" => linear_constraint(),
        other => Err(Error::Config(format!("unknown instance {other}"))),
    }
}

/// Catalog instance with its stored reference saddle.
pub fn instance(id: &str) -> Result<CatalogEntry> {
    let entry = bare(id)?;
    if stored_fixture_text(id).is_some() {
        entry.with_stored_saddle()
    } else {
        entry.with_computed_saddle()
    }
}

fn weighted_distance(name: &str, w: &[f64], a: &[f64]) -> Result<Component> {
    let q = Matrix::from_diagonal(&v(w));
    let b = -(&q * v(a));
    let c = 0.5 * v(a).dot(&(&q * v(a)));
    Component::quadratic(name, q, b, c)
}

/// `1/2 sum w_i (x_i - 1)^2` subject to `x1 + x2 + x3 <= 1` (active) and `x1 - x3 <= 2` (inactive).
fn affine_qp() -> Result<CatalogEntry> {
    let problem = ProblemInstance::builder(3)
        .id("affine_qp")
        .objective(weighted_distance("weighted-distance", &[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0])?)
        .component(Component::affine("sum-cap", v(&[1.0, 1.0, 1.0]), -1.0)?)
        .component(Component::affine("spread", v(&[1.0, 0.0, -1.0]), -2.0)?)
        .composer(ProxHandle::NonpositiveIndicator)
        .build()?;
    Ok(CatalogEntry {
        problem,
        x0: Vector::zeros(3),
        lambda0: v(&[1.0, 0.0, 0.0]),
        closed_form: None,
    })
}

/// `1/2 |x - a|^2` subject to `1/2 (|x|^2 - 1) <= 0` with `a = (2, 1)`.
fn qcqp() -> Result<CatalogEntry> {
    let problem = ProblemInstance::builder(2)
        .id("qcqp")
        .objective(weighted_distance("distance-to-a", &[1.0, 1.0], &[2.0, 1.0])?)
        .component(Component::quadratic("unit-ball", Matrix::identity(2, 2), Vector::zeros(2), -0.5)?)
        .composer(ProxHandle::NonpositiveIndicator)
        .build()?;
    Ok(CatalogEntry {
        problem,
        x0: Vector::zeros(2),
        lambda0: v(&[1.0, 0.0]),
        closed_form: None,
    })
}

/// `max{x^2, |x - 2| - 1}` on the line.
fn max_smooth_lipschitz() -> Result<CatalogEntry> {
    let kink = Component::new(
        "shifted-abs",
        |x: &Vector| (x[0] - 2.0).abs() - 1.0,
        |x: &Vector| Vector::from_element(1, if x[0] >= 2.0 { 1.0 } else { -1.0 }),
        HolderProfile::lipschitz(1.0),
        ConvexityProfile::convex(),
    );
    let problem = ProblemInstance::builder(1)
        .id("max_smooth_lipschitz")
        .component(Component::quadratic("square", Matrix::from_element(1, 1, 2.0), Vector::zeros(1), 0.0)?)
        .component(kink)
        .composer(ProxHandle::FiniteMax)
        .build()?;
    Ok(CatalogEntry {
        problem,
        x0: v(&[2.0]),
        lambda0: v(&[0.5, 0.5]),
        closed_form: None,
    })
}

/// `kappa |x|_1` as a Lipschitz component.
pub fn l1_component(n: usize, kappa: f64) -> Component {
    Component::new(
        "l1",
        move |x: &Vector| kappa * x.iter().map(|v| v.abs()).sum::<f64>(),
        move |x: &Vector| x.map(|v| if v >= 0.0 { kappa } else { -kappa }),
        HolderProfile::lipschitz(kappa * (n as f64).sqrt()),
        ConvexityProfile::convex(),
    )
}

/// `1/2 |x - a|^2 + kappa |x|_1` with `a = (2, -1.5)`, `kappa = 1/2`.
fn hetero_sum() -> Result<CatalogEntry> {
    let a = [2.0, -1.5];
    let kappa = 0.5;
    let problem = ProblemInstance::builder(2)
        .id("hetero_sum")
        .component(weighted_distance("distance-to-a", &[1.0, 1.0], &a)?)
        .component(l1_component(2, kappa))
        .build()?;
    let x_star = v(&[a[0] - kappa, a[1] + kappa]);
    Ok(CatalogEntry {
        problem,
        x0: Vector::zeros(2),
        lambda0: v(&[1.0, 1.0]),
        closed_form: Some((x_star, v(&[1.0, 1.0]))),
    })
}

/// Smoothed max (`eta = 1/2`) of three distances to points in the plane.
fn logsumexp() -> Result<CatalogEntry> {
    let centers = [[1.0, 0.0], [-1.0, 0.5], [0.0, -1.0]];
    let mut b = ProblemInstance::builder(2).id("logsumexp").composer(ProxHandle::LogSumExp { eta: 0.5 });
    for (j, c) in centers.iter().enumerate() {
        b = b.component(weighted_distance(&format!("distance-{j}"), &[1.0, 1.0], c)?);
    }
    Ok(CatalogEntry {
        problem: b.build()?,
        x0: v(&[1.0, 1.0]),
        lambda0: Vector::from_element(3, 1.0 / 3.0),
        closed_form: None,
    })
}

/// `1/2 |x - (2, 2)|^2 + max(x1 + x2 - 1, 0)^2 + max(x1 - 2, 0)^2`.
fn squared_hinge() -> Result<CatalogEntry> {
    let problem = ProblemInstance::builder(2)
        .id("squared_hinge")
        .objective(weighted_distance("distance-to-a", &[1.0, 1.0], &[2.0, 2.0])?)
        .component(Component::affine("sum-cap", v(&[1.0, 1.0]), -1.0)?)
        .component(Component::affine("x1-cap", v(&[1.0, 0.0]), -2.0)?)
        .composer(ProxHandle::SquaredHinge { eta: 1.0 })
        .build()?;
    Ok(CatalogEntry {
        problem,
        x0: Vector::zeros(2),
        lambda0: v(&[1.0, 0.0, 0.0]),
        closed_form: None,
    })
}

/// `scale * x^2` on the line, `L = 2 scale`.
pub fn scaled_square(scale: f64) -> CatalogEntry {
    let g = Component::quadratic("scaled-square", Matrix::from_element(1, 1, 2.0 * scale), Vector::zeros(1), 0.0)
        .expect("valid quadratic");
    let problem = ProblemInstance::builder(1).id("square").component(g).build().expect("valid instance");
    CatalogEntry {
        problem,
        x0: v(&[1.0]),
        lambda0: v(&[1.0]),
        closed_form: Some((v(&[0.0]), v(&[1.0]))),
    }
}

/// `min x` subject to `1 - x <= 0`.
fn linear_constraint() -> Result<CatalogEntry> {
    let problem = ProblemInstance::builder(1)
        .id("linear_constraint")
        .objective(Component::affine("x", v(&[1.0]), 0.0)?)
        .component(Component::affine("1-x", v(&[-1.0]), 1.0)?)
        .composer(ProxHandle::NonpositiveIndicator)
        .build()?;
    Ok(CatalogEntry {
        problem,
        x0: v(&[0.0]),
        lambda0: v(&[1.0, 0.0]),
        closed_form: Some((v(&[1.0]), v(&[1.0, 1.0]))),
    })
}

/// `kappa / (1 + p) (x + 1)^(1 + p)` over `x >= 0`, minimized at the boundary
/// with nonzero slope, so `F(x) - p*` is linear in `|x - x*|`.
/// The gradient is `(kappa 2^(1-p), p)`-Hölder.
pub fn holder_power(p: f64, kappa: f64) -> Result<CatalogEntry> {
    let h = HolderProfile::new(kappa * 2f64.powf(1.0 - p), p)?;
    let g = Component::new(
        "holder-power",
        move |x: &Vector| kappa * (x[0] + 1.0).abs().powf(1.0 + p) / (1.0 + p),
        move |x: &Vector| {
            let s = x[0] + 1.0;
            Vector::from_element(1, kappa * s.abs().powf(p) * if s >= 0.0 { 1.0 } else { -1.0 })
        },
        h,
        ConvexityProfile::convex(),
    );
    let problem = ProblemInstance::builder(1)
        .id(format!("holder_power_p{p}"))
        .component(g)
        .regularizer(Regularizer::new(ProxHandle::uniform_box(1, 0.0, f64::INFINITY)))
        .build()?;
    let entry = CatalogEntry {
        problem,
        x0: v(&[1.0]),
        lambda0: v(&[1.0]),
        closed_form: Some((v(&[0.0]), v(&[1.0]))),
    };
    entry.with_computed_saddle()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_id_builds() {
        for id in CATALOG_IDS {
            let e = bare(id).unwrap();
            assert_eq!(e.problem.id(), id);
            assert_eq!(e.x0.len(), e.problem.n());
            assert_eq!(e.lambda0.len(), e.problem.m());
        }
        assert!(bare("nope").is_err());
    }

    #[test]
    fn holder_power_saddle() {
        let e = holder_power(0.5, 2.0).unwrap();
        let s = e.problem.known_saddle().unwrap();
        assert_eq!(s.p_star, 2.0 / 1.5);
        assert_eq!(s.d_x, 1.0);
    }
}
