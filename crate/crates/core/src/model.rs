//! Composite problem `h(g_1(x), ..., g_m(x)) + u(x)`, its extended Lagrangian
//! and the gap function.

use std::fmt;
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::prox::{self, ProxHandle, DOMAIN_TOL};
use crate::{Matrix, Vector};

/// Hölder profile `(L, p)` of a gradient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderProfile {
    pub l: f64,
    pub p: f64,
}

impl HolderProfile {
    pub fn new(l: f64, p: f64) -> Result<Self> {
        if !(l >= 0.0 && l.is_finite()) || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("holder profile needs L >= 0 and p in [0,1], got ({l}, {p})")));
        }
        Ok(Self { l, p })
    }

    /// Lipschitz gradient with constant `l`.
    pub fn smooth(l: f64) -> Self {
        Self { l, p: 1.0 }
    }

    /// A `lipschitz`-Lipschitz function: any two subgradients differ by at most twice the constant.
    pub fn lipschitz(lipschitz: f64) -> Self {
        Self { l: 2.0 * lipschitz, p: 0.0 }
    }
}

/// Uniform convexity profile `(mu, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityProfile {
    pub mu: f64,
    pub q: f64,
}

impl ConvexityProfile {
    pub fn new(mu: f64, q: f64) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) || !(q >= 1.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("convexity profile needs mu >= 0 and q >= 1, got ({mu}, {q})")));
        }
        Ok(Self { mu, q })
    }

    pub fn convex() -> Self {
        Self { mu: 0.0, q: 1.0 }
    }

    pub fn strong(mu: f64) -> Self {
        Self { mu, q: 1.0 }
    }
}

pub type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Known algebraic form of a component, used by the exact oracles.
#[derive(Clone, Debug)]
pub enum Shape {
    /// `1/2 x'Qx + b'x + c`
    Quadratic { q: Matrix, b: Vector, c: f64 },
    Opaque,
}

/// A convex component `g_j` with its value and (sub)gradient oracles.
#[derive(Clone)]
pub struct Component {
    name: String,
    value: ValueFn,
    gradient: GradFn,
    holder: HolderProfile,
    convexity: ConvexityProfile,
    shape: Shape,
}

impl fmt::Debug for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Component")
            .field("name", &self.name)
            .field("holder", &self.holder)
            .field("convexity", &self.convexity)
            .finish()
    }
}

impl Component {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        holder: HolderProfile,
        convexity: ConvexityProfile,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            holder,
            convexity,
            shape: Shape::Opaque,
        }
    }

    /// `1/2 x'Qx + b'x + c` with `Q` symmetric positive semidefinite.
    ///
    /// The Hölder and convexity profiles are read off the spectrum of `Q`.
    pub fn quadratic(name: impl Into<String>, q: Matrix, b: Vector, c: f64) -> Result<Self> {
        let n = b.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::Dimension {
                context: "quadratic component",
                expected: n,
                got: q.nrows(),
            });
        }
        if (&q - q.transpose()).amax() > 1e-12 * (1.0 + q.amax()) {
            return Err(Error::InvalidParameter("quadratic form must be symmetric".into()));
        }
        let (lo, hi) = if n == 0 {
            (0.0, 0.0)
        } else {
            let eig = SymmetricEigen::new(q.clone()).eigenvalues;
            (eig.min(), eig.max())
        };
        if lo < -1e-12 * (1.0 + hi.abs()) {
            return Err(Error::InvalidParameter(format!("quadratic form is not convex (eigenvalue {lo})")));
        }
        let (qv, bv) = (q.clone(), b.clone());
        let (qg, bg) = (q.clone(), b.clone());
        Ok(Self {
            name: name.into(),
            value: Arc::new(move |x: &Vector| 0.5 * x.dot(&(&qv * x)) + bv.dot(x) + c),
            gradient: Arc::new(move |x: &Vector| &qg * x + &bg),
            holder: HolderProfile::smooth(hi.max(0.0)),
            convexity: ConvexityProfile::strong(lo.max(0.0)),
            shape: Shape::Quadratic { q, b, c },
        })
    }

    /// `a'x + c`
    pub fn affine(name: impl Into<String>, a: Vector, c: f64) -> Result<Self> {
        let n = a.len();
        Self::quadratic(name, Matrix::zeros(n, n), a, c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x)
    }

    pub fn holder(&self) -> HolderProfile {
        self.holder
    }

    pub fn convexity(&self) -> ConvexityProfile {
        self.convexity
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }
}

/// Convex, componentwise nondecreasing outer function `h`.
#[derive(Clone, Debug)]
pub struct Composer {
    handle: ProxHandle,
}

impl Composer {
    pub fn new(handle: ProxHandle) -> Result<Self> {
        if !handle.is_monotone() {
            return Err(Error::InvalidParameter(format!("composer {handle:?} is not componentwise nondecreasing")));
        }
        Ok(Self { handle })
    }

    pub fn handle(&self) -> &ProxHandle {
        &self.handle
    }

    pub fn value(&self, z: &Vector) -> f64 {
        self.handle.value(z)
    }

    pub fn prox(&self, z: &Vector, tau: f64) -> Result<Vector> {
        prox::prox_step(&self.handle, tau, z)
    }

    pub fn conjugate(&self, lambda: &Vector) -> Result<f64> {
        self.handle.conjugate_value(lambda)
    }

    pub fn conjugate_prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        prox::conjugate_prox(&self.handle, tau, x)
    }

    pub fn smoothness_lh(&self) -> f64 {
        self.handle.smoothness()
    }

    pub fn monotone(&self) -> bool {
        self.handle.is_monotone()
    }

    /// True when component 0 is an objective term folded into the composer.
    pub fn absorbs_objective(&self) -> bool {
        matches!(self.handle, ProxHandle::Absorbed(_))
    }
}

/// Simple regularizer `u` whose prox folds in the projection onto `X`.
#[derive(Clone, Debug)]
pub struct Regularizer {
    handle: ProxHandle,
}

impl Regularizer {
    pub fn new(handle: ProxHandle) -> Self {
        Self { handle }
    }

    pub fn zero() -> Self {
        Self { handle: ProxHandle::Zero }
    }

    pub fn handle(&self) -> &ProxHandle {
        &self.handle
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.handle.value(x)
    }

    pub fn prox(&self, x: &Vector, tau: f64) -> Result<Vector> {
        prox::prox_step(&self.handle, tau, x)
    }
}

/// Ground-truth saddle data for an instance and a configured start.
#[derive(Clone, Debug, PartialEq)]
pub struct SaddleData {
    pub x_star: Vector,
    pub lambda_star: Vector,
    pub p_star: f64,
    pub grad_norm_bound_m: f64,
    pub d_x: f64,
    pub d_lambda: f64,
}

/// The composite problem after the objective component has been absorbed.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    id: String,
    components: Vec<Component>,
    composer: Composer,
    regularizer: Regularizer,
    n: usize,
    known_saddle: Option<SaddleData>,
}

/// Builder that performs the `g_0` rewrite.
pub struct ProblemBuilder {
    id: String,
    n: usize,
    objective: Option<Component>,
    components: Vec<Component>,
    composer: ProxHandle,
    regularizer: Regularizer,
}

impl ProblemBuilder {
    pub fn id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Objective term `g_0`; the composer becomes `z_0 + h(z_1, ...)`.
    pub fn objective(mut self, g0: Component) -> Self {
        self.objective = Some(g0);
        self
    }

    pub fn component(mut self, g: Component) -> Self {
        self.components.push(g);
        self
    }

    pub fn composer(mut self, h: ProxHandle) -> Self {
        self.composer = h;
        self
    }

    pub fn regularizer(mut self, u: Regularizer) -> Self {
        self.regularizer = u;
        self
    }

    pub fn build(self) -> Result<ProblemInstance> {
        let mut components = Vec::with_capacity(self.components.len() + 1);
        let composer = match self.objective {
            Some(g0) => {
                components.push(g0);
                Composer::new(ProxHandle::absorbed(self.composer))?
            }
            None => Composer::new(self.composer)?,
        };
        components.extend(self.components);
        if components.is_empty() {
            return Err(Error::InvalidParameter("a problem needs at least one component".into()));
        }
        composer.handle().validate(components.len())?;
        self.regularizer.handle().validate(self.n)?;
        let probe = Vector::zeros(self.n);
        for g in &components {
            check_dim("component gradient", self.n, g.gradient(&probe).len())?;
        }
        Ok(ProblemInstance {
            id: self.id,
            components,
            composer,
            regularizer: self.regularizer,
            n: self.n,
            known_saddle: None,
        })
    }
}

impl ProblemInstance {
    pub fn builder(n: usize) -> ProblemBuilder {
        ProblemBuilder {
            id: String::from("unnamed"),
            n,
            objective: None,
            components: Vec::new(),
            composer: ProxHandle::IdentitySum,
            regularizer: Regularizer::zero(),
        }
    }

    pub fn with_saddle(mut self, saddle: SaddleData) -> Self {
        self.known_saddle = Some(saddle);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn composer(&self) -> &Composer {
        &self.composer
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn known_saddle(&self) -> Option<&SaddleData> {
        self.known_saddle.as_ref()
    }

    pub fn holder_profiles(&self) -> Vec<HolderProfile> {
        self.components.iter().map(Component::holder).collect()
    }

    pub fn convexity_profiles(&self) -> Vec<ConvexityProfile> {
        self.components.iter().map(Component::convexity).collect()
    }

    /// `g(x)`; any non-finite entry is an evaluation-domain error.
    pub fn values(&self, x: &Vector) -> Result<Vector> {
        check_dim("point", self.n, x.len())?;
        let g = Vector::from_iterator(self.m(), self.components.iter().map(|c| c.value(x)));
        if let Some(j) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("component {} at evaluation point", self.components[j].name)));
        }
        Ok(g)
    }

    /// Jacobian of `g` at `x` (row `j` is a gradient of `g_j`).
    pub fn jacobian(&self, x: &Vector) -> Result<Matrix> {
        check_dim("point", self.n, x.len())?;
        let mut rows = Matrix::zeros(self.m(), self.n);
        for (j, c) in self.components.iter().enumerate() {
            let gj = c.gradient(x);
            check_dim("component gradient", self.n, gj.len())?;
            if gj.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of component {}", c.name)));
            }
            rows.row_mut(j).copy_from(&gj.transpose());
        }
        Ok(rows)
    }
}

/// Conjugate points `nu` stored with their generator so that `g*(nu)` is exact.
///
/// Weighted averages of anchored points keep the same weighted average of
/// conjugate values; by Jensen this is an upper bound on the true conjugate,
/// so Lagrangians evaluated with it are lower bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchoredConjugate {
    rows: Matrix,
    conjugates: Vector,
    anchor: Option<Vector>,
    anchor_values: Option<Vector>,
}

impl AnchoredConjugate {
    /// `nu = grad g(y)` anchored at `y`.
    pub fn at(problem: &ProblemInstance, y: &Vector) -> Result<Self> {
        let rows = problem.jacobian(y)?;
        let values = problem.values(y)?;
        Self::from_parts(rows, y.clone(), values)
    }

    pub fn from_parts(rows: Matrix, anchor: Vector, anchor_values: Vector) -> Result<Self> {
        check_dim("anchor", rows.ncols(), anchor.len())?;
        check_dim("anchor values", rows.nrows(), anchor_values.len())?;
        let conjugates = Vector::from_iterator(
            rows.nrows(),
            (0..rows.nrows()).map(|j| rows.row(j).transpose().dot(&anchor) - anchor_values[j]),
        );
        Ok(Self {
            rows,
            conjugates,
            anchor: Some(anchor),
            anchor_values: Some(anchor_values),
        })
    }

    /// Rows with conjugate values carried over from anchored points.
    pub fn from_averages(rows: Matrix, conjugates: Vector) -> Result<Self> {
        check_dim("conjugate values", rows.nrows(), conjugates.len())?;
        Ok(Self {
            rows,
            conjugates,
            anchor: None,
            anchor_values: None,
        })
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    /// `g_j*(nu_j)` per row.
    pub fn conjugates(&self) -> &Vector {
        &self.conjugates
    }

    pub fn anchor(&self) -> Option<&Vector> {
        self.anchor.as_ref()
    }

    pub fn anchor_values(&self) -> Option<&Vector> {
        self.anchor_values.as_ref()
    }

    /// Frobenius norm of the `m x n` matrix.
    pub fn norm(&self) -> f64 {
        self.rows.norm()
    }

    /// `nu x - g*(nu)`, the linearization of `g` at the anchor evaluated at `x`.
    pub fn linearization(&self, x: &Vector) -> Vector {
        let mut out = &self.rows * x;
        out -= &self.conjugates;
        out
    }
}

/// A point `z = (x; lambda, nu)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDualPoint {
    pub x: Vector,
    pub lambda: Vector,
    pub nu: AnchoredConjugate,
}

impl PrimalDualPoint {
    pub fn new(x: Vector, lambda: Vector, nu: AnchoredConjugate) -> Result<Self> {
        if lambda.iter().any(|&l| l < -DOMAIN_TOL) {
            return Err(Error::InvalidParameter("multipliers must be nonnegative".into()));
        }
        Ok(Self { x, lambda, nu })
    }

    /// Point whose conjugate variable is anchored at `anchor`.
    pub fn anchored(problem: &ProblemInstance, x: Vector, lambda: Vector, anchor: &Vector) -> Result<Self> {
        let nu = AnchoredConjugate::at(problem, anchor)?;
        Self::new(x, lambda, nu)
    }
}

/// `F(x) = h(g(x)) + u(x)`, `+inf` outside `X` or when `g(x)` leaves `dom h`.
pub fn objective_value(problem: &ProblemInstance, x: &Vector) -> Result<f64> {
    check_dim("point", problem.n(), x.len())?;
    let u = problem.regularizer().value(x);
    if u == f64::INFINITY {
        return Ok(u);
    }
    let g = problem.values(x)?;
    let v = problem.composer().value(&g) + u;
    if v.is_nan() {
        return Err(Error::NonFinite("objective value".into()));
    }
    Ok(v)
}

/// `F` with `g(x)` first projected onto `dom h`, so constraint violation shows
/// up only in [`domain_violation`] and not as `+inf`.
pub fn relaxed_objective(problem: &ProblemInstance, x: &Vector) -> Result<f64> {
    fn project(h: &ProxHandle, z: &Vector) -> Vector {
        match h {
            ProxHandle::NonpositiveIndicator => z.map(|v| v.min(0.0)),
            ProxHandle::Absorbed(inner) => {
                let mut out = z.clone();
                let tail = project(inner, &z.rows(1, z.len() - 1).into_owned());
                out.rows_mut(1, tail.len()).copy_from(&tail);
                out
            }
            _ => z.clone(),
        }
    }
    check_dim("point", problem.n(), x.len())?;
    let u = problem.regularizer().value(x);
    let g = problem.values(x)?;
    let v = problem.composer().value(&project(problem.composer().handle(), &g)) + u;
    if v.is_nan() {
        return Err(Error::NonFinite("objective value".into()));
    }
    Ok(v)
}

/// Distance from `z` to `dom h` for the catalog composers.
pub fn domain_violation(h: &ProxHandle, z: &Vector) -> f64 {
    match h {
        ProxHandle::NonpositiveIndicator => z.map(|v| v.max(0.0)).norm(),
        ProxHandle::Absorbed(inner) => domain_violation(inner, &z.rows(1, z.len() - 1).into_owned()),
        ProxHandle::Custom(c) => {
            if (c.value)(z).is_finite() {
                0.0
            } else {
                f64::INFINITY
            }
        }
        _ => 0.0,
    }
}

/// `L(x; lambda, nu) = <lambda, nu x - g*(nu)> - h*(lambda) + u(x)`.
///
/// Returns `-inf` when `lambda` leaves `dom h*`.
pub fn lagrangian_value(problem: &ProblemInstance, x: &Vector, lambda: &Vector, nu: &AnchoredConjugate) -> Result<f64> {
    check_dim("point", problem.n(), x.len())?;
    check_dim("multipliers", problem.m(), lambda.len())?;
    check_dim("conjugate rows", problem.m(), nu.rows().nrows())?;
    let hstar = problem.composer().conjugate(lambda)?;
    if hstar == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let lin = nu.linearization(x);
    let mut acc = 0.0;
    for j in 0..problem.m() {
        acc += lambda[j] * lin[j];
    }
    let v = acc - hstar + problem.regularizer().value(x);
    if v.is_nan() {
        return Err(Error::NonFinite("lagrangian value".into()));
    }
    Ok(v)
}

/// `Q(z, zhat) = L(x; lambdahat, nuhat) - L(xhat; lambda, nu)`.
pub fn gap_value(problem: &ProblemInstance, z: &PrimalDualPoint, zhat: &PrimalDualPoint) -> Result<f64> {
    let a = lagrangian_value(problem, &z.x, &zhat.lambda, &zhat.nu)?;
    let b = lagrangian_value(problem, &zhat.x, &z.lambda, &z.nu)?;
    let q = a - b;
    if q.is_nan() {
        return Err(Error::NonFinite("gap of two infinite Lagrangians".into()));
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn square() -> ProblemInstance {
        let g = Component::quadratic("x^2", Matrix::from_element(1, 1, 2.0), v(&[0.0]), 0.0).unwrap();
        ProblemInstance::builder(1).component(g).build().unwrap()
    }

    fn linear_constrained() -> ProblemInstance {
        ProblemInstance::builder(1)
            .objective(Component::affine("x", v(&[1.0]), 0.0).unwrap())
            .component(Component::affine("1-x", v(&[-1.0]), 1.0).unwrap())
            .composer(ProxHandle::NonpositiveIndicator)
            .build()
            .unwrap()
    }

    #[test]
    fn objective_examples() {
        assert_eq!(objective_value(&square(), &v(&[2.0])).unwrap(), 4.0);
        let p = linear_constrained();
        assert_eq!(objective_value(&p, &v(&[0.5])).unwrap(), f64::INFINITY);
        assert_eq!(objective_value(&p, &v(&[1.5])).unwrap(), 1.5);
        assert_eq!(relaxed_objective(&p, &v(&[0.5])).unwrap(), 0.5);
        assert_eq!(relaxed_objective(&p, &v(&[1.5])).unwrap(), 1.5);
    }

    #[test]
    fn lagrangian_linearizes_at_anchor() {
        let p = square();
        let nu = AnchoredConjugate::at(&p, &v(&[1.0])).unwrap();
        // g(1) + g'(1)(2 - 1) = 1 + 2 = 3
        assert_eq!(lagrangian_value(&p, &v(&[2.0]), &v(&[1.0]), &nu).unwrap(), 3.0);
        assert_eq!(lagrangian_value(&p, &v(&[2.0]), &v(&[0.5]), &nu).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn zero_multipliers_leave_regularizer() {
        let p = ProblemInstance::builder(1)
            .component(Component::affine("1-x", v(&[-1.0]), 1.0).unwrap())
            .composer(ProxHandle::NonpositiveIndicator)
            .regularizer(Regularizer::new(ProxHandle::Quadratic { weight: 2.0 }))
            .build()
            .unwrap();
        let nu = AnchoredConjugate::at(&p, &v(&[3.0])).unwrap();
        assert_eq!(lagrangian_value(&p, &v(&[0.5]), &v(&[0.0]), &nu).unwrap(), 0.25);
    }

    #[test]
    fn gap_on_quadratic() {
        let p = square();
        let z = PrimalDualPoint::anchored(&p, v(&[1.0]), v(&[1.0]), &v(&[1.0])).unwrap();
        let zs = PrimalDualPoint::anchored(&p, v(&[0.0]), v(&[1.0]), &v(&[0.0])).unwrap();
        assert_eq!(gap_value(&p, &z, &zs).unwrap(), 1.0);
        assert_eq!(gap_value(&p, &zs, &zs).unwrap(), 0.0);
    }

    #[test]
    fn builder_absorbs_objective() {
        let p = linear_constrained();
        assert_eq!(p.m(), 2);
        assert!(p.composer().absorbs_objective());
    }

    #[test]
    fn builder_rejects_non_monotone_composer() {
        let r = ProblemInstance::builder(1)
            .component(Component::affine("x", v(&[1.0]), 0.0).unwrap())
            .composer(ProxHandle::L1 { weight: 1.0 })
            .build();
        assert!(r.is_err());
    }

    #[test]
    fn quadratic_profiles_from_spectrum() {
        let q = Matrix::from_diagonal(&v(&[1.0, 4.0]));
        let g = Component::quadratic("q", q, v(&[0.0, 0.0]), 0.0).unwrap();
        assert_eq!(g.holder(), HolderProfile::smooth(4.0));
        assert_eq!(g.convexity(), ConvexityProfile::strong(1.0));
        let bad = Component::quadratic("q", Matrix::from_diagonal(&v(&[1.0, -1.0])), v(&[0.0, 0.0]), 0.0);
        assert!(bad.is_err());
    }

    #[test]
    fn nan_components_are_errors() {
        let g = Component::new(
            "log",
            |x: &Vector| -x[0].ln(),
            |x: &Vector| v(&[-1.0 / x[0]]),
            HolderProfile::smooth(1.0),
            ConvexityProfile::convex(),
        );
        let p = ProblemInstance::builder(1).component(g).build().unwrap();
        assert!(objective_value(&p, &v(&[-1.0])).is_err());
    }
}
