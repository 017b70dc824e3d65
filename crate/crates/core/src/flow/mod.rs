//! Hamiltonian flows and the objects built from them.
//!
//! Hamilton's equations under the bracket conventions of
//! [`crate::bracket`]:
//!
//! * torus: `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q`;
//! * sphere: `ẋ = 4π ∇H(x) × x`.
//!
//! So on the sphere `H = a·x` rotates counterclockwise about `a` at angular
//! speed `4π|a|`, and on the torus `H = f(q)` shears `p ↦ p − t f′(q)` while
//! `H = g(p)` shears `q ↦ q + t g′(p)`.

mod compose;
mod expansion;
mod reference;

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Rotation3, Unit};

use crate::error::{Error, Result};
use crate::expr::{Expression, Tape};
use crate::manifold::{coordinates_of, wrap_unit, MeshKind, Point, ScalarField};

pub use compose::{
    cocycle_consistency, cocycle_gradient, cocycle_hamiltonian, cocycle_time_field, cocycle_value, compose_scheme,
    remainder_norm, remainder_ratio_sweep, scheme_generators, CocycleCheck, RatioRow, Stage,
};
pub use expansion::{
    composition_expansion, expansion_residual, expansion_residual_sweep, flow_equivalence_order, hamiltonian_gap,
    EquivalenceReport, ExpansionTerm,
};
pub use reference::{reference_endpoints, reference_flow, ReferenceOptions, TimeField};

type PointMap = dyn Fn(&Point) -> Result<Point> + Send + Sync;

/// A map of the surface to itself together with an estimate of its error.
#[derive(Clone)]
pub struct FlowMap {
    kind: MeshKind,
    map: Arc<PointMap>,
    pub error_estimate: f64,
    pub description: String,
}

impl fmt::Debug for FlowMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowMap")
            .field("kind", &self.kind)
            .field("error_estimate", &self.error_estimate)
            .field("description", &self.description)
            .finish()
    }
}

impl FlowMap {
    pub fn new(
        kind: MeshKind,
        description: impl Into<String>,
        error_estimate: f64,
        map: impl Fn(&Point) -> Result<Point> + Send + Sync + 'static,
    ) -> Self {
        Self { kind, map: Arc::new(map), error_estimate, description: description.into() }
    }

    pub fn identity(kind: MeshKind) -> Self {
        Self::new(kind, "identity", 0.0, |p| Ok(*p))
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        (self.map)(p)
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn after(&self, inner: &FlowMap) -> FlowMap {
        let (outer_map, inner_map) = (self.map.clone(), inner.map.clone());
        FlowMap {
            kind: self.kind,
            map: Arc::new(move |p| outer_map(&inner_map(p)?)),
            error_estimate: self.error_estimate + inner.error_estimate,
            description: format!("{} ∘ {}", self.description, inner.description),
        }
    }
}

/// Distance on the surface: periodic Euclidean distance on the torus, chord
/// length on the sphere.
pub fn distance(kind: MeshKind, a: &Point, b: &Point) -> f64 {
    match kind {
        MeshKind::Torus { .. } => {
            let dq = centered(a.x - b.x);
            let dp = centered(a.y - b.y);
            dq.hypot(dp)
        }
        MeshKind::Sphere { .. } => (a - b).norm(),
    }
}

fn centered(d: f64) -> f64 {
    let w = wrap_unit(d + 0.5) - 0.5;
    if w < -0.5 {
        w + 1.0
    } else {
        w
    }
}

/// Value and ambient gradient of a closed-form field.
#[derive(Debug, Clone)]
pub struct Smooth {
    kind: MeshKind,
    value: Tape,
    gradient: Vec<Tape>,
}

impl Smooth {
    pub fn new(kind: MeshKind, expr: &Expression) -> Result<Self> {
        let gradient = kind.coords().iter().map(|c| Ok(expr.diff(c)?.compile())).collect::<Result<_>>()?;
        Ok(Self { kind, value: expr.compile(), gradient })
    }

    pub fn of_field(field: &ScalarField) -> Result<Self> {
        let expr = field.expr().ok_or_else(|| Error::SymbolicRequired("field has no closed form".into()))?;
        Self::new(field.mesh().kind(), expr)
    }

    pub fn value(&self, p: &Point) -> Result<f64> {
        Ok(self.value.eval(&coordinates_of(self.kind, p))?)
    }

    pub fn gradient(&self, p: &Point) -> Result<Point> {
        let x = coordinates_of(self.kind, p);
        let mut g = Point::zeros();
        for (i, tape) in self.gradient.iter().enumerate() {
            g[i] = tape.eval(&x)?;
        }
        Ok(g)
    }
}

/// Hamiltonian vector field of a (possibly time-dependent) function with
/// ambient gradient `grad` at `p`.
pub fn hamiltonian_velocity(kind: MeshKind, p: &Point, grad: &Point) -> Point {
    match kind {
        MeshKind::Torus { .. } => Point::new(grad.y, -grad.x, 0.0),
        MeshKind::Sphere { .. } => grad.cross(p) * (4.0 * std::f64::consts::PI),
    }
}

/// A Hamiltonian whose flow is known in closed form.
#[derive(Debug, Clone)]
pub enum ExactGenerator {
    /// Constant Hamiltonians generate the identity.
    Identity,
    /// `H = a·x + c` on the sphere.
    Rotation { axis: Point },
    /// `H = f(q)` on the torus: `p ↦ p − t f′(q)`.
    ShearP { slope: Tape, curvature: Tape },
    /// `H = g(p)` on the torus: `q ↦ q + t g′(p)`.
    ShearQ { slope: Tape, curvature: Tape },
}

impl ExactGenerator {
    /// Recognizes linear functions on the sphere and one-variable functions on
    /// the torus.
    pub fn recognize(h: &ScalarField) -> Result<Self> {
        let expr = h.expr().ok_or_else(|| Error::NotRecognized("field without a closed form".into()))?;
        Self::recognize_expr(h.mesh().kind(), expr)
    }

    pub fn recognize_expr(kind: MeshKind, expr: &Expression) -> Result<Self> {
        if expr.const_value().is_some() {
            return Ok(Self::Identity);
        }
        match kind {
            MeshKind::Sphere { .. } => {
                let poly = expr.to_polynomial().filter(|p| p.degree() <= 1);
                let Some(poly) = poly else {
                    return Err(Error::NotRecognized(expr.to_string()));
                };
                let mut axis = Point::zeros();
                for (exps, c) in poly.terms() {
                    if let Some(i) = exps.iter().position(|&e| e == 1) {
                        axis[i] = c;
                    }
                }
                if axis == Point::zeros() {
                    Ok(Self::Identity)
                } else {
                    Ok(Self::Rotation { axis })
                }
            }
            MeshKind::Torus { .. } => {
                let (uses_q, uses_p) = (expr.depends_on("q"), expr.depends_on("p"));
                let second = |v: &str| -> Result<(Tape, Tape)> {
                    let d = expr.diff(v)?;
                    Ok((d.compile(), d.diff(v)?.compile()))
                };
                match (uses_q, uses_p) {
                    (false, false) => Ok(Self::Identity),
                    (true, false) => {
                        let (slope, curvature) = second("q")?;
                        Ok(Self::ShearP { slope, curvature })
                    }
                    (false, true) => {
                        let (slope, curvature) = second("p")?;
                        Ok(Self::ShearQ { slope, curvature })
                    }
                    (true, true) => Err(Error::NotRecognized(expr.to_string())),
                }
            }
        }
    }

    fn rotation(axis: &Point, t: f64) -> Rotation3<f64> {
        let rate = 4.0 * std::f64::consts::PI * axis.norm();
        Rotation3::from_axis_angle(&Unit::new_normalize(*axis), rate * t)
    }

    /// `φ^t(p)`, in canonical coordinates.
    pub fn apply(&self, p: &Point, t: f64) -> Result<Point> {
        Ok(match self {
            Self::Identity => *p,
            Self::Rotation { axis } => Self::rotation(axis, t) * p,
            Self::ShearP { slope, .. } => {
                Point::new(wrap_unit(p.x), wrap_unit(p.y - t * slope.eval(&[p.x, p.y])?), 0.0)
            }
            Self::ShearQ { slope, .. } => {
                Point::new(wrap_unit(p.x + t * slope.eval(&[p.x, p.y])?), wrap_unit(p.y), 0.0)
            }
        })
    }

    /// Jacobian of `φ^t` at `p` as an ambient 3×3 matrix (torus maps act on
    /// the first two components).
    pub fn jacobian(&self, p: &Point, t: f64) -> Result<Matrix3<f64>> {
        Ok(match self {
            Self::Identity => Matrix3::identity(),
            Self::Rotation { axis } => *Self::rotation(axis, t).matrix(),
            Self::ShearP { curvature, .. } => {
                let mut j = Matrix3::identity();
                j[(1, 0)] = -t * curvature.eval(&[p.x, p.y])?;
                j
            }
            Self::ShearQ { curvature, .. } => {
                let mut j = Matrix3::identity();
                j[(0, 1)] = t * curvature.eval(&[p.x, p.y])?;
                j
            }
        })
    }
}

/// The exact flow `φ_H^{±t}`.
pub fn exact_flow(h: &ScalarField, t: f64, direction: f64) -> Result<FlowMap> {
    let generator = ExactGenerator::recognize(h)?;
    let kind = h.mesh().kind();
    let s = t * direction.signum();
    let label = format!("exact flow of {} for t = {s}", h.expr().map(|e| e.to_string()).unwrap_or_default());
    Ok(FlowMap::new(kind, label, 0.0, move |p| generator.apply(p, s)))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::manifold::Mesh;

    fn sphere() -> Arc<Mesh> {
        Arc::new(Mesh::sphere(3).unwrap())
    }

    fn torus() -> Arc<Mesh> {
        Arc::new(Mesh::torus(16, 16).unwrap())
    }

    #[test]
    fn height_flow_has_period_half() {
        let m = sphere();
        let h = ScalarField::parse(&m, "z").unwrap();
        let phi = exact_flow(&h, 0.5, 1.0).unwrap();
        for p in m.points() {
            assert!((phi.apply(p).unwrap() - p).norm() < 1e-12);
        }
        // counterclockwise: (1,0,0) moves toward +y
        let quarter = exact_flow(&h, 0.125, 1.0).unwrap();
        let q = quarter.apply(&Point::x()).unwrap();
        assert!((q - Point::y()).norm() < 1e-12);
    }

    #[test]
    fn inverse_consistency_and_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sphere();
        let t = torus();
        let fields = [
            ScalarField::parse(&s, "0.3*x - 0.7*y + 0.2*z + 5").unwrap(),
            ScalarField::parse(&t, "sin(2*pi*q) + 0.3*cos(4*pi*q)").unwrap(),
            ScalarField::parse(&t, "cos(2*pi*p)^2").unwrap(),
        ];
        for h in &fields {
            let time = rng.gen_range(0.0..1.0);
            let fwd = exact_flow(h, time, 1.0).unwrap();
            let back = exact_flow(h, time, -1.0).unwrap();
            for p in h.mesh().points() {
                let y = fwd.apply(p).unwrap();
                if h.mesh().is_sphere() {
                    assert!((y.norm() - 1.0).abs() < 1e-10);
                } else {
                    assert!((0.0..1.0).contains(&y.x) && (0.0..1.0).contains(&y.y));
                }
                let k = h.mesh().kind();
                assert!(distance(k, &back.apply(&y).unwrap(), p) < 1e-12);
            }
        }
    }

    #[test]
    fn shear_signs() {
        let m = torus();
        let h = ScalarField::parse(&m, "sin(2*pi*q)").unwrap();
        let t = 0.01;
        let phi = exact_flow(&h, t, 1.0).unwrap();
        let p = Point::new(0.1, 0.5, 0.0);
        let y = phi.apply(&p).unwrap();
        assert_eq!(y.x, p.x);
        assert!((y.y - (0.5 - t * 2.0 * PI * (0.2 * PI).cos())).abs() < 1e-15);
        assert!(exact_flow(&ScalarField::constant(&m, 0.0), 1.0, 1.0).unwrap().apply(&p).unwrap() == p);
        let mixed = ScalarField::parse(&m, "sin(2*pi*q)*p").unwrap();
        assert!(matches!(exact_flow(&mixed, 0.1, 1.0), Err(Error::NotRecognized(_))));
        let s = sphere();
        assert!(matches!(exact_flow(&ScalarField::parse(&s, "x*y").unwrap(), 0.1, 1.0), Err(Error::NotRecognized(_))));
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let t = torus();
        let s = sphere();
        let cases = [
            (ScalarField::parse(&t, "sin(2*pi*q)").unwrap(), Point::new(0.3, 0.6, 0.0)),
            (ScalarField::parse(&t, "cos(2*pi*p) + p").unwrap(), Point::new(0.8, 0.2, 0.0)),
            (ScalarField::parse(&s, "x - 2*z").unwrap(), Point::new(0.6, 0.0, 0.8)),
        ];
        for (h, p) in cases {
            let g = ExactGenerator::recognize(&h).unwrap();
            let j = g.jacobian(&p, 0.07).unwrap();
            let dims = if h.mesh().is_sphere() { 3 } else { 2 };
            for c in 0..dims {
                let mut e = Point::zeros();
                e[c] = 1e-6;
                let unwrap = |v: Point| if dims == 2 { Point::new(v.x, v.y, 0.0) } else { v };
                let plus = g.apply(&(p + e), 0.07).unwrap();
                let minus = g.apply(&(p - e), 0.07).unwrap();
                let mut col = unwrap(plus - minus) / 2e-6;
                if dims == 2 {
                    col.x = centered(col.x * 2e-6) / 2e-6;
                    col.y = centered(col.y * 2e-6) / 2e-6;
                }
                for r in 0..dims {
                    assert!((col[r] - j[(r, c)]).abs() < 1e-6, "{r},{c}: {} vs {}", col[r], j[(r, c)]);
                }
            }
        }
    }

    #[test]
    fn periodic_distance() {
        let k = MeshKind::Torus { n_q: 8, n_p: 8 };
        let d = distance(k, &Point::new(0.99, 0.0, 0.0), &Point::new(0.01, 0.0, 0.0));
        assert!((d - 0.02).abs() < 1e-12);
    }
}
