use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{coordinates_of, Mesh, MeshKind, Point};
use crate::error::{Error, Result};
use crate::expr::Expression;

/// Which norm to measure fields with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Maximum of |f| over the mesh vertices.
    #[default]
    Uniform,
    /// Mass-weighted mean of |f|.
    L1,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::Uniform => "uniform",
            NormKind::L1 => "l1",
        })
    }
}

impl FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(NormKind::Uniform),
            "l1" => Ok(NormKind::L1),
            _ => Err(Error::Config(format!("unknown norm `{s}` (expected uniform or l1)"))),
        }
    }
}

/// A real function on a mesh: one value per vertex, plus the closed form it
/// was sampled from when there is one.
#[derive(Debug, Clone)]
pub struct ScalarField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
    expr: Option<Expression>,
}

/// Result of a refined sup-norm search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedNorm {
    pub value: f64,
    /// True when a closed form was available and the local search ran.
    pub refined: bool,
}

impl ScalarField {
    /// Samples `expr` at every vertex. The expression must be written over the
    /// mesh's coordinate names, in order.
    pub fn sample(mesh: &Arc<Mesh>, expr: &Expression) -> Result<Self> {
        let coords = mesh.coords();
        if expr.vars().len() != coords.len() || expr.vars().iter().zip(coords).any(|(a, b)| a != b) {
            return Err(Error::CoordinateMismatch {
                expected: coords.iter().map(|s| s.to_string()).collect(),
                found: expr.vars().to_vec(),
            });
        }
        let tape = expr.compile();
        let kind = mesh.kind();
        let values =
            mesh.points().par_iter().map(|p| tape.eval(&coordinates_of(kind, p))).collect::<Result<Vec<f64>, _>>()?;
        Ok(Self { mesh: mesh.clone(), values, expr: Some(expr.clone()) })
    }

    /// Parses `source` over the mesh coordinates and samples it.
    pub fn parse(mesh: &Arc<Mesh>, source: &str) -> Result<Self> {
        let expr = Expression::parse(source, mesh.coords())?;
        Self::sample(mesh, &expr)
    }

    /// A field known only through its samples.
    pub fn from_values(mesh: &Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::MeshMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(crate::expr::ExprError::NonFinite.into());
        }
        Ok(Self { mesh: mesh.clone(), values, expr: None })
    }

    pub fn constant(mesh: &Arc<Mesh>, c: f64) -> Self {
        Self { mesh: mesh.clone(), values: vec![c; mesh.len()], expr: Some(Expression::constant(c, mesh.coords())) }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn expr(&self) -> Option<&Expression> {
        self.expr.as_ref()
    }

    /// Assembles a field from values known to be finite and, when given,
    /// to agree with `expr` at the vertices.
    pub(crate) fn from_parts(mesh: &Arc<Mesh>, values: Vec<f64>, expr: Option<Expression>) -> Self {
        debug_assert_eq!(values.len(), mesh.len());
        Self { mesh: mesh.clone(), values, expr }
    }

    /// Drops the closed form, leaving only samples.
    pub fn without_expr(&self) -> Self {
        Self { mesh: self.mesh.clone(), values: self.values.clone(), expr: None }
    }

    fn check_same_mesh(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    /// Value at an arbitrary point: the closed form when present, otherwise the
    /// piecewise-linear interpolant.
    pub fn value_at(&self, p: &Point) -> Result<f64> {
        match &self.expr {
            Some(e) => Ok(e.eval(&coordinates_of(self.mesh.kind(), &self.mesh.canonical(p)))?),
            None => self.mesh.interpolate(&self.values, p),
        }
    }

    /// Mass-weighted mean; on the sphere this uses the lumped vertex masses.
    pub fn mean(&self) -> f64 {
        self.values.iter().zip(self.mesh.weights()).map(|(v, w)| v * w).sum()
    }

    pub fn normalize_zero_mean(&self) -> Self {
        let m = self.mean();
        self.add_constant(-m)
    }

    /// Maximum of |f| over the mesh vertices.
    pub fn uniform_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Mass-weighted mean of |f|.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().zip(self.mesh.weights()).map(|(v, w)| v.abs() * w).sum()
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Uniform => self.uniform_norm(),
            NormKind::L1 => self.l1_norm(),
        }
    }

    /// Sup norm refined by local golden-section search around the largest
    /// vertex values. Never smaller than [`ScalarField::uniform_norm`]; falls
    /// back to it when no closed form is present.
    pub fn uniform_norm_refined(&self) -> RefinedNorm {
        let base = self.uniform_norm();
        let Some(expr) = &self.expr else {
            return RefinedNorm { value: base, refined: false };
        };
        let tape = expr.compile();
        let kind = self.mesh.kind();
        let abs_at = |p: &Point| -> f64 {
            tape.eval(&coordinates_of(kind, &self.mesh.canonical(p))).map(f64::abs).unwrap_or(0.0)
        };
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[b].abs().total_cmp(&self.values[a].abs()).then(a.cmp(&b)));
        let radius = self.mesh.spacing();
        let best = order
            .iter()
            .take(8)
            .map(|&i| {
                let origin = self.mesh.points()[i];
                let (e1, e2) = tangent_frame(kind, &origin);
                let chart = |u: f64, v: f64| origin + e1 * u + e2 * v;
                let (mut u, mut v) = (0.0, 0.0);
                let mut value = abs_at(&origin);
                for _ in 0..4 {
                    u = golden_max(|s| abs_at(&chart(s, v)), u - radius, u + radius);
                    v = golden_max(|s| abs_at(&chart(u, s)), v - radius, v + radius);
                    value = value.max(abs_at(&chart(u, v)));
                }
                value
            })
            .fold(base, f64::max);
        RefinedNorm { value: best, refined: true }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b, |a, b| a.sub(b))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a * b, |a, b| a.mul(b))
    }

    fn combine(
        &self,
        other: &Self,
        op: impl Fn(f64, f64) -> f64 + Sync,
        sym: impl Fn(&Expression, &Expression) -> Expression,
    ) -> Result<Self> {
        self.check_same_mesh(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect();
        let expr = match (&self.expr, &other.expr) {
            (Some(a), Some(b)) => Some(sym(a, b)),
            _ => None,
        };
        Ok(Self { mesh: self.mesh.clone(), values, expr })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            expr: self.expr.as_ref().map(|e| e.scale(c)),
        }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        Self {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
            expr: self.expr.as_ref().map(|e| e.add_constant(c)),
        }
    }

    /// True when every sample equals the first.
    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }

    /// Gradient estimated from samples alone: central differences on the
    /// torus, `(∂_q f, ∂_p f, 0)`; on the sphere a least-squares fit of the
    /// tangential gradient over the vertex's neighbours, returned as an
    /// ambient tangent vector.
    pub fn numeric_gradient(&self) -> Vec<Point> {
        match self.mesh.kind() {
            MeshKind::Torus { n_q, n_p } => (0..self.values.len())
                .map(|k| {
                    let (i, j) = (k / n_p, k % n_p);
                    let at = |i: usize, j: usize| self.values[(i % n_q) * n_p + (j % n_p)];
                    let dq = (at(i + 1, j) - at(i + n_q - 1, j)) * n_q as f64 / 2.0;
                    let dp = (at(i, j + 1) - at(i, j + n_p - 1)) * n_p as f64 / 2.0;
                    Point::new(dq, dp, 0.0)
                })
                .collect(),
            MeshKind::Sphere { .. } => (0..self.values.len())
                .into_par_iter()
                .map(|k| {
                    let v = self.mesh.points()[k];
                    let (e1, e2) = tangent_frame(self.mesh.kind(), &v);
                    let mut normal = Matrix2::zeros();
                    let mut rhs = Vector2::zeros();
                    for &n in self.mesh.neighbors(k) {
                        let d = self.mesh.points()[n] - v;
                        let a = Vector2::new(d.dot(&e1), d.dot(&e2));
                        normal += a * a.transpose();
                        rhs += a * (self.values[n] - self.values[k]);
                    }
                    let g = normal.lu().solve(&rhs).unwrap_or_else(Vector2::zeros);
                    e1 * g.x + e2 * g.y
                })
                .collect(),
        }
    }
}

/// `d((F,G),(F',G')) = ‖F − F'‖ + ‖G − G'‖` in the uniform norm.
pub fn distance_d(a: (&ScalarField, &ScalarField), b: (&ScalarField, &ScalarField)) -> Result<f64> {
    Ok(a.0.sub(b.0)?.uniform_norm() + a.1.sub(b.1)?.uniform_norm())
}

/// Orthonormal tangent directions at `p`: the coordinate axes on the torus,
/// a frame orthogonal to `p` on the sphere.
pub(crate) fn tangent_frame(kind: MeshKind, p: &Point) -> (Point, Point) {
    match kind {
        MeshKind::Torus { .. } => (Point::x(), Point::y()),
        MeshKind::Sphere { .. } => {
            let axis = if p.x.abs() <= p.y.abs() && p.x.abs() <= p.z.abs() {
                Point::x()
            } else if p.y.abs() <= p.z.abs() {
                Point::y()
            } else {
                Point::z()
            };
            let e1 = axis.cross(p).normalize();
            let e2 = p.cross(&e1).normalize();
            (e1, e2)
        }
    }
}

/// Argmax of `f` on `[a, b]` by golden-section search (assumes unimodality;
/// otherwise returns a local maximum).
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}
