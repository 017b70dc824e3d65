//! Reference flows by classical Runge–Kutta with step doubling.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use super::{distance, hamiltonian_velocity, FlowMap, Smooth};
use crate::error::{Error, Result};
use crate::manifold::{wrap_unit, MeshKind, Point, ScalarField};

type GradientFn = dyn Fn(f64, &Point) -> Result<Point> + Send + Sync;
type ValueFn = dyn Fn(f64, &Point) -> Result<f64> + Send + Sync;

/// A Hamiltonian `H_s(x)` that may depend on time, given by its value and
/// ambient gradient.
#[derive(Clone)]
pub struct TimeField {
    kind: MeshKind,
    value: Arc<ValueFn>,
    gradient: Arc<GradientFn>,
}

impl fmt::Debug for TimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeField").field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl TimeField {
    pub fn new(
        kind: MeshKind,
        value: impl Fn(f64, &Point) -> Result<f64> + Send + Sync + 'static,
        gradient: impl Fn(f64, &Point) -> Result<Point> + Send + Sync + 'static,
    ) -> Self {
        Self { kind, value: Arc::new(value), gradient: Arc::new(gradient) }
    }

    /// A time-independent closed-form field.
    pub fn autonomous(field: &ScalarField) -> Result<Self> {
        let smooth = Arc::new(Smooth::of_field(field)?);
        let s2 = smooth.clone();
        Ok(Self::new(field.mesh().kind(), move |_, p| smooth.value(p), move |_, p| s2.gradient(p)))
    }

    /// `H_s + K_s`.
    pub fn plus(&self, other: &TimeField) -> TimeField {
        let (va, vb) = (self.value.clone(), other.value.clone());
        let (ga, gb) = (self.gradient.clone(), other.gradient.clone());
        Self::new(self.kind, move |s, p| Ok(va(s, p)? + vb(s, p)?), move |s, p| Ok(ga(s, p)? + gb(s, p)?))
    }

    /// `c(s) · H_s`.
    pub fn with_time_factor(&self, c: impl Fn(f64) -> f64 + Send + Sync + 'static) -> TimeField {
        let c = Arc::new(c);
        let c2 = c.clone();
        let (v, g) = (self.value.clone(), self.gradient.clone());
        Self::new(self.kind, move |s, p| Ok(c(s) * v(s, p)?), move |s, p| Ok(g(s, p)? * c2(s)))
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn value(&self, s: f64, p: &Point) -> Result<f64> {
        (self.value)(s, p)
    }

    pub fn gradient(&self, s: f64, p: &Point) -> Result<Point> {
        (self.gradient)(s, p)
    }

    fn velocity(&self, s: f64, p: &Point) -> Result<Point> {
        Ok(hamiltonian_velocity(self.kind, p, &self.gradient(s, p)?))
    }

    /// `n` classical Runge–Kutta steps from time 0 to `t`.
    fn integrate(&self, p: &Point, t: f64, n: usize) -> Result<Point> {
        let h = t / n as f64;
        let sphere = self.kind.is_sphere();
        let mut x = *p;
        // compensated update: long runs add many increments far below ulp(x)
        let mut carry = Point::zeros();
        for k in 0..n {
            let s = k as f64 * h;
            let k1 = self.velocity(s, &x)?;
            let k2 = self.velocity(s + h / 2.0, &project(sphere, &(x + k1 * (h / 2.0))))?;
            let k3 = self.velocity(s + h / 2.0, &project(sphere, &(x + k2 * (h / 2.0))))?;
            let k4 = self.velocity(s + h, &project(sphere, &(x + k3 * h)))?;
            let increment = (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0) - carry;
            let sum = x + increment;
            if sphere {
                x = sum.normalize();
            } else {
                carry = (sum - x) - increment;
                x = sum;
            }
        }
        Ok(match self.kind {
            MeshKind::Torus { .. } => Point::new(wrap_unit(x.x), wrap_unit(x.y), 0.0),
            MeshKind::Sphere { .. } => x,
        })
    }

    /// Integrates one point, doubling the step count until two consecutive
    /// solutions agree within `opts.tol`. Returns the finer solution, the gap
    /// and the step count.
    fn integrate_adaptive(&self, p: &Point, t: f64, opts: &ReferenceOptions) -> Result<(Point, f64, usize)> {
        if t == 0.0 {
            return Ok((*p, 0.0, 0));
        }
        let mut n = opts.initial_steps.max(1);
        let mut coarse = self.integrate(p, t, n)?;
        loop {
            let fine = self.integrate(p, t, 2 * n)?;
            let gap = distance(self.kind, &coarse, &fine);
            if !gap.is_finite() {
                return Err(Error::NoConvergence { tol: opts.tol, steps: 2 * n, gap });
            }
            if gap <= opts.tol {
                return Ok((fine, gap, 2 * n));
            }
            n *= 2;
            if 2 * n > opts.max_steps {
                return Err(Error::NoConvergence { tol: opts.tol, steps: n, gap });
            }
            coarse = fine;
        }
    }
}

fn project(sphere: bool, x: &Point) -> Point {
    if sphere {
        x.normalize()
    } else {
        *x
    }
}

/// Tolerance and budget of a reference integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Largest accepted gap between the last two step counts, per point.
    pub tol: f64,
    pub initial_steps: usize,
    /// Step budget per point.
    pub max_steps: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self { tol: 1e-13, initial_steps: 8, max_steps: 1 << 20 }
    }
}

/// Reference flow map of `h` up to time `t`; every application meets
/// `opts.tol`, which is reported as the error estimate.
pub fn reference_flow(h: &TimeField, t: f64, opts: ReferenceOptions) -> FlowMap {
    let field = h.clone();
    FlowMap::new(h.kind, format!("reference flow for t = {t}"), opts.tol, move |p| {
        Ok(field.integrate_adaptive(p, t, &opts)?.0)
    })
}

/// Reference endpoints of many points, computed in parallel, with the largest
/// per-point gap and step count.
pub fn reference_endpoints(
    h: &TimeField,
    t: f64,
    points: &[Point],
    opts: ReferenceOptions,
) -> Result<(Vec<Point>, f64, usize)> {
    let solved: Vec<(Point, f64, usize)> =
        points.par_iter().map(|p| h.integrate_adaptive(p, t, &opts)).collect::<Result<_>>()?;
    let gap = solved.iter().map(|s| s.1).fold(0.0, f64::max);
    let steps = solved.iter().map(|s| s.2).max().unwrap_or(0);
    Ok((solved.into_iter().map(|s| s.0).collect(), gap, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::exact_flow;
    use crate::manifold::Mesh;

    #[test]
    fn matches_exact_flows() {
        let s = Arc::new(Mesh::sphere(3).unwrap());
        let t = Arc::new(Mesh::torus(12, 12).unwrap());
        for h in [ScalarField::parse(&s, "0.5*x + y").unwrap(), ScalarField::parse(&t, "sin(2*pi*q)").unwrap()] {
            let tf = TimeField::autonomous(&h).unwrap();
            let probes: Vec<Point> = h.mesh().points().iter().step_by(7).copied().collect();
            let (ends, gap, _) = reference_endpoints(&tf, 0.1, &probes, ReferenceOptions::default()).unwrap();
            assert!(gap <= 1e-13);
            let exact = exact_flow(&h, 0.1, 1.0).unwrap();
            for (p, e) in probes.iter().zip(&ends) {
                assert!(distance(h.mesh().kind(), &exact.apply(p).unwrap(), e) < 1e-12);
                if h.mesh().is_sphere() {
                    assert!((e.norm() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn conserves_energy() {
        let t = Arc::new(Mesh::torus(12, 12).unwrap());
        let h = ScalarField::parse(&t, "sin(2*pi*q) + sin(2*pi*p)").unwrap();
        let tf = TimeField::autonomous(&h).unwrap();
        let phi = reference_flow(&tf, 0.05, ReferenceOptions::default());
        for p in t.points().iter().step_by(5) {
            let y = phi.apply(p).unwrap();
            assert!((h.value_at(&y).unwrap() - h.value_at(p).unwrap()).abs() < 1e-11);
        }
        assert_eq!(reference_flow(&tf, 0.0, ReferenceOptions::default()).apply(&t.points()[3]).unwrap(), t.points()[3]);
    }

    #[test]
    fn reports_budget_exhaustion() {
        let t = Arc::new(Mesh::torus(8, 8).unwrap());
        let h = ScalarField::parse(&t, "sin(2*pi*q) + sin(2*pi*p)").unwrap();
        let tf = TimeField::autonomous(&h).unwrap();
        let opts = ReferenceOptions { tol: 1e-15, initial_steps: 2, max_steps: 16 };
        let err = reference_endpoints(&tf, 1.0, &t.points()[..4], opts).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn time_factors_scale_flows() {
        let t = Arc::new(Mesh::torus(8, 8).unwrap());
        let h = ScalarField::parse(&t, "sin(2*pi*p)").unwrap();
        // ∫₀ᵗ s² ds = t³/3, so H s² for time t equals H for time t³/3.
        let scaled = TimeField::autonomous(&h).unwrap().with_time_factor(|s| s * s);
        let t_end: f64 = 0.6;
        let a = reference_flow(&scaled, t_end, ReferenceOptions::default());
        let b = exact_flow(&h, t_end.powi(3) / 3.0, 1.0).unwrap();
        let p = Point::new(0.2, 0.35, 0.0);
        assert!(distance(t.kind(), &a.apply(&p).unwrap(), &b.apply(&p).unwrap()) < 1e-12);
    }
}
