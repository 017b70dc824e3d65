//! Splitting compositions and their generating Hamiltonians.
//!
//! For `Ψ^t = φ_{H_1}^t ∘ ⋯ ∘ φ_{H_L}^t` the isotopy `t ↦ Ψ^t` is generated
//! by the time-dependent Hamiltonian
//!
//! `K_t(x) = Σ_j H_j(y_{j−1})`, `y_0 = x`, `y_j = φ_{H_j}^{−t}(y_{j−1})`,
//!
//! which is evaluated exactly through the closed-form partial flows. Its
//! gradient is accumulated backwards through the Jacobians of the partial
//! inverse flows.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{distance, reference_endpoints, ExactGenerator, FlowMap, ReferenceOptions, Smooth, TimeField};
use crate::bracket::{q_norm, BracketOptions, Letter};
use crate::error::{Error, Result};
use crate::manifold::{NormKind, Point, ScalarField};
use crate::scheme::SplittingScheme;

/// One factor `φ_{c·H}^t` of a composition.
#[derive(Debug, Clone)]
pub struct Stage {
    pub letter: Letter,
    pub coefficient: f64,
    generator: Arc<ExactGenerator>,
    smooth: Arc<Smooth>,
}

/// The factors of `scheme` applied to `(F, G)` in written order.
pub fn scheme_generators(scheme: &SplittingScheme, f: &ScalarField, g: &ScalarField) -> Result<Vec<Stage>> {
    if f.mesh() != g.mesh() {
        return Err(Error::MeshMismatch);
    }
    let lift = |h: &ScalarField| -> Result<(Arc<ExactGenerator>, Arc<Smooth>)> {
        let generator = ExactGenerator::recognize(h).map_err(|e| match e {
            Error::NotRecognized(s) => Error::ExactFlowUnavailable(s),
            other => other,
        })?;
        Ok((Arc::new(generator), Arc::new(Smooth::of_field(h)?)))
    };
    let (gf, sf) = lift(f)?;
    let (gg, sg) = lift(g)?;
    Ok(scheme
        .steps()
        .into_iter()
        .map(|(letter, coefficient)| {
            let (generator, smooth) = match letter {
                Letter::F => (gf.clone(), sf.clone()),
                Letter::G => (gg.clone(), sg.clone()),
            };
            Stage { letter, coefficient, generator, smooth }
        })
        .collect())
}

/// `Ψ^t` as a map; the rightmost factor acts first.
pub fn compose_scheme(scheme: &SplittingScheme, f: &ScalarField, g: &ScalarField, t: f64) -> Result<FlowMap> {
    let stages = scheme_generators(scheme, f, g)?;
    let kind = f.mesh().kind();
    Ok(FlowMap::new(kind, format!("{} for t = {t}", scheme.label), 0.0, move |p| {
        stages.iter().rev().try_fold(*p, |x, s| s.generator.apply(&x, s.coefficient * t))
    }))
}

/// `K_s(x)`.
pub fn cocycle_value(stages: &[Stage], x: &Point, s: f64) -> Result<f64> {
    let mut y = *x;
    let mut total = 0.0;
    for (j, stage) in stages.iter().enumerate() {
        total += stage.coefficient * stage.smooth.value(&y)?;
        if j + 1 < stages.len() {
            y = stage.generator.apply(&y, -stage.coefficient * s)?;
        }
    }
    Ok(total)
}

/// Ambient gradient of `K_s` at `x`.
pub fn cocycle_gradient(stages: &[Stage], x: &Point, s: f64) -> Result<Point> {
    let Some(last) = stages.last() else {
        return Ok(Point::zeros());
    };
    let mut ys = Vec::with_capacity(stages.len());
    let mut y = *x;
    for stage in stages {
        ys.push(y);
        y = stage.generator.apply(&y, -stage.coefficient * s)?;
    }
    let l = stages.len() - 1;
    let mut g = last.smooth.gradient(&ys[l])? * last.coefficient;
    for i in (0..l).rev() {
        let stage = &stages[i];
        let j = stage.generator.jacobian(&ys[i], -stage.coefficient * s)?;
        g = j.transpose() * g + stage.smooth.gradient(&ys[i])? * stage.coefficient;
    }
    Ok(g)
}

/// `K_s` as a time-dependent field whose flow from 0 to `t` is `Ψ^t`.
pub fn cocycle_time_field(scheme: &SplittingScheme, f: &ScalarField, g: &ScalarField) -> Result<TimeField> {
    let stages = Arc::new(scheme_generators(scheme, f, g)?);
    let s2 = stages.clone();
    Ok(TimeField::new(
        f.mesh().kind(),
        move |s, p| cocycle_value(&stages, p, s),
        move |s, p| cocycle_gradient(&s2, p, s),
    ))
}

/// `K_t` sampled at the mesh vertices.
pub fn cocycle_hamiltonian(scheme: &SplittingScheme, f: &ScalarField, g: &ScalarField, t: f64) -> Result<ScalarField> {
    let stages = scheme_generators(scheme, f, g)?;
    let values: Vec<f64> = f.mesh().points().par_iter().map(|p| cocycle_value(&stages, p, t)).collect::<Result<_>>()?;
    ScalarField::from_values(f.mesh(), values)
}

/// `‖K_t − (F + G)‖`.
pub fn remainder_norm(
    scheme: &SplittingScheme,
    f: &ScalarField,
    g: &ScalarField,
    t: f64,
    norm: NormKind,
) -> Result<f64> {
    let k = cocycle_hamiltonian(scheme, f, g, t)?;
    Ok(k.sub(&f.add(g)?)?.norm(norm))
}

/// One row of [`remainder_ratio_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub t: f64,
    pub remainder: f64,
    pub q_norm: f64,
    /// `remainder / (q_norm · t^{N−1})`.
    pub ratio: f64,
}

/// Remainders `‖K_t − (F+G)‖` over `ts` together with their ratio to
/// `Q_N(F,G)·t^{N−1}`, `N` being one more than the scheme order.
pub fn remainder_ratio_sweep(
    scheme: &SplittingScheme,
    f: &ScalarField,
    g: &ScalarField,
    ts: &[f64],
    norm: NormKind,
    opts: BracketOptions,
) -> Result<Vec<RatioRow>> {
    let n = scheme.nominal_order as usize + 1;
    let q = q_norm(n, f, g, norm, opts)?;
    if q == 0.0 {
        return Err(Error::DegenerateInput(format!("Q_{n} vanishes")));
    }
    ts.iter()
        .map(|&t| {
            let remainder = remainder_norm(scheme, f, g, t, norm)?;
            Ok(RatioRow { t, remainder, q_norm: q, ratio: remainder / (q * t.powi(n as i32 - 1)) })
        })
        .collect()
}

/// Agreement between the scheme composition and the reference flow of its
/// generating Hamiltonian at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleCheck {
    pub t: f64,
    /// Largest distance between the two endpoints over the probes.
    pub distance: f64,
    /// Largest step-doubling gap of the reference integration.
    pub reference_gap: f64,
    pub max_steps: usize,
}

impl CocycleCheck {
    /// The composition and the flow of `K_t` agree up to the reference error.
    pub fn consistent(&self) -> bool {
        self.distance <= self.reference_gap + 1e-12
    }
}

/// Integrates the generating Hamiltonian `K_s` over `[0, t]` from every probe
/// and compares with the scheme composition `Ψ^t`.
pub fn cocycle_consistency(
    scheme: &SplittingScheme,
    f: &ScalarField,
    g: &ScalarField,
    t: f64,
    probes: &[Point],
    opts: ReferenceOptions,
) -> Result<CocycleCheck> {
    let k = cocycle_time_field(scheme, f, g)?;
    let (ends, reference_gap, max_steps) = reference_endpoints(&k, t, probes, opts)?;
    let psi = compose_scheme(scheme, f, g, t)?;
    let kind = f.mesh().kind();
    let mut dist: f64 = 0.0;
    for (p, e) in probes.iter().zip(&ends) {
        dist = dist.max(distance(kind, &psi.apply(p)?, e));
    }
    Ok(CocycleCheck { t, distance: dist, reference_gap, max_steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Mesh;
    use crate::scheme::{lie_trotter, strang, yoshida};

    fn torus_pair() -> (ScalarField, ScalarField) {
        let m = Arc::new(Mesh::torus(16, 16).unwrap());
        (ScalarField::parse(&m, "sin(2*pi*q)").unwrap(), ScalarField::parse(&m, "sin(2*pi*p)").unwrap())
    }

    fn sphere_pair() -> (ScalarField, ScalarField) {
        let m = Arc::new(Mesh::sphere(3).unwrap());
        (ScalarField::parse(&m, "x").unwrap(), ScalarField::parse(&m, "y").unwrap())
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (f, g) in [torus_pair(), sphere_pair()] {
            let stages = scheme_generators(&yoshida(4).unwrap(), &f, &g).unwrap();
            let dims = if f.mesh().is_sphere() { 3 } else { 2 };
            for p in f.mesh().points().iter().step_by(17) {
                let grad = cocycle_gradient(&stages, p, 0.05).unwrap();
                for c in 0..dims {
                    let mut e = Point::zeros();
                    e[c] = 1e-6;
                    let fd = (cocycle_value(&stages, &(p + e), 0.05).unwrap()
                        - cocycle_value(&stages, &(p - e), 0.05).unwrap())
                        / 2e-6;
                    assert!((fd - grad[c]).abs() < 1e-6 * (1.0 + fd.abs()), "{c}: {fd} vs {}", grad[c]);
                }
            }
        }
    }

    #[test]
    fn generating_hamiltonian_reproduces_the_composition() {
        for (f, g) in [torus_pair(), sphere_pair()] {
            for scheme in [lie_trotter(), strang()] {
                let t = 0.05;
                let k = cocycle_time_field(&scheme, &f, &g).unwrap();
                let probes: Vec<Point> = f.mesh().points().iter().step_by(13).copied().collect();
                let opts = ReferenceOptions { tol: 1e-12, ..Default::default() };
                let (ends, gap, _) = reference_endpoints(&k, t, &probes, opts).unwrap();
                let psi = compose_scheme(&scheme, &f, &g, t).unwrap();
                for (p, e) in probes.iter().zip(&ends) {
                    let d = distance(f.mesh().kind(), &psi.apply(p).unwrap(), e);
                    assert!(d < 1e-10 + 10.0 * gap, "{}: {d}", scheme.label);
                }
            }
        }
    }

    #[test]
    fn zero_time_and_zero_second_field() {
        let (f, g) = torus_pair();
        let k0 = cocycle_hamiltonian(&yoshida(4).unwrap(), &f, &g, 0.0).unwrap();
        let sum = f.add(&g).unwrap();
        for (a, b) in k0.values().iter().zip(sum.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        // with G = 0 the composition is the flow of F for the full time
        let zero = ScalarField::parse(f.mesh(), "0").unwrap();
        let psi = compose_scheme(&yoshida(4).unwrap(), &f, &zero, 0.3).unwrap();
        let phi = crate::flow::exact_flow(&f, 0.3, 1.0).unwrap();
        for p in f.mesh().points() {
            assert!(distance(f.mesh().kind(), &psi.apply(p).unwrap(), &phi.apply(p).unwrap()) < 1e-13);
        }
        let r = remainder_norm(&strang(), &f, &zero, 0.3, NormKind::Uniform).unwrap();
        assert!(r < 1e-13);
    }

    #[test]
    fn degenerate_ratio() {
        let (f, _) = torus_pair();
        let err = remainder_ratio_sweep(&strang(), &f, &f, &[0.1], NormKind::Uniform, BracketOptions::default());
        assert!(matches!(err, Err(Error::ExactFlowUnavailable(_)) | Err(Error::DegenerateInput(_))));
    }
}
