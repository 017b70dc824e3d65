//! Taylor expansion of `A ∘ φ_{H_1}^t ∘ ⋯ ∘ φ_{H_n}^t` in nested brackets,
//! and flow-equivalence orders of Hamiltonians that agree to high order in
//! time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{distance, reference_endpoints, ExactGenerator, ReferenceOptions, TimeField};
use crate::bracket::poisson;
use crate::error::{Error, Result};
use crate::fit::{estimate_order, OrderEstimate, SweepPoint};
use crate::manifold::{Point, ScalarField};

/// `t^{|i|} / i! · ad_{H_n}^{i_n} ⋯ ad_{H_1}^{i_1} A`, with `ad_H B = {B, H}`.
#[derive(Debug, Clone)]
pub struct ExpansionTerm {
    pub multi_index: Vec<u32>,
    pub coefficient: f64,
    pub field: ScalarField,
}

impl ExpansionTerm {
    pub fn degree(&self) -> u32 {
        self.multi_index.iter().sum()
    }
}

/// All terms with `|i| ≤ order − 1`, in lexicographic order of the
/// multi-index. Every field must carry a closed form.
pub fn composition_expansion(a: &ScalarField, hams: &[ScalarField], order: u32) -> Result<Vec<ExpansionTerm>> {
    if a.expr().is_none() || hams.iter().any(|h| h.expr().is_none()) {
        return Err(Error::SymbolicRequired("the composition expansion needs closed-form fields".into()));
    }
    if hams.iter().any(|h| h.mesh() != a.mesh()) {
        return Err(Error::MeshMismatch);
    }
    if order == 0 {
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    let mut index = Vec::with_capacity(hams.len());
    expand(a, hams, order - 1, 1.0, &mut index, &mut terms)?;
    Ok(terms)
}

/// Applies `ad_{H_k}^i` for the next Hamiltonian `k = index.len()`.
fn expand(
    field: &ScalarField,
    hams: &[ScalarField],
    budget: u32,
    coefficient: f64,
    index: &mut Vec<u32>,
    out: &mut Vec<ExpansionTerm>,
) -> Result<()> {
    let k = index.len();
    if k == hams.len() {
        out.push(ExpansionTerm { multi_index: index.clone(), coefficient, field: field.clone() });
        return Ok(());
    }
    let mut current = field.clone();
    let mut factorial = 1.0;
    for i in 0..=budget {
        if i > 0 {
            current = poisson(&current, &hams[k])?;
            factorial *= i as f64;
        }
        index.push(i);
        expand(&current, hams, budget - i, coefficient / factorial, index, out)?;
        index.pop();
    }
    Ok(())
}

/// `max_x |A(φ_{H_1}^t ∘ ⋯ ∘ φ_{H_n}^t (x)) − Σ terms(x) t^{|i|}|` over the
/// mesh vertices; the Hamiltonians must have closed-form flows.
pub fn expansion_residual(a: &ScalarField, hams: &[ScalarField], terms: &[ExpansionTerm], t: f64) -> Result<f64> {
    let generators: Vec<ExactGenerator> = hams.iter().map(ExactGenerator::recognize).collect::<Result<_>>()?;
    let tape = a
        .expr()
        .ok_or_else(|| Error::SymbolicRequired("the composition expansion needs closed-form fields".into()))?
        .tape();
    let kind = a.mesh().kind();
    let residuals: Vec<f64> = a
        .mesh()
        .points()
        .par_iter()
        .enumerate()
        .map(|(v, p)| {
            let y = generators.iter().rev().try_fold(*p, |x, g| g.apply(&x, t))?;
            let exact = tape.eval(&crate::manifold::coordinates_of(kind, &y))?;
            let series: f64 =
                terms.iter().map(|term| term.coefficient * term.field.values()[v] * t.powi(term.degree() as i32)).sum();
            Ok((exact - series).abs())
        })
        .collect::<Result<_>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// Residuals over `ts`, ready for [`estimate_order`]; the expected slope is
/// `order`.
pub fn expansion_residual_sweep(
    a: &ScalarField,
    hams: &[ScalarField],
    order: u32,
    ts: &[f64],
) -> Result<Vec<SweepPoint>> {
    let terms = composition_expansion(a, hams, order)?;
    ts.iter()
        .map(|&t| Ok(SweepPoint { t, value: expansion_residual(a, hams, &terms, t)?, error_estimate: 0.0 }))
        .collect()
}

/// `max |(U_t − mean U_t) − (V_t − mean V_t)|` over the given points, each
/// mean being the plain average over those points.
pub fn hamiltonian_gap(u: &TimeField, v: &TimeField, t: f64, points: &[Point]) -> Result<f64> {
    let du: Vec<f64> = points.iter().map(|p| u.value(t, p)).collect::<Result<_>>()?;
    let dv: Vec<f64> = points.iter().map(|p| v.value(t, p)).collect::<Result<_>>()?;
    let n = points.len().max(1) as f64;
    let (mu, mv) = (du.iter().sum::<f64>() / n, dv.iter().sum::<f64>() / n);
    Ok(du.iter().zip(&dv).map(|(a, b)| ((a - mu) - (b - mv)).abs()).fold(0.0, f64::max))
}

/// Slopes of the flow distance `max ‖φ_U^t(x) − φ_V^t(x)‖` and of the
/// Hamiltonian gap `‖U_t − V_t‖`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub flow_points: Vec<SweepPoint>,
    pub hamiltonian_points: Vec<SweepPoint>,
    pub flow: OrderEstimate,
    pub hamiltonian: OrderEstimate,
}

pub fn flow_equivalence_order(
    u: &TimeField,
    v: &TimeField,
    ts: &[f64],
    probes: &[Point],
    opts: ReferenceOptions,
) -> Result<EquivalenceReport> {
    let kind = u.kind();
    let mut flow_points = Vec::with_capacity(ts.len());
    let mut hamiltonian_points = Vec::with_capacity(ts.len());
    for &t in ts {
        let (a, gap_a, _) = reference_endpoints(u, t, probes, opts)?;
        let (b, gap_b, _) = reference_endpoints(v, t, probes, opts)?;
        let value = a.iter().zip(&b).map(|(x, y)| distance(kind, x, y)).fold(0.0, f64::max);
        flow_points.push(SweepPoint { t, value, error_estimate: gap_a + gap_b });
        hamiltonian_points.push(SweepPoint { t, value: hamiltonian_gap(u, v, t, probes)?, error_estimate: 0.0 });
    }
    Ok(EquivalenceReport {
        flow: estimate_order(&flow_points)?,
        hamiltonian: estimate_order(&hamiltonian_points)?,
        flow_points,
        hamiltonian_points,
    })
}
