//! Seeded checks of the quasi-state axioms for the Reeb-graph median.
//!
//! Every check draws its random fields from a seed and two uniform
//! parameters in `[0, 1)`, and returns the *excess* of the inequality it
//! tests, `lhs − rhs`: the property holds when the excess is not positive.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::families::random_field;
use crate::error::Result;
use crate::manifold::{distance_d, Mesh, ScalarField};
use crate::reeb::{build_reeb, pi_defect, quasi_state, tau};

/// A property of the quasi-state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    /// `ζ(c) = c` for constants.
    Normalization,
    /// `F ≥ G ⇒ ζ(F) ≥ ζ(G)`, with `G = F − s|R|`.
    Monotonicity,
    /// `ζ(a f∘h + b g∘h) = aζ(f∘h) + bζ(g∘h)` and `Π(f∘h, g∘h) = 0`.
    CommutingLinearity,
    /// `ζ(aF) = aζ(F)`: exact for `a > 0`, up to the mesh tolerance for `a < 0`.
    Homogeneity,
    /// `|ζ(F) − ζ(G)| ≤ ‖F − G‖`.
    UniformLipschitz,
    /// `|Π(F,G) − Π(F′,G′)| ≤ 2d((F,G),(F′,G′))` and `Π ≤ 2 max(‖F‖, ‖G‖)`.
    DefectLipschitz,
    /// The Reeb graph is a tree of total mass 1 whose median splits it into
    /// parts of mass at most ½.
    GraphInvariants,
}

impl Axiom {
    pub const ALL: [Axiom; 7] = [
        Axiom::Normalization,
        Axiom::Monotonicity,
        Axiom::CommutingLinearity,
        Axiom::Homogeneity,
        Axiom::UniformLipschitz,
        Axiom::DefectLipschitz,
        Axiom::GraphInvariants,
    ];
}

/// Outcome of one axiom over many instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub cases: usize,
    pub failures: usize,
    /// Largest excess over all instances; not positive when all passed.
    pub worst_excess: f64,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn fields<const K: usize>(mesh: &Arc<Mesh>, seed: u64) -> Result<[ScalarField; K]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<ScalarField> = (0..K).map(|_| random_field(mesh, &mut rng)).collect::<Result<_>>()?;
    Ok(v.try_into().unwrap_or_else(|_| unreachable!("exactly K fields were drawn")))
}

fn compose(h: &ScalarField, phi: impl Fn(f64) -> f64) -> Result<ScalarField> {
    ScalarField::from_values(h.mesh(), h.values().iter().map(|&v| phi(v)).collect())
}

fn flag(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

/// Excess of one instance of `axiom` on the sphere `mesh`, with fields drawn
/// from `seed` and parameters `u, v ∈ [0, 1)`.
pub fn axiom_excess(axiom: Axiom, mesh: &Arc<Mesh>, seed: u64, u: f64, v: f64) -> Result<f64> {
    let level = match mesh.kind() {
        crate::manifold::MeshKind::Sphere { level } => level,
        _ => return Err(crate::error::Error::NotASphereMesh),
    };
    let tol = tau(level);
    let zeta = quasi_state;
    Ok(match axiom {
        Axiom::Normalization => {
            let c = 8.0 * u - 4.0;
            (zeta(&ScalarField::constant(mesh, c))? - c).abs()
        }
        Axiom::Monotonicity => {
            let [f, r] = fields(mesh, seed)?;
            let g = f.sub(&compose(&r, f64::abs)?.scale(2.0 * u))?;
            zeta(&g)? - zeta(&f)? - tol
        }
        Axiom::CommutingLinearity => {
            let [h] = fields(mesh, seed)?;
            let (a, b) = (4.0 * u - 2.0, 4.0 * v - 2.0);
            let f = compose(&h, |s| s)?;
            let g = compose(&h, |s| (3.0 * s).sin())?;
            let combined = f.scale(a).add(&g.scale(b))?;
            let defect = (zeta(&combined)? - a * zeta(&f)? - b * zeta(&g)?).abs();
            (defect - tol).max(pi_defect(&f, &g)?.pi - tol)
        }
        Axiom::Homogeneity => {
            let [f] = fields(mesh, seed)?;
            let a = 0.01 + 3.99 * u;
            let z = zeta(&f)?;
            let positive = (zeta(&f.scale(a))? - a * z).abs() - 1e-12 * a.max(1.0);
            let negative = (zeta(&f.scale(-a))? + a * z).abs() - tol * a.max(1.0);
            positive.max(negative)
        }
        Axiom::UniformLipschitz => {
            let [f, r] = fields(mesh, seed)?;
            let g = f.add(&r.scale(u))?;
            (zeta(&f)? - zeta(&g)?).abs() - f.sub(&g)?.uniform_norm() - tol
        }
        Axiom::DefectLipschitz => {
            let [f, g, r, s] = fields(mesh, seed)?;
            let amplitude = 0.5 * u;
            let (f2, g2) = (f.add(&r.scale(amplitude))?, g.add(&s.scale(amplitude))?);
            let p = pi_defect(&f, &g)?.pi;
            let p2 = pi_defect(&f2, &g2)?.pi;
            let d = distance_d((&f, &g), (&f2, &g2))?;
            let lipschitz = (p - p2).abs() - 2.0 * d - tol;
            let bound = p - 2.0 * f.uniform_norm().max(g.uniform_norm()) - tol;
            lipschitz.max(bound)
        }
        Axiom::GraphInvariants => {
            let [f] = fields(mesh, seed)?;
            let graph = build_reeb(&f)?;
            let median = graph.median();
            let ok = graph.is_tree()
                && graph.intervals_consistent()
                && (graph.total_mass() - 1.0).abs() <= 1e-12
                && graph.edges.iter().all(|e| e.mass >= 0.0 && e.interval.0 <= e.interval.1)
                && median.component_masses.iter().all(|&m| m <= 0.5 + 1e-12);
            flag(ok)
        }
    })
}

/// Runs `cases` seeded instances of every axiom at sphere `level`.
pub fn axiom_suite(level: u32, cases: usize, seed: u64) -> Result<Vec<AxiomReport>> {
    let mesh = Arc::new(Mesh::sphere(level)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instances: Vec<(u64, f64, f64)> = (0..cases).map(|_| (rng.gen(), rng.gen(), rng.gen())).collect();
    Axiom::ALL
        .iter()
        .map(|&axiom| {
            let excess: Vec<f64> =
                instances.par_iter().map(|&(s, u, v)| axiom_excess(axiom, &mesh, s, u, v)).collect::<Result<_>>()?;
            Ok(AxiomReport {
                axiom,
                cases,
                failures: excess.iter().filter(|&&e| e > 0.0).count(),
                worst_excess: excess.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        for report in axiom_suite(3, 5, 11).unwrap() {
            assert!(report.passed(), "{report:?}");
            assert_eq!(report.cases, 5);
        }
    }

    #[test]
    fn torus_is_rejected() {
        let mesh = Arc::new(Mesh::torus(16, 16).unwrap());
        assert!(axiom_excess(Axiom::Monotonicity, &mesh, 1, 0.5, 0.5).is_err());
    }
}
