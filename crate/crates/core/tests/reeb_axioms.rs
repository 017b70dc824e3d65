//! Quasi-state axioms for the Reeb-graph median on the level-4 sphere, each
//! property checked on 100 generated instances.

use std::sync::{Arc, LazyLock};

use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use symprig::experiments::axioms::{axiom_excess, Axiom};
use symprig::manifold::Mesh;

static MESH: LazyLock<Arc<Mesh>> = LazyLock::new(|| Arc::new(Mesh::sphere(4).unwrap()));

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 100,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(0x5eed),
        ..ProptestConfig::default()
    }
}

fn check(axiom: Axiom, seed: u64, u: f64, v: f64) -> Result<(), TestCaseError> {
    let excess = axiom_excess(axiom, &MESH, seed, u, v).unwrap();
    prop_assert!(excess <= 0.0, "{axiom:?} exceeded by {excess} (seed {seed}, u {u}, v {v})");
    Ok(())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn normalization(u in 0.0f64..1.0) {
        check(Axiom::Normalization, 0, u, 0.0)?;
    }

    #[test]
    fn monotonicity(seed in any::<u64>(), u in 0.0f64..1.0) {
        check(Axiom::Monotonicity, seed, u, 0.0)?;
    }

    #[test]
    fn linear_on_commuting_pairs(seed in any::<u64>(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        check(Axiom::CommutingLinearity, seed, u, v)?;
    }

    #[test]
    fn homogeneity(seed in any::<u64>(), u in 0.0f64..1.0) {
        check(Axiom::Homogeneity, seed, u, 0.0)?;
    }

    #[test]
    fn uniform_lipschitz(seed in any::<u64>(), u in 0.0f64..1.0) {
        check(Axiom::UniformLipschitz, seed, u, 0.0)?;
    }

    #[test]
    fn defect_lipschitz(seed in any::<u64>(), u in 0.0f64..1.0) {
        check(Axiom::DefectLipschitz, seed, u, 0.0)?;
    }

    #[test]
    fn graph_invariants(seed in any::<u64>()) {
        check(Axiom::GraphInvariants, seed, 0.0, 0.0)?;
    }
}
