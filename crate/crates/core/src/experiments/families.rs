//! Seeded families of smooth fields and perturbed pairs.
//!
//! Perturbations are random polynomials of degree at most three in the
//! ambient coordinates on the sphere (spherical harmonics of degree ≤ 3) and
//! random trigonometric polynomials of degree at most three on the torus,
//! normalized to unit uniform norm. They keep a closed form, so brackets stay
//! symbolic.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::manifold::{Mesh, ScalarField};

/// Highest degree of a random perturbation.
pub const MAX_DEGREE: u32 = 3;

/// A random field of unit uniform norm.
pub fn random_field(mesh: &Arc<Mesh>, rng: &mut ChaCha8Rng) -> Result<ScalarField> {
    let mut src = String::from("0");
    if mesh.is_sphere() {
        for total in 1..=MAX_DEGREE {
            for a in (0..=total).rev() {
                for b in (0..=total - a).rev() {
                    let c = total - a - b;
                    let coefficient: f64 = rng.gen_range(-1.0..1.0);
                    write!(src, " + ({coefficient:?})*x^{a}*y^{b}*z^{c}").expect("writing to a String");
                }
            }
        }
    } else {
        for j in 0..=MAX_DEGREE as i32 {
            for k in -(MAX_DEGREE as i32)..=MAX_DEGREE as i32 {
                if j == 0 && k <= 0 || j.abs() + k.abs() > MAX_DEGREE as i32 {
                    continue;
                }
                let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                write!(src, " + ({a:?})*cos(2*pi*({j}*q + ({k})*p)) + ({b:?})*sin(2*pi*({j}*q + ({k})*p))")
                    .expect("writing to a String");
            }
        }
    }
    let field = ScalarField::parse(mesh, &src)?;
    let norm = field.uniform_norm();
    Ok(if norm > 0.0 { field.scale(1.0 / norm) } else { field })
}

/// `count` random fields from `seed`.
pub fn random_fields(mesh: &Arc<Mesh>, seed: u64, count: usize) -> Result<Vec<ScalarField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_field(mesh, &mut rng)).collect()
}

/// A member of a perturbed family.
#[derive(Debug, Clone)]
pub struct FamilyPair {
    /// Which random perturbation (0-based) was used.
    pub perturbation: usize,
    pub amplitude: f64,
    pub f: ScalarField,
    pub g: ScalarField,
}

/// `(F + s·R_i, G + s·S_i)` for `count` independent perturbation pairs
/// `(R_i, S_i)` drawn from `seed` and every amplitude `s`, ordered by `i`
/// and then by amplitude.
pub fn perturbed_family(
    f: &ScalarField,
    g: &ScalarField,
    seed: u64,
    count: usize,
    amplitudes: &[f64],
) -> Result<Vec<FamilyPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(count * amplitudes.len());
    for i in 0..count {
        let r = random_field(f.mesh(), &mut rng)?;
        let s = random_field(f.mesh(), &mut rng)?;
        for &amplitude in amplitudes {
            pairs.push(FamilyPair {
                perturbation: i,
                amplitude,
                f: f.add(&r.scale(amplitude))?,
                g: g.add(&s.scale(amplitude))?,
            });
        }
    }
    Ok(pairs)
}
