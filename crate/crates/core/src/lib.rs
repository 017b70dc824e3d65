//! Computable objects around the C⁰-rigidity of iterated Poisson brackets.
//!
//! * [`expr`]: closed-form fields with exact symbolic derivatives.
//! * [`manifold`]: the flat torus and the unit sphere, normalized to total mass 1.
//! * [`bracket`]: Poisson brackets, left-nested Lie monomials and `Q_N`.
//! * [`scheme`]: splitting integrators (Lie–Trotter, Strang, Yoshida triple jumps).
//! * [`flow`]: exact and reference Hamiltonian flows, composed schemes, the
//!   cocycle Hamiltonian and its remainder, composition expansions.
//! * [`reeb`]: contour trees on the sphere, the median quasi-state and its defect.
//! * [`experiments`]: sweeps over seeded families and tabular output.

pub mod bracket;
pub mod experiments;
pub mod expr;
pub mod fit;
pub mod flow;
pub mod manifold;
pub mod reeb;
pub mod scheme;

mod error;

pub use error::{Error, Result};
