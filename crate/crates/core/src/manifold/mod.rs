//! The two closed surfaces used throughout: the flat torus `[0,1)²` with
//! coordinates `(q, p)` and the unit sphere with ambient coordinates
//! `(x, y, z)`. Both carry an area measure normalized to total mass 1.
//!
//! Points are stored as [`Point`] (`nalgebra::Vector3`); torus points use the
//! third component 0.

mod export;
mod field;
mod locate;

use std::collections::HashMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use field::{distance_d, NormKind, RefinedNorm, ScalarField};
pub use locate::Stencil;

pub type Point = Vector3<f64>;

pub const TORUS_COORDS: [&str; 2] = ["q", "p"];
pub const SPHERE_COORDS: [&str; 3] = ["x", "y", "z"];

/// Which surface a mesh discretizes, with its resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "manifold", rename_all = "snake_case")]
pub enum MeshKind {
    Torus { n_q: usize, n_p: usize },
    Sphere { level: u32 },
}

impl MeshKind {
    pub fn coords(&self) -> &'static [&'static str] {
        match self {
            MeshKind::Torus { .. } => &TORUS_COORDS,
            MeshKind::Sphere { .. } => &SPHERE_COORDS,
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, MeshKind::Sphere { .. })
    }
}

/// A discretized closed surface.
///
/// `weights` are per-vertex masses summing to 1. On the torus they are the
/// uniform cell masses; on the sphere they are lumped: each vertex receives a
/// third of the mass of every incident triangle, and triangle masses are flat
/// triangle areas renormalized to total 1.
#[derive(Debug, Clone)]
pub struct Mesh {
    kind: MeshKind,
    points: Vec<Point>,
    weights: Vec<f64>,
    triangles: Vec<[usize; 3]>,
    triangle_weights: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    /// Sphere only: the faces of every subdivision level, coarsest first.
    /// The children of face `f` at level `l` are faces `4f..4f+4` at `l + 1`.
    hierarchy: Vec<Vec<[usize; 3]>>,
    spacing: f64,
}

impl PartialEq for Mesh {
    /// Meshes are deterministic functions of their kind.
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Mesh {
    pub fn build(kind: MeshKind) -> Result<Self> {
        match kind {
            MeshKind::Torus { n_q, n_p } => Self::torus(n_q, n_p),
            MeshKind::Sphere { level } => Self::sphere(level),
        }
    }

    /// Uniform periodic grid with points `(i/n_q, j/n_p)` at index `i·n_p + j`.
    pub fn torus(n_q: usize, n_p: usize) -> Result<Self> {
        if n_q < 8 || n_p < 8 {
            return Err(Error::SizeTooSmall(format!("torus grid {n_q}x{n_p}, need at least 8x8")));
        }
        let n = n_q * n_p;
        let mut points = Vec::with_capacity(n);
        let mut neighbors = Vec::with_capacity(n);
        for i in 0..n_q {
            for j in 0..n_p {
                points.push(Point::new(i as f64 / n_q as f64, j as f64 / n_p as f64, 0.0));
                let up = (i + 1) % n_q;
                let down = (i + n_q - 1) % n_q;
                let right = (j + 1) % n_p;
                let left = (j + n_p - 1) % n_p;
                let mut nb = vec![up * n_p + j, down * n_p + j, i * n_p + right, i * n_p + left];
                nb.sort_unstable();
                nb.dedup();
                neighbors.push(nb);
            }
        }
        Ok(Self {
            kind: MeshKind::Torus { n_q, n_p },
            points,
            weights: vec![1.0 / n as f64; n],
            triangles: Vec::new(),
            triangle_weights: Vec::new(),
            neighbors,
            hierarchy: Vec::new(),
            spacing: (1.0 / n_q as f64).max(1.0 / n_p as f64),
        })
    }

    /// Icosahedron subdivided `level` times, midpoints projected to the unit sphere.
    pub fn sphere(level: u32) -> Result<Self> {
        if level < 3 {
            return Err(Error::SizeTooSmall(format!("sphere level {level}, need at least 3")));
        }
        if level > 8 {
            return Err(Error::SizeTooSmall(format!("sphere level {level} exceeds the supported maximum 8")));
        }
        let (mut points, base) = icosahedron();
        let mut hierarchy = vec![base];
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        for _ in 0..level {
            let coarse = hierarchy.last().expect("hierarchy starts non-empty");
            let mut fine = Vec::with_capacity(coarse.len() * 4);
            for &[a, b, c] in coarse {
                let mut mid = |u: usize, v: usize| {
                    let key = (u.min(v), u.max(v));
                    *midpoints.entry(key).or_insert_with(|| {
                        points.push((points[u] + points[v]).normalize());
                        points.len() - 1
                    })
                };
                let ab = mid(a, b);
                let bc = mid(b, c);
                let ca = mid(c, a);
                fine.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            }
            hierarchy.push(fine);
        }
        let triangles = hierarchy.last().expect("at least one level").clone();

        let areas: Vec<f64> = triangles
            .iter()
            .map(|&[a, b, c]| 0.5 * (points[b] - points[a]).cross(&(points[c] - points[a])).norm())
            .collect();
        let total: f64 = areas.iter().sum();
        let triangle_weights: Vec<f64> = areas.iter().map(|a| a / total).collect();

        let mut weights = vec![0.0; points.len()];
        let mut neighbors = vec![Vec::new(); points.len()];
        for (t, &[a, b, c]) in triangles.iter().enumerate() {
            for (u, v, w) in [(a, b, c), (b, c, a), (c, a, b)] {
                weights[u] += triangle_weights[t] / 3.0;
                neighbors[u].push(v);
                neighbors[u].push(w);
            }
        }
        let wsum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= wsum);
        for nb in &mut neighbors {
            nb.sort_unstable();
            nb.dedup();
        }
        let spacing = triangles.iter().map(|&[a, b, _]| (points[b] - points[a]).norm()).fold(0.0, f64::max);

        Ok(Self {
            kind: MeshKind::Sphere { level },
            points,
            weights,
            triangles,
            triangle_weights,
            neighbors,
            hierarchy,
            spacing,
        })
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn is_sphere(&self) -> bool {
        self.kind.is_sphere()
    }

    pub fn coords(&self) -> &'static [&'static str] {
        self.kind.coords()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Coordinates of vertex `i` in the order of [`Mesh::coords`].
    pub fn coordinates(&self, i: usize) -> Vec<f64> {
        coordinates_of(self.kind, &self.points[i])
    }

    /// Per-vertex masses, summing to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sphere triangles, outward oriented. Empty on the torus.
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Sphere triangle masses, summing to 1. Empty on the torus.
    pub fn triangle_weights(&self) -> &[f64] {
        &self.triangle_weights
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Longest edge (sphere) or grid step (torus).
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Wraps a torus point into `[0,1)²`, or normalizes a sphere point.
    pub fn canonical(&self, p: &Point) -> Point {
        match self.kind {
            MeshKind::Torus { .. } => Point::new(wrap_unit(p.x), wrap_unit(p.y), 0.0),
            MeshKind::Sphere { .. } => p.normalize(),
        }
    }
}

pub(crate) fn coordinates_of(kind: MeshKind, p: &Point) -> Vec<f64> {
    match kind {
        MeshKind::Torus { .. } => vec![p.x, p.y],
        MeshKind::Sphere { .. } => vec![p.x, p.y, p.z],
    }
}

/// Reduces `v` into `[0, 1)`.
pub fn wrap_unit(v: f64) -> f64 {
    let w = v - v.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Regular icosahedron on the unit sphere, faces oriented outward.
fn icosahedron() -> (Vec<Point>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let points: Vec<Point> = raw.iter().map(|&(x, y, z)| Point::new(x, y, z).normalize()).collect();
    let mut faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for f in &mut faces {
        let [a, b, c] = *f;
        let n = (points[b] - points[a]).cross(&(points[c] - points[a]));
        if n.dot(&points[a]) < 0.0 {
            f.swap(1, 2);
        }
    }
    (points, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_sizes_and_weights() {
        let m = Mesh::torus(8, 8).unwrap();
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let m = Mesh::torus(64, 64).unwrap();
        assert_eq!(m.len(), 4096);
        assert!(m.weights().iter().all(|&w| w == 1.0 / 4096.0));
        assert!(m.points().iter().all(|p| (0.0..1.0).contains(&p.x) && (0.0..1.0).contains(&p.y)));
        assert!(matches!(Mesh::torus(4, 4), Err(Error::SizeTooSmall(_))));
    }

    #[test]
    fn icosphere_counts_and_masses() {
        for level in 3..=5 {
            let m = Mesh::sphere(level).unwrap();
            let v = 10 * 4usize.pow(level) + 2;
            assert_eq!(m.len(), v);
            assert_eq!(m.triangles().len(), 20 * 4usize.pow(level));
            assert!((m.triangle_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(m.points().iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
        }
        assert!(matches!(Mesh::sphere(2), Err(Error::SizeTooSmall(_))));
    }

    #[test]
    fn icosphere_faces_point_outward_and_edges_match() {
        let m = Mesh::sphere(3).unwrap();
        for &[a, b, c] in m.triangles() {
            let p = m.points();
            let n = (p[b] - p[a]).cross(&(p[c] - p[a]));
            assert!(n.dot(&p[a]) > 0.0);
        }
        // closed surface: V - E + F = 2
        let edges: usize = (0..m.len()).map(|i| m.neighbors(i).len()).sum::<usize>() / 2;
        assert_eq!(m.len() as i64 - edges as i64 + m.triangles().len() as i64, 2);
    }

    #[test]
    fn hemispheres_carry_half_the_mass() {
        let m = Mesh::sphere(4).unwrap();
        let p = m.points();
        let north: f64 = m
            .triangles()
            .iter()
            .zip(m.triangle_weights())
            .filter(|(&[a, b, c], _)| p[a].z + p[b].z + p[c].z > 0.0)
            .map(|(_, w)| w)
            .sum();
        assert!((north - 0.5).abs() <= 0.01, "{north}");
    }

    #[test]
    fn wrap_unit_stays_in_range() {
        for v in [-1e-18, -0.25, 0.0, 0.999_999_999_999_999_9, 3.5, -7.0] {
            let w = wrap_unit(v);
            assert!((0.0..1.0).contains(&w), "{v} -> {w}");
        }
    }
}
