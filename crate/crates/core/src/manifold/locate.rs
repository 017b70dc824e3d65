//! Point location and piecewise-linear interpolation.

use super::{wrap_unit, Mesh, MeshKind, Point};
use crate::error::{Error, Result};

/// Interpolation stencil: up to four vertices and their weights (summing to 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub vertices: [usize; 4],
    pub weights: [f64; 4],
}

impl Stencil {
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.vertices.iter().zip(&self.weights).map(|(&v, &w)| w * values[v]).sum()
    }
}

/// Signed side of `p` against the great circle through `a` and `b`;
/// positive on the left when looking along `a → b` from outside.
fn side(a: &Point, b: &Point, p: &Point) -> f64 {
    a.cross(b).dot(p)
}

fn inside_score(mesh: &Mesh, face: &[usize; 3], p: &Point) -> f64 {
    let [a, b, c] = face.map(|i| &mesh.points[i]);
    side(a, b, p).min(side(b, c, p)).min(side(c, a, p))
}

impl Mesh {
    /// Interpolation stencil at `p`: bilinear on the periodic torus grid;
    /// barycentric on the sphere triangle containing `p`, evaluated at the
    /// gnomonic projection of `p` onto the triangle's plane.
    pub fn stencil(&self, p: &Point) -> Result<Stencil> {
        match self.kind {
            MeshKind::Torus { n_q, n_p } => {
                if !(p.x.is_finite() && p.y.is_finite()) {
                    return Err(Error::LocationFailure(p.x, p.y, p.z));
                }
                let (i0, fq) = cell(wrap_unit(p.x), n_q);
                let (j0, fp) = cell(wrap_unit(p.y), n_p);
                let i1 = (i0 + 1) % n_q;
                let j1 = (j0 + 1) % n_p;
                Ok(Stencil {
                    vertices: [i0 * n_p + j0, i1 * n_p + j0, i0 * n_p + j1, i1 * n_p + j1],
                    weights: [(1.0 - fq) * (1.0 - fp), fq * (1.0 - fp), (1.0 - fq) * fp, fq * fp],
                })
            }
            MeshKind::Sphere { .. } => {
                let n = p.norm();
                if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
                    return Err(Error::LocationFailure(p.x, p.y, p.z));
                }
                let p = p / n;
                let face = self.locate_face(&p);
                let [a, b, c] = face.map(|i| self.points[i]);
                let normal = (b - a).cross(&(c - a));
                let denom = normal.dot(&p);
                if denom <= 0.0 {
                    return Err(Error::LocationFailure(p.x, p.y, p.z));
                }
                let q = p * (normal.dot(&a) / denom);
                let area = normal.norm_squared();
                let wa = (b - q).cross(&(c - q)).dot(&normal) / area;
                let wb = (c - q).cross(&(a - q)).dot(&normal) / area;
                let wc = 1.0 - wa - wb;
                Ok(Stencil { vertices: [face[0], face[1], face[2], face[0]], weights: [wa, wb, wc, 0.0] })
            }
        }
    }

    /// Descends the subdivision hierarchy, at every level choosing the face
    /// whose worst edge test is best. Children exactly tile their parent's
    /// spherical triangle, so on exact arithmetic this finds the containing
    /// face; near edges either neighbour is acceptable.
    fn locate_face(&self, p: &Point) -> [usize; 3] {
        let mut best = 0usize;
        let mut best_score = f64::NEG_INFINITY;
        for (f, face) in self.hierarchy[0].iter().enumerate() {
            let s = inside_score(self, face, p);
            if s > best_score {
                best = f;
                best_score = s;
            }
        }
        for level in &self.hierarchy[1..] {
            let parent = best;
            best_score = f64::NEG_INFINITY;
            for (child, face) in level.iter().enumerate().skip(4 * parent).take(4) {
                let s = inside_score(self, face, p);
                if s > best_score {
                    best = child;
                    best_score = s;
                }
            }
        }
        self.hierarchy.last().expect("sphere mesh has faces")[best]
    }

    /// Value of the piecewise-linear interpolant of `values` at `p`.
    pub fn interpolate(&self, values: &[f64], p: &Point) -> Result<f64> {
        Ok(self.stencil(p)?.apply(values))
    }
}

fn cell(u: f64, n: usize) -> (usize, f64) {
    let s = u * n as f64;
    let i = (s.floor() as usize).min(n - 1);
    (i, s - i as f64)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_unit(rng: &mut ChaCha8Rng) -> Point {
        loop {
            let v = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                return v / n;
            }
        }
    }

    #[test]
    fn exact_at_nodes() {
        for mesh in [Mesh::sphere(3).unwrap(), Mesh::torus(9, 12).unwrap()] {
            let values: Vec<f64> = (0..mesh.len()).map(|i| (i as f64 * 0.37).sin()).collect();
            for (i, p) in mesh.points().iter().enumerate() {
                let v = mesh.interpolate(&values, p).unwrap();
                assert!((v - values[i]).abs() < 1e-12, "vertex {i}: {v} vs {}", values[i]);
            }
        }
    }

    #[test]
    fn constants_interpolate_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mesh = Mesh::sphere(3).unwrap();
        let values = vec![2.5; mesh.len()];
        for _ in 0..500 {
            let p = random_unit(&mut rng);
            assert!((mesh.interpolate(&values, &p).unwrap() - 2.5).abs() < 1e-12);
        }
        let torus = Mesh::torus(8, 10).unwrap();
        let values = vec![-1.0; torus.len()];
        for _ in 0..500 {
            let p = Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), 0.0);
            assert!((torus.interpolate(&values, &p).unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_weights_are_barycentric() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mesh = Mesh::sphere(4).unwrap();
        for _ in 0..2000 {
            let s = mesh.stencil(&random_unit(&mut rng)).unwrap();
            assert!(s.weights.iter().all(|&w| w >= -1e-9), "{s:?}");
        }
    }

    #[test]
    fn height_interpolation_error_at_level_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mesh = Mesh::sphere(4).unwrap();
        let z: Vec<f64> = mesh.points().iter().map(|p| p.z).collect();
        let worst = (0..5000)
            .map(|_| {
                let p = random_unit(&mut rng);
                (mesh.interpolate(&z, &p).unwrap() - p.z).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 5e-3, "{worst}");
    }

    #[test]
    fn torus_bilinear_reproduces_bilinear_functions() {
        let mesh = Mesh::torus(16, 16).unwrap();
        // q·p is bilinear inside cells away from the seam
        let values: Vec<f64> = mesh.points().iter().map(|p| p.x * p.y).collect();
        let p = Point::new(0.33, 0.71, 0.0);
        assert!((mesh.interpolate(&values, &p).unwrap() - 0.33 * 0.71).abs() < 1e-12);
    }

    #[test]
    fn rejects_points_off_the_sphere() {
        let mesh = Mesh::sphere(3).unwrap();
        let values = vec![0.0; mesh.len()];
        assert!(matches!(mesh.interpolate(&values, &Point::new(0.0, 0.0, 2.0)), Err(Error::LocationFailure(..))));
        assert!(mesh.interpolate(&values, &Point::new(f64::NAN, 0.0, 1.0)).is_err());
    }
}
