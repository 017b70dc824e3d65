//! Reeb graphs of fields on the sphere, the median of the pushed-forward area
//! measure, the quasi-state `ζ` and the defect `Π`.
//!
//! The Reeb graph of a piecewise-linear field is its contour tree. Vertex
//! masses are the lumped area weights of the mesh, so the pushed-forward
//! measure is a sum of atoms, one per vertex; inside an edge each atom is
//! spread uniformly over the value band halfway to its neighbors, which makes
//! the median value a continuous function of the data.

mod contour;
mod export;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Mesh, ScalarField};

/// Calibrated constant of the mesh tolerance [`tau`].
pub const TAU_CONSTANT: f64 = 4.0;

/// Tolerance of ζ-level assertions at a sphere refinement level:
/// `TAU_CONSTANT · 4^{−level}`.
pub fn tau(level: u32) -> f64 {
    TAU_CONSTANT * 0.25f64.powi(level as i32)
}

/// Mass deviation from one half below which a median is reported ambiguous.
pub const MULTI_MEDIAN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Minimum,
    Maximum,
    Saddle,
    /// The single node of a constant field.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReebNode {
    pub id: usize,
    pub kind: NodeKind,
    /// Mesh vertex representing the critical level component.
    pub vertex: usize,
    pub value: f64,
    /// Area carried by the node itself (the lumped weight of its vertex).
    pub atom: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReebEdge {
    pub id: usize,
    pub lower: usize,
    pub upper: usize,
    pub mass: f64,
    pub interval: (f64, f64),
    /// Regular vertices inside the edge, in increasing value order.
    pub interior: Vec<usize>,
}

/// Where a vertex sits in the reduced graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Node(usize),
    Edge(usize),
}

/// Contour tree of a sphere field with its pushed-forward area measure.
#[derive(Debug, Clone, Serialize)]
pub struct ReebGraph {
    pub level: u32,
    pub nodes: Vec<ReebNode>,
    pub edges: Vec<ReebEdge>,
    /// Set when the field is constant and the graph is a single node.
    pub degenerate: bool,
    #[serde(skip)]
    values: Vec<f64>,
    #[serde(skip)]
    masses: Vec<f64>,
    #[serde(skip)]
    up: Vec<Vec<usize>>,
    #[serde(skip)]
    down: Vec<Vec<usize>>,
    #[serde(skip)]
    place: Vec<Place>,
}

/// Location of the median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "snake_case")]
pub enum MedianLocation {
    Node { node: usize },
    Edge { edge: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianPoint {
    pub location: MedianLocation,
    /// Mesh vertex at or next to the median.
    pub vertex: usize,
    pub zeta_value: f64,
    /// Masses of the components left after removing the median.
    pub component_masses: Vec<f64>,
    /// A component has mass within [`MULTI_MEDIAN_SLACK`] of one half, so a
    /// neighboring point is a median too; the smaller vertex id is returned.
    pub multi_median: bool,
}

/// Counts of the graph and the leaves that survive a persistence threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReebSummary {
    pub nodes: usize,
    pub edges: usize,
    pub minima: usize,
    pub maxima: usize,
    pub saddles: usize,
    pub total_mass: f64,
    pub persistence_threshold: f64,
    pub persistent_leaves: usize,
}

/// Builds the contour tree of `f`, which must live on a sphere mesh.
pub fn build_reeb(f: &ScalarField) -> Result<ReebGraph> {
    let mesh: &Arc<Mesh> = f.mesh();
    let crate::manifold::MeshKind::Sphere { level } = mesh.kind() else {
        return Err(Error::NotASphereMesh);
    };
    let values = f.values().to_vec();
    let masses = mesh.weights().to_vec();
    let n = values.len();
    if f.is_constant() {
        let node = ReebNode { id: 0, kind: NodeKind::Constant, vertex: 0, value: values[0], atom: masses.iter().sum() };
        return Ok(ReebGraph {
            level,
            nodes: vec![node],
            edges: Vec::new(),
            degenerate: true,
            values,
            masses,
            up: vec![Vec::new(); n],
            down: vec![Vec::new(); n],
            place: vec![Place::Node(0); n],
        });
    }
    let adjacency: Vec<Vec<usize>> = (0..n).map(|i| mesh.neighbors(i).to_vec()).collect();
    let arcs = contour::contour_arcs(&values, &adjacency);
    let (order, rank) = contour::sweep_order(&values);
    let mut up = vec![Vec::new(); n];
    let mut down = vec![Vec::new(); n];
    for &(lo, hi) in &arcs {
        up[lo].push(hi);
        down[hi].push(lo);
    }
    for list in up.iter_mut().chain(down.iter_mut()) {
        list.sort_by_key(|&v| rank[v]);
    }
    let critical = |v: usize| !(up[v].len() == 1 && down[v].len() == 1);

    let mut place = vec![Place::Node(usize::MAX); n];
    let mut nodes = Vec::new();
    for &v in &order {
        if critical(v) {
            let kind = match (down[v].is_empty(), up[v].is_empty()) {
                (true, _) => NodeKind::Minimum,
                (_, true) => NodeKind::Maximum,
                _ => NodeKind::Saddle,
            };
            place[v] = Place::Node(nodes.len());
            nodes.push(ReebNode { id: nodes.len(), kind, vertex: v, value: values[v], atom: masses[v] });
        }
    }
    let mut edges = Vec::new();
    for node in &nodes {
        for &start in &up[node.vertex] {
            let id = edges.len();
            let mut interior = Vec::new();
            let mut cur = start;
            while !critical(cur) {
                interior.push(cur);
                place[cur] = Place::Edge(id);
                cur = up[cur][0];
            }
            let Place::Node(upper) = place[cur] else { unreachable!("critical vertices are nodes") };
            let mass = interior.iter().map(|&v| masses[v]).sum();
            edges.push(ReebEdge { id, lower: node.id, upper, mass, interval: (node.value, values[cur]), interior });
        }
    }
    Ok(ReebGraph { level, nodes, edges, degenerate: false, values, masses, up, down, place })
}

impl ReebGraph {
    /// `Σ edge masses + Σ node atoms`.
    pub fn total_mass(&self) -> f64 {
        self.edges.iter().map(|e| e.mass).sum::<f64>() + self.nodes.iter().map(|n| n.atom).sum::<f64>()
    }

    /// `#nodes − #edges == 1` and every vertex belongs to the graph.
    pub fn is_tree(&self) -> bool {
        self.nodes.len() == self.edges.len() + 1 && self.place.iter().all(|p| !matches!(p, Place::Node(usize::MAX)))
    }

    /// Every edge interval runs from its lower to its upper node value.
    pub fn intervals_consistent(&self) -> bool {
        self.edges.iter().all(|e| {
            let (lo, hi) = (self.nodes[e.lower].value, self.nodes[e.upper].value);
            e.interval == (lo, hi) && lo <= hi && e.interior.iter().all(|&v| (lo..=hi).contains(&self.values[v]))
        })
    }

    pub fn summary(&self, persistence_threshold: f64) -> ReebSummary {
        let count = |k: NodeKind| self.nodes.iter().filter(|n| n.kind == k).count();
        let degree = |id: usize| self.edges.iter().filter(|e| e.lower == id || e.upper == id).count();
        let persistent_leaves = self
            .edges
            .iter()
            .filter(|e| degree(e.lower) == 1 || degree(e.upper) == 1)
            .filter(|e| e.interval.1 - e.interval.0 >= persistence_threshold)
            .count();
        ReebSummary {
            nodes: self.nodes.len(),
            edges: self.edges.len(),
            minima: count(NodeKind::Minimum),
            maxima: count(NodeKind::Maximum),
            saddles: count(NodeKind::Saddle),
            total_mass: self.total_mass(),
            persistence_threshold,
            persistent_leaves,
        }
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.down[v].iter().chain(&self.up[v]).copied()
    }

    /// The point whose removal leaves components of mass at most one half.
    pub fn median(&self) -> MedianPoint {
        let total: f64 = self.masses.iter().sum();
        let half = total / 2.0;
        if self.degenerate {
            return MedianPoint {
                location: MedianLocation::Node { node: 0 },
                vertex: self.nodes[0].vertex,
                zeta_value: self.nodes[0].value,
                component_masses: Vec::new(),
                multi_median: false,
            };
        }
        let n = self.values.len();
        // subtree masses of the vertex-level tree rooted at vertex 0
        let mut parent = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![0];
        parent[0] = 0;
        while let Some(v) = stack.pop() {
            order.push(v);
            for u in self.neighbors(v) {
                if parent[u] == usize::MAX {
                    parent[u] = v;
                    stack.push(u);
                }
            }
        }
        let mut sub = self.masses.clone();
        for &v in order.iter().skip(1).rev() {
            sub[parent[v]] += sub[v];
        }
        let side = |w: usize, u: usize| if parent[u] == w && u != w { sub[u] } else { total - sub[w] };

        let mut v = 0;
        while let Some(c) = self.neighbors(v).filter(|&c| parent[c] == v && c != v).find(|&c| sub[c] > half) {
            v = c;
        }
        let tie = self.neighbors(v).find(|&u| (side(v, u) - half).abs() <= MULTI_MEDIAN_SLACK * total.max(1.0));
        if let Some(u) = tie {
            v = v.min(u);
        }
        let component_masses: Vec<f64> = self.neighbors(v).map(|u| side(v, u)).collect();
        let (location, zeta_value) = match self.place[v] {
            Place::Node(node) => (MedianLocation::Node { node }, self.values[v]),
            Place::Edge(edge) => {
                let (a, b) = (self.down[v][0], self.up[v][0]);
                let lo = 0.5 * (self.values[a] + self.values[v]);
                let hi = 0.5 * (self.values[v] + self.values[b]);
                let w = self.masses[v];
                let s = if w > 0.0 { ((half - side(v, a)) / w).clamp(0.0, 1.0) } else { 0.5 };
                let value = lo + s * (hi - lo);
                (MedianLocation::Edge { edge, value }, value)
            }
        };
        MedianPoint { location, vertex: v, zeta_value, component_masses, multi_median: tie.is_some() }
    }
}

/// `ζ(f)`: the value of `f` on the level component at the median.
pub fn quasi_state(f: &ScalarField) -> Result<f64> {
    Ok(build_reeb(f)?.median().zeta_value)
}

/// `Π(F, G) = |ζ(F+G) − ζ(F) − ζ(G)|` with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiDefect {
    pub pi: f64,
    pub zeta_f: f64,
    pub zeta_g: f64,
    pub zeta_sum: f64,
}

pub fn pi_defect(f: &ScalarField, g: &ScalarField) -> Result<PiDefect> {
    let sum = f.add(g)?;
    let zeta_f = quasi_state(f)?;
    let zeta_g = quasi_state(g)?;
    let zeta_sum = quasi_state(&sum)?;
    Ok(PiDefect { pi: (zeta_sum - zeta_f - zeta_g).abs(), zeta_f, zeta_g, zeta_sum })
}
