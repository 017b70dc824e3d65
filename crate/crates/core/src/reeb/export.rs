use std::io::Write;

use super::ReebGraph;
use crate::error::Result;

impl ReebGraph {
    /// Graphviz rendering: nodes labelled with their values, edges with their
    /// masses.
    pub fn write_dot<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "graph reeb {{")?;
        for n in &self.nodes {
            writeln!(out, "  n{} [label=\"{:?} {:.6}\"];", n.id, n.kind, n.value)?;
        }
        for e in &self.edges {
            writeln!(out, "  n{} -- n{} [label=\"{:.6}\"];", e.lower, e.upper, e.mass)?;
        }
        writeln!(out, "}}")?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graphs serialize")
    }
}
