//! Tables for single fields, pairs and schemes: the quasi-state, brackets,
//! `Q_N` and scheme coefficients.

use super::sweeps::{mesh_tau, Assertion, Outcome};
use super::{Cell, ResultTable};
use crate::bracket::{monomial_norms, poisson, BracketOptions};
use crate::error::Result;
use crate::manifold::{NormKind, ScalarField};
use crate::reeb::{build_reeb, ReebGraph};
use crate::scheme::SplittingScheme;

/// `ζ(F)` with the counts of its Reeb graph. The graph is returned for export.
pub fn qstate_table(f: &ScalarField) -> Result<(ReebGraph, Outcome)> {
    let tau = mesh_tau(f.mesh().kind());
    let graph = build_reeb(f)?;
    let median = graph.median();
    let summary = graph.summary(tau);
    let mut table = ResultTable::new("qstate", tau, &["quantity", "value"]);
    let rows: [(&str, Cell); 9] = [
        ("zeta", median.zeta_value.into()),
        ("median_vertex", median.vertex.into()),
        ("multi_median", Cell::Int(median.multi_median as i64)),
        ("nodes", summary.nodes.into()),
        ("edges", summary.edges.into()),
        ("minima", summary.minima.into()),
        ("maxima", summary.maxima.into()),
        ("saddles", summary.saddles.into()),
        ("persistent_leaves", summary.persistent_leaves.into()),
    ];
    for (name, value) in rows {
        table.push(vec![name.into(), value]);
    }
    let assertions = vec![
        Assertion::new("reeb_is_tree", graph.is_tree(), "contour graph of a sphere field is a tree"),
        Assertion::new(
            "reeb_total_mass",
            (summary.total_mass - 1.0).abs() <= 1e-12,
            format!("total mass {}", summary.total_mass),
        ),
        Assertion::new(
            "median_halves",
            median.component_masses.iter().all(|&m| m <= 0.5 + 1e-12),
            "no side of the median exceeds ½",
        ),
    ];
    let outcome = Outcome { table, assertions, summary: vec![("zeta".into(), median.zeta_value)] };
    Ok((graph, outcome))
}

/// `{F, G}` at every mesh vertex.
pub fn bracket_table(f: &ScalarField, g: &ScalarField) -> Result<Outcome> {
    let mesh = f.mesh();
    let h = poisson(f, g)?;
    let mut columns = vec!["vertex"];
    columns.extend(mesh.coords());
    columns.push("value");
    let mut table = ResultTable::new("bracket", mesh_tau(mesh.kind()), &columns);
    for (i, &v) in h.values().iter().enumerate() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(mesh.coordinates(i).into_iter().map(Cell::from));
        row.push(v.into());
        table.push(row);
    }
    let symbolic = h.expr().is_some();
    let summary = vec![("uniform_norm".into(), h.uniform_norm()), ("symbolic".into(), symbolic as u8 as f64)];
    Ok(Outcome { table, assertions: Vec::new(), summary })
}

/// Norm of every monomial of `𝒫_{N−1}` and their sum `Q_N(F, G)`.
pub fn qn_table(f: &ScalarField, g: &ScalarField, n: usize, norm: NormKind, opts: BracketOptions) -> Result<Outcome> {
    let norms = monomial_norms(n - 1, f, g, norm, opts)?;
    let mut table = ResultTable::new("qn", mesh_tau(f.mesh().kind()), &["n", "monomial", "g_count", "norm"]);
    let mut total = 0.0;
    for m in &norms {
        total += m.norm;
        table.push(vec![n.into(), m.monomial.to_string().into(), m.g_count.into(), m.norm.into()]);
    }
    table.push(vec![n.into(), "Q_N".into(), Cell::Int(-1), total.into()]);
    let expected = 1usize << (n - 2);
    let assertions = vec![Assertion::new(
        "monomial_count",
        norms.len() == expected,
        format!("{} monomials, expected 2^(N-2) = {expected}", norms.len()),
    )];
    Ok(Outcome { table, assertions, summary: vec![("q_n".into(), total)] })
}

/// Coefficients of a scheme and the consistency of their sums.
pub fn scheme_table(scheme: &SplittingScheme) -> Outcome {
    let mut table = ResultTable::new("scheme", 0.0, &["scheme", "order", "stage", "alpha", "beta"]);
    for (i, (a, b)) in scheme.alphas.iter().zip(&scheme.betas).enumerate() {
        table.push(vec![
            scheme.label.as_str().into(),
            scheme.nominal_order.into(),
            (i + 1).into(),
            (*a).into(),
            (*b).into(),
        ]);
    }
    let (sa, sb) = scheme.sums();
    let assertions = vec![Assertion::new(
        "coefficient_sums",
        (sa - 1.0).abs() <= 1e-12 && (sb - 1.0).abs() <= 1e-12,
        format!("Σα = {sa}, Σβ = {sb}"),
    )];
    Outcome { table, assertions, summary: vec![("alpha_sum".into(), sa), ("beta_sum".into(), sb)] }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::manifold::Mesh;
    use crate::scheme::yoshida;

    #[test]
    fn field_tables() {
        let mesh = Arc::new(Mesh::sphere(3).unwrap());
        let f = ScalarField::parse(&mesh, "1 - 2*x^2").unwrap();
        let g = ScalarField::parse(&mesh, "1 - 2*y^2").unwrap();
        let (_, q) = qstate_table(&f).unwrap();
        assert!(q.passed());
        assert!((q.value("zeta").unwrap() - 1.0).abs() < 0.05);
        let b = bracket_table(&f, &g).unwrap();
        assert_eq!(b.table.len(), mesh.len());
        assert_eq!(b.value("symbolic"), Some(1.0));
        let qn = qn_table(&f, &g, 4, NormKind::Uniform, BracketOptions::default()).unwrap();
        assert!(qn.passed());
        assert_eq!(qn.table.len(), 5);
        let s = scheme_table(&yoshida(4).unwrap());
        assert!(s.passed());
    }
}
