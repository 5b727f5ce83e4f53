//! Graph export in Graphviz DOT.

use std::io::Write;

use crate::dataio::{ColumnSpec, VariableKind};
use crate::error::{Error, Result};
use crate::glasso::PrecisionEstimate;

/// Node fill color per variable type.
pub fn kind_color(kind: VariableKind) -> &'static str {
    match kind {
        VariableKind::Continuous => "#8fbce6",
        VariableKind::Binary => "#f4a582",
        VariableKind::Ordinal => "#b8e186",
        VariableKind::Count => "#d5a6e6",
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Undirected graph of the estimated support. Nodes are colored by variable
/// type; every edge carries its partial correlation as `weight`.
pub fn write_dot<W: Write>(estimate: &PrecisionEstimate, columns: &[ColumnSpec], mut out: W) -> Result<()> {
    if columns.len() != estimate.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} column names for a {}-variable estimate",
            columns.len(),
            estimate.dim()
        )));
    }
    writeln!(out, "graph mixgraph {{")?;
    writeln!(out, "  graph [overlap=false, splines=true];")?;
    writeln!(out, "  node [shape=ellipse, style=filled];")?;
    for (i, col) in columns.iter().enumerate() {
        writeln!(
            out,
            "  n{i} [label={}, kind={}, fillcolor={}];",
            quote(&col.name),
            quote(col.kind.as_str()),
            quote(kind_color(col.kind))
        )?;
    }
    for (&(i, j), &pc) in estimate.edges.iter().zip(&estimate.partial_corr) {
        let color = if pc >= 0.0 { "#b2182b" } else { "#2166ac" };
        writeln!(
            out,
            "  n{i} -- n{j} [weight={pc:.6}, label=\"{pc:.3}\", color={}, penwidth={:.3}];",
            quote(color),
            1.0 + 4.0 * pc.abs()
        )?;
    }
    writeln!(out, "}}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn dot_lists_nodes_and_weighted_edges() {
        let theta = DMatrix::from_row_slice(3, 3, &[1.0, -0.4, 0.0, -0.4, 1.0, 0.2, 0.0, 0.2, 1.0]);
        let est = PrecisionEstimate::from_theta(theta, 0.1);
        let cols = vec![
            ColumnSpec {
                name: "age".into(),
                kind: VariableKind::Continuous,
            },
            ColumnSpec {
                name: "er \"status\"".into(),
                kind: VariableKind::Binary,
            },
            ColumnSpec {
                name: "grade".into(),
                kind: VariableKind::Ordinal,
            },
        ];
        let mut buf = Vec::new();
        write_dot(&est, &cols, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("graph mixgraph {"));
        assert!(text.trim_end().ends_with('}'));
        assert!(text.contains("n0 -- n1 [weight=0.400000"));
        assert!(text.contains("n1 -- n2 [weight=-0.200000"));
        assert!(!text.contains("n0 -- n2"));
        assert!(text.contains(r#"label="er \"status\"""#));
        assert_eq!(text.matches(" -- ").count(), 2);
    }

    #[test]
    fn dot_rejects_mismatched_names() {
        let est = PrecisionEstimate::from_theta(DMatrix::identity(2, 2), 0.0);
        assert!(write_dot(&est, &[], Vec::new()).is_err());
    }
}
