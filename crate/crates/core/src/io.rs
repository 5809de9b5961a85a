//! Stable on-disk formats: the DAG text format and schedule JSON.
//!
//! Both formats are canonical: formatting a parsed value reproduces the
//! bytes the formatter emits, so write → read → write is byte-identical.

use crate::graph::{Dag, GraphError, VarId};
use crate::planner::Schedule;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DagTextError {
    #[error("missing variable-count header line")]
    MissingHeader,
    #[error("line {line}: invalid variable count {token:?}")]
    InvalidHeader { line: usize, token: String },
    #[error("line {line}: expected \"parent child\", got {text:?}")]
    InvalidEdge { line: usize, text: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Parses the DAG text format: the first significant line holds the variable
/// count, each following significant line one "parent child" edge
/// (0-based, whitespace-separated). `#` starts a comment line; blank lines
/// are ignored. Line numbers in errors are 1-based.
pub fn parse_dag(text: &str) -> Result<Dag, DagTextError> {
    let mut n: Option<usize> = None;
    let mut edges: Vec<(VarId, VarId)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if n.is_none() {
            n = Some(content.parse().map_err(|_| DagTextError::InvalidHeader {
                line,
                token: content.to_string(),
            })?);
            continue;
        }
        let mut fields = content.split_whitespace();
        let edge = (|| {
            let p = fields.next()?.parse().ok()?;
            let c = fields.next()?.parse().ok()?;
            fields.next().is_none().then_some((p, c))
        })();
        match edge {
            Some(pc) => edges.push(pc),
            None => {
                return Err(DagTextError::InvalidEdge {
                    line,
                    text: content.to_string(),
                })
            }
        }
    }
    let n = n.ok_or(DagTextError::MissingHeader)?;
    Ok(Dag::new(n, &edges)?)
}

/// Canonical DAG text: the count line, then one edge per line, sorted by
/// parent then child.
pub fn format_dag(g: &Dag) -> String {
    let mut out = format!("{}\n", g.n());
    for (p, c) in g.edges() {
        out.push_str(&format!("{p} {c}\n"));
    }
    out
}

/// Canonical schedule JSON: `{"n": N, "experiments": [[...], ...]}` plus a
/// trailing newline.
pub fn format_schedule(s: &Schedule) -> String {
    let mut out = serde_json::to_string(s).expect("schedule serialization cannot fail");
    out.push('\n');
    out
}

pub fn parse_schedule(text: &str) -> Result<Schedule, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dag_text_round_trips_byte_exactly() {
        let g = Dag::new(3, &[(1, 0), (0, 2), (1, 2)]).unwrap();
        let text = format_dag(&g);
        assert_eq!(text, "3\n0 2\n1 0\n1 2\n");
        let parsed = parse_dag(&text).unwrap();
        assert_eq!(parsed, g);
        assert_eq!(format_dag(&parsed), text);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# true graph\n3\n\n1 0\n0 2\n# middle note\n1 2\n";
        let g = parse_dag(text).unwrap();
        assert_eq!(g.edges(), vec![(0, 2), (1, 0), (1, 2)]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(parse_dag("# only comments\n"), Err(DagTextError::MissingHeader));
        assert_eq!(
            parse_dag("x\n"),
            Err(DagTextError::InvalidHeader {
                line: 1,
                token: "x".into()
            })
        );
        assert_eq!(
            parse_dag("3\n0 1 2\n"),
            Err(DagTextError::InvalidEdge {
                line: 2,
                text: "0 1 2".into()
            })
        );
        assert_eq!(
            parse_dag("2\n0\n"),
            Err(DagTextError::InvalidEdge {
                line: 2,
                text: "0".into()
            })
        );
        assert!(matches!(
            parse_dag("2\n0 1\n1 0\n"),
            Err(DagTextError::Graph(GraphError::Cyclic))
        ));
    }

    #[test]
    fn schedule_json_round_trips_byte_exactly() {
        let s = crate::planner::binary_codeword_schedule(4).unwrap();
        let text = format_schedule(&s);
        assert_eq!(text, "{\"n\":4,\"experiments\":[[1,3],[2,3],[]]}\n");
        let parsed = parse_schedule(&text).unwrap();
        assert_eq!(parsed, s);
        assert_eq!(format_schedule(&parsed), text);
    }
}
