//! Graphviz rendering of the call graph.
//!
//! Inferred coroutines are boxes, everything else an ellipse; the written
//! annotation keyword appears in the label when there is one. Nodes and
//! edges named by a diagnostic are drawn dashed and red. Output is sorted,
//! so the same analysis always renders the same text.

use super::graph::{CallGraph, NodeKind};
use crate::ast::AnnotationKind;
use crate::printer::PrintOptions;
use std::collections::BTreeSet;
use std::fmt::Write;

pub fn emit_dot(graph: &CallGraph, opts: &PrintOptions) -> String {
    if graph.nodes.is_empty() {
        return "digraph G { }\n".to_string();
    }
    let mut out = String::from("digraph G {\n");

    let mut order: Vec<usize> = (0..graph.nodes.len()).collect();
    order.sort_by(|&a, &b| graph.nodes[a].name.cmp(&graph.nodes[b].name));

    for &id in &order {
        let n = &graph.nodes[id];
        let shape = if n.inferred_coroutine { "box" } else { "ellipse" };
        let keyword = match n.given.kind {
            AnnotationKind::Native => None,
            AnnotationKind::Coroutine => Some(opts.coroutine_attr.as_str()),
            AnnotationKind::Blocking => Some(opts.blocking_attr.as_str()),
        };
        let mut label = escape(&n.name);
        match (n.kind, keyword) {
            (NodeKind::Indirect, Some(kw)) => {
                let _ = write!(label, "\\nindirect {kw}");
            }
            (NodeKind::Indirect, None) => label.push_str("\\nindirect"),
            (NodeKind::Func, Some(kw)) => {
                let _ = write!(label, "\\n{kw}");
            }
            (NodeKind::Func, None) => {}
        }
        let _ = write!(out, "    \"{}\" [shape={shape}, label=\"{label}\"", escape(&n.name));
        if n.flagged {
            out.push_str(", style=dashed, color=red");
        }
        out.push_str("];\n");
    }

    let mut rendered: BTreeSet<(String, String, bool)> = BTreeSet::new();
    for e in &graph.edges {
        let caller = &graph.nodes[e.caller].name;
        let callee = &graph.nodes[e.callee].name;
        rendered.insert((caller.clone(), callee.clone(), e.flagged));
    }
    for (caller, callee, flagged) in rendered {
        let _ = write!(out, "    \"{}\" -> \"{}\"", escape(&caller), escape(&callee));
        if flagged {
            out.push_str(" [style=dashed, color=red]");
        }
        out.push_str(";\n");
    }

    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
