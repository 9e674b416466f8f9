//! Static checking of coroutine annotations.
//!
//! The checker builds a call graph over functions and indirect call sites,
//! infers which nodes can reach a yielding primitive, and reports the
//! disagreements between what was written and what was inferred.

pub mod diagnose;
pub mod dot;
pub mod graph;
pub mod infer;

pub use diagnose::{diagnose, Diagnostic, DiagnosticKind};
pub use dot::emit_dot;
pub use graph::{build_call_graph, CallGraph, Edge, Node, NodeId, NodeKind};
pub use infer::infer_coroutines;

use crate::typeck::TypedProgram;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub graph: CallGraph,
    pub diagnostics: Vec<Diagnostic>,
}

impl CheckReport {
    /// True when nothing but informational notes was reported.
    pub fn is_clean(&self) -> bool {
        self.diagnostics.iter().all(|d| d.informational)
    }
}

/// Runs the full analysis: graph construction, inference, diagnosis.
pub fn check(typed: &TypedProgram) -> CheckReport {
    let mut graph = build_call_graph(typed);
    infer_coroutines(&mut graph);
    let diagnostics = diagnose(typed, &mut graph);
    CheckReport { graph, diagnostics }
}
