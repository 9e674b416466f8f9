//! Coroutine inference: which nodes can reach a yielding primitive.
//!
//! Seeds are the nodes whose coroutine-ness must be taken on faith: extern
//! declarations annotated as coroutines (their bodies are elsewhere),
//! indirect call sites whose pointer type is coroutine-annotated (the callee
//! could be any such coroutine), and defined coroutines whose address is
//! retained (the annotation is load-bearing for whatever pointer holds it).
//! From the seeds, reachability propagates callee-to-caller. A blocking
//! annotation does not stop propagation: whether a function *can* yield is a
//! property of its body, and the disagreement with its annotation is exactly
//! what diagnosis reports.

use super::graph::{CallGraph, NodeId};

pub fn infer_coroutines(graph: &mut CallGraph) {
    let mut worklist: Vec<NodeId> = collect_roots(graph);
    for &id in &worklist {
        graph.nodes[id].inferred_coroutine = true;
    }

    let mut callers: Vec<Vec<NodeId>> = vec![Vec::new(); graph.nodes.len()];
    for e in &graph.edges {
        callers[e.callee].push(e.caller);
    }

    while let Some(id) = worklist.pop() {
        for &caller in &callers[id] {
            if !graph.nodes[caller].inferred_coroutine {
                graph.nodes[caller].inferred_coroutine = true;
                worklist.push(caller);
            }
        }
    }
}

pub fn collect_roots(graph: &CallGraph) -> Vec<NodeId> {
    graph
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| {
            n.given.is_coroutine() && (!n.defined || n.address_retained)
        })
        .map(|(id, _)| id)
        .collect()
}
