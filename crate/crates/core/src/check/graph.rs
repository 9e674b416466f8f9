//! Call graph construction.
//!
//! Nodes are declared or defined functions plus one node per distinct
//! indirect-callee expression (two calls through `p` share a node, a call
//! through `q` gets its own). Builtins only appear once something calls them.

use crate::ast::*;
use crate::builtins;
use crate::printer::print_expr;
use crate::typeck::{CallTarget, TypedProgram};
use serde::Serialize;
use std::collections::HashMap;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Func,
    /// An indirect call site, named by its callee expression.
    Indirect,
}

#[derive(Debug, Clone, Serialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub given: Annotation,
    pub defined: bool,
    pub builtin: bool,
    pub address_retained: bool,
    pub line: u32,
    pub col: u32,
    /// Whether the node can reach a yielding primitive; set by inference.
    pub inferred_coroutine: bool,
    /// Whether any diagnostic names this node; set by diagnosis.
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    pub caller: NodeId,
    pub callee: NodeId,
    pub indirect: bool,
    pub line: u32,
    pub col: u32,
    /// Whether a diagnostic names this edge; set by diagnosis.
    pub flagged: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CallGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    #[serde(skip)]
    index: HashMap<String, NodeId>,
}

impl CallGraph {
    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.node_id(name).map(|id| &self.nodes[id])
    }

    fn add_node(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node.name) {
            return id;
        }
        let id = self.nodes.len();
        self.index.insert(node.name.clone(), id);
        self.nodes.push(node);
        id
    }

    fn ensure_builtin(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let b = builtins::lookup(name).expect("builtin call target");
        self.add_node(Node {
            name: name.to_string(),
            kind: NodeKind::Func,
            given: b.ty.annotation,
            defined: false,
            builtin: true,
            address_retained: false,
            line: 0,
            col: 0,
            inferred_coroutine: false,
            flagged: false,
        })
    }

    fn ensure_indirect(&mut self, text: &str, given: Annotation, pos: Pos) -> NodeId {
        if let Some(&id) = self.index.get(text) {
            return id;
        }
        self.add_node(Node {
            name: text.to_string(),
            kind: NodeKind::Indirect,
            given,
            defined: false,
            builtin: false,
            address_retained: false,
            line: pos.line,
            col: pos.col,
            inferred_coroutine: false,
            flagged: false,
        })
    }

    /// Drops nodes that carry no information: undeclared-body functions that
    /// were inferred native and are not blocking-annotated (library calls
    /// like `print`). Their edges go with them.
    pub fn filtered(&self) -> CallGraph {
        let keep: Vec<bool> = self
            .nodes
            .iter()
            .map(|n| n.defined || n.inferred_coroutine || n.given.is_blocking())
            .collect();
        let mut remap: HashMap<NodeId, NodeId> = HashMap::new();
        let mut out = CallGraph::default();
        for (id, node) in self.nodes.iter().enumerate() {
            if keep[id] {
                remap.insert(id, out.add_node(node.clone()));
            }
        }
        for e in &self.edges {
            if keep[e.caller] && keep[e.callee] {
                out.edges.push(Edge {
                    caller: remap[&e.caller],
                    callee: remap[&e.callee],
                    ..*e
                });
            }
        }
        out
    }
}

pub fn build_call_graph(typed: &TypedProgram) -> CallGraph {
    let mut graph = CallGraph::default();
    let mut b = Builder { typed, graph: &mut graph };
    b.collect_nodes();
    b.collect_edges_and_addresses();
    graph
}

struct Builder<'a> {
    typed: &'a TypedProgram,
    graph: &'a mut CallGraph,
}

impl Builder<'_> {
    fn collect_nodes(&mut self) {
        for f in self.typed.program.functions() {
            self.function_node(f);
            if let Some(body) = &f.body {
                self.nested_nodes(body);
            }
        }
    }

    fn nested_nodes(&mut self, body: &[Stmt]) {
        for stmt in body {
            if let Stmt::FuncDef(f) = stmt {
                self.function_node(f);
                if let Some(body) = &f.body {
                    self.nested_nodes(body);
                }
            }
        }
    }

    fn function_node(&mut self, f: &Function) {
        let defined = f.is_defined();
        match self.graph.index.get(&f.name).copied() {
            Some(id) => {
                let node = &mut self.graph.nodes[id];
                if defined && !node.defined {
                    node.defined = true;
                    node.line = f.pos.line;
                    node.col = f.pos.col;
                }
            }
            None => {
                self.graph.add_node(Node {
                    name: f.name.clone(),
                    kind: NodeKind::Func,
                    given: f.annotation,
                    defined,
                    builtin: false,
                    address_retained: false,
                    line: f.pos.line,
                    col: f.pos.col,
                    inferred_coroutine: false,
                    flagged: false,
                });
            }
        }
    }

    fn collect_edges_and_addresses(&mut self) {
        let program = &self.typed.program;
        for item in &program.items {
            match item {
                Item::Global(g) => {
                    if let Some(init) = &g.init {
                        self.scan_expr_for_addresses(init);
                    }
                }
                Item::Func(f) => self.function_edges(f),
            }
        }
    }

    fn function_edges(&mut self, f: &Function) {
        let Some(body) = &f.body else { return };
        let caller = self.graph.node_id(&f.name).expect("caller node");
        for stmt in body {
            self.stmt_edges(caller, stmt);
        }
    }

    fn stmt_edges(&mut self, caller: NodeId, stmt: &Stmt) {
        match stmt {
            Stmt::FuncDef(f) => self.function_edges(f),
            Stmt::If { cond, then_branch, else_branch, .. } => {
                self.expr_edges(caller, cond);
                for s in then_branch {
                    self.stmt_edges(caller, s);
                }
                if let Some(els) = else_branch {
                    for s in els {
                        self.stmt_edges(caller, s);
                    }
                }
            }
            Stmt::While { cond, body, .. } => {
                self.expr_edges(caller, cond);
                for s in body {
                    self.stmt_edges(caller, s);
                }
            }
            Stmt::VarDecl { init, .. } => {
                if let Some(e) = init {
                    self.expr_edges(caller, e);
                }
            }
            Stmt::Assign { target, value, .. } => {
                if let LValue::Deref { ptr, .. } = target {
                    self.expr_edges(caller, ptr);
                }
                if let LValue::Index { base, .. } = target {
                    self.expr_edges(caller, base);
                }
                self.expr_edges(caller, value);
            }
            Stmt::Expr { expr, .. } => self.expr_edges(caller, expr),
            Stmt::Return { value, .. } => {
                if let Some(e) = value {
                    self.expr_edges(caller, e);
                }
            }
            Stmt::Invoke { cont, value, .. } => {
                self.expr_edges(caller, cont);
                if let Some(e) = value {
                    self.expr_edges(caller, e);
                }
            }
            Stmt::Label { .. } | Stmt::Goto { .. } => {}
        }
    }

    fn expr_edges(&mut self, caller: NodeId, e: &Expr) {
        match &e.kind {
            ExprKind::Call { callee, args } => {
                self.call_edge(caller, e, callee);
                for a in args {
                    self.expr_edges(caller, a);
                }
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr_edges(caller, lhs);
                self.expr_edges(caller, rhs);
            }
            ExprKind::Unary { operand, .. } => self.expr_edges(caller, operand),
            ExprKind::Deref(inner) => self.expr_edges(caller, inner),
            ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
                self.expr_edges(caller, base)
            }
            ExprKind::AddrOf(_) => self.scan_expr_for_addresses(e),
            ExprKind::Push { args, cont, .. } => {
                for a in args {
                    self.expr_edges(caller, a);
                }
                self.expr_edges(caller, cont);
            }
            ExprKind::IntLit(_) | ExprKind::Var(_) | ExprKind::Hole => {}
        }
    }

    fn call_edge(&mut self, caller: NodeId, call: &Expr, callee: &Expr) {
        let target = self.typed.call_targets.get(&call.id).expect("typed call");
        let callee_id = match target {
            CallTarget::Direct { name, builtin } => {
                if *builtin {
                    self.graph.ensure_builtin(name)
                } else {
                    self.graph.node_id(name).expect("direct call target node")
                }
            }
            CallTarget::Indirect => {
                let text = print_expr(callee);
                let given = match self.typed.expr_types.get(&callee.id) {
                    Some(Type::Fun(ft)) => ft.annotation,
                    _ => Annotation::NATIVE,
                };
                self.graph.ensure_indirect(&text, given, callee.pos)
            }
        };
        let indirect = matches!(target, CallTarget::Indirect);
        self.graph.edges.push(Edge {
            caller,
            callee: callee_id,
            indirect,
            line: call.pos.line,
            col: call.pos.col,
            flagged: false,
        });
    }

    fn scan_expr_for_addresses(&mut self, e: &Expr) {
        if let ExprKind::AddrOf(name) = &e.kind {
            if let Some(id) = self.graph.node_id(name) {
                if self.graph.nodes[id].kind == NodeKind::Func {
                    self.graph.nodes[id].address_retained = true;
                }
            }
        }
    }
}
