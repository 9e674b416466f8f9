//! Turning inference results into diagnostics.

use super::graph::{CallGraph, NodeKind};
use crate::ast::*;
use crate::builtins;
use crate::typeck::{CallTarget, TypedProgram};
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// Defined without a coroutine annotation but able to yield.
    MissingCoroutine,
    /// Annotated as a coroutine but unable to yield.
    SpuriousCoroutine,
    /// Annotated as blocking but able to yield.
    WrongBlocking,
    /// A call to a blocking function from coroutine context.
    BlockingCalledFromCoroutine,
    /// A function value moved to a type with a different annotation.
    AnnotationLoss,
    /// One function stored under several different annotations.
    PointerUseInconsistent,
    /// Informational: the function branches on whether it is a coroutine.
    HybridFunction,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// The function or call-site expression the diagnostic is about.
    pub subject: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub informational: bool,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let severity = if self.informational { "note" } else { "warning" };
        write!(f, "{}:{}: {}: {}", self.line, self.col, severity, self.message)
    }
}

/// Produces the sorted diagnostic list and marks flagged nodes and edges on
/// the graph for rendering.
pub fn diagnose(typed: &TypedProgram, graph: &mut CallGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for node in &graph.nodes {
        if node.kind != NodeKind::Func || node.builtin {
            continue;
        }
        if node.defined && node.given.is_native() && node.inferred_coroutine {
            out.push(Diagnostic {
                kind: DiagnosticKind::MissingCoroutine,
                subject: node.name.clone(),
                line: node.line,
                col: node.col,
                message: format!("`{}` can yield but is not marked as a coroutine", node.name),
                informational: false,
            });
        }
        if node.defined && node.given.is_coroutine() && !node.inferred_coroutine {
            out.push(Diagnostic {
                kind: DiagnosticKind::SpuriousCoroutine,
                subject: node.name.clone(),
                line: node.line,
                col: node.col,
                message: format!("`{}` is marked as a coroutine but can never yield", node.name),
                informational: false,
            });
        }
        if node.given.is_blocking() && node.inferred_coroutine {
            out.push(Diagnostic {
                kind: DiagnosticKind::WrongBlocking,
                subject: node.name.clone(),
                line: node.line,
                col: node.col,
                message: format!("`{}` is marked as blocking but can yield", node.name),
                informational: false,
            });
        }
    }

    let mut flagged_edges = Vec::new();
    for (i, edge) in graph.edges.iter().enumerate() {
        let caller = &graph.nodes[edge.caller];
        let callee = &graph.nodes[edge.callee];
        let caller_coroutine = caller.given.is_coroutine() || caller.inferred_coroutine;
        if callee.given.is_blocking() && caller_coroutine {
            flagged_edges.push(i);
            out.push(Diagnostic {
                kind: DiagnosticKind::BlockingCalledFromCoroutine,
                subject: format!("{} -> {}", caller.name, callee.name),
                line: edge.line,
                col: edge.col,
                message: format!(
                    "coroutine `{}` calls blocking function `{}`",
                    caller.name, callee.name
                ),
                informational: false,
            });
        }
    }
    for i in flagged_edges {
        graph.edges[i].flagged = true;
    }

    out.extend(check_value_flow(typed));
    out.extend(hybrid_functions(typed));

    out.sort_by(|a, b| {
        (a.line, a.col, a.kind, &a.subject).cmp(&(b.line, b.col, b.kind, &b.subject))
    });

    for d in &out {
        if let Some(id) = graph.node_id(&d.subject) {
            graph.nodes[id].flagged = true;
        }
    }
    out
}

/// One movement of a function value into a differently-typed destination.
struct Flow {
    /// Source function when the value is a literal `&f`.
    src_func: Option<String>,
    src_ann: Annotation,
    dst_ann: Annotation,
    dst_desc: String,
    pos: Pos,
}

/// Follows every place a function value is stored or passed and compares the
/// annotation it carries with the annotation of its destination.
fn check_value_flow(typed: &TypedProgram) -> Vec<Diagnostic> {
    let mut flows = Vec::new();
    let mut fv = FlowVisitor { typed, flows: &mut flows };
    fv.program(&typed.program);

    let mut out = Vec::new();
    for f in &flows {
        if f.src_ann.kind != f.dst_ann.kind {
            let subject = f.src_func.clone().unwrap_or_else(|| f.dst_desc.clone());
            out.push(Diagnostic {
                kind: DiagnosticKind::AnnotationLoss,
                subject,
                line: f.pos.line,
                col: f.pos.col,
                message: format!(
                    "{} annotated `{}` stored in {} annotated `{}`",
                    f.src_func
                        .as_deref()
                        .map(|n| format!("function `{n}`"))
                        .unwrap_or_else(|| "function value".to_string()),
                    keyword(f.src_ann),
                    f.dst_desc,
                    keyword(f.dst_ann),
                ),
                informational: false,
            });
        }
    }

    let mut per_func: HashMap<&str, Vec<&Flow>> = HashMap::new();
    for f in &flows {
        if let Some(name) = &f.src_func {
            per_func.entry(name).or_default().push(f);
        }
    }
    let mut names: Vec<&&str> = per_func.keys().collect();
    names.sort();
    for name in names {
        let flows = &per_func[*name];
        let mut kinds: Vec<AnnotationKind> = flows.iter().map(|f| f.dst_ann.kind).collect();
        kinds.sort();
        kinds.dedup();
        if kinds.len() > 1 {
            let last = flows.iter().max_by_key(|f| f.pos).unwrap();
            out.push(Diagnostic {
                kind: DiagnosticKind::PointerUseInconsistent,
                subject: name.to_string(),
                line: last.pos.line,
                col: last.pos.col,
                message: format!(
                    "`{}` is stored under {} different annotations",
                    name,
                    kinds.len()
                ),
                informational: false,
            });
        }
    }
    out
}

fn keyword(ann: Annotation) -> &'static str {
    match ann.kind {
        AnnotationKind::Native => "native",
        AnnotationKind::Coroutine => "coroutine_fn",
        AnnotationKind::Blocking => "blocking_fn",
    }
}

struct FlowVisitor<'a> {
    typed: &'a TypedProgram,
    flows: &'a mut Vec<Flow>,
}

impl FlowVisitor<'_> {
    fn program(&mut self, program: &Program) {
        for item in &program.items {
            match item {
                Item::Global(g) => {
                    if let Some(init) = &g.init {
                        self.flow_into(&g.ty, format!("global `{}`", g.name), init);
                        self.expr(init);
                    }
                }
                Item::Func(f) => self.function(f, &HashMap::new()),
            }
        }
    }

    fn function(&mut self, f: &Function, parent_locals: &HashMap<String, Type>) {
        let Some(body) = &f.body else { return };
        let mut locals = parent_locals.clone();
        for p in &f.params {
            if let Some(name) = &p.name {
                locals.insert(name.clone(), p.ty.clone());
            }
        }
        collect_locals(body, &mut locals);
        for stmt in body {
            self.stmt(stmt, &locals);
        }
    }

    fn stmt(&mut self, stmt: &Stmt, locals: &HashMap<String, Type>) {
        match stmt {
            Stmt::VarDecl { name, ty, init, .. } => {
                if let Some(init) = init {
                    self.flow_into(ty, format!("variable `{name}`"), init);
                    self.expr(init);
                }
            }
            Stmt::Assign { target, value, .. } => {
                if let LValue::Var { name, .. } = target {
                    if let Some(Type::Fun(_)) = self.typed.expr_types.get(&value.id) {
                        if let Some(ty) = self.lvalue_type(name, locals) {
                            self.flow_into(&ty, format!("variable `{name}`"), value);
                        }
                    }
                }
                self.expr(value);
            }
            Stmt::Expr { expr, .. } => self.expr(expr),
            Stmt::If { cond, then_branch, else_branch, .. } => {
                self.expr(cond);
                for s in then_branch {
                    self.stmt(s, locals);
                }
                if let Some(els) = else_branch {
                    for s in els {
                        self.stmt(s, locals);
                    }
                }
            }
            Stmt::While { cond, body, .. } => {
                self.expr(cond);
                for s in body {
                    self.stmt(s, locals);
                }
            }
            Stmt::Return { value, .. } => {
                if let Some(e) = value {
                    self.expr(e);
                }
            }
            Stmt::Invoke { cont, value, .. } => {
                self.expr(cont);
                if let Some(e) = value {
                    self.expr(e);
                }
            }
            Stmt::FuncDef(f) => self.function(f, locals),
            Stmt::Label { .. } | Stmt::Goto { .. } => {}
        }
    }

    fn lvalue_type(&self, name: &str, locals: &HashMap<String, Type>) -> Option<Type> {
        if let Some(ty) = locals.get(name) {
            return Some(ty.clone());
        }
        for g in self.typed.program.globals() {
            if g.name == name {
                return Some(g.ty.clone());
            }
        }
        None
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Call { callee, args } => {
                self.expr(callee);
                let params: Vec<Type> = match self.typed.expr_types.get(&callee.id) {
                    Some(Type::Fun(ft)) => ft.params.clone(),
                    _ => Vec::new(),
                };
                let is_create = matches!(
                    self.typed.call_targets.get(&e.id),
                    Some(CallTarget::Direct { name, builtin: true }) if name == "co_create"
                );
                for (i, arg) in args.iter().enumerate() {
                    if is_create && i == 0 {
                        let entry = Type::Fun(Box::new(builtins::entry_type()));
                        self.flow_into(&entry, "coroutine entry".to_string(), arg);
                    } else if let Some(param) = params.get(i) {
                        self.flow_into(param, format!("argument {}", i + 1), arg);
                    }
                    self.expr(arg);
                }
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.expr(lhs);
                self.expr(rhs);
            }
            ExprKind::Unary { operand, .. } => self.expr(operand),
            ExprKind::Deref(inner) => self.expr(inner),
            ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => self.expr(base),
            ExprKind::Push { args, cont, .. } => {
                for a in args {
                    self.expr(a);
                }
                self.expr(cont);
            }
            ExprKind::IntLit(_) | ExprKind::Var(_) | ExprKind::AddrOf(_) | ExprKind::Hole => {}
        }
    }

    fn flow_into(&mut self, dst_ty: &Type, dst_desc: String, src: &Expr) {
        let Type::Fun(dst) = dst_ty else { return };
        let Some(Type::Fun(src_ft)) = self.typed.expr_types.get(&src.id) else { return };
        let src_func = match &src.kind {
            ExprKind::AddrOf(name) => Some(name.clone()),
            _ => None,
        };
        self.flows.push(Flow {
            src_func,
            src_ann: src_ft.annotation,
            dst_ann: dst.annotation,
            dst_desc,
            pos: src.pos,
        });
    }
}

fn collect_locals(body: &[Stmt], locals: &mut HashMap<String, Type>) {
    for stmt in body {
        match stmt {
            Stmt::VarDecl { name, ty, .. } => {
                locals.insert(name.clone(), ty.clone());
            }
            Stmt::If { then_branch, else_branch, .. } => {
                collect_locals(then_branch, locals);
                if let Some(els) = else_branch {
                    collect_locals(els, locals);
                }
            }
            Stmt::While { body, .. } => collect_locals(body, locals),
            _ => {}
        }
    }
}

/// Functions that call `in_coroutine` adapt their behavior to their context;
/// worth knowing about, not wrong.
fn hybrid_functions(typed: &TypedProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for f in typed.program.functions() {
        hybrid_in_function(typed, f, &mut out);
    }
    out
}

fn hybrid_in_function(typed: &TypedProgram, f: &Function, out: &mut Vec<Diagnostic>) {
    let Some(body) = &f.body else { return };
    let mut sites = Vec::new();
    for stmt in body {
        hybrid_stmt(typed, stmt, &mut sites, out);
    }
    if let Some(pos) = sites.first() {
        out.push(Diagnostic {
            kind: DiagnosticKind::HybridFunction,
            subject: f.name.clone(),
            line: pos.line,
            col: pos.col,
            message: format!("`{}` asks whether it is running as a coroutine", f.name),
            informational: true,
        });
    }
}

fn hybrid_stmt(typed: &TypedProgram, stmt: &Stmt, sites: &mut Vec<Pos>, out: &mut Vec<Diagnostic>) {
    match stmt {
        Stmt::FuncDef(nf) => hybrid_in_function(typed, nf, out),
        Stmt::VarDecl { init: Some(e), .. } => hybrid_expr(typed, e, sites),
        Stmt::Assign { target, value, .. } => {
            if let LValue::Deref { ptr, .. } = target {
                hybrid_expr(typed, ptr, sites);
            }
            if let LValue::Index { base, .. } = target {
                hybrid_expr(typed, base, sites);
            }
            hybrid_expr(typed, value, sites);
        }
        Stmt::Expr { expr, .. } => hybrid_expr(typed, expr, sites),
        Stmt::If { cond, then_branch, else_branch, .. } => {
            hybrid_expr(typed, cond, sites);
            for s in then_branch {
                hybrid_stmt(typed, s, sites, out);
            }
            if let Some(els) = else_branch {
                for s in els {
                    hybrid_stmt(typed, s, sites, out);
                }
            }
        }
        Stmt::While { cond, body, .. } => {
            hybrid_expr(typed, cond, sites);
            for s in body {
                hybrid_stmt(typed, s, sites, out);
            }
        }
        Stmt::Return { value: Some(e), .. } => hybrid_expr(typed, e, sites),
        Stmt::Invoke { cont, value, .. } => {
            hybrid_expr(typed, cont, sites);
            if let Some(e) = value {
                hybrid_expr(typed, e, sites);
            }
        }
        _ => {}
    }
}

fn hybrid_expr(typed: &TypedProgram, e: &Expr, sites: &mut Vec<Pos>) {
    match &e.kind {
        ExprKind::Call { callee, args } => {
            if let Some(CallTarget::Direct { name, builtin: true }) =
                typed.call_targets.get(&e.id)
            {
                if name == "in_coroutine" {
                    sites.push(e.pos);
                }
            }
            hybrid_expr(typed, callee, sites);
            for a in args {
                hybrid_expr(typed, a, sites);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            hybrid_expr(typed, lhs, sites);
            hybrid_expr(typed, rhs, sites);
        }
        ExprKind::Unary { operand, .. } => hybrid_expr(typed, operand, sites),
        ExprKind::Deref(inner) => hybrid_expr(typed, inner, sites),
        ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
            hybrid_expr(typed, base, sites)
        }
        ExprKind::Push { args, cont, .. } => {
            for a in args {
                hybrid_expr(typed, a, sites);
            }
            hybrid_expr(typed, cont, sites);
        }
        ExprKind::IntLit(_) | ExprKind::Var(_) | ExprKind::AddrOf(_) | ExprKind::Hole => {}
    }
}
