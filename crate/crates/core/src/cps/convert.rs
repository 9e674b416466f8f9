//! Gives every coroutine function an explicit continuation.
//!
//! Signatures change in lockstep everywhere: a coroutine function (or
//! function type) `(p1, .., pn) -> r` becomes `(p1, .., pn, cont) -> void`,
//! for definitions, extern declarations, pointer variables, and parameter
//! types alike. Bodies then end in one of three ways:
//!
//! * a tail call to another coroutine function passes the continuation
//!   straight through: `g(args, k); return;`
//! * a suspendable call followed by a tail call extends the continuation
//!   with the tail call's frame first: `ext(args, push(g, gargs, k));
//!   return;` — with `push_ret` and a `?` slot when the suspended call's
//!   value feeds the frame;
//! * a plain return hands control back: `invoke(k); return;` or
//!   `invoke(k, value); return;`.
//!
//! Context-probing primitives (`need_cont`) receive the live continuation
//! as an extra trailing argument but are called in direct style.

use crate::ast::{
    Expr, ExprKind, FunType, Function, Item, Param, Pos, Program, Stmt, Type, GENERATED_PREFIX,
};
use crate::printer;
use crate::typeck::TypedProgram;

use super::{cps_call_stmt, is_cps_call, CpsError};

pub fn convert(typed: &TypedProgram) -> Result<Program, CpsError> {
    let mut program = typed.program.clone();

    for f in program.functions() {
        if !f.annotation.is_coroutine() && f.is_defined() {
            if let Some((callee, pos)) = first_cps_call(typed, f.body.as_deref().unwrap_or(&[])) {
                return Err(CpsError::IllegalNativeToCpsCall {
                    function: f.name.clone(),
                    callee,
                    pos,
                });
            }
        }
    }

    let mut reserved: Vec<String> = program
        .functions()
        .map(|f| f.name.clone())
        .chain(program.globals().map(|g| g.name.clone()))
        .collect();
    reserved.extend(crate::builtins::builtin_table().iter().map(|b| b.name.to_string()));

    for item in &mut program.items {
        let Item::Func(f) = item else { continue };
        if f.annotation.is_coroutine() && !f.annotation.need_cont {
            convert_function(f, typed, &reserved)?;
        }
    }

    for item in &mut program.items {
        match item {
            Item::Global(g) => g.ty = map_type(std::mem::replace(&mut g.ty, Type::Void)),
            Item::Func(f) => {
                for p in &mut f.params {
                    p.ty = map_type(std::mem::replace(&mut p.ty, Type::Void));
                }
                if let Some(body) = &mut f.body {
                    map_decl_types(body);
                }
            }
        }
    }

    program.assign_ids();
    Ok(program)
}

fn convert_function(
    f: &mut Function,
    typed: &TypedProgram,
    reserved: &[String],
) -> Result<(), CpsError> {
    if f.body.is_none() {
        f.params.push(Param { name: None, ty: Type::Cont, pos: f.pos });
        f.ret = Type::Void;
        return Ok(());
    }

    let k = continuation_name(f, reserved);
    let body = f.body.take().expect("defined function");
    let cv = Converter { typed, k: k.clone() };
    f.body = Some(cv.stmts(body, reserved)?);
    f.params.push(Param { name: Some(k), ty: Type::Cont, pos: f.pos });
    f.ret = Type::Void;
    Ok(())
}

/// `k` when free, otherwise a generated name nothing can collide with.
fn continuation_name(f: &Function, reserved: &[String]) -> String {
    let mut used: Vec<String> = reserved.to_vec();
    for p in &f.params {
        used.extend(p.name.clone());
    }
    collect_names(f.body.as_deref().unwrap_or(&[]), &mut used);
    if !used.iter().any(|n| n == "k") {
        return "k".to_string();
    }
    let mut n = 0;
    loop {
        let candidate =
            if n == 0 { format!("{GENERATED_PREFIX}k") } else { format!("{GENERATED_PREFIX}k{n}") };
        if !used.contains(&candidate) {
            return candidate;
        }
        n += 1;
    }
}

fn collect_names(stmts: &[Stmt], out: &mut Vec<String>) {
    for stmt in stmts {
        match stmt {
            Stmt::VarDecl { name, .. } => out.push(name.clone()),
            Stmt::If { then_branch, else_branch, .. } => {
                collect_names(then_branch, out);
                if let Some(els) = else_branch {
                    collect_names(els, out);
                }
            }
            Stmt::While { body, .. } => collect_names(body, out),
            Stmt::FuncDef(f) => {
                for p in &f.params {
                    out.extend(p.name.clone());
                }
                collect_names(f.body.as_deref().unwrap_or(&[]), out);
            }
            _ => {}
        }
    }
}

struct Converter<'a> {
    typed: &'a TypedProgram,
    k: String,
}

impl Converter<'_> {
    fn stmts(&self, stmts: Vec<Stmt>, reserved: &[String]) -> Result<Vec<Stmt>, CpsError> {
        let mut out = Vec::with_capacity(stmts.len());
        let mut it = stmts.into_iter().peekable();
        while let Some(stmt) = it.next() {
            if cps_call_stmt(self.typed, &stmt) {
                self.cluster(stmt, &mut it, &mut out)?;
                continue;
            }
            match stmt {
                Stmt::Return { value: None, pos } => {
                    out.push(Stmt::Invoke { cont: self.k_var(pos), value: None, pos });
                    out.push(Stmt::Return { value: None, pos });
                }
                Stmt::Return { value: Some(mut e), pos } => {
                    self.rewrite(&mut e);
                    if is_cps_call(self.typed, &e) {
                        out.push(Stmt::Expr { expr: self.append_cont(e, self.k_var(pos)), pos });
                    } else {
                        out.push(Stmt::Invoke { cont: self.k_var(pos), value: Some(e), pos });
                    }
                    out.push(Stmt::Return { value: None, pos });
                }
                Stmt::If { mut cond, then_branch, else_branch, pos } => {
                    self.rewrite(&mut cond);
                    out.push(Stmt::If {
                        cond,
                        then_branch: self.stmts(then_branch, reserved)?,
                        else_branch: match else_branch {
                            Some(els) => Some(self.stmts(els, reserved)?),
                            None => None,
                        },
                        pos,
                    });
                }
                Stmt::VarDecl { name, ty, init, pos } => {
                    let init = init.map(|mut e| {
                        self.rewrite(&mut e);
                        e
                    });
                    out.push(Stmt::VarDecl { name, ty, init, pos });
                }
                Stmt::Assign { mut target, mut value, pos } => {
                    self.rewrite(&mut value);
                    match &mut target {
                        crate::ast::LValue::Deref { ptr, .. } => self.rewrite(ptr),
                        crate::ast::LValue::Index { base, .. } => self.rewrite(base),
                        crate::ast::LValue::Var { .. } => {}
                    }
                    out.push(Stmt::Assign { target, value, pos });
                }
                Stmt::Expr { mut expr, pos } => {
                    self.rewrite(&mut expr);
                    out.push(Stmt::Expr { expr, pos });
                }
                Stmt::FuncDef(mut nested) => {
                    convert_function(&mut nested, self.typed, reserved)?;
                    out.push(Stmt::FuncDef(nested));
                }
                other => {
                    return Err(CpsError::UnsupportedShape {
                        pos: other.pos(),
                        msg: "statement form not expected after splitting".to_string(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// A suspendable call and the one or two statements completing its
    /// block become a single continuation-passing transfer.
    fn cluster(
        &self,
        first: Stmt,
        it: &mut std::iter::Peekable<std::vec::IntoIter<Stmt>>,
        out: &mut Vec<Stmt>,
    ) -> Result<(), CpsError> {
        let (mut call, assigned, pos) = match first {
            Stmt::Expr { expr, pos } => (expr, None, pos),
            Stmt::Assign { target: crate::ast::LValue::Var { name, .. }, value, pos } => {
                (value, Some(name), pos)
            }
            other => {
                return Err(CpsError::UnsupportedShape {
                    pos: other.pos(),
                    msg: "suspendable call assigned to a non-variable target".to_string(),
                })
            }
        };
        self.rewrite(&mut call);

        let finish = |out: &mut Vec<Stmt>, call: Expr| {
            out.push(Stmt::Expr { expr: call, pos });
            out.push(Stmt::Return { value: None, pos });
        };

        match it.next() {
            Some(Stmt::Return { value: None, .. }) => {
                finish(out, self.append_cont(call, self.k_var(pos)));
                Ok(())
            }
            Some(Stmt::Return { value: Some(e), .. }) if is_cps_call(self.typed, &e) => {
                let push = self.frame_for(e, assigned.as_deref())?;
                finish(out, self.append_cont(call, push));
                Ok(())
            }
            Some(Stmt::Return { value: Some(e), .. })
                if matches!((&e.kind, &assigned),
                    (ExprKind::Var(n), Some(t)) if n == t) =>
            {
                finish(out, self.append_cont(call, self.k_var(pos)));
                Ok(())
            }
            Some(Stmt::Expr { expr, .. }) if is_cps_call(self.typed, &expr) => match it.next() {
                Some(Stmt::Return { value: None, .. }) => {
                    let push = self.frame_for(expr, assigned.as_deref())?;
                    finish(out, self.append_cont(call, push));
                    Ok(())
                }
                _ => Err(CpsError::UnsupportedShape {
                    pos,
                    msg: "tail call after a suspendable call must end its block".to_string(),
                }),
            },
            _ => Err(CpsError::UnsupportedShape {
                pos,
                msg: "suspendable call is not the last action of its block".to_string(),
            }),
        }
    }

    /// Builds `push(g, args.., k)` for the block's tail call, substituting
    /// `?` for the slot the suspended call's value flows into.
    fn frame_for(&self, tail: Expr, assigned: Option<&str>) -> Result<Expr, CpsError> {
        let pos = tail.pos;
        let ExprKind::Call { callee, mut args } = tail.kind else {
            return Err(CpsError::UnsupportedShape {
                pos,
                msg: "expected a call in tail position".to_string(),
            });
        };
        let func = match &callee.kind {
            ExprKind::Var(n) => n.clone(),
            ExprKind::Deref(inner) => match &inner.kind {
                ExprKind::Var(n) => n.clone(),
                _ => {
                    return Err(CpsError::UnsupportedShape {
                        pos,
                        msg: "tail call target must be a name".to_string(),
                    })
                }
            },
            _ => {
                return Err(CpsError::UnsupportedShape {
                    pos,
                    msg: "tail call target must be a name".to_string(),
                })
            }
        };
        for a in &mut args {
            self.rewrite(a);
        }
        let mut holes = 0usize;
        if let Some(t) = assigned {
            for a in args.iter_mut() {
                if matches!(&a.kind, ExprKind::Var(n) if n == t) {
                    *a = Expr::new(ExprKind::Hole, a.pos);
                    holes += 1;
                }
            }
            if holes > 1 {
                return Err(CpsError::UnsupportedShape {
                    pos,
                    msg: "suspended value feeds more than one argument slot".to_string(),
                });
            }
            if args.iter().any(|a| super::split::mentions_var(a, t)) {
                return Err(CpsError::UnsupportedShape {
                    pos,
                    msg: "suspended value used inside a compound argument".to_string(),
                });
            }
        }
        Ok(Expr::new(
            ExprKind::Push {
                func,
                args,
                cont: Box::new(self.k_var(pos)),
                ret: holes == 1,
            },
            pos,
        ))
    }

    fn k_var(&self, pos: Pos) -> Expr {
        Expr::var(self.k.clone(), pos)
    }

    fn append_cont(&self, mut call: Expr, cont: Expr) -> Expr {
        if let ExprKind::Call { args, .. } = &mut call.kind {
            args.push(cont);
        }
        call
    }

    /// Appends the continuation to context-probing primitive calls, at any
    /// depth.
    fn rewrite(&self, e: &mut Expr) {
        let needs_k = match &e.kind {
            ExprKind::Call { callee, .. } => self
                .typed
                .expr_types
                .get(&callee.id)
                .and_then(|t| t.as_fun())
                .is_some_and(|ft| ft.annotation.need_cont),
            _ => false,
        };
        match &mut e.kind {
            ExprKind::Call { callee, args } => {
                self.rewrite(callee);
                for a in args.iter_mut() {
                    self.rewrite(a);
                }
                if needs_k {
                    args.push(self.k_var(e.pos));
                }
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.rewrite(lhs);
                self.rewrite(rhs);
            }
            ExprKind::Unary { operand, .. } => self.rewrite(operand),
            ExprKind::Deref(inner) => self.rewrite(inner),
            ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
                self.rewrite(base)
            }
            ExprKind::Push { args, cont, .. } => {
                for a in args.iter_mut() {
                    self.rewrite(a);
                }
                self.rewrite(cont);
            }
            ExprKind::IntLit(_) | ExprKind::Var(_) | ExprKind::AddrOf(_) | ExprKind::Hole => {}
        }
    }
}

/// Coroutine function types gain the trailing continuation parameter and
/// lose their return value, wherever they appear.
fn map_type(ty: Type) -> Type {
    match ty {
        Type::Fun(ft) => {
            let FunType { params, ret, annotation } = *ft;
            let mut params: Vec<Type> = params.into_iter().map(map_type).collect();
            if annotation.is_coroutine() && !annotation.need_cont {
                params.push(Type::Cont);
                Type::fun(params, Type::Void, annotation)
            } else {
                Type::fun(params, map_type(ret), annotation)
            }
        }
        other => other,
    }
}

fn map_decl_types(stmts: &mut [Stmt]) {
    for stmt in stmts {
        match stmt {
            Stmt::VarDecl { ty, .. } => *ty = map_type(std::mem::replace(ty, Type::Void)),
            Stmt::If { then_branch, else_branch, .. } => {
                map_decl_types(then_branch);
                if let Some(els) = else_branch {
                    map_decl_types(els);
                }
            }
            Stmt::While { body, .. } => map_decl_types(body),
            Stmt::FuncDef(f) => {
                for p in &mut f.params {
                    p.ty = map_type(std::mem::replace(&mut p.ty, Type::Void));
                }
                if let Some(body) = &mut f.body {
                    map_decl_types(body);
                }
            }
            _ => {}
        }
    }
}

pub(crate) fn first_cps_call(typed: &TypedProgram, stmts: &[Stmt]) -> Option<(String, Pos)> {
    for stmt in stmts {
        let found = match stmt {
            Stmt::VarDecl { init: Some(e), .. } => first_cps_in_expr(typed, e),
            Stmt::Assign { value, .. } => first_cps_in_expr(typed, value),
            Stmt::Expr { expr, .. } => first_cps_in_expr(typed, expr),
            Stmt::If { cond, then_branch, else_branch, .. } => first_cps_in_expr(typed, cond)
                .or_else(|| first_cps_call(typed, then_branch))
                .or_else(|| {
                    else_branch.as_ref().and_then(|els| first_cps_call(typed, els))
                }),
            Stmt::While { cond, body, .. } => {
                first_cps_in_expr(typed, cond).or_else(|| first_cps_call(typed, body))
            }
            Stmt::Return { value: Some(e), .. } => first_cps_in_expr(typed, e),
            Stmt::FuncDef(f) if !f.annotation.is_coroutine() => {
                first_cps_call(typed, f.body.as_deref().unwrap_or(&[]))
            }
            _ => None,
        };
        if found.is_some() {
            return found;
        }
    }
    None
}

fn first_cps_in_expr(typed: &TypedProgram, e: &Expr) -> Option<(String, Pos)> {
    if is_cps_call(typed, e) {
        let ExprKind::Call { callee, .. } = &e.kind else { unreachable!() };
        let name = match &callee.kind {
            ExprKind::Var(n) => n.clone(),
            _ => printer::print_expr(callee),
        };
        return Some((name, e.pos));
    }
    match &e.kind {
        ExprKind::Call { callee, args } => first_cps_in_expr(typed, callee)
            .or_else(|| args.iter().find_map(|a| first_cps_in_expr(typed, a))),
        ExprKind::Binary { lhs, rhs, .. } => {
            first_cps_in_expr(typed, lhs).or_else(|| first_cps_in_expr(typed, rhs))
        }
        ExprKind::Unary { operand, .. } => first_cps_in_expr(typed, operand),
        ExprKind::Deref(inner) => first_cps_in_expr(typed, inner),
        ExprKind::Index { base, .. } | ExprKind::AddrOfIndex { base, .. } => {
            first_cps_in_expr(typed, base)
        }
        _ => None,
    }
}
