//! Type checker.
//!
//! Checks every pipeline stage: structured source, the flat label/goto form,
//! split output with nested functions and free variables, and CPS-converted
//! output with `cont` parameters, `push` expressions and `invoke` statements.
//! Annotation disagreements between function types are not type errors here;
//! the static checker owns those and reports them with more context.
//!
//! Locals are function-scoped: a declaration is visible throughout its
//! function, including inside nested functions. Declaring the same name twice
//! in one function, or shadowing anything already visible, is rejected.

use crate::ast::*;
use crate::builtins;
use crate::error::LangError;
use std::collections::HashMap;

/// A checked program plus the side tables later passes key off expression ids.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub program: Program,
    /// Type of every expression, keyed by [`ExprId`].
    pub expr_types: HashMap<ExprId, Type>,
    /// Resolution of every call expression, keyed by the call's [`ExprId`].
    pub call_targets: HashMap<ExprId, CallTarget>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallTarget {
    Direct { name: String, builtin: bool },
    Indirect,
}

impl TypedProgram {
    pub fn type_of(&self, expr: &Expr) -> &Type {
        &self.expr_types[&expr.id]
    }
}

pub fn typecheck(program: Program) -> Result<TypedProgram, LangError> {
    let mut ck = Checker {
        globals: HashMap::new(),
        expr_types: HashMap::new(),
        call_targets: HashMap::new(),
    };
    ck.collect_globals(&program)?;
    for item in &program.items {
        match item {
            Item::Global(g) => ck.check_global_init(g)?,
            Item::Func(f) => ck.check_function(f, None)?,
        }
    }
    Ok(TypedProgram { program, expr_types: ck.expr_types, call_targets: ck.call_targets })
}

#[derive(Debug, Clone)]
enum GlobalEntry {
    Func { ty: FunType, defined: bool, builtin: bool },
    Var(Type),
}

struct Checker {
    globals: HashMap<String, GlobalEntry>,
    expr_types: HashMap<ExprId, Type>,
    call_targets: HashMap<ExprId, CallTarget>,
}

/// Per-function context; nested functions extend their parent's.
#[derive(Default, Clone)]
struct Scope {
    vars: HashMap<String, Type>,
    funcs: HashMap<String, FunType>,
    labels: Vec<String>,
}

impl Checker {
    fn collect_globals(&mut self, program: &Program) -> Result<(), LangError> {
        for b in builtins::builtin_table() {
            self.globals.insert(
                b.name.to_string(),
                GlobalEntry::Func { ty: b.ty, defined: false, builtin: true },
            );
        }
        for item in &program.items {
            match item {
                Item::Func(f) => self.declare_function(f)?,
                Item::Global(g) => self.declare_global_var(g)?,
            }
        }
        Ok(())
    }

    fn declare_function(&mut self, f: &Function) -> Result<(), LangError> {
        if !matches!(f.ret, Type::Int | Type::Void) {
            return Err(LangError::types(f.pos, "functions must return int or void"));
        }
        let ty = match f.fun_type() {
            Type::Fun(ft) => *ft,
            _ => unreachable!(),
        };
        match self.globals.get_mut(&f.name) {
            None => {
                self.globals.insert(
                    f.name.clone(),
                    GlobalEntry::Func { ty, defined: f.is_defined(), builtin: false },
                );
            }
            Some(GlobalEntry::Func { builtin: true, ty: bty, .. }) => {
                if f.is_defined() {
                    return Err(LangError::DuplicateDefinition { name: f.name.clone(), pos: f.pos });
                }
                if ty != *bty && ty != converted(bty) {
                    return Err(LangError::types(
                        f.pos,
                        format!("declaration of `{}` does not match the builtin", f.name),
                    ));
                }
            }
            Some(GlobalEntry::Func { ty: prev, defined, builtin: false }) => {
                if ty != *prev {
                    return Err(LangError::types(
                        f.pos,
                        format!("conflicting declarations of `{}`", f.name),
                    ));
                }
                if f.is_defined() {
                    if *defined {
                        return Err(LangError::DuplicateDefinition {
                            name: f.name.clone(),
                            pos: f.pos,
                        });
                    }
                    *defined = true;
                }
            }
            Some(GlobalEntry::Var(_)) => {
                return Err(LangError::DuplicateDefinition { name: f.name.clone(), pos: f.pos });
            }
        }
        Ok(())
    }

    fn declare_global_var(&mut self, g: &GlobalVar) -> Result<(), LangError> {
        if self.globals.contains_key(&g.name) {
            return Err(LangError::DuplicateDefinition { name: g.name.clone(), pos: g.pos });
        }
        if matches!(g.ty, Type::Void | Type::Cont) {
            return Err(LangError::types(g.pos, "variables must have int, int*, or function type"));
        }
        self.globals.insert(g.name.clone(), GlobalEntry::Var(g.ty.clone()));
        Ok(())
    }

    /// Global initializers must be link-time constants.
    fn check_global_init(&mut self, g: &GlobalVar) -> Result<(), LangError> {
        let Some(init) = &g.init else { return Ok(()) };
        let constant = match &init.kind {
            ExprKind::IntLit(_) => true,
            ExprKind::Unary { op: UnOp::Neg, operand } => {
                matches!(operand.kind, ExprKind::IntLit(_))
            }
            ExprKind::AddrOf(name) => {
                matches!(self.globals.get(name), Some(GlobalEntry::Func { .. }))
            }
            _ => false,
        };
        if !constant {
            return Err(LangError::types(
                init.pos,
                "global initializers must be integer constants or function addresses",
            ));
        }
        let scope = Scope::default();
        let ty = self.expr(init, &scope)?;
        self.require_match(&g.ty, &ty, init.pos)?;
        Ok(())
    }

    fn check_function(&mut self, f: &Function, parent: Option<&Scope>) -> Result<(), LangError> {
        let Some(body) = &f.body else { return Ok(()) };
        let mut scope = parent.cloned().unwrap_or_default();
        scope.labels.clear();

        for p in &f.params {
            let Some(name) = &p.name else {
                return Err(LangError::types(p.pos, "parameters of defined functions need names"));
            };
            if matches!(p.ty, Type::Void) {
                return Err(LangError::types(p.pos, "parameters cannot have void type"));
            }
            self.bind(&mut scope, name, p.ty.clone(), p.pos)?;
        }
        self.collect_body_names(body, &mut scope)?;

        for label in collect_gotos(body) {
            if !scope.labels.contains(&label.0) {
                return Err(LangError::types(
                    label.1,
                    format!("goto target `{}` is not a label in this function", label.0),
                ));
            }
        }

        for stmt in body {
            self.stmt(stmt, f, &scope)?;
        }
        Ok(())
    }

    /// Declarations are function-scoped; gather every local, nested function
    /// signature, and label of `body` before checking statements.
    fn collect_body_names(&mut self, body: &[Stmt], scope: &mut Scope) -> Result<(), LangError> {
        for stmt in body {
            match stmt {
                Stmt::VarDecl { name, ty, pos, .. } => {
                    if matches!(ty, Type::Void | Type::Cont) {
                        return Err(LangError::types(
                            *pos,
                            "variables must have int, int*, or function type",
                        ));
                    }
                    self.bind(scope, name, ty.clone(), *pos)?;
                }
                Stmt::FuncDef(nf) => {
                    if !matches!(nf.ret, Type::Int | Type::Void) {
                        return Err(LangError::types(nf.pos, "functions must return int or void"));
                    }
                    if self.globals.contains_key(&nf.name)
                        || scope.vars.contains_key(&nf.name)
                        || scope.funcs.contains_key(&nf.name)
                    {
                        return Err(LangError::DuplicateDefinition {
                            name: nf.name.clone(),
                            pos: nf.pos,
                        });
                    }
                    let Type::Fun(ft) = nf.fun_type() else { unreachable!() };
                    scope.funcs.insert(nf.name.clone(), *ft);
                }
                Stmt::Label { name, pos } => {
                    if scope.labels.contains(name) {
                        return Err(LangError::DuplicateDefinition {
                            name: name.clone(),
                            pos: *pos,
                        });
                    }
                    scope.labels.push(name.clone());
                }
                Stmt::If { then_branch, else_branch, .. } => {
                    self.collect_body_names(then_branch, scope)?;
                    if let Some(els) = else_branch {
                        self.collect_body_names(els, scope)?;
                    }
                }
                Stmt::While { body, .. } => self.collect_body_names(body, scope)?,
                _ => {}
            }
        }
        Ok(())
    }

    fn bind(&self, scope: &mut Scope, name: &str, ty: Type, pos: Pos) -> Result<(), LangError> {
        if self.globals.contains_key(name)
            || scope.vars.contains_key(name)
            || scope.funcs.contains_key(name)
        {
            return Err(LangError::DuplicateDefinition { name: name.to_string(), pos });
        }
        scope.vars.insert(name.to_string(), ty);
        Ok(())
    }

    fn stmt(&mut self, stmt: &Stmt, f: &Function, scope: &Scope) -> Result<(), LangError> {
        match stmt {
            Stmt::VarDecl { name, init, pos, .. } => {
                if let Some(init) = init {
                    let ty = self.value_expr(init, scope)?;
                    let declared = scope.vars[name].clone();
                    self.require_match(&declared, &ty, *pos)?;
                }
                Ok(())
            }
            Stmt::Assign { target, value, .. } => {
                let target_ty = match target {
                    LValue::Var { name, pos } => self.lvalue_var(name, scope, *pos)?,
                    LValue::Deref { ptr, pos } => {
                        let ty = self.value_expr(ptr, scope)?;
                        if ty != Type::IntPtr {
                            return Err(LangError::types(*pos, "only int* can be dereferenced"));
                        }
                        Type::Int
                    }
                    LValue::Index { base, pos, .. } => {
                        let ty = self.value_expr(base, scope)?;
                        if ty != Type::IntPtr {
                            return Err(LangError::types(*pos, "only int* can be indexed"));
                        }
                        Type::Int
                    }
                };
                let value_ty = self.value_expr(value, scope)?;
                self.require_match(&target_ty, &value_ty, target.pos())
            }
            Stmt::Expr { expr, pos } => {
                if !matches!(expr.kind, ExprKind::Call { .. }) {
                    return Err(LangError::types(
                        *pos,
                        "only call expressions may be used as statements",
                    ));
                }
                self.expr(expr, scope)?;
                Ok(())
            }
            Stmt::If { cond, then_branch, else_branch, .. } => {
                self.int_expr(cond, scope)?;
                for s in then_branch {
                    self.stmt(s, f, scope)?;
                }
                if let Some(els) = else_branch {
                    for s in els {
                        self.stmt(s, f, scope)?;
                    }
                }
                Ok(())
            }
            Stmt::While { cond, body, .. } => {
                self.int_expr(cond, scope)?;
                for s in body {
                    self.stmt(s, f, scope)?;
                }
                Ok(())
            }
            Stmt::Label { .. } | Stmt::Goto { .. } => Ok(()),
            Stmt::Return { value, pos } => match (&f.ret, value) {
                (Type::Void, None) => Ok(()),
                (Type::Void, Some(_)) => {
                    Err(LangError::types(*pos, format!("`{}` returns void", f.name)))
                }
                (Type::Int, None) => {
                    Err(LangError::types(*pos, format!("`{}` must return a value", f.name)))
                }
                (Type::Int, Some(e)) => {
                    let ty = self.value_expr(e, scope)?;
                    self.require_match(&Type::Int, &ty, e.pos)
                }
                _ => unreachable!(),
            },
            Stmt::Invoke { cont, value, pos } => {
                let ty = self.value_expr(cont, scope)?;
                if ty != Type::Cont {
                    return Err(LangError::types(*pos, "invoke expects a continuation"));
                }
                if let Some(v) = value {
                    self.int_expr(v, scope)?;
                }
                Ok(())
            }
            Stmt::FuncDef(nf) => self.check_function(nf, Some(scope)),
        }
    }

    fn lvalue_var(&self, name: &str, scope: &Scope, pos: Pos) -> Result<Type, LangError> {
        if let Some(ty) = scope.vars.get(name) {
            return Ok(ty.clone());
        }
        match self.globals.get(name) {
            Some(GlobalEntry::Var(ty)) => Ok(ty.clone()),
            Some(GlobalEntry::Func { .. }) => {
                Err(LangError::types(pos, format!("cannot assign to function `{name}`")))
            }
            None => Err(LangError::UnknownIdentifier { name: name.to_string(), pos }),
        }
    }

    /// Types an expression and records the result in the side table.
    fn expr(&mut self, e: &Expr, scope: &Scope) -> Result<Type, LangError> {
        let ty = self.expr_kind(e, scope)?;
        self.expr_types.insert(e.id, ty.clone());
        Ok(ty)
    }

    /// An expression used for its value: void is rejected.
    fn value_expr(&mut self, e: &Expr, scope: &Scope) -> Result<Type, LangError> {
        let ty = self.expr(e, scope)?;
        if ty.is_void() {
            return Err(LangError::VoidValueUse { pos: e.pos });
        }
        Ok(ty)
    }

    fn int_expr(&mut self, e: &Expr, scope: &Scope) -> Result<(), LangError> {
        let ty = self.value_expr(e, scope)?;
        self.require_match(&Type::Int, &ty, e.pos)
    }

    fn expr_kind(&mut self, e: &Expr, scope: &Scope) -> Result<Type, LangError> {
        match &e.kind {
            ExprKind::IntLit(_) => Ok(Type::Int),
            ExprKind::Hole => Err(LangError::types(
                e.pos,
                "`?` is only meaningful inside push_ret arguments",
            )),
            ExprKind::Var(name) => {
                if let Some(ty) = scope.vars.get(name) {
                    return Ok(ty.clone());
                }
                match self.globals.get(name) {
                    Some(GlobalEntry::Var(ty)) => Ok(ty.clone()),
                    Some(GlobalEntry::Func { .. }) => Err(LangError::types(
                        e.pos,
                        format!("function `{name}` used as a value; take its address with `&`"),
                    )),
                    None => {
                        if scope.funcs.contains_key(name) {
                            Err(LangError::types(
                                e.pos,
                                format!(
                                    "function `{name}` used as a value; take its address with `&`"
                                ),
                            ))
                        } else {
                            Err(LangError::UnknownIdentifier { name: name.clone(), pos: e.pos })
                        }
                    }
                }
            }
            ExprKind::Call { callee, args } => self.call(e, callee, args, scope),
            ExprKind::Binary { lhs, rhs, .. } => {
                self.int_expr(lhs, scope)?;
                self.int_expr(rhs, scope)?;
                Ok(Type::Int)
            }
            ExprKind::Unary { operand, .. } => {
                self.int_expr(operand, scope)?;
                Ok(Type::Int)
            }
            ExprKind::Deref(inner) => {
                let ty = self.value_expr(inner, scope)?;
                if ty != Type::IntPtr {
                    return Err(LangError::types(e.pos, "only int* can be dereferenced"));
                }
                Ok(Type::Int)
            }
            ExprKind::Index { base, .. } => {
                let ty = self.value_expr(base, scope)?;
                if ty != Type::IntPtr {
                    return Err(LangError::types(e.pos, "only int* can be indexed"));
                }
                Ok(Type::Int)
            }
            ExprKind::AddrOf(name) => {
                if let Some(ty) = scope.vars.get(name) {
                    return match ty {
                        Type::Int => Ok(Type::IntPtr),
                        _ => Err(LangError::types(
                            e.pos,
                            "only the address of an int variable or a function can be taken",
                        )),
                    };
                }
                if let Some(ft) = scope.funcs.get(name) {
                    return Ok(Type::Fun(Box::new(ft.clone())));
                }
                match self.globals.get(name) {
                    Some(GlobalEntry::Var(Type::Int)) => Ok(Type::IntPtr),
                    Some(GlobalEntry::Var(_)) => Err(LangError::types(
                        e.pos,
                        "only the address of an int variable or a function can be taken",
                    )),
                    Some(GlobalEntry::Func { builtin: true, .. }) => Err(LangError::types(
                        e.pos,
                        format!("the address of builtin `{name}` cannot be taken"),
                    )),
                    Some(GlobalEntry::Func { ty, .. }) => Ok(Type::Fun(Box::new(ty.clone()))),
                    None => Err(LangError::UnknownIdentifier { name: name.clone(), pos: e.pos }),
                }
            }
            ExprKind::AddrOfIndex { base, .. } => {
                let ty = self.value_expr(base, scope)?;
                if ty != Type::IntPtr {
                    return Err(LangError::types(e.pos, "only int* can be indexed"));
                }
                Ok(Type::IntPtr)
            }
            ExprKind::Push { func, args, cont, ret } => {
                self.push_expr(e, func, args, cont, *ret, scope)
            }
        }
    }

    fn call(
        &mut self,
        call: &Expr,
        callee: &Expr,
        args: &[Expr],
        scope: &Scope,
    ) -> Result<Type, LangError> {
        let (ft, target) = self.resolve_callee(callee, scope)?;
        self.expr_types.insert(callee.id, Type::Fun(Box::new(ft.clone())));
        self.call_targets.insert(call.id, target.clone());

        if let CallTarget::Direct { name, builtin: true } = &target {
            if name == "co_create" {
                return self.co_create_call(call, args, scope);
            }
        }

        let extra_cont_ok = ft.annotation.is_coroutine() || ft.annotation.need_cont;
        let expected = ft.params.len();
        if args.len() == expected + 1 && extra_cont_ok {
            for (arg, param) in args.iter().zip(&ft.params) {
                let ty = self.value_expr(arg, scope)?;
                self.require_match(param, &ty, arg.pos)?;
            }
            let last = &args[expected];
            let ty = self.value_expr(last, scope)?;
            if ty != Type::Cont {
                return Err(LangError::types(last.pos, "extra trailing argument must be a cont"));
            }
            return Ok(ft.ret.clone());
        }
        if args.len() != expected {
            return Err(LangError::ArityMismatch {
                name: callee_desc(callee),
                expected,
                got: args.len(),
                pos: call.pos,
            });
        }
        for (arg, param) in args.iter().zip(&ft.params) {
            let ty = self.value_expr(arg, scope)?;
            self.require_match(param, &ty, arg.pos)?;
        }
        Ok(ft.ret.clone())
    }

    fn resolve_callee(
        &mut self,
        callee: &Expr,
        scope: &Scope,
    ) -> Result<(FunType, CallTarget), LangError> {
        match &callee.kind {
            ExprKind::Var(name) => {
                if let Some(ft) = scope.funcs.get(name) {
                    return Ok((
                        ft.clone(),
                        CallTarget::Direct { name: name.clone(), builtin: false },
                    ));
                }
                if let Some(ty) = scope.vars.get(name) {
                    return match ty {
                        Type::Fun(ft) => Ok(((**ft).clone(), CallTarget::Indirect)),
                        _ => Err(LangError::CallOfNonFunction { pos: callee.pos }),
                    };
                }
                match self.globals.get(name) {
                    Some(GlobalEntry::Func { ty, builtin, .. }) => Ok((
                        ty.clone(),
                        CallTarget::Direct { name: name.clone(), builtin: *builtin },
                    )),
                    Some(GlobalEntry::Var(Type::Fun(ft))) => {
                        Ok(((**ft).clone(), CallTarget::Indirect))
                    }
                    Some(GlobalEntry::Var(_)) => {
                        Err(LangError::CallOfNonFunction { pos: callee.pos })
                    }
                    None => Err(LangError::UnknownIdentifier { name: name.clone(), pos: callee.pos }),
                }
            }
            ExprKind::Deref(inner) => {
                let ty = self.expr(inner, scope)?;
                match ty {
                    Type::Fun(ft) => Ok((*ft, CallTarget::Indirect)),
                    _ => Err(LangError::CallOfNonFunction { pos: callee.pos }),
                }
            }
            _ => Err(LangError::CallOfNonFunction { pos: callee.pos }),
        }
    }

    /// `co_create` accepts a coroutine entry of type `(int) -> void`, or its
    /// CPS-converted form `(int, cont) -> void`.
    fn co_create_call(
        &mut self,
        call: &Expr,
        args: &[Expr],
        scope: &Scope,
    ) -> Result<Type, LangError> {
        if args.len() != 1 {
            return Err(LangError::ArityMismatch {
                name: "co_create".to_string(),
                expected: 1,
                got: args.len(),
                pos: call.pos,
            });
        }
        let arg = &args[0];
        let ty = self.value_expr(arg, scope)?;
        let Type::Fun(ft) = &ty else {
            return Err(LangError::types(arg.pos, "co_create expects a coroutine entry function"));
        };
        if !ft.annotation.is_coroutine() {
            return Err(LangError::types(
                arg.pos,
                "co_create expects a coroutine-annotated entry function",
            ));
        }
        let plain = builtins::entry_type();
        let converted = builtins::converted_entry_type();
        if !base_types_equal(&ft.params, &plain.params) && !base_types_equal(&ft.params, &converted.params)
        {
            return Err(LangError::types(
                arg.pos,
                "coroutine entries take a single int argument",
            ));
        }
        if !ft.ret.is_void() {
            return Err(LangError::types(arg.pos, "coroutine entries return void"));
        }
        Ok(Type::Int)
    }

    fn push_expr(
        &mut self,
        e: &Expr,
        func: &str,
        args: &[Expr],
        cont: &Expr,
        ret: bool,
        scope: &Scope,
    ) -> Result<Type, LangError> {
        let ft = if let Some(ft) = scope.funcs.get(func) {
            ft.clone()
        } else if let Some(Type::Fun(ft)) = scope.vars.get(func) {
            (**ft).clone()
        } else {
            match self.globals.get(func) {
                Some(GlobalEntry::Func { ty, .. }) => ty.clone(),
                Some(GlobalEntry::Var(Type::Fun(ft))) => (**ft).clone(),
                _ => {
                    return Err(LangError::UnknownIdentifier {
                        name: func.to_string(),
                        pos: e.pos,
                    })
                }
            }
        };
        // Converted functions already carry the trailing cont parameter;
        // unconverted coroutine builtins receive it at execution time.
        let value_params: &[Type] = match ft.params.last() {
            Some(Type::Cont) => &ft.params[..ft.params.len() - 1],
            _ => &ft.params,
        };
        if args.len() != value_params.len() {
            return Err(LangError::ArityMismatch {
                name: func.to_string(),
                expected: value_params.len(),
                got: args.len(),
                pos: e.pos,
            });
        }
        let mut holes = 0usize;
        for (arg, param) in args.iter().zip(value_params) {
            if matches!(arg.kind, ExprKind::Hole) {
                holes += 1;
                if *param != Type::Int {
                    return Err(LangError::types(
                        arg.pos,
                        "the return-value slot must have int type",
                    ));
                }
                self.expr_types.insert(arg.id, Type::Int);
                continue;
            }
            let ty = self.value_expr(arg, scope)?;
            self.require_match(param, &ty, arg.pos)?;
        }
        match (ret, holes) {
            (true, 1) | (false, 0) => {}
            (true, _) => {
                return Err(LangError::types(e.pos, "push_ret takes exactly one `?` argument"))
            }
            (false, _) => {
                return Err(LangError::types(e.pos, "push arguments cannot contain `?`"))
            }
        }
        let cont_ty = self.value_expr(cont, scope)?;
        if cont_ty != Type::Cont {
            return Err(LangError::types(cont.pos, "the final push argument must be a cont"));
        }
        Ok(Type::Cont)
    }

    /// Types must agree structurally; function types may differ in annotation
    /// (those mismatches are the static checker's to report).
    fn require_match(&self, expected: &Type, got: &Type, pos: Pos) -> Result<(), LangError> {
        if base_type_equal(expected, got) {
            Ok(())
        } else {
            Err(LangError::TypeMismatch {
                pos,
                msg: format!(
                    "expected {}, found {}",
                    crate::printer::print_type(expected),
                    crate::printer::print_type(got)
                ),
            })
        }
    }
}

fn callee_desc(callee: &Expr) -> String {
    match &callee.kind {
        ExprKind::Var(name) => name.clone(),
        _ => crate::printer::print_expr(callee),
    }
}

/// Structural equality ignoring annotations at every level.
pub fn base_type_equal(a: &Type, b: &Type) -> bool {
    match (a, b) {
        (Type::Fun(fa), Type::Fun(fb)) => {
            base_type_equal(&fa.ret, &fb.ret) && base_types_equal(&fa.params, &fb.params)
        }
        _ => a == b,
    }
}

fn base_types_equal(a: &[Type], b: &[Type]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| base_type_equal(x, y))
}

/// The CPS-converted form of a signature: trailing cont, void return.
pub fn converted(ft: &FunType) -> FunType {
    let mut params = ft.params.clone();
    params.push(Type::Cont);
    FunType { params, ret: Type::Void, annotation: ft.annotation }
}

fn collect_gotos(body: &[Stmt]) -> Vec<(String, Pos)> {
    let mut out = Vec::new();
    collect_gotos_into(body, &mut out);
    out
}

fn collect_gotos_into(body: &[Stmt], out: &mut Vec<(String, Pos)>) {
    for stmt in body {
        match stmt {
            Stmt::Goto { label, pos } => out.push((label.clone(), *pos)),
            Stmt::If { then_branch, else_branch, .. } => {
                collect_gotos_into(then_branch, out);
                if let Some(els) = else_branch {
                    collect_gotos_into(els, out);
                }
            }
            Stmt::While { body, .. } => collect_gotos_into(body, out),
            _ => {}
        }
    }
}
