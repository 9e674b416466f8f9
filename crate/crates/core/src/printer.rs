//! Canonical source printer.
//!
//! Printing is deterministic: annotations always lead the declaration,
//! spacing and indentation are fixed, and parentheses are emitted exactly
//! where precedence requires them. Printed output re-parses to a program
//! that is structurally identical to the input.

use crate::ast::*;
use std::fmt::Write;

const INDENT: &str = "    ";

#[derive(Debug, Clone)]
pub struct PrintOptions {
    pub coroutine_attr: String,
    pub blocking_attr: String,
    pub needcont_attr: String,
}

impl Default for PrintOptions {
    fn default() -> Self {
        PrintOptions {
            coroutine_attr: "coroutine_fn".to_string(),
            blocking_attr: "blocking_fn".to_string(),
            needcont_attr: "needcont".to_string(),
        }
    }
}

pub fn print_program(program: &Program) -> String {
    print_program_with(program, &PrintOptions::default())
}

pub fn print_program_with(program: &Program, opts: &PrintOptions) -> String {
    let mut p = Printer { out: String::new(), opts };
    for (i, item) in program.items.iter().enumerate() {
        if i > 0 {
            p.out.push('\n');
        }
        match item {
            Item::Global(g) => p.global(g),
            Item::Func(f) => p.function(f, 0),
        }
    }
    p.out
}

pub fn print_type(ty: &Type) -> String {
    let opts = PrintOptions::default();
    let p = Printer { out: String::new(), opts: &opts };
    p.type_str(ty)
}

pub fn print_expr(expr: &Expr) -> String {
    let opts = PrintOptions::default();
    let mut p = Printer { out: String::new(), opts: &opts };
    p.expr(expr, 0);
    p.out
}

struct Printer<'a> {
    out: String,
    opts: &'a PrintOptions,
}

impl Printer<'_> {
    fn annotation_words(&self, ann: &Annotation) -> String {
        let mut words = String::new();
        match ann.kind {
            AnnotationKind::Native => {}
            AnnotationKind::Coroutine => {
                words.push_str(&self.opts.coroutine_attr);
                words.push(' ');
            }
            AnnotationKind::Blocking => {
                words.push_str(&self.opts.blocking_attr);
                words.push(' ');
            }
        }
        if ann.need_cont {
            words.push_str(&self.opts.needcont_attr);
            words.push(' ');
        }
        words
    }

    fn type_str(&self, ty: &Type) -> String {
        match ty {
            Type::Int => "int".to_string(),
            Type::Void => "void".to_string(),
            Type::IntPtr => "int *".to_string(),
            Type::Cont => "cont".to_string(),
            Type::Fun(f) => {
                let params =
                    f.params.iter().map(|t| self.type_str(t)).collect::<Vec<_>>().join(", ");
                format!(
                    "{}{} (*)({})",
                    self.annotation_words(&f.annotation),
                    self.type_str(&f.ret),
                    params
                )
            }
        }
    }

    /// Declares `name` with `ty`, e.g. `int x`, `int *p`, `void (*f)(int)`.
    fn declarator(&self, name: &str, ty: &Type) -> String {
        match ty {
            Type::IntPtr => format!("int *{name}"),
            Type::Fun(f) => {
                let params =
                    f.params.iter().map(|t| self.type_str(t)).collect::<Vec<_>>().join(", ");
                format!(
                    "{}{} (*{})({})",
                    self.annotation_words(&f.annotation),
                    self.type_str(&f.ret),
                    name,
                    params
                )
            }
            other => format!("{} {name}", self.type_str(other)),
        }
    }

    fn global(&mut self, g: &GlobalVar) {
        self.out.push_str(&self.declarator(&g.name, &g.ty));
        if let Some(init) = &g.init {
            self.out.push_str(" = ");
            self.expr(init, 0);
        }
        self.out.push_str(";\n");
    }

    fn function(&mut self, f: &Function, level: usize) {
        self.indent(level);
        self.out.push_str(&self.annotation_words(&f.annotation));
        if !f.is_defined() {
            self.out.push_str("extern ");
        }
        let _ = write!(self.out, "{} {}(", self.type_str(&f.ret), f.name);
        let params = f
            .params
            .iter()
            .map(|p| match &p.name {
                Some(name) => self.declarator(name, &p.ty),
                None => self.type_str(&p.ty),
            })
            .collect::<Vec<_>>()
            .join(", ");
        self.out.push_str(&params);
        self.out.push(')');
        match &f.body {
            None => self.out.push_str(";\n"),
            Some(body) => {
                self.out.push_str(" {\n");
                for stmt in body {
                    self.stmt(stmt, level + 1);
                }
                self.indent(level);
                self.out.push_str("}\n");
            }
        }
    }

    fn stmt(&mut self, stmt: &Stmt, level: usize) {
        match stmt {
            Stmt::VarDecl { name, ty, init, .. } => {
                self.indent(level);
                self.out.push_str(&self.declarator(name, ty));
                if let Some(init) = init {
                    self.out.push_str(" = ");
                    self.expr(init, 0);
                }
                self.out.push_str(";\n");
            }
            Stmt::Assign { target, value, .. } => {
                self.indent(level);
                match target {
                    LValue::Var { name, .. } => self.out.push_str(name),
                    LValue::Deref { ptr, .. } => {
                        self.out.push('*');
                        self.expr(ptr, PREC_UNARY);
                    }
                    LValue::Index { base, offset, .. } => {
                        self.expr(base, PREC_POSTFIX);
                        let _ = write!(self.out, "[{offset}]");
                    }
                }
                self.out.push_str(" = ");
                self.expr(value, 0);
                self.out.push_str(";\n");
            }
            Stmt::Expr { expr, .. } => {
                self.indent(level);
                self.expr(expr, 0);
                self.out.push_str(";\n");
            }
            Stmt::If { cond, then_branch, else_branch, .. } => {
                self.indent(level);
                self.out.push_str("if (");
                self.expr(cond, 0);
                self.out.push(')');
                if else_branch.is_none() {
                    if let [Stmt::Goto { label, .. }] = then_branch.as_slice() {
                        let _ = writeln!(self.out, " goto {label};");
                        return;
                    }
                }
                self.out.push_str(" {\n");
                for s in then_branch {
                    self.stmt(s, level + 1);
                }
                self.indent(level);
                self.out.push('}');
                if let Some(else_branch) = else_branch {
                    self.out.push_str(" else ");
                    if let [only @ Stmt::If { .. }] = else_branch.as_slice() {
                        // `else if` chains stay flat
                        let mark = self.out.len();
                        self.stmt(only, level);
                        self.out.drain(mark..mark + INDENT.len() * level);
                        return;
                    }
                    self.out.push_str("{\n");
                    for s in else_branch {
                        self.stmt(s, level + 1);
                    }
                    self.indent(level);
                    self.out.push('}');
                }
                self.out.push('\n');
            }
            Stmt::While { cond, body, .. } => {
                self.indent(level);
                self.out.push_str("while (");
                self.expr(cond, 0);
                self.out.push_str(") {\n");
                for s in body {
                    self.stmt(s, level + 1);
                }
                self.indent(level);
                self.out.push_str("}\n");
            }
            Stmt::Label { name, .. } => {
                self.indent(level.saturating_sub(1));
                let _ = writeln!(self.out, "{name}:");
            }
            Stmt::Goto { label, .. } => {
                self.indent(level);
                let _ = writeln!(self.out, "goto {label};");
            }
            Stmt::Return { value, .. } => {
                self.indent(level);
                self.out.push_str("return");
                if let Some(value) = value {
                    self.out.push(' ');
                    self.expr(value, 0);
                }
                self.out.push_str(";\n");
            }
            Stmt::Invoke { cont, value, .. } => {
                self.indent(level);
                self.out.push_str("invoke(");
                self.expr(cont, 0);
                if let Some(value) = value {
                    self.out.push_str(", ");
                    self.expr(value, 0);
                }
                self.out.push_str(");\n");
            }
            Stmt::FuncDef(f) => self.function(f, level),
        }
    }

    /// Prints `expr`, parenthesizing when its precedence is below `min_prec`.
    fn expr(&mut self, expr: &Expr, min_prec: u8) {
        let prec = precedence(&expr.kind);
        if prec < min_prec {
            self.out.push('(');
            self.expr_inner(expr, prec);
            self.out.push(')');
        } else {
            self.expr_inner(expr, prec);
        }
    }

    fn expr_inner(&mut self, expr: &Expr, prec: u8) {
        match &expr.kind {
            ExprKind::IntLit(n) => {
                let _ = write!(self.out, "{n}");
            }
            ExprKind::Var(name) => self.out.push_str(name),
            ExprKind::Call { callee, args } => {
                self.expr(callee, PREC_POSTFIX);
                self.out.push('(');
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.expr(arg, 0);
                }
                self.out.push(')');
            }
            ExprKind::Binary { op, lhs, rhs } => {
                self.expr(lhs, prec);
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(rhs, prec + 1);
            }
            ExprKind::Unary { op, operand } => {
                self.out.push(match op {
                    UnOp::Neg => '-',
                    UnOp::Not => '!',
                });
                self.expr(operand, PREC_UNARY);
            }
            ExprKind::Deref(inner) => {
                self.out.push('*');
                self.expr(inner, PREC_UNARY);
            }
            ExprKind::Index { base, offset } => {
                self.expr(base, PREC_POSTFIX);
                let _ = write!(self.out, "[{offset}]");
            }
            ExprKind::AddrOf(name) => {
                let _ = write!(self.out, "&{name}");
            }
            ExprKind::AddrOfIndex { base, offset } => {
                self.out.push('&');
                self.expr(base, PREC_POSTFIX);
                let _ = write!(self.out, "[{offset}]");
            }
            ExprKind::Push { func, args, cont, ret } => {
                self.out.push_str(if *ret { "push_ret(" } else { "push(" });
                self.out.push_str(func);
                for arg in args {
                    self.out.push_str(", ");
                    self.expr(arg, 0);
                }
                self.out.push_str(", ");
                self.expr(cont, 0);
                self.out.push(')');
            }
            ExprKind::Hole => self.out.push('?'),
        }
    }

    fn indent(&mut self, level: usize) {
        for _ in 0..level {
            self.out.push_str(INDENT);
        }
    }
}

const PREC_UNARY: u8 = 7;
const PREC_POSTFIX: u8 = 8;

fn precedence(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Binary { op, .. } => match op {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        },
        ExprKind::Unary { .. } | ExprKind::Deref(_) => PREC_UNARY,
        _ => PREC_POSTFIX,
    }
}
