//! Abstract syntax for the mini-C coroutine language.
//!
//! The same tree serves every pipeline stage: source programs use the
//! structured forms (`while`, `if`/`else`), control normalization lowers those
//! to labels and gotos, splitting introduces nested function definitions, and
//! CPS conversion introduces `cont` parameters, `push(...)` expressions and
//! `invoke(k)` statements. Each stage's output both prints and re-parses.

use serde::Serialize;

/// Line/column of a token, 1-based. Synthesized nodes inherit the position of
/// the construct they were derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Node identity for expressions; call expressions use theirs as the call
/// site id. Assigned by [`Program::assign_ids`], unique within a program.
pub type ExprId = u32;

pub const UNASSIGNED_ID: ExprId = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    Native,
    Coroutine,
    Blocking,
}

/// The calling-convention annotation carried by every function type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Annotation {
    pub kind: AnnotationKind,
    /// Marks runtime primitives that receive the live continuation (or null)
    /// as a hidden argument. Only meaningful on body-less primitives.
    pub need_cont: bool,
}

impl Annotation {
    pub const NATIVE: Annotation = Annotation { kind: AnnotationKind::Native, need_cont: false };
    pub const COROUTINE: Annotation =
        Annotation { kind: AnnotationKind::Coroutine, need_cont: false };
    pub const BLOCKING: Annotation =
        Annotation { kind: AnnotationKind::Blocking, need_cont: false };

    pub fn is_coroutine(&self) -> bool {
        self.kind == AnnotationKind::Coroutine
    }

    pub fn is_blocking(&self) -> bool {
        self.kind == AnnotationKind::Blocking
    }

    pub fn is_native(&self) -> bool {
        self.kind == AnnotationKind::Native
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunType {
    pub params: Vec<Type>,
    pub ret: Type,
    pub annotation: Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Type {
    Int,
    Void,
    /// Pointer to int cells; the only data pointer in the language.
    IntPtr,
    /// A continuation handle; appears only in CPS-converted code.
    Cont,
    Fun(Box<FunType>),
}

impl Type {
    pub fn fun(params: Vec<Type>, ret: Type, annotation: Annotation) -> Type {
        Type::Fun(Box::new(FunType { params, ret, annotation }))
    }

    pub fn as_fun(&self) -> Option<&FunType> {
        match self {
            Type::Fun(f) => Some(f),
            _ => None,
        }
    }

    pub fn is_void(&self) -> bool {
        matches!(self, Type::Void)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub id: ExprId,
    pub kind: ExprKind,
    pub pos: Pos,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Expr {
        Expr { id: UNASSIGNED_ID, kind, pos }
    }

    pub fn int(value: i64, pos: Pos) -> Expr {
        Expr::new(ExprKind::IntLit(value), pos)
    }

    pub fn var(name: impl Into<String>, pos: Pos) -> Expr {
        Expr::new(ExprKind::Var(name.into()), pos)
    }

    pub fn call(callee: Expr, args: Vec<Expr>, pos: Pos) -> Expr {
        Expr::new(ExprKind::Call { callee: Box::new(callee), args }, pos)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    IntLit(i64),
    Var(String),
    Call { callee: Box<Expr>, args: Vec<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr> },
    /// `*p`
    Deref(Box<Expr>),
    /// `p[3]`; offsets are constant (the boxing pass only needs constants).
    Index { base: Box<Expr>, offset: i64 },
    /// `&x` where `x` is an int variable, or `&f` where `f` is a function.
    AddrOf(String),
    /// `&p[3]`: address of one cell of an environment record.
    AddrOfIndex { base: Box<Expr>, offset: i64 },
    /// `push(f, a, b, k)` / `push_ret(f, a, ?, b, k)`: extend continuation
    /// `cont` with a frame for `func`. `ret` marks the frame as expecting the
    /// pending return value in the argument slot holding the hole.
    Push { func: String, args: Vec<Expr>, cont: Box<Expr>, ret: bool },
    /// `?` — the slot a pushed frame's return value is delivered into.
    Hole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Var { name: String, pos: Pos },
    /// `*p = e`
    Deref { ptr: Expr, pos: Pos },
    /// `p[3] = e`
    Index { base: Expr, offset: i64, pos: Pos },
}

impl LValue {
    pub fn pos(&self) -> Pos {
        match self {
            LValue::Var { pos, .. } | LValue::Deref { pos, .. } | LValue::Index { pos, .. } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    VarDecl { name: String, ty: Type, init: Option<Expr>, pos: Pos },
    Assign { target: LValue, value: Expr, pos: Pos },
    /// An expression evaluated for effect; the grammar restricts these to calls.
    Expr { expr: Expr, pos: Pos },
    If { cond: Expr, then_branch: Vec<Stmt>, else_branch: Option<Vec<Stmt>>, pos: Pos },
    While { cond: Expr, body: Vec<Stmt>, pos: Pos },
    Label { name: String, pos: Pos },
    Goto { label: String, pos: Pos },
    Return { value: Option<Expr>, pos: Pos },
    /// `invoke(k)` / `invoke(k, e)`: finish this continuation frame, storing
    /// an optional return value for the next frame. CPS stage only.
    Invoke { cont: Expr, value: Option<Expr>, pos: Pos },
    /// A nested function definition; introduced by the splitting pass.
    FuncDef(Function),
}

impl Stmt {
    pub fn pos(&self) -> Pos {
        match self {
            Stmt::VarDecl { pos, .. }
            | Stmt::Assign { pos, .. }
            | Stmt::Expr { pos, .. }
            | Stmt::If { pos, .. }
            | Stmt::While { pos, .. }
            | Stmt::Label { pos, .. }
            | Stmt::Goto { pos, .. }
            | Stmt::Return { pos, .. }
            | Stmt::Invoke { pos, .. } => *pos,
            Stmt::FuncDef(f) => f.pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: Option<String>,
    pub ty: Type,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub annotation: Annotation,
    pub ret: Type,
    pub params: Vec<Param>,
    /// `None` for extern declarations.
    pub body: Option<Vec<Stmt>>,
    pub pos: Pos,
}

impl Function {
    pub fn is_defined(&self) -> bool {
        self.body.is_some()
    }

    /// The function's type as seen by callers and pointer assignments.
    pub fn fun_type(&self) -> Type {
        Type::fun(
            self.params.iter().map(|p| p.ty.clone()).collect(),
            self.ret.clone(),
            self.annotation,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalVar {
    pub name: String,
    pub ty: Type,
    pub init: Option<Expr>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Global(GlobalVar),
    Func(Function),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub items: Vec<Item>,
}

impl Program {
    pub fn functions(&self) -> impl Iterator<Item = &Function> {
        self.items.iter().filter_map(|i| match i {
            Item::Func(f) => Some(f),
            _ => None,
        })
    }

    pub fn functions_mut(&mut self) -> impl Iterator<Item = &mut Function> {
        self.items.iter_mut().filter_map(|i| match i {
            Item::Func(f) => Some(f),
            _ => None,
        })
    }

    pub fn globals(&self) -> impl Iterator<Item = &GlobalVar> {
        self.items.iter().filter_map(|i| match i {
            Item::Global(g) => Some(g),
            _ => None,
        })
    }

    pub fn find_function(&self, name: &str) -> Option<&Function> {
        self.functions().find(|f| f.name == name)
    }

    /// Renumbers every expression 0..n in a deterministic walk. Run after
    /// parsing and after every transformation pass, before typechecking.
    pub fn assign_ids(&mut self) -> u32 {
        let mut next: ExprId = 0;
        for item in &mut self.items {
            match item {
                Item::Global(g) => {
                    if let Some(e) = &mut g.init {
                        renumber_expr(e, &mut next);
                    }
                }
                Item::Func(f) => renumber_function(f, &mut next),
            }
        }
        next
    }
}

fn renumber_function(f: &mut Function, next: &mut ExprId) {
    if let Some(body) = &mut f.body {
        for stmt in body {
            renumber_stmt(stmt, next);
        }
    }
}

fn renumber_stmt(stmt: &mut Stmt, next: &mut ExprId) {
    match stmt {
        Stmt::VarDecl { init, .. } => {
            if let Some(e) = init {
                renumber_expr(e, next);
            }
        }
        Stmt::Assign { target, value, .. } => {
            match target {
                LValue::Deref { ptr, .. } => renumber_expr(ptr, next),
                LValue::Index { base, .. } => renumber_expr(base, next),
                LValue::Var { .. } => {}
            }
            renumber_expr(value, next);
        }
        Stmt::Expr { expr, .. } => renumber_expr(expr, next),
        Stmt::If { cond, then_branch, else_branch, .. } => {
            renumber_expr(cond, next);
            for s in then_branch {
                renumber_stmt(s, next);
            }
            if let Some(els) = else_branch {
                for s in els {
                    renumber_stmt(s, next);
                }
            }
        }
        Stmt::While { cond, body, .. } => {
            renumber_expr(cond, next);
            for s in body {
                renumber_stmt(s, next);
            }
        }
        Stmt::Return { value, .. } => {
            if let Some(e) = value {
                renumber_expr(e, next);
            }
        }
        Stmt::Invoke { cont, value, .. } => {
            renumber_expr(cont, next);
            if let Some(e) = value {
                renumber_expr(e, next);
            }
        }
        Stmt::FuncDef(f) => renumber_function(f, next),
        Stmt::Label { .. } | Stmt::Goto { .. } => {}
    }
}

fn renumber_expr(expr: &mut Expr, next: &mut ExprId) {
    expr.id = *next;
    *next += 1;
    match &mut expr.kind {
        ExprKind::Call { callee, args } => {
            renumber_expr(callee, next);
            for a in args {
                renumber_expr(a, next);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            renumber_expr(lhs, next);
            renumber_expr(rhs, next);
        }
        ExprKind::Unary { operand, .. } => renumber_expr(operand, next),
        ExprKind::Deref(e) => renumber_expr(e, next),
        ExprKind::Index { base, .. } => renumber_expr(base, next),
        ExprKind::AddrOfIndex { base, .. } => renumber_expr(base, next),
        ExprKind::Push { args, cont, .. } => {
            for a in args {
                renumber_expr(a, next);
            }
            renumber_expr(cont, next);
        }
        ExprKind::IntLit(_)
        | ExprKind::Var(_)
        | ExprKind::AddrOf(_)
        | ExprKind::Hole => {}
    }
}

/// Structural copy with positions and ids zeroed, for comparing programs that
/// went through print/parse (layout moves positions around).
pub fn strip_metadata(p: &Program) -> Program {
    let mut p = p.clone();
    for item in &mut p.items {
        match item {
            Item::Global(g) => {
                g.pos = Pos::default();
                if let Some(e) = &mut g.init {
                    strip_expr(e);
                }
            }
            Item::Func(f) => strip_function(f),
        }
    }
    p
}

fn strip_function(f: &mut Function) {
    f.pos = Pos::default();
    for p in &mut f.params {
        p.pos = Pos::default();
    }
    if let Some(body) = &mut f.body {
        for s in body {
            strip_stmt(s);
        }
    }
}

fn strip_stmt(stmt: &mut Stmt) {
    match stmt {
        Stmt::VarDecl { init, pos, .. } => {
            *pos = Pos::default();
            if let Some(e) = init {
                strip_expr(e);
            }
        }
        Stmt::Assign { target, value, pos } => {
            *pos = Pos::default();
            match target {
                LValue::Var { pos, .. } => *pos = Pos::default(),
                LValue::Deref { ptr, pos } => {
                    *pos = Pos::default();
                    strip_expr(ptr);
                }
                LValue::Index { base, pos, .. } => {
                    *pos = Pos::default();
                    strip_expr(base);
                }
            }
            strip_expr(value);
        }
        Stmt::Expr { expr, pos } => {
            *pos = Pos::default();
            strip_expr(expr);
        }
        Stmt::If { cond, then_branch, else_branch, pos } => {
            *pos = Pos::default();
            strip_expr(cond);
            for s in then_branch {
                strip_stmt(s);
            }
            if let Some(els) = else_branch {
                for s in els {
                    strip_stmt(s);
                }
            }
        }
        Stmt::While { cond, body, pos } => {
            *pos = Pos::default();
            strip_expr(cond);
            for s in body {
                strip_stmt(s);
            }
        }
        Stmt::Label { pos, .. } | Stmt::Goto { pos, .. } => *pos = Pos::default(),
        Stmt::Return { value, pos } => {
            *pos = Pos::default();
            if let Some(e) = value {
                strip_expr(e);
            }
        }
        Stmt::Invoke { cont, value, pos } => {
            *pos = Pos::default();
            strip_expr(cont);
            if let Some(e) = value {
                strip_expr(e);
            }
        }
        Stmt::FuncDef(f) => strip_function(f),
    }
}

fn strip_expr(expr: &mut Expr) {
    expr.id = 0;
    expr.pos = Pos::default();
    match &mut expr.kind {
        ExprKind::Call { callee, args } => {
            strip_expr(callee);
            for a in args {
                strip_expr(a);
            }
        }
        ExprKind::Binary { lhs, rhs, .. } => {
            strip_expr(lhs);
            strip_expr(rhs);
        }
        ExprKind::Unary { operand, .. } => strip_expr(operand),
        ExprKind::Deref(e) => strip_expr(e),
        ExprKind::Index { base, .. } => strip_expr(base),
        ExprKind::AddrOfIndex { base, .. } => strip_expr(base),
        ExprKind::Push { args, cont, .. } => {
            for a in args {
                strip_expr(a);
            }
            strip_expr(cont);
        }
        ExprKind::IntLit(_)
        | ExprKind::Var(_)
        | ExprKind::AddrOf(_)
        | ExprKind::Hole => {}
    }
}

/// Reserved prefix for every generated identifier (labels, nested functions,
/// hoisting temporaries, environment records). User identifiers may not use
/// it, so generated names can never collide with source names.
pub const GENERATED_PREFIX: &str = "__cpc_";
