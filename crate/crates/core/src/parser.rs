//! Recursive-descent parser.
//!
//! Annotations are leading keywords on function types but may also appear
//! between the return type and the declarator (the positioning rules are
//! liberal, attribute-style). The coroutine attribute name is configurable;
//! `coroutine_fn`, `blocking_fn` and `needcont` are the defaults.

use crate::ast::*;
use crate::error::LangError;
use crate::lexer::{lex, Tok, Token};

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub coroutine_attr: String,
    pub blocking_attr: String,
    pub needcont_attr: String,
    /// Accept identifiers with the generated-name prefix. On for re-parsing
    /// stage output, off for user source so generated names stay fresh.
    pub allow_reserved: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            coroutine_attr: "coroutine_fn".to_string(),
            blocking_attr: "blocking_fn".to_string(),
            needcont_attr: "needcont".to_string(),
            allow_reserved: false,
        }
    }
}

impl ParseOptions {
    /// Options for re-parsing printed stage output.
    pub fn internal() -> Self {
        ParseOptions { allow_reserved: true, ..ParseOptions::default() }
    }

    pub fn with_coroutine_attr(name: &str) -> Self {
        ParseOptions { coroutine_attr: name.to_string(), ..ParseOptions::default() }
    }
}

pub fn parse_program(source: &str) -> Result<Program, LangError> {
    parse_program_with(source, &ParseOptions::default())
}

pub fn parse_program_with(source: &str, opts: &ParseOptions) -> Result<Program, LangError> {
    let tokens = lex(source)?;
    let mut parser = Parser { tokens, i: 0, opts };
    let mut items = Vec::new();
    while parser.peek() != &Tok::Eof {
        items.push(parser.item()?);
    }
    let mut program = Program { items };
    program.assign_ids();
    Ok(program)
}

/// Names with special grammar that can never be user identifiers.
const RESERVED_FORMS: [&str; 3] = ["push", "push_ret", "invoke"];

struct Parser<'a> {
    tokens: Vec<Token>,
    i: usize,
    opts: &'a ParseOptions,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.i].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let idx = (self.i + ahead).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.i].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.i].clone();
        if self.i + 1 < self.tokens.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, LangError> {
        if self.peek() == &tok {
            Ok(self.advance())
        } else {
            Err(LangError::parse(self.pos(), format!("expected {}, found {}", tok, self.peek())))
        }
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if self.peek() == &tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), LangError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok((name, pos))
            }
            other => Err(LangError::parse(pos, format!("expected identifier, found {other}"))),
        }
    }

    /// An identifier that introduces a new name.
    fn binding_ident(&mut self) -> Result<(String, Pos), LangError> {
        let (name, pos) = self.ident()?;
        if RESERVED_FORMS.contains(&name.as_str()) {
            return Err(LangError::parse(pos, format!("`{name}` is a reserved word")));
        }
        if !self.opts.allow_reserved && name.starts_with(GENERATED_PREFIX) {
            return Err(LangError::parse(
                pos,
                format!("identifiers may not start with the reserved prefix `{GENERATED_PREFIX}`"),
            ));
        }
        Ok((name, pos))
    }

    fn attr_of(&self, name: &str) -> Option<AttrWord> {
        if name == self.opts.coroutine_attr {
            Some(AttrWord::Kind(AnnotationKind::Coroutine))
        } else if name == self.opts.blocking_attr {
            Some(AttrWord::Kind(AnnotationKind::Blocking))
        } else if name == self.opts.needcont_attr {
            Some(AttrWord::NeedCont)
        } else {
            None
        }
    }

    /// Consumes any run of annotation words into `ann`.
    fn annotations(&mut self, ann: &mut AnnBuilder) -> Result<(), LangError> {
        while let Tok::Ident(name) = self.peek().clone() {
            match self.attr_of(&name) {
                Some(word) => {
                    let pos = self.pos();
                    self.advance();
                    ann.add(word, &name, pos)?;
                }
                None => break,
            }
        }
        Ok(())
    }

    /// Detects a misspelled annotation: an identifier sitting where only an
    /// annotation or type may start.
    fn unknown_annotation_check(&self) -> Result<(), LangError> {
        if let Tok::Ident(name) = self.peek() {
            if matches!(self.peek_at(1), Tok::KwInt | Tok::KwVoid | Tok::KwCont | Tok::Ident(_)) {
                return Err(LangError::UnknownAnnotation { name: name.clone(), pos: self.pos() });
            }
        }
        Ok(())
    }

    fn base_type(&mut self) -> Result<Type, LangError> {
        match self.peek() {
            Tok::KwInt => {
                self.advance();
                Ok(Type::Int)
            }
            Tok::KwVoid => {
                self.advance();
                Ok(Type::Void)
            }
            Tok::KwCont => {
                self.advance();
                Ok(Type::Cont)
            }
            other => Err(LangError::parse(self.pos(), format!("expected type, found {other}"))),
        }
    }

    /// program item: global variable, function definition, or extern decl.
    fn item(&mut self) -> Result<Item, LangError> {
        let start = self.pos();
        let is_extern = self.eat(Tok::Extern);
        let mut ann = AnnBuilder::default();
        self.annotations(&mut ann)?;
        self.unknown_annotation_check()?;
        let base = self.base_type()?;
        self.annotations(&mut ann)?;
        self.unknown_annotation_check()?;

        if self.eat(Tok::Star) {
            // `int *name [= init];`
            let ty = pointer_to(base, start)?;
            let (name, pos) = self.binding_ident()?;
            ann.forbid_on_data(pos)?;
            let init = self.var_init()?;
            self.expect(Tok::Semi)?;
            if is_extern {
                return Err(LangError::parse(pos, "extern variables are not supported"));
            }
            return Ok(Item::Global(GlobalVar { name, ty, init, pos }));
        }

        if self.peek() == &Tok::LParen && self.peek_at(1) == &Tok::Star {
            // `ret (*name)(types) [= init];` — function-typed variable.
            let (name, pos, ty) = self.funptr_declarator(base, ann.build())?;
            let init = self.var_init()?;
            self.expect(Tok::Semi)?;
            if is_extern {
                return Err(LangError::parse(pos, "extern variables are not supported"));
            }
            return Ok(Item::Global(GlobalVar { name, ty, init, pos }));
        }

        let (name, pos) = self.binding_ident()?;
        if self.peek() == &Tok::LParen {
            let params = self.params()?;
            let annotation = ann.build();
            if self.eat(Tok::Semi) {
                if !is_extern {
                    return Err(LangError::parse(
                        pos,
                        "missing function body (use `extern` for declarations)",
                    ));
                }
                return Ok(Item::Func(Function {
                    name,
                    annotation,
                    ret: base,
                    params,
                    body: None,
                    pos,
                }));
            }
            if is_extern {
                return Err(LangError::parse(pos, "extern function cannot have a body"));
            }
            self.expect(Tok::LBrace)?;
            let body = self.block(true)?;
            return Ok(Item::Func(Function {
                name,
                annotation,
                ret: base,
                params,
                body: Some(body),
                pos,
            }));
        }

        // Plain global variable.
        ann.forbid_on_data(pos)?;
        if is_extern {
            return Err(LangError::parse(pos, "extern variables are not supported"));
        }
        if base.is_void() || base == Type::Cont {
            return Err(LangError::parse(pos, "variables must have int, int*, or function type"));
        }
        let init = self.var_init()?;
        self.expect(Tok::Semi)?;
        Ok(Item::Global(GlobalVar { name, ty: base, init, pos }))
    }

    fn var_init(&mut self) -> Result<Option<Expr>, LangError> {
        if self.eat(Tok::Assign) {
            Ok(Some(self.expr()?))
        } else {
            Ok(None)
        }
    }

    /// Parses `(*name)(types)` after the return type, yielding the variable
    /// name and its function type.
    fn funptr_declarator(
        &mut self,
        ret: Type,
        annotation: Annotation,
    ) -> Result<(String, Pos, Type), LangError> {
        self.expect(Tok::LParen)?;
        self.expect(Tok::Star)?;
        let (name, pos) = self.binding_ident()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::LParen)?;
        let params = self.type_list()?;
        Ok((name, pos, Type::fun(params, ret, annotation)))
    }

    /// Parameter list of a function definition or declaration.
    fn params(&mut self) -> Result<Vec<Param>, LangError> {
        self.expect(Tok::LParen)?;
        if self.eat(Tok::RParen) {
            return Ok(Vec::new());
        }
        if self.peek() == &Tok::KwVoid && self.peek_at(1) == &Tok::RParen {
            self.advance();
            self.advance();
            return Ok(Vec::new());
        }
        let mut params = Vec::new();
        loop {
            params.push(self.param()?);
            if !self.eat(Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(params)
    }

    fn param(&mut self) -> Result<Param, LangError> {
        let start = self.pos();
        let mut ann = AnnBuilder::default();
        self.annotations(&mut ann)?;
        let base = self.base_type()?;
        self.annotations(&mut ann)?;
        if self.eat(Tok::Star) {
            let ty = pointer_to(base, start)?;
            ann.forbid_on_data(start)?;
            let name = self.optional_binding()?;
            return Ok(Param { name, ty, pos: start });
        }
        if self.peek() == &Tok::LParen {
            // function-typed parameter: `ret (*name)(types)` or `ret (*)(types)`
            self.advance();
            self.expect(Tok::Star)?;
            let name = self.optional_binding()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::LParen)?;
            let params = self.type_list()?;
            return Ok(Param { name, ty: Type::fun(params, base, ann.build()), pos: start });
        }
        ann.forbid_on_data(start)?;
        let name = self.optional_binding()?;
        Ok(Param { name, ty: base, pos: start })
    }

    fn optional_binding(&mut self) -> Result<Option<String>, LangError> {
        if matches!(self.peek(), Tok::Ident(_)) {
            Ok(Some(self.binding_ident()?.0))
        } else {
            Ok(None)
        }
    }

    /// Unnamed type list inside a function type: `(void)`, `()`, or types.
    fn type_list(&mut self) -> Result<Vec<Type>, LangError> {
        if self.eat(Tok::RParen) {
            return Ok(Vec::new());
        }
        if self.peek() == &Tok::KwVoid && self.peek_at(1) == &Tok::RParen {
            self.advance();
            self.advance();
            return Ok(Vec::new());
        }
        let mut types = Vec::new();
        loop {
            types.push(self.type_in_list()?);
            if !self.eat(Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(types)
    }

    fn type_in_list(&mut self) -> Result<Type, LangError> {
        let start = self.pos();
        let mut ann = AnnBuilder::default();
        self.annotations(&mut ann)?;
        let base = self.base_type()?;
        self.annotations(&mut ann)?;
        if self.eat(Tok::Star) {
            ann.forbid_on_data(start)?;
            return pointer_to(base, start);
        }
        if self.peek() == &Tok::LParen {
            self.advance();
            self.expect(Tok::Star)?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::LParen)?;
            let params = self.type_list()?;
            return Ok(Type::fun(params, base, ann.build()));
        }
        ann.forbid_on_data(start)?;
        Ok(base)
    }

    /// Statements until the closing brace. `allow_labels` is true only at
    /// function-body top level, which keeps labels (and therefore gotos into
    /// structured statements) out of loop and branch bodies.
    fn block(&mut self, allow_labels: bool) -> Result<Vec<Stmt>, LangError> {
        let mut stmts = Vec::new();
        while !self.eat(Tok::RBrace) {
            if self.peek() == &Tok::Eof {
                return Err(LangError::parse(self.pos(), "unexpected end of input in block"));
            }
            stmts.push(self.stmt(allow_labels)?);
        }
        Ok(stmts)
    }

    fn stmt(&mut self, allow_labels: bool) -> Result<Stmt, LangError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::KwInt | Tok::KwVoid | Tok::KwCont => self.decl_stmt(pos),
            Tok::Ident(name) if self.attr_of(&name).is_some() => self.decl_stmt(pos),
            Tok::If => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_branch = self.branch_body()?;
                let else_branch = if self.eat(Tok::Else) {
                    if self.peek() == &Tok::If {
                        Some(vec![self.stmt(false)?])
                    } else {
                        self.expect(Tok::LBrace)?;
                        Some(self.block(false)?)
                    }
                } else {
                    None
                };
                Ok(Stmt::If { cond, then_branch, else_branch, pos })
            }
            Tok::While => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::LBrace)?;
                let body = self.block(false)?;
                Ok(Stmt::While { cond, body, pos })
            }
            Tok::Goto => {
                self.advance();
                let (label, _) = self.ident()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Goto { label, pos })
            }
            Tok::Return => {
                self.advance();
                let value = if self.peek() == &Tok::Semi { None } else { Some(self.expr()?) };
                self.expect(Tok::Semi)?;
                Ok(Stmt::Return { value, pos })
            }
            Tok::Star => {
                self.advance();
                let ptr = self.unary()?;
                self.expect(Tok::Assign)?;
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Assign { target: LValue::Deref { ptr, pos }, value, pos })
            }
            Tok::Ident(name) if name == "invoke" => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cont = self.expr()?;
                let value = if self.eat(Tok::Comma) { Some(self.expr()?) } else { None };
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Invoke { cont, value, pos })
            }
            Tok::Ident(name) => {
                if self.peek_at(1) == &Tok::Colon {
                    if !allow_labels {
                        return Err(LangError::parse(
                            pos,
                            "labels are only allowed at function-body top level",
                        ));
                    }
                    let (name, _) = self.binding_ident()?;
                    self.advance(); // colon
                    return Ok(Stmt::Label { name, pos });
                }
                if self.peek_at(1) == &Tok::Assign {
                    self.advance();
                    self.advance();
                    let value = self.expr()?;
                    self.expect(Tok::Semi)?;
                    return Ok(Stmt::Assign { target: LValue::Var { name, pos }, value, pos });
                }
                if self.peek_at(1) == &Tok::LBracket {
                    // `p[3] = e;`
                    self.advance();
                    self.advance();
                    let offset = self.const_index()?;
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::Assign)?;
                    let value = self.expr()?;
                    self.expect(Tok::Semi)?;
                    let base = Expr::var(name, pos);
                    return Ok(Stmt::Assign {
                        target: LValue::Index { base, offset, pos },
                        value,
                        pos,
                    });
                }
                self.call_stmt(pos)
            }
            Tok::LParen => self.call_stmt(pos),
            other => Err(LangError::parse(pos, format!("unexpected {other} at statement start"))),
        }
    }

    /// If/else-if branch body: a block, or a bare `goto` (the normalized form).
    fn branch_body(&mut self) -> Result<Vec<Stmt>, LangError> {
        if self.peek() == &Tok::Goto {
            let pos = self.pos();
            self.advance();
            let (label, _) = self.ident()?;
            self.expect(Tok::Semi)?;
            Ok(vec![Stmt::Goto { label, pos }])
        } else {
            self.expect(Tok::LBrace)?;
            self.block(false)
        }
    }

    /// Expression statement; only calls make sense, so only calls are allowed.
    fn call_stmt(&mut self, pos: Pos) -> Result<Stmt, LangError> {
        let expr = self.expr()?;
        if !matches!(expr.kind, ExprKind::Call { .. }) {
            return Err(LangError::parse(pos, "only call expressions may be used as statements"));
        }
        self.expect(Tok::Semi)?;
        Ok(Stmt::Expr { expr, pos })
    }

    /// Local declaration or nested function definition.
    fn decl_stmt(&mut self, pos: Pos) -> Result<Stmt, LangError> {
        let mut ann = AnnBuilder::default();
        self.annotations(&mut ann)?;
        let base = self.base_type()?;
        self.annotations(&mut ann)?;

        if self.eat(Tok::Star) {
            let ty = pointer_to(base, pos)?;
            ann.forbid_on_data(pos)?;
            let (name, _) = self.binding_ident()?;
            let init = self.var_init()?;
            self.expect(Tok::Semi)?;
            return Ok(Stmt::VarDecl { name, ty, init, pos });
        }
        if self.peek() == &Tok::LParen && self.peek_at(1) == &Tok::Star {
            let (name, _, ty) = self.funptr_declarator(base, ann.build())?;
            let init = self.var_init()?;
            self.expect(Tok::Semi)?;
            return Ok(Stmt::VarDecl { name, ty, init, pos });
        }
        let (name, npos) = self.binding_ident()?;
        if self.peek() == &Tok::LParen {
            // nested function definition
            let params = self.params()?;
            self.expect(Tok::LBrace)?;
            let body = self.block(true)?;
            return Ok(Stmt::FuncDef(Function {
                name,
                annotation: ann.build(),
                ret: base,
                params,
                body: Some(body),
                pos: npos,
            }));
        }
        ann.forbid_on_data(npos)?;
        if base.is_void() {
            return Err(LangError::parse(npos, "variables must have int, int*, or function type"));
        }
        let init = self.var_init()?;
        self.expect(Tok::Semi)?;
        Ok(Stmt::VarDecl { name, ty: base, init, pos })
    }

    fn const_index(&mut self) -> Result<i64, LangError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(n)
            }
            other => {
                Err(LangError::parse(self.pos(), format!("expected constant index, found {other}")))
            }
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr, LangError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == &Tok::OrOr {
            let pos = self.pos();
            self.advance();
            let rhs = self.and_expr()?;
            lhs = binary(BinOp::Or, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.eq_expr()?;
        while self.peek() == &Tok::AndAnd {
            let pos = self.pos();
            self.advance();
            let rhs = self.eq_expr()?;
            lhs = binary(BinOp::And, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn eq_expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.rel_expr()?;
        loop {
            let op = match self.peek() {
                Tok::EqEq => BinOp::Eq,
                Tok::NotEq => BinOp::Ne,
                _ => break,
            };
            let pos = self.pos();
            self.advance();
            let rhs = self.rel_expr()?;
            lhs = binary(op, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn rel_expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                _ => break,
            };
            let pos = self.pos();
            self.advance();
            let rhs = self.add_expr()?;
            lhs = binary(op, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            let pos = self.pos();
            self.advance();
            let rhs = self.mul_expr()?;
            lhs = binary(op, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => break,
            };
            let pos = self.pos();
            self.advance();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        let pos = self.pos();
        match self.peek() {
            Tok::Minus => {
                self.advance();
                let operand = self.unary()?;
                Ok(Expr::new(ExprKind::Unary { op: UnOp::Neg, operand: Box::new(operand) }, pos))
            }
            Tok::Not => {
                self.advance();
                let operand = self.unary()?;
                Ok(Expr::new(ExprKind::Unary { op: UnOp::Not, operand: Box::new(operand) }, pos))
            }
            Tok::Star => {
                self.advance();
                let operand = self.unary()?;
                Ok(Expr::new(ExprKind::Deref(Box::new(operand)), pos))
            }
            Tok::Amp => {
                self.advance();
                let (name, _) = self.ident()?;
                if self.eat(Tok::LBracket) {
                    let offset = self.const_index()?;
                    self.expect(Tok::RBracket)?;
                    let base = Box::new(Expr::var(name, pos));
                    return Ok(Expr::new(ExprKind::AddrOfIndex { base, offset }, pos));
                }
                Ok(Expr::new(ExprKind::AddrOf(name), pos))
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, LangError> {
        let mut expr = self.primary()?;
        loop {
            let pos = self.pos();
            if self.peek() == &Tok::LParen {
                self.advance();
                let args = self.args()?;
                expr = Expr::call(expr, args, pos);
            } else if self.peek() == &Tok::LBracket {
                self.advance();
                let offset = self.const_index()?;
                self.expect(Tok::RBracket)?;
                expr = Expr::new(ExprKind::Index { base: Box::new(expr), offset }, pos);
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn args(&mut self) -> Result<Vec<Expr>, LangError> {
        let mut args = Vec::new();
        if self.eat(Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if !self.eat(Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(Expr::int(n, pos))
            }
            Tok::Question => {
                self.advance();
                Ok(Expr::new(ExprKind::Hole, pos))
            }
            Tok::Ident(name) if name == "push" || name == "push_ret" => {
                let ret = name == "push_ret";
                self.advance();
                self.expect(Tok::LParen)?;
                let (func, _) = self.ident()?;
                let mut rest = Vec::new();
                while self.eat(Tok::Comma) {
                    rest.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                let cont = rest.pop().ok_or_else(|| {
                    LangError::parse(pos, "push needs a continuation as its final argument")
                })?;
                Ok(Expr::new(
                    ExprKind::Push { func, args: rest, cont: Box::new(cont), ret },
                    pos,
                ))
            }
            Tok::Ident(name) => {
                if RESERVED_FORMS.contains(&name.as_str()) {
                    return Err(LangError::parse(pos, format!("`{name}` is a reserved word")));
                }
                self.advance();
                Ok(Expr::var(name, pos))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => Err(LangError::parse(pos, format!("expected expression, found {other}"))),
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr, pos: Pos) -> Expr {
    Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, pos)
}

fn pointer_to(base: Type, pos: Pos) -> Result<Type, LangError> {
    match base {
        Type::Int => Ok(Type::IntPtr),
        _ => Err(LangError::parse(pos, "only int may be pointed to")),
    }
}

enum AttrWord {
    Kind(AnnotationKind),
    NeedCont,
}

/// Accumulates annotation words around a declaration.
#[derive(Default)]
struct AnnBuilder {
    kind: Option<AnnotationKind>,
    need_cont: bool,
}

impl AnnBuilder {
    fn add(&mut self, word: AttrWord, name: &str, pos: Pos) -> Result<(), LangError> {
        match word {
            AttrWord::Kind(kind) => {
                if self.kind.is_some() {
                    return Err(LangError::parse(pos, format!("duplicate annotation `{name}`")));
                }
                self.kind = Some(kind);
            }
            AttrWord::NeedCont => {
                if self.need_cont {
                    return Err(LangError::parse(pos, format!("duplicate annotation `{name}`")));
                }
                self.need_cont = true;
            }
        }
        Ok(())
    }

    fn build(&self) -> Annotation {
        Annotation {
            kind: self.kind.unwrap_or(AnnotationKind::Native),
            need_cont: self.need_cont,
        }
    }

    fn forbid_on_data(&self, pos: Pos) -> Result<(), LangError> {
        if self.kind.is_some() || self.need_cont {
            return Err(LangError::parse(pos, "annotations apply only to function types"));
        }
        Ok(())
    }
}
