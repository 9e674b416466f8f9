//! Ambient runtime primitives.
//!
//! Every program can call these without declaring them. Redeclaring one with
//! a matching signature is allowed (programs often carry their own extern
//! declarations); defining a body for one is a duplicate-definition error.
//! Their function ids are fixed so both execution engines and the translator
//! agree on them; user functions are numbered after them.

use crate::ast::{Annotation, FunType, Type};

pub const PRINT: u32 = 0;
pub const CO_YIELD: u32 = 1;
pub const CO_SLEEP: u32 = 2;
pub const CO_CREATE: u32 = 3;
pub const CO_ENTER: u32 = 4;
pub const IN_COROUTINE: u32 = 5;
pub const CO_SELF: u32 = 6;
pub const ALLOC: u32 = 7;

/// First id handed out to user-defined functions.
pub const FIRST_USER_FUNC_ID: u32 = 8;

#[derive(Debug, Clone)]
pub struct BuiltinDef {
    pub name: &'static str,
    pub id: u32,
    pub ty: FunType,
}

fn needcont(kind: Annotation) -> Annotation {
    Annotation { need_cont: true, ..kind }
}

/// The coroutine entry type accepted by `co_create`: `(int) -> void`.
pub fn entry_type() -> FunType {
    FunType { params: vec![Type::Int], ret: Type::Void, annotation: Annotation::COROUTINE }
}

/// The entry type after CPS conversion: `(int, cont) -> void`.
pub fn converted_entry_type() -> FunType {
    FunType {
        params: vec![Type::Int, Type::Cont],
        ret: Type::Void,
        annotation: Annotation::COROUTINE,
    }
}

pub fn builtin_table() -> Vec<BuiltinDef> {
    let fun = |params: Vec<Type>, ret: Type, annotation: Annotation| FunType {
        params,
        ret,
        annotation,
    };
    vec![
        BuiltinDef { name: "print", id: PRINT, ty: fun(vec![Type::Int], Type::Void, Annotation::NATIVE) },
        BuiltinDef { name: "co_yield", id: CO_YIELD, ty: fun(vec![], Type::Void, Annotation::COROUTINE) },
        BuiltinDef {
            name: "co_sleep",
            id: CO_SLEEP,
            ty: fun(vec![Type::Int], Type::Void, Annotation::COROUTINE),
        },
        BuiltinDef {
            name: "co_create",
            id: CO_CREATE,
            ty: fun(vec![Type::Fun(Box::new(entry_type()))], Type::Int, Annotation::NATIVE),
        },
        BuiltinDef {
            name: "co_enter",
            id: CO_ENTER,
            ty: fun(vec![Type::Int, Type::Int], Type::Void, Annotation::NATIVE),
        },
        BuiltinDef {
            name: "in_coroutine",
            id: IN_COROUTINE,
            ty: fun(vec![], Type::Int, needcont(Annotation::NATIVE)),
        },
        BuiltinDef {
            name: "co_self",
            id: CO_SELF,
            ty: fun(vec![], Type::Int, needcont(Annotation::COROUTINE)),
        },
        BuiltinDef { name: "alloc", id: ALLOC, ty: fun(vec![Type::Int], Type::IntPtr, Annotation::NATIVE) },
    ]
}

pub fn lookup(name: &str) -> Option<BuiltinDef> {
    builtin_table().into_iter().find(|b| b.name == name)
}

pub fn is_builtin(name: &str) -> bool {
    lookup(name).is_some()
}
