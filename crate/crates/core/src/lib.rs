//! Compiler toolkit for a small C-like language with coroutine annotations.
//!
//! The crate provides the language front end (lexer, parser, printer, type
//! checker), a static checker that infers which functions are coroutines and
//! reports annotation bugs, a source-to-source translator that turns
//! annotated functions into continuation-passing style, and two execution
//! engines (a direct-style interpreter and a CPS runner on the continuation
//! runtime) with a differential test harness between them.

pub mod ast;
pub mod builtins;
pub mod check;
pub mod cps;
pub mod error;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod testgen;
pub mod typeck;

pub use ast::{Annotation, AnnotationKind, Expr, Function, Item, Program, Stmt, Type};
pub use cps::{translate, translate_to, verify_cps_form, CpsError, Stage};
pub use error::LangError;
pub use interp::{Fault, Outcome, TraceEvent};
pub use parser::{parse_program, parse_program_with, ParseOptions};
pub use printer::{print_program, print_program_with, PrintOptions};
pub use typeck::{typecheck, CallTarget, TypedProgram};
