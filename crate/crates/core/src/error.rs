//! Errors for parsing and typechecking.

use crate::ast::Pos;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("{pos}: parse error: {msg}")]
    Parse { pos: Pos, msg: String },
    #[error("{pos}: duplicate definition of `{name}`")]
    DuplicateDefinition { name: String, pos: Pos },
    #[error("{pos}: unknown annotation `{name}`")]
    UnknownAnnotation { name: String, pos: Pos },
    #[error("{pos}: call of `{name}` with {got} arguments, expected {expected}")]
    ArityMismatch { name: String, expected: usize, got: usize, pos: Pos },
    #[error("{pos}: unknown identifier `{name}`")]
    UnknownIdentifier { name: String, pos: Pos },
    #[error("{pos}: called value is not a function")]
    CallOfNonFunction { pos: Pos },
    #[error("{pos}: void value used where a value is required")]
    VoidValueUse { pos: Pos },
    #[error("{pos}: type mismatch: {msg}")]
    TypeMismatch { pos: Pos, msg: String },
}

impl LangError {
    pub fn parse(pos: Pos, msg: impl Into<String>) -> LangError {
        LangError::Parse { pos, msg: msg.into() }
    }

    pub fn types(pos: Pos, msg: impl Into<String>) -> LangError {
        LangError::TypeMismatch { pos, msg: msg.into() }
    }

    pub fn pos(&self) -> Pos {
        match self {
            LangError::Parse { pos, .. }
            | LangError::DuplicateDefinition { pos, .. }
            | LangError::UnknownAnnotation { pos, .. }
            | LangError::ArityMismatch { pos, .. }
            | LangError::UnknownIdentifier { pos, .. }
            | LangError::CallOfNonFunction { pos }
            | LangError::VoidValueUse { pos }
            | LangError::TypeMismatch { pos, .. } => *pos,
        }
    }
}
