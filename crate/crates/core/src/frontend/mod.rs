//! MTIR source language: parsing and lowering to per-thread CFGs.

pub mod ast;
pub mod ir;
mod lower;
mod parser;

use alloc::string::String;

pub use ast::{ScalarType, SourceProgram};
pub use ir::*;
pub use lower::build_model;
pub use parser::parse;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("duplicate global `{name}`")]
    DuplicateGlobal { name: String },
    #[error("duplicate routine `{name}`")]
    DuplicateRoutine { name: String },
    #[error("unknown routine `{name}`")]
    UnknownRoutine { name: String },
    #[error("no `main` routine")]
    MissingEntry,
    #[error("unknown variable `{name}` in routine `{routine}`")]
    UnknownVariable { name: String, routine: String },
    #[error("routine `{routine}` transitively creates itself")]
    RecursiveCreate { routine: String },
    #[error("`{routine}` is created inside a loop in `{in_routine}`")]
    CreateInLoop { routine: String, in_routine: String },
    #[error("`{routine}` expects {expected} argument(s), got {found}")]
    ArityMismatch {
        routine: String,
        expected: usize,
        found: usize,
    },
    #[error("join of `{routine}` in `{in_routine}` has no matching create")]
    JoinWithoutCreate { routine: String, in_routine: String },
    #[error("join of `{routine}` in `{in_routine}` matches several creates")]
    AmbiguousJoin { routine: String, in_routine: String },
}

/// Parses and lowers `text` in one step.
pub fn load(text: &str) -> Result<ProgramModel, FrontendError> {
    build_model(&parse(text)?)
}
