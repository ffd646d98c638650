//! MiniGo frontend: lexing, parsing, pretty-printing and assumption checks.

pub mod ast;
mod lexer;
mod parser;
pub mod printer;
pub mod validate;

pub use ast::*;
pub use parser::{parse_program, parse_program_named};
pub use printer::print_program;
pub use validate::{validate_assumptions, Violation};

/// Syntax error with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}
