//! Text formats: the `.mdl` model language and the `.trc` trace format.
//!
//! Model grammar (`#` starts a comment, whitespace is insignificant):
//!
//! ```text
//! model    := { class }
//! class    := "class" IDENT [ "extends" IDENT ] [ "abstract" ] "{" { var | method } "}"
//! var      := "var" IDENT [ ":" IDENT ]
//! method   := [ "ctor" ] "method" IDENT [ "body" STRING ] "{" { stmt } "}"
//! stmt     := "call" receiver "." IDENT | "uses" varref | "defs" varref
//! receiver := "self" | "super" | IDENT | "?"
//! varref   := [ IDENT "." ] IDENT
//! ```

mod lexer;
mod model_text;
mod trace_text;

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub use model_text::{parse_model, serialize_model};
pub use trace_text::{parse_traces, parse_traces_checked, serialize_traces};

/// Position in a parsed text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub file: Option<PathBuf>,
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
}

impl SourceSpan {
    pub fn at(line: usize, column: usize) -> Self {
        Self {
            file: None,
            line,
            column,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(path) => write!(f, "{}:{}:{}", path.display(), self.line, self.column),
            None => write!(f, "<input>:{}:{}", self.line, self.column),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct TraceFormatError {
    pub span: SourceSpan,
    pub message: String,
}

/// Attaches a file name to the span of a parse or trace error.
pub trait WithFile {
    fn with_file(self, path: impl Into<PathBuf>) -> Self;
}

impl WithFile for ParseError {
    fn with_file(mut self, path: impl Into<PathBuf>) -> Self {
        self.span.file = Some(path.into());
        self
    }
}

impl WithFile for TraceFormatError {
    fn with_file(mut self, path: impl Into<PathBuf>) -> Self {
        self.span.file = Some(path.into());
        self
    }
}
