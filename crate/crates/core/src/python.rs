//! Thin helpers over the Python grammar parser.

use rustpython_parser::ast::{self, Constant, Expr, Ranged, Stmt};
use rustpython_parser::Parse;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "syntax error on line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for SyntaxError {}

pub fn parse_suite(source: &str, path: &str) -> Result<Vec<Stmt>, SyntaxError> {
    ast::Suite::parse(source, path).map_err(|e| {
        let offset = usize::from(e.offset).min(source.len());
        SyntaxError {
            line: line_of(source, offset),
            message: e.error.to_string(),
        }
    })
}

/// One-based line number of a byte offset.
pub fn line_of(source: &str, offset: usize) -> usize {
    source.as_bytes()[..offset].iter().filter(|&&b| b == b'\n').count() + 1
}

/// The string literal opening a definition body, if any.
pub fn docstring(body: &[Stmt]) -> Option<&str> {
    match body.first()? {
        Stmt::Expr(e) => match e.value.as_ref() {
            Expr::Constant(c) => match &c.value {
                Constant::Str(s) => Some(s.as_str()),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

pub fn source_text<'a>(source: &'a str, node: &impl Ranged) -> &'a str {
    let r = node.range();
    source
        .get(usize::from(r.start())..usize::from(r.end()))
        .unwrap_or("")
}
