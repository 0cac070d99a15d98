//! SPARQL query model: parser, pretty printer, templates and operator census.

mod ast;
mod inventory;
mod lexer;
mod parser;
mod serialize;

pub use ast::*;
pub use inventory::{operator_inventory, OperatorInventory, OperatorTag};
pub use parser::parse;
pub use serialize::{serialize, template_of, QueryTemplate};

/// Rejection of a query text, with the byte offset it was detected at.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError {
            offset,
            message: message.into(),
        }
    }
}
