//! The `.gevo` rule and workspace language.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod resolve;

pub use ast::{BindTargets, Diagnostic, DiagnosticKind, GraphDecl, Item, NodeDecl, Pos, RelationDecl, RuleDocument};
pub use parser::{parse_document, parse_event};
pub use printer::print_document;
pub use resolve::{load, resolve_rules, Model};

use crate::engine::RuleSet;

pub const BUILTIN_SOURCE: &str = include_str!("../../assets/builtin.gevo");

/// The bundled example: three nodes, a composition and an inheritance.
pub const EXAMPLE_SOURCE: &str = include_str!("../../assets/gr0.gevo");

pub fn builtin_document() -> RuleDocument {
    parse_document(BUILTIN_SOURCE).expect("bundled rules parse")
}

/// Default rules R1 to R9 with strategies S1 to S3.
pub fn builtin_rules() -> RuleSet {
    load(&builtin_document()).expect("bundled rules resolve").rules
}

pub fn example_model() -> Model {
    load(&parse_document(EXAMPLE_SOURCE).expect("example parses")).expect("example resolves")
}
