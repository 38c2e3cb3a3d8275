//! Text syntax for narrative prototypes.
//!
//! ```text
//! prototype  := "MATCH" pattern binds? "WHERE" expr
//! pattern    := "EVENT" ident | "TYPE" ident | "SUPERTYPE" ident
//! binds      := "BIND" ident ("," ident)*
//! expr       := expr "OR" term | term
//! term       := term "AND" factor | factor
//! factor     := "NOT" factor | "(" expr ")" | atom
//! atom       := ident "(" args? ")" fromclause? | funccall comparator literal
//! fromclause := "FROM" "{" ident ("," ident)* "}"
//! ```
//!
//! Arguments are declared variables, string literals naming an entity, or `_`
//! for "some participant of the event".

mod ast;
mod parser;

pub use ast::*;
pub use parser::{parse, ParseError, ParseErrorKind, MAX_NESTING};
