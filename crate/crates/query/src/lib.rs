//! A small graph query language with a Trustfall-style directive syntax.
//!
//! Text is parsed into a [`QueryDocument`], validated against a [`Schema`]
//! into a [`CheckedQuery`], and executed lazily over any [`Adapter`].

pub mod adapter;
pub mod ast;
mod check;
pub mod error;
mod exec;
mod lexer;
mod parser;
pub mod schema;
pub mod value;

pub use adapter::{Adapter, Arguments, VertexIter};
pub use ast::{FilterOp, Operand, Position, QueryDocument};
pub use check::{check_query, CheckedQuery};
pub use error::{AdapterError, CheckError, ExecError, ParseError, QueryError};
pub use exec::{execute_query, OutputRow, RowIter};
pub use parser::parse_query;
pub use schema::{Schema, SchemaError};
pub use value::{Value, ValueKind};

/// Parses, checks and executes `text` in one go, collecting every row.
pub fn run_query<A: Adapter>(
    text: &str,
    schema: &Schema,
    adapter: &A,
    arguments: &Arguments,
) -> Result<Vec<OutputRow>, QueryError> {
    let document = parse_query(text)?;
    let checked = check_query(&document, schema)?;
    let rows = execute_query(&checked, adapter, arguments)?.collect::<Result<Vec<_>, _>>()?;
    Ok(rows)
}
