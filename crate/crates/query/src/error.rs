use thiserror::Error;

use crate::ast::Position;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },
    #[error("duplicate output name `{name}` at {position}")]
    DuplicateOutputName { name: String, position: Position },
    #[error("unknown directive `@{name}` at {position}")]
    UnknownDirective { name: String, position: Position },
    #[error("misplaced directive `@{directive}` at {position}: {reason}")]
    MisplacedDirective {
        directive: String,
        reason: String,
        position: Position,
    },
}

impl ParseError {
    pub(crate) fn syntax(position: Position, expected: impl Into<String>, found: impl Into<String>) -> Self {
        ParseError::Syntax {
            line: position.line,
            column: position.column,
            expected: expected.into(),
            found: found.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("unknown type `{name}` at {position}")]
    UnknownType { name: String, position: Position },
    #[error("type `{type_name}` has no field `{field}` (at {position})")]
    UnknownField {
        type_name: String,
        field: String,
        position: Position,
    },
    #[error("type mismatch at {position}: {message}")]
    TypeMismatch { message: String, position: Position },
    #[error("tag `%{name}` used at {position} before it is defined")]
    TagUsedBeforeDefinition { name: String, position: Position },
    #[error("tag `%{name}` defined inside @fold cannot be used outside it (at {position})")]
    TagOutOfScope { name: String, position: Position },
    #[error("duplicate tag name `{name}` at {position}")]
    DuplicateTagName { name: String, position: Position },
    #[error("`{name}` at {position} is used as an {used_as} but the schema declares a {declared_as}")]
    FieldKindMismatch {
        name: String,
        used_as: &'static str,
        declared_as: &'static str,
        position: Position,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("missing argument `${0}`")]
    MissingArgument(String),
    #[error("argument `${name}` has kind {found}, expected {expected}")]
    ArgumentTypeMismatch {
        name: String,
        expected: String,
        found: String,
    },
    #[error("adapter failure at {path}: {message}")]
    AdapterFailure { path: String, message: String },
    #[error("invalid regex `{pattern}`: {message}")]
    InvalidRegex { pattern: String, message: String },
}

/// Error raised by an adapter implementation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct AdapterError(pub String);

impl AdapterError {
    pub fn new(message: impl Into<String>) -> Self {
        AdapterError(message.into())
    }
}

/// Any failure between query text and result rows.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}
