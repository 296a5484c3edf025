//! Syntax tree for query documents.

use std::collections::BTreeSet;
use std::fmt;

use crate::value::Value;

/// 1-based line and column of a token in the query text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryDocument {
    pub root_type: String,
    pub root_position: Position,
    pub selections: Vec<Selection>,
    /// Every `$name` referenced anywhere in the document.
    pub parameters: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionKind {
    Property,
    Edge,
    Coercion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub kind: SelectionKind,
    /// Property or edge name; for coercions, the target type name.
    pub name: String,
    /// Edge alias (`alias: edge { .. }`), which also prefixes output names
    /// declared beneath the edge.
    pub alias: Option<String>,
    pub directives: Vec<Directive>,
    pub children: Vec<Selection>,
    pub position: Position,
}

impl Selection {
    pub fn coercion_target(&self) -> Option<&str> {
        (self.kind == SelectionKind::Coercion).then_some(self.name.as_str())
    }

    pub fn is_folded(&self) -> bool {
        self.directives.iter().any(|d| matches!(d.kind, DirectiveKind::Fold))
    }

    pub fn is_optional(&self) -> bool {
        self.directives
            .iter()
            .any(|d| matches!(d.kind, DirectiveKind::Optional))
    }

    pub fn transform(&self) -> Option<TransformOp> {
        self.directives.iter().find_map(|d| match d.kind {
            DirectiveKind::Transform(op) => Some(op),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Directive {
    pub kind: DirectiveKind,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectiveKind {
    Filter {
        op: FilterOp,
        operand: Option<Operand>,
    },
    /// `@tag` or `@tag(name: "..")`; the resolved name is filled in by the parser.
    Tag {
        name: String,
    },
    /// `@output` or `@output(name: "..")`; the resolved name includes alias prefixes.
    Output {
        name: String,
    },
    Fold,
    Transform(TransformOp),
    Optional,
}

impl DirectiveKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            DirectiveKind::Filter { .. } => "filter",
            DirectiveKind::Tag { .. } => "tag",
            DirectiveKind::Output { .. } => "output",
            DirectiveKind::Fold => "fold",
            DirectiveKind::Transform(_) => "transform",
            DirectiveKind::Optional => "optional",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterOp {
    Equals,
    NotEquals,
    GreaterThan,
    GreaterOrEqual,
    LessThan,
    LessOrEqual,
    OneOf,
    Contains,
    NotContains,
    IsNull,
    IsNotNull,
    Regex,
}

impl FilterOp {
    pub const ALL: [FilterOp; 12] = [
        FilterOp::Equals,
        FilterOp::NotEquals,
        FilterOp::GreaterThan,
        FilterOp::GreaterOrEqual,
        FilterOp::LessThan,
        FilterOp::LessOrEqual,
        FilterOp::OneOf,
        FilterOp::Contains,
        FilterOp::NotContains,
        FilterOp::IsNull,
        FilterOp::IsNotNull,
        FilterOp::Regex,
    ];

    pub fn parse(symbol: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.symbol() == symbol)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            FilterOp::Equals => "=",
            FilterOp::NotEquals => "!=",
            FilterOp::GreaterThan => ">",
            FilterOp::GreaterOrEqual => ">=",
            FilterOp::LessThan => "<",
            FilterOp::LessOrEqual => "<=",
            FilterOp::OneOf => "one_of",
            FilterOp::Contains => "contains",
            FilterOp::NotContains => "not_contains",
            FilterOp::IsNull => "is_null",
            FilterOp::IsNotNull => "is_not_null",
            FilterOp::Regex => "regex",
        }
    }

    pub fn takes_operand(self) -> bool {
        !matches!(self, FilterOp::IsNull | FilterOp::IsNotNull)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformOp {
    Count,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Literal(Value),
    Parameter(String),
    Tag(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Literal(v) => write!(f, "{v}"),
            Operand::Parameter(p) => write!(f, "${p}"),
            Operand::Tag(t) => write!(f, "%{t}"),
        }
    }
}
