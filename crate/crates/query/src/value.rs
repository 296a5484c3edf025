use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A scalar (or list of scalars) flowing through a query: property values,
/// arguments, tagged values and outputs all share this representation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Text(String),
    List(Vec<Value>),
}

impl Value {
    pub fn text(value: impl Into<String>) -> Self {
        Value::Text(value.into())
    }

    pub fn text_list<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Value::List(items.into_iter().map(|s| Value::Text(s.into())).collect())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    /// Kind of this value, or `None` for null (which fits any nullable kind).
    pub fn kind(&self) -> Option<ValueKind> {
        match self {
            Value::Null => None,
            Value::Bool(_) => Some(ValueKind::Boolean),
            Value::Int(_) => Some(ValueKind::Int),
            Value::Text(_) => Some(ValueKind::Text),
            Value::List(items) => {
                let inner = items.iter().find_map(Value::kind);
                Some(ValueKind::List(Box::new(inner.unwrap_or(ValueKind::Any))))
            }
        }
    }

    /// Ordering used by the `<`, `<=`, `>`, `>=` filters. Only values of the
    /// same non-null scalar kind are comparable.
    pub fn partial_order(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Text(s) => f.write_str(s),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl From<&str> for Value {
    fn from(value: &str) -> Self {
        Value::Text(value.to_string())
    }
}

impl From<String> for Value {
    fn from(value: String) -> Self {
        Value::Text(value)
    }
}

impl From<i64> for Value {
    fn from(value: i64) -> Self {
        Value::Int(value)
    }
}

impl From<bool> for Value {
    fn from(value: bool) -> Self {
        Value::Bool(value)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(value: Option<T>) -> Self {
        value.map_or(Value::Null, Into::into)
    }
}

/// Static kind of a property, argument or tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Boolean,
    Int,
    Text,
    List(Box<ValueKind>),
    /// Element kind of an empty list literal or argument.
    Any,
}

impl ValueKind {
    /// Whether a value of kind `self` may be used where `other` is expected.
    pub fn compatible_with(&self, other: &ValueKind) -> bool {
        match (self, other) {
            (ValueKind::Any, _) | (_, ValueKind::Any) => true,
            (ValueKind::List(a), ValueKind::List(b)) => a.compatible_with(b),
            (a, b) => a == b,
        }
    }

    pub fn element(&self) -> Option<&ValueKind> {
        match self {
            ValueKind::List(inner) => Some(inner),
            _ => None,
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Boolean => f.write_str("Boolean"),
            ValueKind::Int => f.write_str("Int"),
            ValueKind::Text => f.write_str("String"),
            ValueKind::List(inner) => write!(f, "[{inner}]"),
            ValueKind::Any => f.write_str("_"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_kind_uses_first_non_null_element() {
        let v = Value::List(vec![Value::Null, Value::text("a")]);
        assert_eq!(v.kind(), Some(ValueKind::List(Box::new(ValueKind::Text))));
        let empty = Value::List(vec![]);
        assert!(empty
            .kind()
            .unwrap()
            .compatible_with(&ValueKind::List(Box::new(ValueKind::Int))));
    }

    #[test]
    fn json_shape_is_untagged() {
        let v = Value::List(vec![Value::text("x"), Value::Int(3), Value::Null, Value::Bool(true)]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["x",3,null,true]"#);
        let back: Value = serde_json::from_str(r#"["x",3,null,true]"#).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn ordering_only_within_kind() {
        assert_eq!(Value::Int(1).partial_order(&Value::Int(2)), Some(Ordering::Less));
        assert_eq!(Value::Int(1).partial_order(&Value::text("1")), None);
        assert_eq!(Value::Null.partial_order(&Value::Null), None);
    }
}
