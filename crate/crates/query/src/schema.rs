//! Schema: vertex types, their properties and edges, and the subtyping
//! relation between types.
//!
//! Schemas are written in a small line-oriented listing format:
//!
//! ```text
//! root CrateDiff
//!
//! type Item
//!   property name: String
//!   property repr_int: String?
//!   edge span: Span?
//!   edge attribute: [Attribute]
//!
//! type Enum : Item
//!   edge variant: [Variant]
//! ```
//!
//! Property kinds are `String`, `Int`, `Boolean` or `[String]`-style lists;
//! a trailing `?` marks the property nullable. Edge targets are written `T`
//! (exactly one), `T?` (at most one) or `[T]` (any number).

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::value::ValueKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema line {line}: {message}")]
pub struct SchemaError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyDef {
    pub kind: ValueKind,
    pub nullable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Multiplicity {
    One,
    Optional,
    Many,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeDef {
    pub target: String,
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeDef {
    pub parents: Vec<String>,
    pub properties: BTreeMap<String, PropertyDef>,
    pub edges: BTreeMap<String, EdgeDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    roots: BTreeSet<String>,
    types: BTreeMap<String, TypeDef>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        let mut roots = BTreeSet::new();
        let mut types: BTreeMap<String, TypeDef> = BTreeMap::new();
        let mut declared_at: BTreeMap<String, usize> = BTreeMap::new();
        let mut current: Option<String> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| SchemaError { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match keyword {
                "root" => {
                    if !is_name(rest) {
                        return Err(err(format!("invalid root type name `{rest}`")));
                    }
                    roots.insert(rest.to_string());
                }
                "type" => {
                    let (name, parents) = match rest.split_once(':') {
                        Some((n, p)) => (n.trim(), p.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>()),
                        None => (rest, Vec::new()),
                    };
                    if !is_name(name) || parents.iter().any(|p| !is_name(p)) {
                        return Err(err(format!("invalid type declaration `{rest}`")));
                    }
                    if types.contains_key(name) {
                        return Err(err(format!("type `{name}` declared twice")));
                    }
                    declared_at.insert(name.to_string(), line_no);
                    types.insert(
                        name.to_string(),
                        TypeDef {
                            parents,
                            ..TypeDef::default()
                        },
                    );
                    current = Some(name.to_string());
                }
                "property" | "edge" => {
                    let Some(type_name) = current.as_ref() else {
                        return Err(err(format!("`{keyword}` outside of a type block")));
                    };
                    let (field, spec) = rest
                        .split_once(':')
                        .ok_or_else(|| err(format!("expected `name: kind`, found `{rest}`")))?;
                    let field = field.trim();
                    let spec = spec.trim();
                    if !is_name(field) {
                        return Err(err(format!("invalid field name `{field}`")));
                    }
                    let def = types.get_mut(type_name).expect("current type exists");
                    if def.properties.contains_key(field) || def.edges.contains_key(field) {
                        return Err(err(format!("field `{field}` declared twice on `{type_name}`")));
                    }
                    if keyword == "property" {
                        let (spec, nullable) = match spec.strip_suffix('?') {
                            Some(s) => (s, true),
                            None => (spec, false),
                        };
                        let kind = parse_kind(spec).ok_or_else(|| err(format!("unknown property kind `{spec}`")))?;
                        def.properties.insert(field.to_string(), PropertyDef { kind, nullable });
                    } else {
                        let (target, multiplicity) =
                            if let Some(inner) = spec.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                                (inner, Multiplicity::Many)
                            } else if let Some(inner) = spec.strip_suffix('?') {
                                (inner, Multiplicity::Optional)
                            } else {
                                (spec, Multiplicity::One)
                            };
                        if !is_name(target) {
                            return Err(err(format!("invalid edge target `{spec}`")));
                        }
                        def.edges.insert(
                            field.to_string(),
                            EdgeDef {
                                target: target.to_string(),
                                multiplicity,
                            },
                        );
                    }
                }
                other => return Err(err(format!("unknown keyword `{other}`"))),
            }
        }

        let schema = Schema { roots, types };
        schema.validate(&declared_at)?;
        Ok(schema)
    }

    fn validate(&self, declared_at: &BTreeMap<String, usize>) -> Result<(), SchemaError> {
        for root in &self.roots {
            if !self.types.contains_key(root) {
                return Err(SchemaError {
                    line: 0,
                    message: format!("root type `{root}` is not declared"),
                });
            }
        }
        for (name, def) in &self.types {
            let line = declared_at.get(name).copied().unwrap_or(0);
            for parent in &def.parents {
                if !self.types.contains_key(parent) {
                    return Err(SchemaError {
                        line,
                        message: format!("type `{name}` extends unknown type `{parent}`"),
                    });
                }
            }
            for (edge, e) in &def.edges {
                if !self.types.contains_key(&e.target) {
                    return Err(SchemaError {
                        line,
                        message: format!("edge `{name}.{edge}` targets unknown type `{}`", e.target),
                    });
                }
            }
        }
        // Subtyping must be acyclic.
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        fn visit<'s>(schema: &'s Schema, name: &'s str, state: &mut BTreeMap<&'s str, u8>) -> Result<(), String> {
            match state.get(name) {
                Some(1) => return Err(format!("subtyping cycle through `{name}`")),
                Some(2) => return Ok(()),
                _ => {}
            }
            state.insert(name, 1);
            for parent in &schema.types[name].parents {
                visit(schema, parent, state)?;
            }
            state.insert(name, 2);
            Ok(())
        }
        for name in self.types.keys() {
            visit(self, name, &mut state).map_err(|message| SchemaError {
                line: declared_at.get(name).copied().unwrap_or(0),
                message,
            })?;
        }
        // A field redeclared by a subtype must agree with the inherited one.
        for name in self.types.keys() {
            let mut props: BTreeMap<&str, &PropertyDef> = BTreeMap::new();
            let mut edges: BTreeMap<&str, &EdgeDef> = BTreeMap::new();
            for ancestor in self.ancestors(name) {
                let def = &self.types[ancestor];
                for (p, d) in &def.properties {
                    if let Some(prev) = props.insert(p, d) {
                        if prev != d {
                            return Err(SchemaError {
                                line: declared_at.get(name).copied().unwrap_or(0),
                                message: format!("property `{p}` has conflicting kinds in `{name}`"),
                            });
                        }
                    }
                }
                for (e, d) in &def.edges {
                    if let Some(prev) = edges.insert(e, d) {
                        if prev != d {
                            return Err(SchemaError {
                                line: declared_at.get(name).copied().unwrap_or(0),
                                message: format!("edge `{e}` has conflicting targets in `{name}`"),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn roots(&self) -> impl Iterator<Item = &str> {
        self.roots.iter().map(String::as_str)
    }

    pub fn is_root(&self, name: &str) -> bool {
        self.roots.contains(name)
    }

    pub fn type_names(&self) -> impl Iterator<Item = &str> {
        self.types.keys().map(String::as_str)
    }

    pub fn has_type(&self, name: &str) -> bool {
        self.types.contains_key(name)
    }

    pub fn type_def(&self, name: &str) -> Option<&TypeDef> {
        self.types.get(name)
    }

    /// The type itself followed by every transitive supertype, each once.
    pub fn ancestors<'s>(&'s self, name: &'s str) -> Vec<&'s str> {
        let mut out: Vec<&str> = Vec::new();
        let mut stack = vec![name];
        while let Some(n) = stack.pop() {
            if out.contains(&n) {
                continue;
            }
            out.push(n);
            if let Some(def) = self.types.get(n) {
                for p in def.parents.iter().rev() {
                    stack.push(p);
                }
            }
        }
        out
    }

    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        self.ancestors(sub).contains(&sup)
    }

    /// Every type that is a (non-strict) subtype of `name`.
    pub fn subtypes<'s>(&'s self, name: &str) -> Vec<&'s str> {
        self.types
            .keys()
            .filter(|t| self.is_subtype(t, name))
            .map(String::as_str)
            .collect()
    }

    pub fn property(&self, type_name: &str, property: &str) -> Option<&PropertyDef> {
        self.ancestors(type_name)
            .into_iter()
            .find_map(|t| self.types.get(t)?.properties.get(property))
    }

    pub fn edge(&self, type_name: &str, edge: &str) -> Option<&EdgeDef> {
        self.ancestors(type_name)
            .into_iter()
            .find_map(|t| self.types.get(t)?.edges.get(edge))
    }

    /// All properties visible on a type, including inherited ones.
    pub fn properties(&self, type_name: &str) -> BTreeMap<&str, &PropertyDef> {
        let mut out = BTreeMap::new();
        for t in self.ancestors(type_name) {
            if let Some(def) = self.types.get(t) {
                for (k, v) in &def.properties {
                    out.entry(k.as_str()).or_insert(v);
                }
            }
        }
        out
    }

    /// All edges visible on a type, including inherited ones.
    pub fn edges(&self, type_name: &str) -> BTreeMap<&str, &EdgeDef> {
        let mut out = BTreeMap::new();
        for t in self.ancestors(type_name) {
            if let Some(def) = self.types.get(t) {
                for (k, v) in &def.edges {
                    out.entry(k.as_str()).or_insert(v);
                }
            }
        }
        out
    }
}

fn parse_kind(spec: &str) -> Option<ValueKind> {
    if let Some(inner) = spec.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
        return parse_kind(inner.trim()).map(|k| ValueKind::List(Box::new(k)));
    }
    match spec {
        "String" => Some(ValueKind::Text),
        "Int" => Some(ValueKind::Int),
        "Boolean" => Some(ValueKind::Boolean),
        _ => None,
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c == '_' || c.is_ascii_alphabetic())
        && chars.all(|c| c == '_' || c.is_ascii_alphanumeric())
}
