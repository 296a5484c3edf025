//! A deliberately naive interpreter: walks the syntax tree recursively and
//! materializes every intermediate result. It shares the parser and the
//! schema checker with the real engine but none of its execution code, so
//! the two can be compared row for row.

use std::collections::BTreeMap;

use breakcheck_query::ast::{DirectiveKind, Selection, SelectionKind};
use breakcheck_query::{check_query, parse_query, Adapter, Arguments, FilterOp, Operand, OutputRow, Schema, Value};
use regex::Regex;

#[derive(Debug, Clone)]
enum Tag {
    Missing,
    Value(Value),
}

#[derive(Debug, Clone, Default)]
struct State {
    tags: BTreeMap<String, Tag>,
    outputs: OutputRow,
}

struct Interp<'a, A: Adapter> {
    schema: &'a Schema,
    adapter: &'a A,
    args: &'a Arguments,
}

/// Runs `text` with the reference semantics and returns every row.
pub fn reference_run<A: Adapter>(
    text: &str,
    schema: &Schema,
    adapter: &A,
    args: &Arguments,
) -> Result<Vec<OutputRow>, String> {
    let doc = parse_query(text).map_err(|e| e.to_string())?;
    check_query(&doc, schema).map_err(|e| e.to_string())?;
    if let Some(p) = doc.parameters.iter().find(|p| !args.contains_key(*p)) {
        return Err(format!("missing argument `{p}`"));
    }
    let interp = Interp { schema, adapter, args };
    let starts: Vec<A::Vertex> = adapter
        .resolve_starting_vertices(&doc.root_type, args)
        .map_err(|e| e.0)?
        .collect();
    let mut rows = Vec::new();
    for v in starts {
        for state in interp.block(Some(&v), &doc.root_type, &doc.selections, State::default())? {
            rows.push(state.outputs);
        }
    }
    Ok(rows)
}

fn fold_outputs(selections: &[Selection], out: &mut Vec<String>) {
    for s in selections {
        for d in &s.directives {
            if let DirectiveKind::Output { name } = &d.kind {
                out.push(name.clone());
            }
        }
        fold_outputs(&s.children, out);
    }
}

impl<A: Adapter> Interp<'_, A> {
    fn block(
        &self,
        vertex: Option<&A::Vertex>,
        ty: &str,
        selections: &[Selection],
        state: State,
    ) -> Result<Vec<State>, String> {
        let mut ty = ty.to_string();
        let mut states = vec![state];
        for sel in selections {
            let mut next = Vec::new();
            match sel.kind {
                SelectionKind::Coercion => {
                    if let Some(v) = vertex {
                        if !self.adapter.resolve_coercion(v, &ty, &sel.name).map_err(|e| e.0)? {
                            return Ok(Vec::new());
                        }
                    }
                    ty = sel.name.clone();
                    for s in states {
                        next.extend(self.block(vertex, &ty, &sel.children, s)?);
                    }
                }
                SelectionKind::Property => {
                    let value = match vertex {
                        Some(v) if !sel.directives.is_empty() => {
                            Some(self.adapter.resolve_property(v, &ty, &sel.name).map_err(|e| e.0)?)
                        }
                        _ => None,
                    };
                    for s in states {
                        if let Some(s) = self.directives(sel, value.clone(), s)? {
                            next.push(s);
                        }
                    }
                }
                SelectionKind::Edge => {
                    let target = self
                        .schema
                        .edge(&ty, &sel.name)
                        .ok_or_else(|| format!("no edge {ty}.{}", sel.name))?
                        .target
                        .clone();
                    let neighbors: Option<Vec<A::Vertex>> = match vertex {
                        Some(v) => Some(
                            self.adapter
                                .resolve_neighbors(v, &ty, &sel.name)
                                .map_err(|e| e.0)?
                                .collect(),
                        ),
                        None => None,
                    };
                    for s in states {
                        if sel.is_folded() {
                            next.extend(self.fold(sel, &target, neighbors.as_deref(), s)?);
                        } else {
                            match &neighbors {
                                None => next.extend(self.block(None, &target, &sel.children, s)?),
                                Some(ns) if ns.is_empty() && sel.is_optional() => {
                                    next.extend(self.block(None, &target, &sel.children, s)?)
                                }
                                Some(ns) => {
                                    for n in ns {
                                        next.extend(self.block(Some(n), &target, &sel.children, s.clone())?);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            states = next;
        }
        Ok(states)
    }

    fn fold(
        &self,
        sel: &Selection,
        target: &str,
        neighbors: Option<&[A::Vertex]>,
        mut state: State,
    ) -> Result<Option<State>, String> {
        let mut names = Vec::new();
        fold_outputs(&sel.children, &mut names);
        let count = match neighbors {
            None => {
                for name in names {
                    state.outputs.insert(name, Value::Null);
                }
                None
            }
            Some(ns) => {
                let mut rows = Vec::new();
                for n in ns {
                    rows.extend(self.block(Some(n), target, &sel.children, state.clone())?);
                }
                for name in names {
                    let list = rows
                        .iter()
                        .map(|r| r.outputs.get(&name).cloned().unwrap_or(Value::Null))
                        .collect();
                    state.outputs.insert(name, Value::List(list));
                }
                Some(Value::Int(rows.len() as i64))
            }
        };
        self.directives(sel, count, state)
    }

    /// `None` for `value` means the vertex is absent.
    fn directives(&self, sel: &Selection, value: Option<Value>, mut state: State) -> Result<Option<State>, String> {
        for d in &sel.directives {
            match &d.kind {
                DirectiveKind::Filter { op, operand } => {
                    let Some(left) = &value else { continue };
                    let right = match operand {
                        None => Value::Null,
                        Some(Operand::Literal(v)) => v.clone(),
                        Some(Operand::Parameter(p)) => self.args[p].clone(),
                        Some(Operand::Tag(t)) => match state.tags.get(t) {
                            Some(Tag::Value(v)) => v.clone(),
                            Some(Tag::Missing) => return Ok(None),
                            None => return Err(format!("tag `{t}` read before it was set")),
                        },
                    };
                    if !holds(*op, left, &right)? {
                        return Ok(None);
                    }
                }
                DirectiveKind::Tag { name } => {
                    let tag = value.clone().map_or(Tag::Missing, Tag::Value);
                    state.tags.insert(name.clone(), tag);
                }
                DirectiveKind::Output { name } => {
                    state.outputs.insert(name.clone(), value.clone().unwrap_or(Value::Null));
                }
                DirectiveKind::Fold | DirectiveKind::Transform(_) | DirectiveKind::Optional => {}
            }
        }
        Ok(Some(state))
    }
}

fn holds(op: FilterOp, left: &Value, right: &Value) -> Result<bool, String> {
    use std::cmp::Ordering::*;
    let order = match (left, right) {
        (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
        (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
        _ => None,
    };
    let list_has = |list: &Value, x: &Value| match list {
        Value::List(items) => Some(items.iter().any(|i| i == x)),
        _ => None,
    };
    Ok(match op {
        FilterOp::Equals => left == right,
        FilterOp::NotEquals => left != right,
        FilterOp::LessThan => order == Some(Less),
        FilterOp::LessOrEqual => matches!(order, Some(Less | Equal)),
        FilterOp::GreaterThan => order == Some(Greater),
        FilterOp::GreaterOrEqual => matches!(order, Some(Greater | Equal)),
        FilterOp::OneOf => list_has(right, left) == Some(true),
        FilterOp::Contains => list_has(left, right) == Some(true),
        FilterOp::NotContains => list_has(left, right) == Some(false),
        FilterOp::IsNull => *left == Value::Null,
        FilterOp::IsNotNull => *left != Value::Null,
        FilterOp::Regex => match (left, right) {
            (Value::Text(text), Value::Text(pattern)) => Regex::new(pattern).map_err(|e| e.to_string())?.is_match(text),
            _ => false,
        },
    })
}

/// Rows as a sorted list of their debug renderings, for multiset equality.
pub fn row_multiset(rows: &[OutputRow]) -> Vec<String> {
    let mut out: Vec<String> = rows.iter().map(|r| format!("{r:?}")).collect();
    out.sort();
    out
}
