//! Lazy interpreter over a checked plan.
//!
//! Each step maps one partial result to zero or more partial results; steps
//! are chained with `flat_map`, so rows are produced on demand and adapter
//! calls happen only as far as the consumer pulls. `@fold` bodies are the
//! exception: they are evaluated eagerly for each row that reaches them.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::iter;
use std::rc::Rc;

use regex::Regex;

use crate::adapter::{Adapter, Arguments};
use crate::ast::FilterOp;
use crate::check::{Action, CheckedOperand, CheckedQuery, Step};
use crate::error::{AdapterError, ExecError};
use crate::value::Value;

/// One result row, keyed by output name.
pub type OutputRow = BTreeMap<String, Value>;

pub type RowIter<'a> = Box<dyn Iterator<Item = Result<OutputRow, ExecError>> + 'a>;

type CtxIter<'a, V> = Box<dyn Iterator<Item = Result<Context<V>, ExecError>> + 'a>;

#[derive(Debug, Clone)]
enum TagSlot {
    Unset,
    /// Defined under an `@optional` edge that had no neighbor.
    Missing,
    Value(Value),
}

#[derive(Debug, Clone)]
struct Context<V> {
    /// `None` once bound means the vertex is absent because of `@optional`.
    vertices: Vec<Option<V>>,
    tags: Vec<TagSlot>,
    outputs: OutputRow,
}

struct Env {
    arguments: Arguments,
    regexes: RefCell<HashMap<String, Regex>>,
}

/// Executes `query` against `adapter`. Argument presence and kinds are
/// validated before any adapter call.
pub fn execute_query<'a, A>(
    query: &'a CheckedQuery,
    adapter: &'a A,
    arguments: &Arguments,
) -> Result<RowIter<'a>, ExecError>
where
    A: Adapter,
    A::Vertex: 'a,
{
    for (name, expected) in query.parameters() {
        let Some(value) = arguments.get(name) else {
            return Err(ExecError::MissingArgument(name.clone()));
        };
        let ok = value.kind().is_some_and(|k| k.compatible_with(expected));
        if !ok {
            return Err(ExecError::ArgumentTypeMismatch {
                name: name.clone(),
                expected: expected.to_string(),
                found: value.kind().map_or_else(|| "null".to_string(), |k| k.to_string()),
            });
        }
    }
    let env = Rc::new(Env {
        arguments: arguments.clone(),
        regexes: RefCell::new(HashMap::new()),
    });

    let root = query.root_type();
    let starts = adapter
        .resolve_starting_vertices(root, &env.arguments)
        .map_err(|e| adapter_failure(root, e))?;
    let node_count = query.node_count;
    let tag_count = query.tag_count;
    let contexts: CtxIter<'a, A::Vertex> = Box::new(starts.map(move |v| {
        let mut vertices = vec![None; node_count];
        vertices[0] = Some(v);
        Ok(Context {
            vertices,
            tags: vec![TagSlot::Unset; tag_count],
            outputs: OutputRow::new(),
        })
    }));
    let rows = run_steps(&query.steps, contexts, adapter, env);
    Ok(Box::new(rows.map(|r| r.map(|ctx| ctx.outputs))))
}

fn adapter_failure(path: &str, error: AdapterError) -> ExecError {
    ExecError::AdapterFailure {
        path: path.to_string(),
        message: error.0,
    }
}

fn run_steps<'a, A>(
    steps: &'a [Step],
    input: CtxIter<'a, A::Vertex>,
    adapter: &'a A,
    env: Rc<Env>,
) -> CtxIter<'a, A::Vertex>
where
    A: Adapter,
    A::Vertex: 'a,
{
    steps.iter().fold(input, |acc, step| {
        let env = Rc::clone(&env);
        Box::new(acc.flat_map(move |item| -> CtxIter<'a, A::Vertex> {
            match item {
                Err(e) => Box::new(iter::once(Err(e))),
                Ok(ctx) => apply_step(step, ctx, adapter, &env),
            }
        }))
    })
}

fn apply_step<'a, A>(
    step: &'a Step,
    mut ctx: Context<A::Vertex>,
    adapter: &'a A,
    env: &Rc<Env>,
) -> CtxIter<'a, A::Vertex>
where
    A: Adapter,
    A::Vertex: 'a,
{
    match step {
        Step::Property {
            node,
            type_name,
            property,
            actions,
            path,
        } => {
            if actions.is_empty() {
                return Box::new(iter::once(Ok(ctx)));
            }
            let value = match &ctx.vertices[*node] {
                None => None,
                Some(v) => match adapter.resolve_property(v, type_name, property) {
                    Ok(value) => Some(value),
                    Err(e) => return Box::new(iter::once(Err(adapter_failure(path, e)))),
                },
            };
            match apply_actions(actions, value, &mut ctx, env) {
                Ok(true) => Box::new(iter::once(Ok(ctx))),
                Ok(false) => Box::new(iter::empty()),
                Err(e) => Box::new(iter::once(Err(e))),
            }
        }
        Step::Edge {
            from,
            to,
            type_name,
            edge,
            optional,
            path,
        } => {
            let to = *to;
            let Some(vertex) = ctx.vertices[*from].clone() else {
                // Below a missing optional vertex everything stays absent.
                return Box::new(iter::once(Ok(ctx)));
            };
            let neighbors = match adapter.resolve_neighbors(&vertex, type_name, edge) {
                Ok(n) => n,
                Err(e) => return Box::new(iter::once(Err(adapter_failure(path, e)))),
            };
            if *optional {
                let mut neighbors = neighbors.peekable();
                if neighbors.peek().is_none() {
                    ctx.vertices[to] = None;
                    return Box::new(iter::once(Ok(ctx)));
                }
                Box::new(neighbors.map(move |n| {
                    let mut next = ctx.clone();
                    next.vertices[to] = Some(n);
                    Ok(next)
                }))
            } else {
                Box::new(neighbors.map(move |n| {
                    let mut next = ctx.clone();
                    next.vertices[to] = Some(n);
                    Ok(next)
                }))
            }
        }
        Step::Coerce { node, from, to, path } => {
            let Some(vertex) = &ctx.vertices[*node] else {
                return Box::new(iter::once(Ok(ctx)));
            };
            match adapter.resolve_coercion(vertex, from, to) {
                Ok(true) => Box::new(iter::once(Ok(ctx))),
                Ok(false) => Box::new(iter::empty()),
                Err(e) => Box::new(iter::once(Err(adapter_failure(path, e)))),
            }
        }
        Step::Fold {
            from,
            to,
            type_name,
            edge,
            body,
            outputs,
            count_actions,
            path,
        } => {
            let count = match ctx.vertices[*from].clone() {
                None => {
                    for name in outputs {
                        ctx.outputs.insert(name.clone(), Value::Null);
                    }
                    None
                }
                Some(vertex) => {
                    let neighbors = match adapter.resolve_neighbors(&vertex, type_name, edge) {
                        Ok(n) => n,
                        Err(e) => return Box::new(iter::once(Err(adapter_failure(path, e)))),
                    };
                    let to = *to;
                    let base = ctx.clone();
                    let seeds: CtxIter<'a, A::Vertex> = Box::new(neighbors.map(move |n| {
                        let mut sub = base.clone();
                        sub.vertices[to] = Some(n);
                        Ok(sub)
                    }));
                    let rows: Result<Vec<_>, _> = run_steps(body, seeds, adapter, Rc::clone(env)).collect();
                    let rows = match rows {
                        Ok(rows) => rows,
                        Err(e) => return Box::new(iter::once(Err(e))),
                    };
                    for name in outputs {
                        let list = rows
                            .iter()
                            .map(|r| r.outputs.get(name).cloned().unwrap_or(Value::Null))
                            .collect();
                        ctx.outputs.insert(name.clone(), Value::List(list));
                    }
                    Some(Value::Int(rows.len() as i64))
                }
            };
            match apply_actions(count_actions, count, &mut ctx, env) {
                Ok(true) => Box::new(iter::once(Ok(ctx))),
                Ok(false) => Box::new(iter::empty()),
                Err(e) => Box::new(iter::once(Err(e))),
            }
        }
    }
}

/// Applies filters, tags and outputs for one value. `None` means the value's
/// vertex is absent: filters pass, tags record the absence, outputs are null.
fn apply_actions<V>(
    actions: &[Action],
    value: Option<Value>,
    ctx: &mut Context<V>,
    env: &Env,
) -> Result<bool, ExecError> {
    for action in actions {
        match action {
            Action::Filter { op, operand } => {
                let Some(left) = &value else { continue };
                let right = match operand {
                    CheckedOperand::None => None,
                    CheckedOperand::Literal(v) => Some(v),
                    CheckedOperand::Parameter(name) => Some(&env.arguments[name]),
                    CheckedOperand::Tag(id) => match &ctx.tags[*id] {
                        TagSlot::Value(v) => Some(v),
                        TagSlot::Missing => return Ok(false),
                        TagSlot::Unset => unreachable!("tags are bound before use"),
                    },
                };
                if !evaluate_filter(*op, left, right, env)? {
                    return Ok(false);
                }
            }
            Action::Tag(id) => {
                ctx.tags[*id] = match &value {
                    Some(v) => TagSlot::Value(v.clone()),
                    None => TagSlot::Missing,
                };
            }
            Action::Output(name) => {
                ctx.outputs.insert(name.clone(), value.clone().unwrap_or(Value::Null));
            }
        }
    }
    Ok(true)
}

fn evaluate_filter(op: FilterOp, left: &Value, right: Option<&Value>, env: &Env) -> Result<bool, ExecError> {
    let right = right.unwrap_or(&Value::Null);
    Ok(match op {
        FilterOp::Equals => left == right,
        FilterOp::NotEquals => left != right,
        FilterOp::LessThan => left.partial_order(right).is_some_and(|o| o.is_lt()),
        FilterOp::LessOrEqual => left.partial_order(right).is_some_and(|o| o.is_le()),
        FilterOp::GreaterThan => left.partial_order(right).is_some_and(|o| o.is_gt()),
        FilterOp::GreaterOrEqual => left.partial_order(right).is_some_and(|o| o.is_ge()),
        FilterOp::OneOf => right.as_list().is_some_and(|items| items.contains(left)),
        FilterOp::Contains => left.as_list().is_some_and(|items| items.contains(right)),
        FilterOp::NotContains => left.as_list().is_some_and(|items| !items.contains(right)),
        FilterOp::IsNull => left.is_null(),
        FilterOp::IsNotNull => !left.is_null(),
        FilterOp::Regex => match (left.as_str(), right.as_str()) {
            (Some(text), Some(pattern)) => {
                let mut cache = env.regexes.borrow_mut();
                if !cache.contains_key(pattern) {
                    let re = Regex::new(pattern).map_err(|e| ExecError::InvalidRegex {
                        pattern: pattern.to_string(),
                        message: e.to_string(),
                    })?;
                    cache.insert(pattern.to_string(), re);
                }
                cache[pattern].is_match(text)
            }
            _ => false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapter::VertexIter;
    use crate::check::check_query;
    use crate::parser::parse_query;
    use crate::schema::Schema;
    use std::cell::Cell;

    const SCHEMA: &str = "
root Root
type Root
  edge number: [Number]
type Number
  property value: Int
  property name: String
  property label: String?
  edge divisor: [Number]
  edge successor: Number?
";

    /// Numbers 1..=n; divisors are the proper divisors, successor is n+1 when <= n.
    struct Numbers {
        n: i64,
        property_calls: Cell<usize>,
        fail_on: Option<i64>,
    }

    impl Numbers {
        fn new(n: i64) -> Self {
            Numbers {
                n,
                property_calls: Cell::new(0),
                fail_on: None,
            }
        }
    }

    impl Adapter for Numbers {
        type Vertex = i64;

        fn resolve_starting_vertices(&self, _: &str, _: &Arguments) -> Result<VertexIter<'_, i64>, AdapterError> {
            // Vertex 0 stands for the root.
            Ok(Box::new(iter::once(0)))
        }

        fn resolve_property(&self, v: &i64, _: &str, property: &str) -> Result<Value, AdapterError> {
            self.property_calls.set(self.property_calls.get() + 1);
            if self.fail_on == Some(*v) {
                return Err(AdapterError::new("boom"));
            }
            Ok(match property {
                "value" => Value::Int(*v),
                "name" => Value::text(format!("n{v}")),
                "label" => {
                    if v % 2 == 0 {
                        Value::text("even")
                    } else {
                        Value::Null
                    }
                }
                _ => unreachable!(),
            })
        }

        fn resolve_neighbors(&self, v: &i64, _: &str, edge: &str) -> Result<VertexIter<'_, i64>, AdapterError> {
            let v = *v;
            Ok(match edge {
                "number" => Box::new(1..=self.n),
                "divisor" => Box::new((1..v).filter(move |d| v % d == 0)),
                "successor" => Box::new((v + 1..=self.n).take(1)),
                _ => unreachable!(),
            })
        }

        fn resolve_coercion(&self, _: &i64, _: &str, _: &str) -> Result<bool, AdapterError> {
            Ok(true)
        }
    }

    fn run(adapter: &Numbers, text: &str, args: Arguments) -> Result<Vec<OutputRow>, ExecError> {
        let schema = Schema::parse(SCHEMA).unwrap();
        let q = check_query(&parse_query(text).unwrap(), &schema).unwrap();
        let rows = execute_query(&q, adapter, &args)?.collect();
        rows
    }

    #[test]
    fn filters_and_outputs() {
        let rows = run(
            &Numbers::new(10),
            r#"{ Root { number { value @filter(op: ">", value: ["$min"]) @output } } }"#,
            [("min".to_string(), Value::Int(7))].into(),
        )
        .unwrap();
        let values: Vec<_> = rows.iter().map(|r| r["value"].clone()).collect();
        assert_eq!(values, vec![Value::Int(8), Value::Int(9), Value::Int(10)]);
    }

    #[test]
    fn fold_count_and_lists() {
        let rows = run(
            &Numbers::new(6),
            r#"{ Root { number { value @output
                divisor @fold @transform(op: "count") @filter(op: "=", value: ["$one"]) @output(name: "k") {
                    value @output(name: "divs")
                } } } }"#,
            [("one".to_string(), Value::Int(1))].into(),
        )
        .unwrap();
        // Primes have exactly one proper divisor.
        let primes: Vec<_> = rows.iter().map(|r| r["value"].as_int().unwrap()).collect();
        assert_eq!(primes, vec![2, 3, 5]);
        assert_eq!(rows[0]["divs"], Value::List(vec![Value::Int(1)]));
        assert_eq!(rows[0]["k"], Value::Int(1));
    }

    #[test]
    fn optional_edge_yields_nulls() {
        let rows = run(
            &Numbers::new(3),
            r#"{ Root { number { value @output successor @optional { value @output(name: "next") @filter(op: "<", value: ["$x"]) } } } }"#,
            [("x".to_string(), Value::Int(0))].into(),
        )
        .unwrap();
        // The filter removes every present successor but keeps the absent one.
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["value"], Value::Int(3));
        assert_eq!(rows[0]["next"], Value::Null);
    }

    #[test]
    fn missing_tag_discards_row() {
        let rows = run(
            &Numbers::new(3),
            r#"{ Root { number { successor @optional { value @tag(name: "s") } value @output @filter(op: "<", value: ["%s"]) } } }"#,
            Arguments::new(),
        )
        .unwrap();
        let values: Vec<_> = rows.iter().map(|r| r["value"].as_int().unwrap()).collect();
        assert_eq!(values, vec![1, 2]);
    }

    #[test]
    fn nullable_property_filters() {
        let rows = run(
            &Numbers::new(4),
            r#"{ Root { number { label @filter(op: "is_null") value @output } } }"#,
            Arguments::new(),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        let rows = run(
            &Numbers::new(4),
            r#"{ Root { number { name @filter(op: "regex", value: ["$re"]) @output } } }"#,
            [("re".to_string(), Value::text("^n[13]$"))].into(),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn arguments_are_validated_up_front() {
        let a = Numbers::new(3);
        let q = r#"{ Root { number { value @filter(op: "=", value: ["$v"]) @output } } }"#;
        assert_eq!(
            run(&a, q, Arguments::new()).unwrap_err(),
            ExecError::MissingArgument("v".into())
        );
        let err = run(&a, q, [("v".to_string(), Value::text("x"))].into()).unwrap_err();
        assert!(matches!(err, ExecError::ArgumentTypeMismatch { .. }));
        assert_eq!(a.property_calls.get(), 0);
    }

    #[test]
    fn invalid_regex_is_reported() {
        let err = run(
            &Numbers::new(3),
            r#"{ Root { number { name @filter(op: "regex", value: ["$re"]) @output } } }"#,
            [("re".to_string(), Value::text("("))].into(),
        )
        .unwrap_err();
        assert!(matches!(err, ExecError::InvalidRegex { .. }));
    }

    #[test]
    fn adapter_errors_carry_a_path() {
        let mut a = Numbers::new(5);
        a.fail_on = Some(2);
        let err = run(&a, r#"{ Root { number { value @output } } }"#, Arguments::new()).unwrap_err();
        assert_eq!(
            err,
            ExecError::AdapterFailure {
                path: "Root.number.value".into(),
                message: "boom".into()
            }
        );
    }

    #[test]
    fn rows_are_pulled_lazily() {
        let a = Numbers::new(1000);
        let schema = Schema::parse(SCHEMA).unwrap();
        let q = check_query(
            &parse_query(r#"{ Root { number { value @output } } }"#).unwrap(),
            &schema,
        )
        .unwrap();
        let first: Vec<_> = execute_query(&q, &a, &Arguments::new()).unwrap().take(3).collect();
        assert_eq!(first.len(), 3);
        assert!(a.property_calls.get() <= 3);
    }
}
