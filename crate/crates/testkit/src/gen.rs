//! Random queries over [`GRAPH_SCHEMA`](crate::graph::GRAPH_SCHEMA).

use std::fmt::Write as _;

use breakcheck_query::{Arguments, Value};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{NAMES, WORDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Text,
    NullableText,
    TextList,
}

#[derive(Debug, Clone)]
pub struct GeneratedQuery {
    pub text: String,
    pub arguments: Arguments,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    arguments: Arguments,
    /// Tags visible at the current point, innermost last.
    tags: Vec<(String, Kind)>,
    next_id: usize,
}

const NODE_PROPERTIES: [(&str, Kind); 5] = [
    ("id", Kind::Int),
    ("name", Kind::Text),
    ("label", Kind::NullableText),
    ("weight", Kind::Int),
    ("words", Kind::TextList),
];

/// A random query with at most `max_depth` levels of edges below `node`.
pub fn random_query<R: Rng>(rng: &mut R, max_depth: usize) -> GeneratedQuery {
    let mut g = Gen {
        rng,
        arguments: Arguments::new(),
        tags: Vec::new(),
        next_id: 0,
    };
    let mut body = String::from("id @output(name: \"root_id\")\n");
    body.push_str(&g.block(max_depth, false));
    GeneratedQuery {
        text: format!("{{\n  Root {{\n    node {{\n{body}    }}\n  }}\n}}\n"),
        arguments: g.arguments,
    }
}

impl<R: Rng> Gen<'_, R> {
    fn fresh(&mut self, prefix: &str) -> String {
        self.next_id += 1;
        format!("{prefix}{}", self.next_id)
    }

    fn param(&mut self, value: Value) -> String {
        let name = self.fresh("p");
        self.arguments.insert(name.clone(), value);
        format!("\"${name}\"")
    }

    fn int_operand(&mut self) -> String {
        let tags: Vec<String> = self
            .tags
            .iter()
            .filter(|t| t.1 == Kind::Int)
            .map(|t| t.0.clone())
            .collect();
        match self.rng.gen_range(0..3) {
            0 if !tags.is_empty() => format!("\"%{}\"", tags.choose(self.rng).unwrap()),
            1 => self.rng.gen_range(0..8).to_string(),
            _ => {
                let v = self.rng.gen_range(0..8);
                self.param(Value::Int(v))
            }
        }
    }

    fn text_operand(&mut self) -> String {
        let tags: Vec<String> = self
            .tags
            .iter()
            .filter(|t| matches!(t.1, Kind::Text | Kind::NullableText))
            .map(|t| t.0.clone())
            .collect();
        match self.rng.gen_range(0..3) {
            0 if !tags.is_empty() => format!("\"%{}\"", tags.choose(self.rng).unwrap()),
            1 => format!("\"{}\"", NAMES.choose(self.rng).unwrap()),
            _ => {
                let v = *NAMES.choose(self.rng).unwrap();
                self.param(Value::text(v))
            }
        }
    }

    fn filter(&mut self, kind: Kind) -> String {
        let (op, operand) = match kind {
            Kind::Int => {
                let op = *["=", "!=", "<", "<=", ">", ">=", "one_of"].choose(self.rng).unwrap();
                let operand = if op == "one_of" {
                    let items: Vec<Value> = (0..self.rng.gen_range(0..4))
                        .map(|_| Value::Int(self.rng.gen_range(0..8)))
                        .collect();
                    self.param(Value::List(items))
                } else {
                    self.int_operand()
                };
                (op, Some(operand))
            }
            Kind::Text | Kind::NullableText => {
                let mut ops = vec!["=", "!=", "<", ">=", "one_of", "regex"];
                if kind == Kind::NullableText {
                    ops.extend(["is_null", "is_not_null"]);
                }
                let op = *ops.choose(self.rng).unwrap();
                let operand = match op {
                    "is_null" | "is_not_null" => None,
                    "one_of" => {
                        let items = (0..self.rng.gen_range(0..4))
                            .map(|_| *NAMES.choose(self.rng).unwrap())
                            .collect::<Vec<_>>();
                        Some(self.param(Value::text_list(items)))
                    }
                    "regex" => {
                        let pattern = *["^a", "b$", "^(a|c)$", "a.*c"].choose(self.rng).unwrap();
                        Some(self.param(Value::text(pattern)))
                    }
                    _ => Some(self.text_operand()),
                };
                (op, operand)
            }
            Kind::TextList => {
                let op = *["contains", "not_contains"].choose(self.rng).unwrap();
                let word = *WORDS.choose(self.rng).unwrap();
                (op, Some(self.param(Value::text(word))))
            }
        };
        match operand {
            Some(o) => format!(" @filter(op: \"{op}\", value: [{o}])"),
            None => format!(" @filter(op: \"{op}\")"),
        }
    }

    fn property(&mut self, name: &str, kind: Kind) -> String {
        let mut line = name.to_string();
        if self.rng.gen_bool(0.45) {
            line.push_str(&self.filter(kind));
        }
        if kind != Kind::TextList && self.rng.gen_bool(0.3) {
            let tag = self.fresh("t");
            let _ = write!(line, " @tag(name: \"{tag}\")");
            self.tags.push((tag, kind));
        }
        if self.rng.gen_bool(0.5) {
            let out = self.fresh("o");
            let _ = write!(line, " @output(name: \"{out}\")");
        }
        line.push('\n');
        line
    }

    fn block(&mut self, depth: usize, special: bool) -> String {
        let mut out = String::new();
        let mut props: Vec<(&str, Kind)> = NODE_PROPERTIES.to_vec();
        if special {
            props.push(("level", Kind::Int));
        }
        props.shuffle(self.rng);
        let n = self.rng.gen_range(1..=3);
        for (name, kind) in props.into_iter().take(n) {
            out.push_str(&self.property(name, kind));
        }
        if depth > 0 {
            for _ in 0..self.rng.gen_range(0..=2) {
                out.push_str(&self.edge(depth));
            }
        }
        if !special && self.rng.gen_bool(0.2) {
            let inner = self.block(depth.saturating_sub(1), true);
            let _ = write!(out, "... on Special {{\n{inner}}}\n");
        }
        out
    }

    fn edge(&mut self, depth: usize) -> String {
        let edge = *["child", "parent", "peer"].choose(self.rng).unwrap();
        let alias = if self.rng.gen_bool(0.2) {
            format!("{}_: ", self.fresh("a"))
        } else {
            String::new()
        };
        match self.rng.gen_range(0..4) {
            0 => {
                // Tags defined inside a fold stay inside it.
                let visible = self.tags.len();
                let inner = self.block(depth - 1, false);
                self.tags.truncate(visible);
                let mut directives = String::from(" @fold");
                if self.rng.gen_bool(0.7) {
                    directives.push_str(" @transform(op: \"count\")");
                    if self.rng.gen_bool(0.6) {
                        let op = *["=", ">=", "<"].choose(self.rng).unwrap();
                        let v = self.rng.gen_range(0..3);
                        let p = self.param(Value::Int(v));
                        let _ = write!(directives, " @filter(op: \"{op}\", value: [{p}])");
                    }
                    if self.rng.gen_bool(0.5) {
                        let out = self.fresh("o");
                        let _ = write!(directives, " @output(name: \"{out}\")");
                    }
                }
                format!("{alias}{edge}{directives} {{\n{inner}}}\n")
            }
            1 => {
                let inner = self.block(depth - 1, false);
                format!("{alias}{edge} @optional {{\n{inner}}}\n")
            }
            _ => {
                let inner = self.block(depth - 1, false);
                format!("{alias}{edge} {{\n{inner}}}\n")
            }
        }
    }
}
