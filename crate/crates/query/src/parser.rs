//! Recursive-descent parser for query documents.
//!
//! ```text
//! document   := '{' NAME selections '}'
//! selections := '{' selection* '}'
//! selection  := '...' 'on' NAME selections
//!             | (NAME ':')? NAME directive* selections?
//! directive  := '@' NAME ( '(' (NAME ':' value)* ')' )?
//! value      := STRING | INT | 'true' | 'false' | '[' value* ']'
//! ```

use std::collections::{BTreeSet, HashSet};

use crate::ast::{
    Directive, DirectiveKind, FilterOp, Operand, Position, QueryDocument, Selection, SelectionKind, TransformOp,
};
use crate::error::ParseError;
use crate::lexer::{tokenize, Spanned, Token};
use crate::value::Value;

pub fn parse_query(text: &str) -> Result<QueryDocument, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        outputs: HashSet::new(),
        parameters: BTreeSet::new(),
    };
    parser.document()
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    outputs: HashSet<String>,
    parameters: BTreeSet<String>,
}

/// Raw directive before placement rules are applied.
struct RawDirective {
    name: String,
    args: Vec<(String, RawValue, Position)>,
    position: Position,
}

#[derive(Debug, Clone)]
enum RawValue {
    Str(String),
    Int(i64),
    Bool(bool),
    List(Vec<RawValue>),
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].token
    }

    fn position(&self) -> Position {
        self.tokens[self.pos].position
    }

    fn bump(&mut self) -> Spanned {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, expected: Token) -> Result<Position, ParseError> {
        if *self.peek() == expected {
            Ok(self.bump().position)
        } else {
            Err(ParseError::syntax(
                self.position(),
                expected.describe(),
                self.peek().describe(),
            ))
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, Position), ParseError> {
        match self.peek().clone() {
            Token::Name(n) => {
                let p = self.bump().position;
                Ok((n, p))
            }
            other => Err(ParseError::syntax(self.position(), what, other.describe())),
        }
    }

    fn document(&mut self) -> Result<QueryDocument, ParseError> {
        self.expect(Token::LBrace)?;
        let (root_type, root_position) = self.name("root type name")?;
        let selections = self.selection_set("")?;
        self.expect(Token::RBrace)?;
        if *self.peek() != Token::Eof {
            return Err(ParseError::syntax(
                self.position(),
                "end of input",
                self.peek().describe(),
            ));
        }
        Ok(QueryDocument {
            root_type,
            root_position,
            selections,
            parameters: std::mem::take(&mut self.parameters),
        })
    }

    fn selection_set(&mut self, prefix: &str) -> Result<Vec<Selection>, ParseError> {
        self.expect(Token::LBrace)?;
        let mut selections = Vec::new();
        loop {
            match self.peek() {
                Token::RBrace => {
                    self.bump();
                    return Ok(selections);
                }
                Token::Spread => selections.push(self.coercion(prefix)?),
                Token::Name(_) => selections.push(self.field(prefix)?),
                other => {
                    return Err(ParseError::syntax(
                        self.position(),
                        "field, `...` or `}`",
                        other.describe(),
                    ))
                }
            }
        }
    }

    fn coercion(&mut self, prefix: &str) -> Result<Selection, ParseError> {
        let position = self.expect(Token::Spread)?;
        match self.peek().clone() {
            Token::Name(n) if n == "on" => {
                self.bump();
            }
            other => return Err(ParseError::syntax(self.position(), "`on`", other.describe())),
        }
        let (target, _) = self.name("type name")?;
        if *self.peek() == Token::At {
            let p = self.position();
            return Err(ParseError::MisplacedDirective {
                directive: self.raw_directive()?.name,
                reason: "type coercions cannot carry directives".into(),
                position: p,
            });
        }
        let children = self.selection_set(prefix)?;
        Ok(Selection {
            kind: SelectionKind::Coercion,
            name: target,
            alias: None,
            directives: Vec::new(),
            children,
            position,
        })
    }

    fn field(&mut self, prefix: &str) -> Result<Selection, ParseError> {
        let (first, position) = self.name("field name")?;
        let (alias, name) = if *self.peek() == Token::Colon {
            self.bump();
            let (n, _) = self.name("field name after alias")?;
            (Some(first), n)
        } else {
            (None, first)
        };

        let mut raw = Vec::new();
        while *self.peek() == Token::At {
            raw.push(self.raw_directive()?);
        }

        let structural = raw
            .iter()
            .any(|d| matches!(d.name.as_str(), "fold" | "optional" | "transform"));
        let has_block = *self.peek() == Token::LBrace;
        let kind = if has_block || structural {
            SelectionKind::Edge
        } else {
            SelectionKind::Property
        };

        if alias.is_some() && kind == SelectionKind::Property {
            return Err(ParseError::syntax(
                position,
                "selection set after aliased edge",
                format!("property `{name}`"),
            ));
        }

        let directives = self.resolve_directives(kind, &name, prefix, raw)?;

        let child_prefix = match &alias {
            Some(a) => format!("{prefix}{a}"),
            None => prefix.to_string(),
        };
        let children = if has_block {
            self.selection_set(&child_prefix)?
        } else {
            if kind == SelectionKind::Edge && !directives.iter().any(|d| d.kind == DirectiveKind::Fold) {
                return Err(ParseError::syntax(
                    self.position(),
                    format!("selection set for edge `{name}`"),
                    self.peek().describe(),
                ));
            }
            Vec::new()
        };

        Ok(Selection {
            kind,
            name,
            alias,
            directives,
            children,
            position,
        })
    }

    fn raw_directive(&mut self) -> Result<RawDirective, ParseError> {
        let position = self.expect(Token::At)?;
        let (name, _) = self.name("directive name")?;
        let mut args = Vec::new();
        if *self.peek() == Token::LParen {
            self.bump();
            while *self.peek() != Token::RParen {
                let (arg, arg_pos) = self.name("argument name or `)`")?;
                self.expect(Token::Colon)?;
                let value = self.value()?;
                args.push((arg, value, arg_pos));
            }
            self.bump();
        }
        Ok(RawDirective { name, args, position })
    }

    fn value(&mut self) -> Result<RawValue, ParseError> {
        match self.peek().clone() {
            Token::Str(s) => {
                self.bump();
                Ok(RawValue::Str(s))
            }
            Token::Int(i) => {
                self.bump();
                Ok(RawValue::Int(i))
            }
            Token::Name(n) if n == "true" || n == "false" => {
                self.bump();
                Ok(RawValue::Bool(n == "true"))
            }
            Token::LBracket => {
                self.bump();
                let mut items = Vec::new();
                while *self.peek() != Token::RBracket {
                    items.push(self.value()?);
                }
                self.bump();
                Ok(RawValue::List(items))
            }
            other => Err(ParseError::syntax(self.position(), "value", other.describe())),
        }
    }

    fn resolve_directives(
        &mut self,
        kind: SelectionKind,
        field: &str,
        prefix: &str,
        raw: Vec<RawDirective>,
    ) -> Result<Vec<Directive>, ParseError> {
        let mut out = Vec::new();
        let mut seen_fold = false;
        let mut seen_transform = false;
        let mut seen_optional = false;

        for d in raw {
            let misplaced = |reason: &str| ParseError::MisplacedDirective {
                directive: d.name.clone(),
                reason: reason.to_string(),
                position: d.position,
            };
            let directive_kind = match d.name.as_str() {
                "filter" => {
                    let op_text = string_arg(&d, "op")?
                        .ok_or_else(|| ParseError::syntax(d.position, "`op` argument for @filter", "nothing"))?;
                    let op = FilterOp::parse(&op_text)
                        .ok_or_else(|| ParseError::syntax(d.position, "filter operator", format!("{op_text:?}")))?;
                    check_args(&d, &["op", "value"])?;
                    let operand = self.filter_operand(&d, op)?;
                    DirectiveKind::Filter { op, operand }
                }
                "tag" => {
                    check_args(&d, &["name"])?;
                    let name = string_arg(&d, "name")?.unwrap_or_else(|| field.to_string());
                    DirectiveKind::Tag { name }
                }
                "output" => {
                    check_args(&d, &["name"])?;
                    let name = string_arg(&d, "name")?.unwrap_or_else(|| format!("{prefix}{field}"));
                    if !self.outputs.insert(name.clone()) {
                        return Err(ParseError::DuplicateOutputName {
                            name,
                            position: d.position,
                        });
                    }
                    DirectiveKind::Output { name }
                }
                "fold" => {
                    check_args(&d, &[])?;
                    DirectiveKind::Fold
                }
                "optional" => {
                    check_args(&d, &[])?;
                    DirectiveKind::Optional
                }
                "transform" => {
                    check_args(&d, &["op"])?;
                    match string_arg(&d, "op")?.as_deref() {
                        Some("count") => DirectiveKind::Transform(TransformOp::Count),
                        Some(other) => {
                            return Err(ParseError::syntax(
                                d.position,
                                "transform op \"count\"",
                                format!("{other:?}"),
                            ))
                        }
                        None => {
                            return Err(ParseError::syntax(
                                d.position,
                                "`op` argument for @transform",
                                "nothing",
                            ))
                        }
                    }
                }
                other => {
                    return Err(ParseError::UnknownDirective {
                        name: other.to_string(),
                        position: d.position,
                    })
                }
            };

            match (&directive_kind, kind) {
                (
                    DirectiveKind::Fold | DirectiveKind::Optional | DirectiveKind::Transform(_),
                    SelectionKind::Property,
                ) => {
                    return Err(misplaced("only allowed on edges"));
                }
                (DirectiveKind::Fold, _) => {
                    if seen_fold {
                        return Err(misplaced("edge is already folded"));
                    }
                    if seen_optional {
                        return Err(misplaced("an edge cannot be both @optional and @fold"));
                    }
                    seen_fold = true;
                }
                (DirectiveKind::Optional, _) => {
                    if seen_optional {
                        return Err(misplaced("edge is already optional"));
                    }
                    if seen_fold {
                        return Err(misplaced("an edge cannot be both @optional and @fold"));
                    }
                    seen_optional = true;
                }
                (DirectiveKind::Transform(_), _) => {
                    if !seen_fold {
                        return Err(misplaced("@transform must follow @fold on the same edge"));
                    }
                    if seen_transform {
                        return Err(misplaced("edge already has a @transform"));
                    }
                    seen_transform = true;
                }
                (_, SelectionKind::Edge) if !seen_transform => {
                    return Err(misplaced(
                        "edges accept @filter, @tag and @output only after @fold @transform",
                    ));
                }
                _ => {}
            }

            out.push(Directive {
                kind: directive_kind,
                position: d.position,
            });
        }
        Ok(out)
    }

    fn filter_operand(&mut self, d: &RawDirective, op: FilterOp) -> Result<Option<Operand>, ParseError> {
        let value = d.args.iter().find(|(n, _, _)| n == "value");
        match (op.takes_operand(), value) {
            (false, None) => Ok(None),
            (false, Some((_, RawValue::List(items), _))) if items.is_empty() => Ok(None),
            (false, Some((_, _, p))) => Err(ParseError::syntax(
                *p,
                format!("no operand for `{}`", op.symbol()),
                "value",
            )),
            (true, None) => Err(ParseError::syntax(
                d.position,
                format!("`value` argument for `{}`", op.symbol()),
                "nothing",
            )),
            (true, Some((_, RawValue::List(items), p))) => {
                if items.len() != 1 {
                    return Err(ParseError::syntax(
                        *p,
                        "exactly one operand in `value: [..]`",
                        format!("{} operands", items.len()),
                    ));
                }
                Ok(Some(self.operand(&items[0])))
            }
            (true, Some((_, _, p))) => Err(ParseError::syntax(*p, "`[` operand list", "scalar")),
        }
    }

    fn operand(&mut self, raw: &RawValue) -> Operand {
        match raw {
            RawValue::Str(s) if s.starts_with('$') && s.len() > 1 => {
                let name = s[1..].to_string();
                self.parameters.insert(name.clone());
                Operand::Parameter(name)
            }
            RawValue::Str(s) if s.starts_with('%') && s.len() > 1 => Operand::Tag(s[1..].to_string()),
            other => Operand::Literal(literal(other)),
        }
    }
}

fn literal(raw: &RawValue) -> Value {
    match raw {
        RawValue::Str(s) => Value::Text(s.clone()),
        RawValue::Int(i) => Value::Int(*i),
        RawValue::Bool(b) => Value::Bool(*b),
        RawValue::List(items) => Value::List(items.iter().map(literal).collect()),
    }
}

fn check_args(d: &RawDirective, allowed: &[&str]) -> Result<(), ParseError> {
    let mut seen = HashSet::new();
    for (name, _, pos) in &d.args {
        if !allowed.contains(&name.as_str()) {
            let expected = if allowed.is_empty() {
                format!("no arguments for @{}", d.name)
            } else {
                format!("one of {:?} for @{}", allowed, d.name)
            };
            return Err(ParseError::syntax(*pos, expected, format!("`{name}`")));
        }
        if !seen.insert(name) {
            return Err(ParseError::syntax(
                *pos,
                "distinct argument names",
                format!("repeated `{name}`"),
            ));
        }
    }
    Ok(())
}

fn string_arg(d: &RawDirective, arg: &str) -> Result<Option<String>, ParseError> {
    match d.args.iter().find(|(n, _, _)| n == arg) {
        None => Ok(None),
        Some((_, RawValue::Str(s), _)) => Ok(Some(s.clone())),
        Some((_, _, p)) => Err(ParseError::syntax(*p, format!("string for `{arg}`"), "non-string")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_query_has_one_coercion_and_one_output() {
        let doc = parse_query("{ Crate { item { ... on Enum { name @output } } } }").unwrap();
        assert_eq!(doc.root_type, "Crate");
        let item = &doc.selections[0];
        assert_eq!(item.kind, SelectionKind::Edge);
        let coercion = &item.children[0];
        assert_eq!(coercion.coercion_target(), Some("Enum"));
        let name = &coercion.children[0];
        assert_eq!(name.kind, SelectionKind::Property);
        assert_eq!(name.directives[0].kind, DirectiveKind::Output { name: "name".into() });
    }

    #[test]
    fn transform_without_fold_is_rejected() {
        let err = parse_query(r#"{ Crate { item @transform(op:"count") } }"#).unwrap_err();
        assert!(matches!(err, ParseError::MisplacedDirective { ref directive, .. } if directive == "transform"));
    }

    #[test]
    fn folded_edge_may_omit_selection_set() {
        let doc = parse_query(r#"{ Crate { item @fold @transform(op:"count") @output(name:"n") } }"#).unwrap();
        let item = &doc.selections[0];
        assert!(item.is_folded());
        assert_eq!(item.transform(), Some(TransformOp::Count));
        assert!(item.children.is_empty());
    }

    #[test]
    fn unknown_directive_and_duplicate_output() {
        assert!(matches!(
            parse_query("{ Crate { name @frobnicate } }"),
            Err(ParseError::UnknownDirective { .. })
        ));
        assert!(matches!(
            parse_query("{ Crate { name @output version @output(name: \"name\") } }"),
            Err(ParseError::DuplicateOutputName { .. })
        ));
    }

    #[test]
    fn alias_prefixes_output_names() {
        let doc = parse_query("{ Crate { item { span_: span @optional { filename @output } } } }").unwrap();
        let span = &doc.selections[0].children[0];
        assert_eq!(span.alias.as_deref(), Some("span_"));
        assert!(span.is_optional());
        assert_eq!(
            span.children[0].directives[0].kind,
            DirectiveKind::Output {
                name: "span_filename".into()
            }
        );
    }

    #[test]
    fn operands_classify_parameters_tags_and_literals() {
        let doc = parse_query(
            r#"{ Crate { item { name @filter(op: "=", value: ["$n"]) @tag(name: "t")
                 visibility_limit @filter(op: "!=", value: ["%t"])
                 doc_hidden @filter(op: "=", value: [false])
                 repr @filter(op: "is_null") } } }"#,
        )
        .unwrap();
        assert_eq!(
            doc.parameters.iter().cloned().collect::<Vec<_>>(),
            vec!["n".to_string()]
        );
        let props = &doc.selections[0].children;
        assert!(matches!(
            &props[1].directives[0].kind,
            DirectiveKind::Filter { operand: Some(Operand::Tag(t)), .. } if t == "t"
        ));
        assert!(matches!(
            &props[2].directives[0].kind,
            DirectiveKind::Filter {
                operand: Some(Operand::Literal(Value::Bool(false))),
                ..
            }
        ));
        assert!(matches!(
            &props[3].directives[0].kind,
            DirectiveKind::Filter {
                op: FilterOp::IsNull,
                operand: None
            }
        ));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_query("{ Crate {\n  item { name @output \n}").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn directives_on_unfolded_edges_are_rejected() {
        assert!(matches!(
            parse_query("{ Crate { item @output { name } } }"),
            Err(ParseError::MisplacedDirective { .. })
        ));
        assert!(matches!(
            parse_query("{ Crate { name @optional } }"),
            Err(ParseError::Syntax { .. })
        ));
    }
}
