//! Parsing of item attributes such as `#[repr(C, u8)]` into a tree of
//! meta items.

use serde::{Deserialize, Serialize};

/// One meta item: `base`, `base = value` or `base(arg, arg, ...)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeNode {
    pub raw_value: String,
    pub base: String,
    pub assigned_value: Option<String>,
    pub arguments: Vec<AttributeNode>,
}

/// An attribute as written on an item, with its parsed content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub raw_value: String,
    pub content: AttributeNode,
}

impl AttributeNode {
    /// Whether this node is `base(...)` with an argument whose base is `arg`.
    pub fn has_argument(&self, arg: &str) -> bool {
        self.arguments.iter().any(|a| a.base == arg)
    }
}

impl Attribute {
    pub fn parse(raw: &str) -> Result<Attribute, String> {
        let trimmed = raw.trim();
        let inner = trimmed
            .strip_prefix("#[")
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| format!("attribute `{raw}` is not of the form `#[...]`"))?;
        let mut parser = MetaParser { src: inner, pos: 0 };
        parser.skip_ws();
        let content = parser.meta()?;
        parser.skip_ws();
        if parser.pos != inner.len() {
            return Err(format!("unexpected `{}` in attribute `{raw}`", &inner[parser.pos..]));
        }
        Ok(Attribute {
            raw_value: raw.to_string(),
            content,
        })
    }

    pub fn is_doc_hidden(&self) -> bool {
        self.content.base == "doc" && self.content.has_argument("hidden")
    }
}

struct MetaParser<'s> {
    src: &'s str,
    pos: usize,
}

impl<'s> MetaParser<'s> {
    fn rest(&self) -> &'s str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn meta(&mut self) -> Result<AttributeNode, String> {
        let start = self.pos;
        let base = self.path()?;
        self.skip_ws();
        let mut assigned_value = None;
        let mut arguments = Vec::new();
        match self.peek() {
            Some('=') => {
                self.pos += 1;
                self.skip_ws();
                assigned_value = Some(self.literal()?);
            }
            Some('(') => {
                self.pos += 1;
                loop {
                    self.skip_ws();
                    if self.peek() == Some(')') {
                        self.pos += 1;
                        break;
                    }
                    if self.peek() == Some('"') {
                        // Bare literal argument, e.g. `deprecated("x")`.
                        let lit_start = self.pos;
                        let lit = self.literal()?;
                        arguments.push(AttributeNode {
                            raw_value: self.src[lit_start..self.pos].to_string(),
                            base: lit,
                            assigned_value: None,
                            arguments: Vec::new(),
                        });
                    } else {
                        arguments.push(self.meta()?);
                    }
                    self.skip_ws();
                    match self.peek() {
                        Some(',') => self.pos += 1,
                        Some(')') => {}
                        other => return Err(format!("expected `,` or `)`, found {other:?}")),
                    }
                }
            }
            _ => {}
        }
        Ok(AttributeNode {
            raw_value: self.src[start..self.pos].trim_end().to_string(),
            base,
            assigned_value,
            arguments,
        })
    }

    fn path(&mut self) -> Result<String, String> {
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_alphanumeric() || c == '_' || c == ':'))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(format!("expected attribute name, found `{rest}`"));
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn literal(&mut self) -> Result<String, String> {
        let rest = self.rest();
        if let Some(body) = rest.strip_prefix('"') {
            let mut escaped = false;
            for (i, c) in body.char_indices() {
                match c {
                    '\\' if !escaped => escaped = true,
                    '"' if !escaped => {
                        let lit = &rest[..i + 2];
                        self.pos += lit.len();
                        return Ok(lit.to_string());
                    }
                    _ => escaped = false,
                }
            }
            return Err(format!("unterminated string in `{rest}`"));
        }
        let len = rest
            .find(|c: char| c == ',' || c == ')' || c.is_whitespace())
            .unwrap_or(rest.len());
        if len == 0 {
            return Err("expected a literal".to_string());
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_meta() {
        let a = Attribute::parse("#[repr(C, u8)]").unwrap();
        assert_eq!(a.content.base, "repr");
        assert_eq!(a.content.raw_value, "repr(C, u8)");
        let args: Vec<_> = a.content.arguments.iter().map(|n| n.base.as_str()).collect();
        assert_eq!(args, ["C", "u8"]);

        let d = Attribute::parse("#[doc(hidden)]").unwrap();
        assert!(d.is_doc_hidden());

        let m = Attribute::parse(r#"#[must_use = "use \"it\""]"#).unwrap();
        assert_eq!(m.content.base, "must_use");
        assert_eq!(m.content.assigned_value.as_deref(), Some(r#""use \"it\"""#));
    }

    #[test]
    fn parent_raw_value_contains_base() {
        let a = Attribute::parse("#[cfg_attr(feature = \"x\", derive(Debug, Clone))]").unwrap();
        fn walk(n: &AttributeNode) {
            assert!(n.raw_value.contains(&n.base), "{n:?}");
            n.arguments.iter().for_each(walk);
        }
        walk(&a.content);
        assert_eq!(a.content.arguments[1].arguments.len(), 2);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Attribute::parse("repr(C)").is_err());
        assert!(Attribute::parse("#[repr(C]").is_err());
        assert!(Attribute::parse("#[]").is_err());
    }
}
