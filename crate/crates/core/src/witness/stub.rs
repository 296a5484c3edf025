//! A stand-in compiler for witness crates. It only understands the handful
//! of shapes the witness templates emit, and answers by looking the used
//! items up in a snapshot of the dependency.

use std::collections::{BTreeMap, BTreeSet};

use semver::Version;

use super::{crate_ident, CompileResult, CompilerOracle, WitnessError};
use crate::snapshot::{ApiItem, ApiSnapshot, ItemKind, KindData, StructKind, Visibility};

pub struct StubOracle {
    snapshots: Vec<ApiSnapshot>,
}

impl StubOracle {
    pub fn new(snapshots: impl IntoIterator<Item = ApiSnapshot>) -> StubOracle {
        StubOracle {
            snapshots: snapshots.into_iter().collect(),
        }
    }
}

impl CompilerOracle for StubOracle {
    fn compile(&self, manifest: &str, lib_source: &str) -> Result<CompileResult, WitnessError> {
        let (name, version) = dependency(manifest)?;
        let snapshot = self
            .snapshots
            .iter()
            .find(|s| crate_ident(&s.crate_name) == crate_ident(&name) && s.crate_version == version)
            .ok_or_else(|| WitnessError::OracleUnavailable(format!("no snapshot of {name} {version}")))?;
        Ok(match Checker::new(snapshot).check(lib_source)? {
            Ok(()) => CompileResult::Success,
            Err(msg) => CompileResult::Failure(msg),
        })
    }
}

/// The single `name = "=version"` dependency of a witness manifest.
fn dependency(manifest: &str) -> Result<(String, Version), WitnessError> {
    let bad = |m: &str| WitnessError::OracleUnavailable(format!("unexpected witness manifest: {m}"));
    let table: toml::Table = manifest.parse().map_err(|e: toml::de::Error| bad(e.message()))?;
    let deps = table
        .get("dependencies")
        .and_then(toml::Value::as_table)
        .ok_or_else(|| bad("no [dependencies]"))?;
    let mut iter = deps.iter();
    let (Some((name, req)), None) = (iter.next(), iter.next()) else {
        return Err(bad("expected exactly one dependency"));
    };
    let version = req
        .as_str()
        .and_then(|r| r.strip_prefix('='))
        .and_then(|v| Version::parse(v).ok())
        .ok_or_else(|| bad("dependency is not pinned with `=`"))?;
    Ok((name.clone(), version))
}

/// One path segment with the number of generic arguments attached to it.
#[derive(Debug, PartialEq)]
struct Segment {
    name: String,
    generics: usize,
}

/// Splits at top-level occurrences of `sep`, ignoring anything nested in
/// brackets.
fn split_top(text: &str, sep: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'<' | b'(' | b'[' | b'{' => depth += 1,
            b'>' | b')' | b']' | b'}' => depth -= 1,
            _ if depth == 0 && text[i..].starts_with(sep) => {
                out.push(text[start..i].trim().to_string());
                i += sep.len();
                start = i;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    out.push(text[start..].trim().to_string());
    out
}

fn generic_count(inner: &str) -> usize {
    split_top(inner, ",").iter().filter(|s| !s.is_empty()).count()
}

/// Splits `path(args` at the first parenthesis outside generic brackets.
fn split_call(text: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in text.char_indices() {
        match c {
            '<' => depth += 1,
            '>' => depth -= 1,
            '(' if depth == 0 => return Some((&text[..i], &text[i + 1..])),
            _ => {}
        }
    }
    None
}

fn parse_path(text: &str) -> Option<Vec<Segment>> {
    let mut out: Vec<Segment> = Vec::new();
    for part in split_top(text.trim(), "::") {
        if let Some(inner) = part.strip_prefix('<').and_then(|p| p.strip_suffix('>')) {
            out.last_mut()?.generics = generic_count(inner);
        } else if let Some((name, rest)) = part.split_once('<') {
            out.push(Segment {
                name: name.to_string(),
                generics: generic_count(rest.strip_suffix('>')?),
            });
        } else if !part.is_empty() && part.chars().all(|c| c.is_alphanumeric() || c == '_') {
            out.push(Segment {
                name: part,
                generics: 0,
            });
        } else {
            return None;
        }
    }
    (!out.is_empty()).then_some(out)
}

type Outcome = Result<(), String>;

struct Checker<'s> {
    snapshot: &'s ApiSnapshot,
    witness_type: Option<&'s ApiItem>,
    helpers: BTreeMap<String, String>,
    required: Vec<String>,
    open_match: Option<BTreeSet<String>>,
}

impl<'s> Checker<'s> {
    fn new(snapshot: &'s ApiSnapshot) -> Self {
        Checker {
            snapshot,
            witness_type: None,
            helpers: BTreeMap::new(),
            required: Vec::new(),
            open_match: None,
        }
    }

    /// Outer error: the stub cannot judge the source at all. Inner error: a
    /// compile failure with its message.
    fn check(mut self, source: &str) -> Result<Outcome, WitnessError> {
        for raw in source.lines() {
            let line = raw.trim();
            let result = self
                .line(line)
                .ok_or_else(|| WitnessError::OracleUnavailable(format!("stub oracle cannot interpret `{line}`")))?;
            if result.is_err() {
                return Ok(result);
            }
        }
        if self.open_match.is_some() {
            return Err(WitnessError::OracleUnavailable("unterminated match".into()));
        }
        for helper in std::mem::take(&mut self.required) {
            let Some(bound) = self.helpers.get(&helper) else {
                return Ok(Err(format!("cannot find function `{helper}`")));
            };
            let result = self.implements(bound);
            if result.is_err() {
                return Ok(result);
            }
        }
        Ok(Ok(()))
    }

    fn line(&mut self, line: &str) -> Option<Outcome> {
        if let Some(arms) = self.open_match.as_mut() {
            if line == "}" {
                let arms = std::mem::take(arms);
                self.open_match = None;
                return Some(self.close_match(arms));
            }
            let pattern = line.strip_suffix("=> {}")?;
            return Some(self.variant_pattern(pattern.trim()).map(|v| {
                if let Some(arms) = self.open_match.as_mut() {
                    arms.insert(v);
                }
            }));
        }
        if line.is_empty()
            || line.starts_with("//")
            || line.starts_with("#")
            || matches!(
                line,
                "}" | "false" | "return true;" | "let _ = value;" | "pub fn witness() {"
            )
        {
            return Some(Ok(()));
        }
        if let Some(rest) = line.strip_prefix("pub fn witness(value: ") {
            let ty = rest.strip_suffix(") {").or_else(|| rest.strip_suffix(") -> bool {"))?;
            return Some(self.resolve_type(ty).map(|item| self.witness_type = Some(item)));
        }
        if let Some(rest) = line.strip_prefix("pub fn witness<T: ") {
            let bound = rest.strip_suffix(">(value: T) {")?;
            return Some(self.resolve_trait(bound));
        }
        if let Some(rest) = line.strip_prefix("fn require_") {
            let (name, rest) = rest.split_once("<T: ")?;
            let bound = rest.strip_suffix(">(value: T) {")?;
            self.helpers.insert(format!("require_{name}"), bound.to_string());
            return Some(Ok(()));
        }
        if let Some(rest) = line.strip_prefix("require_") {
            let name = rest.strip_suffix("(value);")?;
            self.required.push(format!("require_{name}"));
            return Some(Ok(()));
        }
        if let Some(rest) = line.strip_prefix("use ") {
            let path = parse_path(rest.strip_suffix(';')?)?;
            return Some(self.lookup(&path).map(|_| ()));
        }
        if let Some(rest) = line.strip_prefix("if let ") {
            let pattern = rest.strip_suffix(" = value {")?;
            return Some(self.variant_pattern(pattern).map(|_| ()));
        }
        if line == "match value {" {
            self.open_match = Some(BTreeSet::new());
            return Some(Ok(()));
        }
        if let Some(rest) = line.strip_prefix("let ") {
            let pattern = rest.strip_suffix(" = value;")?;
            return Some(self.struct_pattern(pattern));
        }
        if let Some(call) = line.strip_suffix(");") {
            let (callee, args) = split_call(call)?;
            return Some(self.call(callee, generic_count(args)));
        }
        None
    }

    fn crate_segments(&self, path: &[Segment]) -> Result<Vec<String>, String> {
        let first = &path[0].name;
        if *first != crate_ident(&self.snapshot.crate_name) {
            return Err(format!("unresolved import `{first}`"));
        }
        let mut segs: Vec<String> = path.iter().map(|s| s.name.clone()).collect();
        segs[0] = self.snapshot.crate_name.clone();
        Ok(segs)
    }

    fn lookup(&self, path: &[Segment]) -> Result<&'s ApiItem, String> {
        let segs = self.crate_segments(path)?;
        self.snapshot
            .item_at_path(&segs)
            .ok_or_else(|| format!("cannot find `{}`", segs.join("::")))
    }

    fn check_generics(item: &ApiItem, given: usize) -> Outcome {
        let expected = item.type_params().len();
        if expected == given {
            Ok(())
        } else {
            Err(format!(
                "`{}` takes {expected} generic arguments but {given} were supplied",
                item.name
            ))
        }
    }

    fn resolve_type(&self, text: &str) -> Result<&'s ApiItem, String> {
        let path = parse_path(text).ok_or_else(|| format!("cannot parse type `{text}`"))?;
        let item = self.lookup(&path)?;
        if !matches!(item.kind, ItemKind::Struct | ItemKind::Enum) {
            return Err(format!("expected type, found {} `{text}`", item.kind.as_str()));
        }
        Self::check_generics(item, path.last().map_or(0, |s| s.generics))?;
        Ok(item)
    }

    fn resolve_trait(&self, text: &str) -> Outcome {
        let path = parse_path(text).ok_or_else(|| format!("cannot parse bound `{text}`"))?;
        let item = self.lookup(&path)?;
        if item.kind != ItemKind::Trait {
            return Err(format!("expected trait, found {} `{text}`", item.kind.as_str()));
        }
        Self::check_generics(item, path.last().map_or(0, |s| s.generics))
    }

    fn implements(&self, bound: &str) -> Outcome {
        let ty = self.witness_type.ok_or("trait requirement without a typed value")?;
        let name = bound.rsplit("::").next().unwrap_or(bound);
        let found = ty.impls().iter().filter_map(|id| self.snapshot.items.get(id)).any(|i| {
            matches!(&i.data, KindData::Impl { is_negative: false, implemented_trait_name: Some(t), .. } if t == name)
        });
        if found {
            Ok(())
        } else {
            Err(format!("the trait bound `{}: {bound}` is not satisfied", ty.name))
        }
    }

    /// Resolves `path::Enum::Variant` with an optional `(..)` or `{ .. }`
    /// and returns the variant name.
    fn variant_pattern(&self, pattern: &str) -> Result<String, String> {
        let (path_text, shape) = if let Some(p) = pattern.strip_suffix("(..)") {
            (p, ItemKind::VariantTuple)
        } else if let Some(p) = pattern.strip_suffix(" { .. }") {
            (p, ItemKind::VariantStruct)
        } else {
            (pattern, ItemKind::VariantPlain)
        };
        let path = parse_path(path_text).ok_or_else(|| format!("cannot parse pattern `{pattern}`"))?;
        let (variant, owner_path) = path.split_last().ok_or("empty pattern")?;
        if owner_path.is_empty() {
            return Err(format!("cannot parse pattern `{pattern}`"));
        }
        let owner = self.lookup(owner_path)?;
        if owner.kind != ItemKind::Enum {
            return Err(format!("expected enum, found {} `{}`", owner.kind.as_str(), owner.name));
        }
        if let Some(ty) = self.witness_type {
            if ty.id != owner.id {
                return Err(format!(
                    "mismatched types: expected `{}`, found `{}`",
                    ty.name, owner.name
                ));
            }
        }
        let found = owner
            .variants()
            .iter()
            .filter_map(|id| self.snapshot.items.get(id))
            .find(|v| v.name == variant.name)
            .ok_or_else(|| format!("no variant named `{}` in enum `{}`", variant.name, owner.name))?;
        if found.kind != shape {
            return Err(format!("expected {}, found {}", shape.as_str(), found.kind.as_str()));
        }
        Ok(found.name.clone())
    }

    fn close_match(&self, arms: BTreeSet<String>) -> Outcome {
        let ty = self.witness_type.ok_or("match without a typed value")?;
        if ty.kind != ItemKind::Enum {
            return Err(format!("cannot match variants of {} `{}`", ty.kind.as_str(), ty.name));
        }
        if ty.is_non_exhaustive() {
            return Err(format!(
                "non-exhaustive patterns: `{}` is marked #[non_exhaustive]",
                ty.name
            ));
        }
        let missing: Vec<&str> = ty
            .variants()
            .iter()
            .filter_map(|id| self.snapshot.items.get(id))
            .map(|v| v.name.as_str())
            .filter(|n| !arms.contains(*n))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(format!("non-exhaustive patterns: {} not covered", missing.join(", ")))
        }
    }

    fn struct_pattern(&self, pattern: &str) -> Outcome {
        let (path_text, names): (&str, Option<Vec<String>>) = if let Some((p, rest)) = pattern.split_once(" { ") {
            let inner = rest
                .strip_suffix(" }")
                .ok_or_else(|| format!("cannot parse pattern `{pattern}`"))?;
            let names = split_top(inner, ",")
                .into_iter()
                .map(|f| f.strip_suffix(": _").map(str::to_string))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| format!("cannot parse pattern `{pattern}`"))?;
            (p, Some(names))
        } else if let Some((p, rest)) = pattern.split_once('(') {
            if !rest.ends_with(')') {
                return Err(format!("cannot parse pattern `{pattern}`"));
            }
            (p, None)
        } else {
            return Err(format!("cannot parse pattern `{pattern}`"));
        };
        let path = parse_path(path_text).ok_or_else(|| format!("cannot parse pattern `{pattern}`"))?;
        let item = self.lookup(&path)?;
        let KindData::Struct {
            struct_kind, fields, ..
        } = &item.data
        else {
            return Err(format!("expected struct, found {} `{}`", item.kind.as_str(), item.name));
        };
        if item.is_non_exhaustive() {
            return Err(format!("`{}` is marked #[non_exhaustive] and needs `..`", item.name));
        }
        let fields: Vec<&ApiItem> = fields.iter().filter_map(|id| self.snapshot.items.get(id)).collect();
        if let Some(f) = fields.iter().find(|f| f.visibility != Visibility::Public) {
            return Err(format!("field `{}` of `{}` is private", f.name, item.name));
        }
        match names {
            Some(names) => {
                if *struct_kind != StructKind::Plain {
                    return Err(format!("`{}` is not a struct with named fields", item.name));
                }
                let want: BTreeSet<&str> = fields.iter().map(|f| f.name.as_str()).collect();
                let got: BTreeSet<&str> = names.iter().map(String::as_str).collect();
                if want != got {
                    return Err(format!("pattern does not mention every field of `{}`", item.name));
                }
            }
            None => {
                if *struct_kind != StructKind::Tuple {
                    return Err(format!("`{}` is not a tuple struct", item.name));
                }
                let n = generic_count(pattern.split_once('(').map_or("", |(_, r)| r.trim_end_matches(')')));
                if n != fields.len() {
                    return Err(format!(
                        "pattern has {n} fields but `{}` has {}",
                        item.name,
                        fields.len()
                    ));
                }
            }
        }
        Ok(())
    }

    fn call(&self, callee: &str, args: usize) -> Outcome {
        let path = parse_path(callee).ok_or_else(|| format!("cannot parse call to `{callee}`"))?;
        let segs = self.crate_segments(&path)?;
        let (function, arity_item, generics) = if let Some(f) = self.snapshot.item_at_path(&segs) {
            if f.kind != ItemKind::Function {
                return Err(format!("expected function, found {} `{}`", f.kind.as_str(), f.name));
            }
            (f, f, path.last().map_or(0, |s| s.generics))
        } else {
            let (method, owner_path) = path.split_last().ok_or("empty call")?;
            if owner_path.len() < 2 {
                return Err(format!("cannot find function `{}`", segs.join("::")));
            }
            let owner = self.lookup(owner_path)?;
            let m = owner
                .impls()
                .iter()
                .filter_map(|id| self.snapshot.items.get(id))
                .filter(|i| i.implemented_trait().is_none())
                .flat_map(|i| i.methods().iter().filter_map(|m| self.snapshot.items.get(m)))
                .find(|m| m.name == method.name)
                .ok_or_else(|| {
                    format!(
                        "no function or associated item named `{}` found for `{}`",
                        method.name, owner.name
                    )
                })?;
            if method.generics != m.type_params().len() {
                return Err(format!(
                    "method `{}` takes {} generic arguments",
                    m.name,
                    m.type_params().len()
                ));
            }
            (m, owner, owner_path.last().map_or(0, |s| s.generics))
        };
        Self::check_generics(arity_item, generics)?;
        let expected = function.parameters().len();
        if expected != args {
            return Err(format!(
                "this function takes {expected} arguments but {args} arguments were supplied"
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_carry_generic_counts() {
        let p = parse_path("x::Wrapper::<(), ()>::new").unwrap();
        assert_eq!(
            p,
            vec![
                Segment {
                    name: "x".into(),
                    generics: 0
                },
                Segment {
                    name: "Wrapper".into(),
                    generics: 2
                },
                Segment {
                    name: "new".into(),
                    generics: 0
                },
            ]
        );
        assert_eq!(parse_path("x::W<()>").unwrap()[1].generics, 1);
        assert!(parse_path("x::W(..)").is_none());
    }

    #[test]
    fn manifest_dependency_must_be_pinned() {
        let m = super::super::manifest_text("my-crate", &Version::new(1, 2, 3));
        assert_eq!(dependency(&m).unwrap(), ("my-crate".into(), Version::new(1, 2, 3)));
        assert!(dependency("[dependencies]\nx = \"1\"\n").is_err());
    }
}
