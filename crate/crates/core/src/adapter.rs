//! Exposes a (baseline, current) snapshot pair through the query adapter
//! contract, following the schema in `docs/schema.txt`.

use std::sync::OnceLock;

use breakcheck_query::{Adapter, AdapterError, Arguments, Schema, Value, VertexIter};

use crate::attribute::{Attribute, AttributeNode};
use crate::snapshot::{ApiItem, ApiSnapshot, ImportablePath, ItemKind, KindData, Span};

pub const SCHEMA_TEXT: &str = include_str!("../../../docs/schema.txt");

/// The shipped schema, parsed once.
pub fn schema() -> &'static Schema {
    static SCHEMA: OnceLock<Schema> = OnceLock::new();
    SCHEMA.get_or_init(|| Schema::parse(SCHEMA_TEXT).expect("shipped schema is valid"))
}

#[derive(Debug, Clone)]
pub enum Vertex<'a> {
    CrateDiff,
    Crate(&'a ApiSnapshot),
    Item(&'a ApiSnapshot, &'a ApiItem),
    ImportablePath(&'a ImportablePath),
    Span(&'a Span),
    Attribute(&'a Attribute),
    MetaItem(&'a AttributeNode),
    Parameter(&'a str),
    ImplementedTrait { name: &'a str, path: Option<&'a [String]> },
}

impl Vertex<'_> {
    /// Most specific schema type of this vertex.
    pub fn type_name(&self) -> &'static str {
        match self {
            Vertex::CrateDiff => "CrateDiff",
            Vertex::Crate(_) => "Crate",
            Vertex::Item(_, item) => item_type_name(item.kind),
            Vertex::ImportablePath(_) => "ImportablePath",
            Vertex::Span(_) => "Span",
            Vertex::Attribute(_) => "Attribute",
            Vertex::MetaItem(_) => "AttributeMetaItem",
            Vertex::Parameter(_) => "FunctionParameter",
            Vertex::ImplementedTrait { .. } => "ImplementedTrait",
        }
    }
}

pub fn item_type_name(kind: ItemKind) -> &'static str {
    match kind {
        ItemKind::Module => "Module",
        ItemKind::Struct => "Struct",
        ItemKind::Enum => "Enum",
        ItemKind::VariantPlain => "PlainVariant",
        ItemKind::VariantTuple => "TupleVariant",
        ItemKind::VariantStruct => "StructVariant",
        ItemKind::Field => "StructField",
        ItemKind::Function => "Function",
        ItemKind::Method => "Method",
        ItemKind::Trait => "Trait",
        ItemKind::Impl => "Impl",
    }
}

/// Adapter over two snapshots. The `Crate` root yields the baseline.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotPairAdapter<'a> {
    baseline: &'a ApiSnapshot,
    current: &'a ApiSnapshot,
}

impl<'a> SnapshotPairAdapter<'a> {
    pub fn new(baseline: &'a ApiSnapshot, current: &'a ApiSnapshot) -> Self {
        SnapshotPairAdapter { baseline, current }
    }

    /// Adapter for single-snapshot queries rooted at `Crate`.
    pub fn single(snapshot: &'a ApiSnapshot) -> Self {
        SnapshotPairAdapter::new(snapshot, snapshot)
    }
}

fn once<'a>(v: Vertex<'a>) -> VertexIter<'a, Vertex<'a>> {
    Box::new(std::iter::once(v))
}

fn items<'a>(snapshot: &'a ApiSnapshot, ids: &'a [String]) -> VertexIter<'a, Vertex<'a>> {
    Box::new(ids.iter().map(move |id| Vertex::Item(snapshot, &snapshot.items[id])))
}

fn text_list(segments: &[String]) -> Value {
    Value::List(segments.iter().map(|s| Value::text(s.as_str())).collect())
}

fn unknown(what: &str, name: &str, vertex: &Vertex<'_>) -> AdapterError {
    AdapterError::new(format!("no {what} `{name}` on {} vertex", vertex.type_name()))
}

impl<'a> Adapter for SnapshotPairAdapter<'a> {
    type Vertex = Vertex<'a>;

    fn resolve_starting_vertices(
        &self,
        root_type: &str,
        _arguments: &Arguments,
    ) -> Result<VertexIter<'_, Vertex<'a>>, AdapterError> {
        match root_type {
            "CrateDiff" => Ok(once(Vertex::CrateDiff)),
            "Crate" => Ok(once(Vertex::Crate(self.baseline))),
            other => Err(AdapterError::new(format!("`{other}` is not a root type"))),
        }
    }

    fn resolve_property(&self, vertex: &Vertex<'a>, _type_name: &str, property: &str) -> Result<Value, AdapterError> {
        let value = match (vertex, property) {
            (Vertex::Crate(s), "name") => Value::text(s.crate_name.as_str()),
            (Vertex::Crate(s), "version") => Value::text(s.crate_version.to_string()),
            (Vertex::Item(_, item), _) => return item_property(vertex, item, property),
            (Vertex::ImportablePath(p), "path") => text_list(&p.segments),
            (Vertex::ImportablePath(p), "public_api") => Value::Bool(p.public_api),
            (Vertex::Span(s), "filename") => Value::text(s.filename.as_str()),
            (Vertex::Span(s), "begin_line") => Value::Int(i64::from(s.begin_line)),
            (Vertex::Attribute(a), "raw_value") => Value::text(a.raw_value.as_str()),
            (Vertex::MetaItem(m), "raw_item") => Value::text(m.raw_value.as_str()),
            (Vertex::MetaItem(m), "base") => Value::text(m.base.as_str()),
            (Vertex::MetaItem(m), "assigned_item") => m.assigned_value.as_deref().into(),
            (Vertex::Parameter(name), "name") => Value::text(*name),
            (Vertex::ImplementedTrait { name, .. }, "name") => Value::text(*name),
            (Vertex::ImplementedTrait { path, .. }, "path") => path.map_or(Value::Null, text_list),
            _ => return Err(unknown("property", property, vertex)),
        };
        Ok(value)
    }

    fn resolve_neighbors(
        &self,
        vertex: &Vertex<'a>,
        _type_name: &str,
        edge: &str,
    ) -> Result<VertexIter<'_, Vertex<'a>>, AdapterError> {
        let out: VertexIter<'a, Vertex<'a>> = match (vertex, edge) {
            (Vertex::CrateDiff, "baseline") => once(Vertex::Crate(self.baseline)),
            (Vertex::CrateDiff, "current") => once(Vertex::Crate(self.current)),
            (Vertex::Crate(s), "item") => {
                let s: &'a ApiSnapshot = s;
                Box::new(s.items.values().map(move |item| Vertex::Item(s, item)))
            }
            (Vertex::Item(s, item), _) => return item_neighbors(vertex, s, item, edge),
            (Vertex::Attribute(a), "content") => once(Vertex::MetaItem(&a.content)),
            (Vertex::MetaItem(m), "argument") => Box::new(m.arguments.iter().map(Vertex::MetaItem)),
            _ => return Err(unknown("edge", edge, vertex)),
        };
        Ok(out)
    }

    fn resolve_coercion(&self, vertex: &Vertex<'a>, _from_type: &str, to_type: &str) -> Result<bool, AdapterError> {
        if !schema().has_type(to_type) {
            return Err(AdapterError::new(format!("unknown type `{to_type}`")));
        }
        Ok(schema().is_subtype(vertex.type_name(), to_type))
    }
}

fn item_property(vertex: &Vertex<'_>, item: &ApiItem, property: &str) -> Result<Value, AdapterError> {
    let value = match (property, &item.data) {
        ("name", _) => Value::text(item.name.as_str()),
        ("visibility_limit", _) => Value::text(item.visibility.as_str()),
        ("doc_hidden", _) => Value::Bool(item.doc_hidden),
        ("struct_kind", KindData::Struct { struct_kind, .. }) => Value::text(struct_kind.as_str()),
        ("repr_int", KindData::Enum { repr_int, .. }) => repr_int.as_deref().into(),
        ("declared_type", KindData::Field { declared_type }) => Value::text(declared_type.as_str()),
        ("unsafe", KindData::Function { is_unsafe, .. })
        | ("unsafe", KindData::Trait { is_unsafe, .. })
        | ("unsafe", KindData::Impl { is_unsafe, .. }) => Value::Bool(*is_unsafe),
        ("const", KindData::Function { is_const, .. }) => Value::Bool(*is_const),
        ("negative", KindData::Impl { is_negative, .. }) => Value::Bool(*is_negative),
        ("provenance", KindData::Impl { provenance, .. }) => Value::text(provenance.as_str()),
        _ => return Err(unknown("property", property, vertex)),
    };
    Ok(value)
}

fn item_neighbors<'a>(
    vertex: &Vertex<'a>,
    s: &'a ApiSnapshot,
    item: &'a ApiItem,
    edge: &str,
) -> Result<VertexIter<'a, Vertex<'a>>, AdapterError> {
    let out: VertexIter<'a, Vertex<'a>> = match (edge, &item.data) {
        ("importable_path", _) => {
            let paths = s
                .item_importable_paths(&item.id)
                .map_err(|e| AdapterError::new(e.to_string()))?;
            Box::new(paths.iter().map(Vertex::ImportablePath))
        }
        ("span", _) => Box::new(item.span.iter().map(Vertex::Span)),
        ("attribute", _) => Box::new(item.attributes.iter().map(Vertex::Attribute)),
        ("item", KindData::Module { items: ids, .. }) => items(s, ids),
        ("impl", KindData::Struct { impls, .. }) | ("impl", KindData::Enum { impls, .. }) => items(s, impls),
        ("field", KindData::Struct { fields, .. }) | ("field", KindData::Variant { fields }) => items(s, fields),
        ("variant", KindData::Enum { variants, .. }) => items(s, variants),
        ("method", KindData::Trait { methods, .. }) | ("method", KindData::Impl { methods, .. }) => items(s, methods),
        ("parameter", KindData::Function { parameters, .. }) => {
            Box::new(parameters.iter().map(|p| Vertex::Parameter(p.as_str())))
        }
        (
            "implemented_trait",
            KindData::Impl {
                implemented_trait_name,
                implemented_trait_path,
                ..
            },
        ) => Box::new(implemented_trait_name.iter().map(|name| Vertex::ImplementedTrait {
            name,
            path: implemented_trait_path.as_deref(),
        })),
        _ => return Err(unknown("edge", edge, vertex)),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::load_snapshot;

    fn fixture() -> ApiSnapshot {
        load_snapshot(
            serde_json::json!({
                "format_version": 1, "crate_name": "x", "crate_version": "0.1.0", "root_module": "m",
                "items": {
                    "m": {"kind": "module", "name": "x", "visibility": "public", "items": ["e", "s"]},
                    "e": {"kind": "enum", "name": "E", "visibility": "public", "variants": ["v"]},
                    "v": {"kind": "variant_plain", "name": "A", "visibility": "public"},
                    "s": {"kind": "struct", "name": "S", "visibility": "public", "struct_kind": "unit", "impls": ["i"]},
                    "i": {"kind": "impl", "name": "", "visibility": "public", "provenance": "auto_trait",
                          "implemented_trait_name": "Send", "implemented_trait_path": ["core", "marker", "Send"]}
                }
            })
            .to_string()
            .as_bytes(),
        )
        .unwrap()
    }

    #[test]
    fn schema_parses_and_has_both_roots() {
        assert!(schema().is_root("CrateDiff"));
        assert!(schema().is_subtype("Enum", "Item"));
        assert!(schema().is_subtype("TupleVariant", "Variant"));
    }

    #[test]
    fn single_starting_vertex() {
        let s = fixture();
        let a = SnapshotPairAdapter::new(&s, &s);
        assert_eq!(
            a.resolve_starting_vertices("CrateDiff", &Arguments::new())
                .unwrap()
                .count(),
            1
        );
    }

    #[test]
    fn coercion_follows_item_kind() {
        let s = fixture();
        let a = SnapshotPairAdapter::single(&s);
        let e = Vertex::Item(&s, &s.items["e"]);
        assert!(a.resolve_coercion(&e, "Item", "Enum").unwrap());
        assert!(a.resolve_coercion(&e, "Item", "ImplOwner").unwrap());
        assert!(!a.resolve_coercion(&e, "Item", "Struct").unwrap());
    }

    #[test]
    fn implemented_trait_exposes_name_and_path() {
        let s = fixture();
        let a = SnapshotPairAdapter::single(&s);
        let i = Vertex::Item(&s, &s.items["i"]);
        let t: Vec<_> = a.resolve_neighbors(&i, "Impl", "implemented_trait").unwrap().collect();
        assert_eq!(t.len(), 1);
        assert_eq!(
            a.resolve_property(&t[0], "ImplementedTrait", "name").unwrap(),
            Value::text("Send")
        );
        assert_eq!(
            a.resolve_property(&i, "Impl", "provenance").unwrap(),
            Value::text("auto_trait")
        );
    }

    #[test]
    fn unknown_fields_are_adapter_errors() {
        let s = fixture();
        let a = SnapshotPairAdapter::single(&s);
        let e = Vertex::Item(&s, &s.items["e"]);
        assert!(a.resolve_property(&e, "Enum", "struct_kind").is_err());
        assert!(a.resolve_neighbors(&e, "Enum", "field").is_err());
    }
}
