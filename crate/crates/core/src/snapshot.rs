//! The normalized API snapshot: a typed graph of one crate version's items.
//!
//! The on-disk form is JSON and is described field by field in
//! `docs/snapshot-format.md`. Loading validates the document and precomputes
//! importable paths; the result is immutable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use semver::Version;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribute::Attribute;

pub const FORMAT_VERSION: u64 = 1;

/// Traits the compiler implements automatically.
pub const AUTO_TRAITS: [&str; 5] = ["Send", "Sync", "Unpin", "UnwindSafe", "RefUnwindSafe"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnapshotError {
    #[error("malformed snapshot: {0}")]
    MalformedInput(String),
    #[error("unsupported snapshot format version {found} (supported: {supported})")]
    UnsupportedFormatVersion { found: u64, supported: u64 },
    #[error("item `{referenced_by}` references missing item `{id}`")]
    DanglingEdge { id: String, referenced_by: String },
    #[error("unknown item `{0}`")]
    UnknownItem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Module,
    Struct,
    Enum,
    VariantPlain,
    VariantTuple,
    VariantStruct,
    Field,
    Function,
    Method,
    Trait,
    Impl,
}

impl ItemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ItemKind::Module => "module",
            ItemKind::Struct => "struct",
            ItemKind::Enum => "enum",
            ItemKind::VariantPlain => "variant_plain",
            ItemKind::VariantTuple => "variant_tuple",
            ItemKind::VariantStruct => "variant_struct",
            ItemKind::Field => "field",
            ItemKind::Function => "function",
            ItemKind::Method => "method",
            ItemKind::Trait => "trait",
            ItemKind::Impl => "impl",
        }
    }

    pub fn is_variant(self) -> bool {
        matches!(
            self,
            ItemKind::VariantPlain | ItemKind::VariantTuple | ItemKind::VariantStruct
        )
    }

    /// Kinds that can appear directly in a module.
    pub fn is_module_level(self) -> bool {
        matches!(
            self,
            ItemKind::Module | ItemKind::Struct | ItemKind::Enum | ItemKind::Function | ItemKind::Trait
        )
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    Crate,
    Private,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::Crate => "crate",
            Visibility::Private => "private",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructKind {
    Unit,
    Tuple,
    Plain,
}

impl StructKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StructKind::Unit => "unit",
            StructKind::Tuple => "tuple",
            StructKind::Plain => "plain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImplProvenance {
    AutoTrait,
    Derive,
    Ordinary,
}

impl ImplProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            ImplProvenance::AutoTrait => "auto_trait",
            ImplProvenance::Derive => "derive",
            ImplProvenance::Ordinary => "ordinary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub filename: String,
    pub begin_line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeParam {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<String>,
}

/// A `pub use` inside a module. Either `target` names an item in this
/// snapshot or `external` holds a path into another crate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reexport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KindData {
    Module {
        items: Vec<String>,
        reexports: Vec<Reexport>,
    },
    Struct {
        struct_kind: StructKind,
        fields: Vec<String>,
        impls: Vec<String>,
        type_params: Vec<TypeParam>,
    },
    Enum {
        repr_int: Option<String>,
        variants: Vec<String>,
        impls: Vec<String>,
        type_params: Vec<TypeParam>,
    },
    Variant {
        fields: Vec<String>,
    },
    Field {
        declared_type: String,
    },
    /// Functions and methods. Methods with a receiver list `self` first.
    Function {
        parameters: Vec<String>,
        is_unsafe: bool,
        is_const: bool,
        type_params: Vec<TypeParam>,
    },
    Trait {
        is_unsafe: bool,
        methods: Vec<String>,
        type_params: Vec<TypeParam>,
    },
    Impl {
        is_unsafe: bool,
        is_negative: bool,
        implemented_trait_name: Option<String>,
        implemented_trait_path: Option<Vec<String>>,
        methods: Vec<String>,
        provenance: ImplProvenance,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiItem {
    pub id: String,
    pub kind: ItemKind,
    pub name: String,
    pub visibility: Visibility,
    pub doc_hidden: bool,
    pub attributes: Vec<Attribute>,
    pub span: Option<Span>,
    pub data: KindData,
}

impl ApiItem {
    pub fn has_attribute(&self, base: &str) -> bool {
        self.attributes.iter().any(|a| a.content.base == base)
    }

    pub fn is_non_exhaustive(&self) -> bool {
        self.has_attribute("non_exhaustive")
    }

    pub fn fields(&self) -> &[String] {
        match &self.data {
            KindData::Struct { fields, .. } | KindData::Variant { fields } => fields,
            _ => &[],
        }
    }

    pub fn impls(&self) -> &[String] {
        match &self.data {
            KindData::Struct { impls, .. } | KindData::Enum { impls, .. } => impls,
            _ => &[],
        }
    }

    pub fn variants(&self) -> &[String] {
        match &self.data {
            KindData::Enum { variants, .. } => variants,
            _ => &[],
        }
    }

    pub fn methods(&self) -> &[String] {
        match &self.data {
            KindData::Trait { methods, .. } | KindData::Impl { methods, .. } => methods,
            _ => &[],
        }
    }

    pub fn type_params(&self) -> &[TypeParam] {
        match &self.data {
            KindData::Struct { type_params, .. }
            | KindData::Enum { type_params, .. }
            | KindData::Function { type_params, .. }
            | KindData::Trait { type_params, .. } => type_params,
            _ => &[],
        }
    }

    pub fn parameters(&self) -> &[String] {
        match &self.data {
            KindData::Function { parameters, .. } => parameters,
            _ => &[],
        }
    }

    /// Trait name for trait impls, `None` for inherent impls and non-impls.
    pub fn implemented_trait(&self) -> Option<&str> {
        match &self.data {
            KindData::Impl {
                implemented_trait_name, ..
            } => implemented_trait_name.as_deref(),
            _ => None,
        }
    }

    /// Ids of the items this item points at, in declaration order.
    fn edges(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        match &self.data {
            KindData::Module { items, reexports } => {
                out.extend(items.iter().map(String::as_str));
                out.extend(reexports.iter().filter_map(|r| r.target.as_deref()));
            }
            KindData::Struct { fields, impls, .. } => {
                out.extend(fields.iter().map(String::as_str));
                out.extend(impls.iter().map(String::as_str));
            }
            KindData::Enum { variants, impls, .. } => {
                out.extend(variants.iter().map(String::as_str));
                out.extend(impls.iter().map(String::as_str));
            }
            KindData::Variant { fields } => out.extend(fields.iter().map(String::as_str)),
            KindData::Trait { methods, .. } | KindData::Impl { methods, .. } => {
                out.extend(methods.iter().map(String::as_str))
            }
            KindData::Field { .. } | KindData::Function { .. } => {}
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ImportablePath {
    pub segments: Vec<String>,
    pub public_api: bool,
}

impl ImportablePath {
    pub fn joined(&self) -> String {
        self.segments.join("::")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiSnapshot {
    pub format_version: u64,
    pub crate_name: String,
    pub crate_version: Version,
    pub root_module: String,
    pub items: BTreeMap<String, ApiItem>,
    paths: BTreeMap<String, Vec<ImportablePath>>,
    by_path: BTreeMap<Vec<String>, String>,
    owners: BTreeMap<String, String>,
}

impl ApiSnapshot {
    pub fn item(&self, id: &str) -> Result<&ApiItem, SnapshotError> {
        self.items
            .get(id)
            .ok_or_else(|| SnapshotError::UnknownItem(id.to_string()))
    }

    /// Importable paths of `id` in lexicographic order. Items that are not
    /// reachable from the crate root (and members such as fields) have none.
    pub fn item_importable_paths(&self, id: &str) -> Result<&[ImportablePath], SnapshotError> {
        self.item(id)?;
        Ok(self.paths.get(id).map(Vec::as_slice).unwrap_or(&[]))
    }

    pub fn is_public_api(&self, id: &str) -> Result<bool, SnapshotError> {
        let item = self.item(id)?;
        let paths = self.item_importable_paths(id)?;
        Ok(item.visibility == Visibility::Public && !item.doc_hidden && paths.iter().any(|p| p.public_api))
    }

    /// Item importable at exactly `segments`, if any.
    pub fn item_at_path(&self, segments: &[String]) -> Option<&ApiItem> {
        self.by_path.get(segments).map(|id| &self.items[id])
    }

    /// The item owning a member (variant, field, method or impl).
    pub fn owner_of(&self, id: &str) -> Option<&ApiItem> {
        self.owners.get(id).map(|o| &self.items[o])
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }
}

/// Loads and validates a snapshot from JSON bytes.
pub fn load_snapshot(bytes: &[u8]) -> Result<ApiSnapshot, SnapshotError> {
    let text = std::str::from_utf8(bytes).map_err(|e| SnapshotError::MalformedInput(format!("not UTF-8: {e}")))?;
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| SnapshotError::MalformedInput(e.to_string()))?;
    let found = value
        .get("format_version")
        .ok_or_else(|| SnapshotError::MalformedInput("missing `format_version`".into()))?
        .as_u64()
        .ok_or_else(|| SnapshotError::MalformedInput("`format_version` must be a non-negative integer".into()))?;
    if found != FORMAT_VERSION {
        return Err(SnapshotError::UnsupportedFormatVersion {
            found,
            supported: FORMAT_VERSION,
        });
    }
    let raw: RawSnapshot = serde_json::from_value(value).map_err(|e| SnapshotError::MalformedInput(e.to_string()))?;
    build(raw)
}

pub fn load_snapshot_file(path: &std::path::Path) -> Result<ApiSnapshot, SnapshotError> {
    let bytes = std::fs::read(path)
        .map_err(|e| SnapshotError::MalformedInput(format!("cannot read {}: {e}", path.display())))?;
    load_snapshot(&bytes)
}

/// Serializes a snapshot back into its JSON document form.
pub fn snapshot_to_json(snapshot: &ApiSnapshot) -> String {
    let raw = RawSnapshot {
        format_version: snapshot.format_version,
        crate_name: snapshot.crate_name.clone(),
        crate_version: snapshot.crate_version.to_string(),
        root_module: snapshot.root_module.clone(),
        items: snapshot
            .items
            .iter()
            .map(|(id, item)| (id.clone(), RawItem::from(item)))
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("snapshot serializes")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSnapshot {
    format_version: u64,
    crate_name: String,
    crate_version: String,
    root_module: String,
    items: BTreeMap<String, RawItem>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawItem {
    kind: Option<ItemKind>,
    name: Option<String>,
    visibility: Option<Visibility>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doc_hidden: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    span: Option<Span>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    items: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reexports: Option<Vec<Reexport>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    struct_kind: Option<StructKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fields: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    impls: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    type_params: Option<Vec<TypeParam>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    repr_int: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variants: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parameters: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    is_unsafe: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    is_const: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    methods: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    is_negative: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    implemented_trait_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    implemented_trait_path: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<ImplProvenance>,
}

impl RawItem {
    /// Names of the kind-specific keys present in this record.
    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        macro_rules! check {
            ($($field:ident),*) => {
                $(if self.$field.is_some() { keys.push(stringify!($field)); })*
            };
        }
        check!(
            items,
            reexports,
            struct_kind,
            fields,
            impls,
            type_params,
            repr_int,
            variants,
            declared_type,
            parameters,
            is_unsafe,
            is_const,
            methods,
            is_negative,
            implemented_trait_name,
            implemented_trait_path,
            provenance
        );
        keys
    }
}

fn allowed_keys(kind: ItemKind) -> &'static [&'static str] {
    match kind {
        ItemKind::Module => &["items", "reexports"],
        ItemKind::Struct => &["struct_kind", "fields", "impls", "type_params"],
        ItemKind::Enum => &["repr_int", "variants", "impls", "type_params"],
        ItemKind::VariantPlain | ItemKind::VariantTuple | ItemKind::VariantStruct => &["fields"],
        ItemKind::Field => &["declared_type"],
        ItemKind::Function | ItemKind::Method => &["parameters", "is_unsafe", "is_const", "type_params"],
        ItemKind::Trait => &["is_unsafe", "methods", "type_params"],
        ItemKind::Impl => &[
            "is_unsafe",
            "is_negative",
            "implemented_trait_name",
            "implemented_trait_path",
            "methods",
            "provenance",
        ],
    }
}

impl From<&ApiItem> for RawItem {
    fn from(item: &ApiItem) -> Self {
        let mut raw = RawItem {
            kind: Some(item.kind),
            name: Some(item.name.clone()),
            visibility: Some(item.visibility),
            doc_hidden: None,
            attributes: item.attributes.iter().map(|a| a.raw_value.clone()).collect(),
            span: item.span.clone(),
            ..RawItem::default()
        };
        let params = |p: &Vec<TypeParam>| (!p.is_empty()).then(|| p.clone());
        match &item.data {
            KindData::Module { items, reexports } => {
                raw.items = Some(items.clone());
                raw.reexports = (!reexports.is_empty()).then(|| reexports.clone());
            }
            KindData::Struct {
                struct_kind,
                fields,
                impls,
                type_params,
            } => {
                raw.struct_kind = Some(*struct_kind);
                raw.fields = Some(fields.clone());
                raw.impls = Some(impls.clone());
                raw.type_params = params(type_params);
            }
            KindData::Enum {
                repr_int,
                variants,
                impls,
                type_params,
            } => {
                raw.repr_int = repr_int.clone();
                raw.variants = Some(variants.clone());
                raw.impls = Some(impls.clone());
                raw.type_params = params(type_params);
            }
            KindData::Variant { fields } => raw.fields = Some(fields.clone()),
            KindData::Field { declared_type } => raw.declared_type = Some(declared_type.clone()),
            KindData::Function {
                parameters,
                is_unsafe,
                is_const,
                type_params,
            } => {
                raw.parameters = Some(parameters.clone());
                raw.is_unsafe = Some(*is_unsafe);
                raw.is_const = Some(*is_const);
                raw.type_params = params(type_params);
            }
            KindData::Trait {
                is_unsafe,
                methods,
                type_params,
            } => {
                raw.is_unsafe = Some(*is_unsafe);
                raw.methods = Some(methods.clone());
                raw.type_params = params(type_params);
            }
            KindData::Impl {
                is_unsafe,
                is_negative,
                implemented_trait_name,
                implemented_trait_path,
                methods,
                provenance,
            } => {
                raw.is_unsafe = Some(*is_unsafe);
                raw.is_negative = Some(*is_negative);
                raw.implemented_trait_name = implemented_trait_name.clone();
                raw.implemented_trait_path = implemented_trait_path.clone();
                raw.methods = Some(methods.clone());
                raw.provenance = Some(*provenance);
            }
        }
        raw
    }
}

fn malformed(message: impl Into<String>) -> SnapshotError {
    SnapshotError::MalformedInput(message.into())
}

fn build(raw: RawSnapshot) -> Result<ApiSnapshot, SnapshotError> {
    let crate_version = Version::parse(&raw.crate_version)
        .map_err(|e| malformed(format!("invalid crate_version `{}`: {e}", raw.crate_version)))?;
    let mut items = BTreeMap::new();
    for (id, r) in raw.items {
        items.insert(id.clone(), build_item(id, r)?);
    }

    for item in items.values() {
        for target in item.edges() {
            let Some(t) = items.get(target) else {
                return Err(SnapshotError::DanglingEdge {
                    id: target.to_string(),
                    referenced_by: item.id.clone(),
                });
            };
            check_edge_kind(item, t)?;
        }
    }
    match items.get(&raw.root_module) {
        None => {
            return Err(SnapshotError::DanglingEdge {
                id: raw.root_module.clone(),
                referenced_by: "root_module".into(),
            })
        }
        Some(root) if root.kind != ItemKind::Module => {
            return Err(malformed(format!("root_module `{}` is not a module", raw.root_module)))
        }
        Some(_) => {}
    }

    let mut owners = BTreeMap::new();
    for item in items.values() {
        if item.kind == ItemKind::Module {
            continue;
        }
        for member in item.edges() {
            if let Some(prev) = owners.insert(member.to_string(), item.id.clone()) {
                return Err(malformed(format!(
                    "item `{member}` is owned by both `{prev}` and `{}`",
                    item.id
                )));
            }
        }
    }

    let paths = compute_paths(&raw.crate_name, &raw.root_module, &items);
    let mut by_path = BTreeMap::new();
    for (id, ps) in &paths {
        for p in ps {
            by_path.entry(p.segments.clone()).or_insert_with(|| id.clone());
        }
    }

    Ok(ApiSnapshot {
        format_version: raw.format_version,
        crate_name: raw.crate_name,
        crate_version,
        root_module: raw.root_module,
        items,
        paths,
        by_path,
        owners,
    })
}

fn build_item(id: String, raw: RawItem) -> Result<ApiItem, SnapshotError> {
    let kind = raw
        .kind
        .ok_or_else(|| malformed(format!("item `{id}` has no `kind`")))?;
    let name = raw
        .name
        .clone()
        .ok_or_else(|| malformed(format!("item `{id}` has no `name`")))?;
    let visibility = raw
        .visibility
        .ok_or_else(|| malformed(format!("item `{id}` has no `visibility`")))?;
    let allowed = allowed_keys(kind);
    if let Some(bad) = raw.present_keys().into_iter().find(|k| !allowed.contains(k)) {
        return Err(malformed(format!("key `{bad}` is not allowed on {kind} item `{id}`")));
    }

    let attributes = raw
        .attributes
        .iter()
        .map(|a| Attribute::parse(a).map_err(|e| malformed(format!("item `{id}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let derived_hidden = attributes.iter().any(Attribute::is_doc_hidden);
    if let Some(declared) = raw.doc_hidden {
        if declared != derived_hidden {
            return Err(malformed(format!(
                "item `{id}` declares doc_hidden={declared} but its attributes say {derived_hidden}"
            )));
        }
    }

    let required =
        |v: Option<Vec<String>>, key: &str| v.ok_or_else(|| malformed(format!("{kind} item `{id}` needs `{key}`")));
    let data = match kind {
        ItemKind::Module => KindData::Module {
            items: raw.items.unwrap_or_default(),
            reexports: raw.reexports.unwrap_or_default(),
        },
        ItemKind::Struct => KindData::Struct {
            struct_kind: raw
                .struct_kind
                .ok_or_else(|| malformed(format!("struct item `{id}` needs `struct_kind`")))?,
            fields: raw.fields.unwrap_or_default(),
            impls: raw.impls.unwrap_or_default(),
            type_params: raw.type_params.unwrap_or_default(),
        },
        ItemKind::Enum => {
            let derived = repr_int_from_attributes(&attributes);
            if raw.repr_int.is_some() && raw.repr_int != derived {
                return Err(malformed(format!(
                    "enum `{id}` declares repr_int {:?} but its attributes say {derived:?}",
                    raw.repr_int
                )));
            }
            KindData::Enum {
                repr_int: derived,
                variants: raw.variants.unwrap_or_default(),
                impls: raw.impls.unwrap_or_default(),
                type_params: raw.type_params.unwrap_or_default(),
            }
        }
        ItemKind::VariantPlain | ItemKind::VariantTuple | ItemKind::VariantStruct => KindData::Variant {
            fields: raw.fields.unwrap_or_default(),
        },
        ItemKind::Field => KindData::Field {
            declared_type: raw
                .declared_type
                .ok_or_else(|| malformed(format!("field item `{id}` needs `declared_type`")))?,
        },
        ItemKind::Function | ItemKind::Method => KindData::Function {
            parameters: required(raw.parameters, "parameters")?,
            is_unsafe: raw.is_unsafe.unwrap_or(false),
            is_const: raw.is_const.unwrap_or(false),
            type_params: raw.type_params.unwrap_or_default(),
        },
        ItemKind::Trait => KindData::Trait {
            is_unsafe: raw.is_unsafe.unwrap_or(false),
            methods: raw.methods.unwrap_or_default(),
            type_params: raw.type_params.unwrap_or_default(),
        },
        ItemKind::Impl => {
            let provenance = raw.provenance.unwrap_or(ImplProvenance::Ordinary);
            if raw.implemented_trait_path.is_some() && raw.implemented_trait_name.is_none() {
                return Err(malformed(format!("impl `{id}` has a trait path but no trait name")));
            }
            if provenance != ImplProvenance::Ordinary && raw.implemented_trait_name.is_none() {
                return Err(malformed(format!(
                    "impl `{id}` with provenance {} must name its trait",
                    provenance.as_str()
                )));
            }
            if provenance == ImplProvenance::AutoTrait {
                let t = raw.implemented_trait_name.as_deref().unwrap_or_default();
                if !AUTO_TRAITS.contains(&t) {
                    return Err(malformed(format!("impl `{id}`: `{t}` is not an auto trait")));
                }
            }
            KindData::Impl {
                is_unsafe: raw.is_unsafe.unwrap_or(false),
                is_negative: raw.is_negative.unwrap_or(false),
                implemented_trait_name: raw.implemented_trait_name,
                implemented_trait_path: raw.implemented_trait_path,
                methods: raw.methods.unwrap_or_default(),
                provenance,
            }
        }
    };

    Ok(ApiItem {
        id,
        kind,
        name,
        visibility,
        doc_hidden: derived_hidden,
        attributes,
        span: raw.span,
        data,
    })
}

const INT_REPRS: [&str; 12] = [
    "u8", "u16", "u32", "u64", "u128", "usize", "i8", "i16", "i32", "i64", "i128", "isize",
];

fn repr_int_from_attributes(attributes: &[Attribute]) -> Option<String> {
    attributes
        .iter()
        .filter(|a| a.content.base == "repr")
        .flat_map(|a| a.content.arguments.iter())
        .find(|arg| INT_REPRS.contains(&arg.base.as_str()))
        .map(|arg| arg.base.clone())
}

fn check_edge_kind(from: &ApiItem, to: &ApiItem) -> Result<(), SnapshotError> {
    let ok = match &from.data {
        KindData::Module { .. } => to.kind.is_module_level(),
        KindData::Struct { fields, .. } => {
            if fields.contains(&to.id) {
                to.kind == ItemKind::Field
            } else {
                to.kind == ItemKind::Impl
            }
        }
        KindData::Enum { variants, .. } => {
            if variants.contains(&to.id) {
                to.kind.is_variant()
            } else {
                to.kind == ItemKind::Impl
            }
        }
        KindData::Variant { .. } => to.kind == ItemKind::Field,
        KindData::Trait { .. } | KindData::Impl { .. } => to.kind == ItemKind::Method,
        KindData::Field { .. } | KindData::Function { .. } => false,
    };
    if !ok {
        return Err(malformed(format!(
            "{} item `{}` cannot point at {} item `{}`",
            from.kind, from.id, to.kind, to.id
        )));
    }
    // Tuple fields are named by position.
    let tuple_like = matches!(
        from.data,
        KindData::Struct {
            struct_kind: StructKind::Tuple,
            ..
        }
    ) || from.kind == ItemKind::VariantTuple;
    if tuple_like && to.kind == ItemKind::Field {
        let pos = from.fields().iter().position(|f| *f == to.id).expect("field listed");
        if to.name != pos.to_string() {
            return Err(malformed(format!(
                "tuple field `{}` of `{}` must be named `{pos}`",
                to.id, from.id
            )));
        }
    }
    let fieldless = from.kind == ItemKind::VariantPlain
        || matches!(
            from.data,
            KindData::Struct {
                struct_kind: StructKind::Unit,
                ..
            }
        );
    if fieldless && to.kind == ItemKind::Field {
        return Err(malformed(format!("`{}` has no fields but lists `{}`", from.id, to.id)));
    }
    Ok(())
}

fn compute_paths(
    crate_name: &str,
    root: &str,
    items: &BTreeMap<String, ApiItem>,
) -> BTreeMap<String, Vec<ImportablePath>> {
    // path -> public_api, per item; a path seen both hidden and not counts as public.
    let mut found: BTreeMap<String, BTreeMap<Vec<String>, bool>> = BTreeMap::new();
    let mut record = |id: &str, segments: Vec<String>, public_api: bool| {
        let entry = found
            .entry(id.to_string())
            .or_default()
            .entry(segments)
            .or_insert(false);
        *entry |= public_api;
    };
    record(root, vec![crate_name.to_string()], true);

    struct Frame<'i> {
        module: &'i ApiItem,
        prefix: Vec<String>,
        hidden: bool,
    }
    fn walk<'i>(
        frame: Frame<'i>,
        items: &'i BTreeMap<String, ApiItem>,
        on_stack: &mut BTreeSet<&'i str>,
        record: &mut dyn FnMut(&str, Vec<String>, bool),
    ) {
        let KindData::Module {
            items: children,
            reexports,
        } = &frame.module.data
        else {
            return;
        };
        on_stack.insert(&frame.module.id);
        let mut visit = |item: &'i ApiItem, name: &str, on_stack: &mut BTreeSet<&'i str>| {
            let mut segments = frame.prefix.clone();
            segments.push(name.to_string());
            let hidden = frame.hidden || item.doc_hidden;
            record(&item.id, segments.clone(), !hidden);
            if item.kind == ItemKind::Module && !on_stack.contains(item.id.as_str()) {
                walk(
                    Frame {
                        module: item,
                        prefix: segments,
                        hidden,
                    },
                    items,
                    on_stack,
                    record,
                );
            }
        };
        for child in children {
            let item = &items[child];
            if item.visibility == Visibility::Public {
                visit(item, &item.name, on_stack);
            }
        }
        for re in reexports {
            // External re-exports cannot be resolved from this snapshot alone.
            if let Some(target) = &re.target {
                let item = &items[target];
                let name = re.name.as_deref().unwrap_or(&item.name);
                visit(item, name, on_stack);
            }
        }
        on_stack.remove(frame.module.id.as_str());
    }

    let mut on_stack = BTreeSet::new();
    walk(
        Frame {
            module: &items[root],
            prefix: vec![crate_name.to_string()],
            hidden: false,
        },
        items,
        &mut on_stack,
        &mut record,
    );

    found
        .into_iter()
        .map(|(id, paths)| {
            let list = paths
                .into_iter()
                .map(|(segments, public_api)| ImportablePath { segments, public_api })
                .collect();
            (id, list)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(items: serde_json::Value) -> Vec<u8> {
        serde_json::json!({
            "format_version": 1,
            "crate_name": "x",
            "crate_version": "0.1.0",
            "root_module": "m0",
            "items": items,
        })
        .to_string()
        .into_bytes()
    }

    #[test]
    fn minimal_snapshot_loads() {
        let s = load_snapshot(&doc(serde_json::json!({
            "m0": {"kind": "module", "name": "x", "visibility": "public"}
        })))
        .unwrap();
        assert_eq!(s.item_count(), 1);
        let paths = s.item_importable_paths("m0").unwrap();
        assert_eq!(paths[0].segments, ["x"]);
    }

    #[test]
    fn format_version_is_dispatched_first() {
        let mut v: serde_json::Value = serde_json::from_slice(&doc(serde_json::json!({}))).unwrap();
        v["format_version"] = 2.into();
        let err = load_snapshot(v.to_string().as_bytes()).unwrap_err();
        assert_eq!(err, SnapshotError::UnsupportedFormatVersion { found: 2, supported: 1 });
        assert!(err.to_string().contains('2') && err.to_string().contains('1'));
    }

    #[test]
    fn dangling_edges_name_the_id() {
        let err = load_snapshot(&doc(serde_json::json!({
            "m0": {"kind": "module", "name": "x", "visibility": "public", "items": ["ghost"]}
        })))
        .unwrap_err();
        assert!(matches!(err, SnapshotError::DanglingEdge { ref id, .. } if id == "ghost"));
    }

    #[test]
    fn kind_data_shape_is_enforced() {
        let err = load_snapshot(&doc(serde_json::json!({
            "m0": {"kind": "module", "name": "x", "visibility": "public", "items": ["e"]},
            "e": {"kind": "enum", "name": "E", "visibility": "public", "struct_kind": "plain"}
        })))
        .unwrap_err();
        assert!(matches!(err, SnapshotError::MalformedInput(ref m) if m.contains("struct_kind")));
    }

    #[test]
    fn doc_hidden_must_agree_with_attributes() {
        let err = load_snapshot(&doc(serde_json::json!({
            "m0": {"kind": "module", "name": "x", "visibility": "public", "items": ["f"]},
            "f": {"kind": "function", "name": "f", "visibility": "public", "parameters": [], "doc_hidden": true}
        })))
        .unwrap_err();
        assert!(matches!(err, SnapshotError::MalformedInput(_)));
    }

    #[test]
    fn auto_trait_impls_must_name_an_auto_trait() {
        let err = load_snapshot(&doc(serde_json::json!({
            "m0": {"kind": "module", "name": "x", "visibility": "public", "items": ["s"]},
            "s": {"kind": "struct", "name": "S", "visibility": "public", "struct_kind": "unit", "impls": ["i"]},
            "i": {"kind": "impl", "name": "", "visibility": "public", "provenance": "auto_trait", "implemented_trait_name": "Clone"}
        })))
        .unwrap_err();
        assert!(matches!(err, SnapshotError::MalformedInput(ref m) if m.contains("auto trait")));
    }

    #[test]
    fn reexport_from_private_module_yields_only_root_path() {
        let s = load_snapshot(&doc(serde_json::json!({
            "m0": {"kind": "module", "name": "x", "visibility": "public", "items": ["inner"],
                   "reexports": [{"target": "b"}]},
            "inner": {"kind": "module", "name": "inner", "visibility": "private", "items": ["b"]},
            "b": {"kind": "struct", "name": "Bar", "visibility": "public", "struct_kind": "unit"}
        })))
        .unwrap();
        let paths: Vec<_> = s
            .item_importable_paths("b")
            .unwrap()
            .iter()
            .map(|p| p.joined())
            .collect();
        assert_eq!(paths, ["x::Bar"]);
        assert!(s.is_public_api("b").unwrap());
        assert!(s.item_importable_paths("inner").unwrap().is_empty());
    }

    #[test]
    fn hidden_modules_taint_paths() {
        let s = load_snapshot(&doc(serde_json::json!({
            "m0": {"kind": "module", "name": "x", "visibility": "public", "items": ["h"]},
            "h": {"kind": "module", "name": "h", "visibility": "public", "items": ["f"], "attributes": ["#[doc(hidden)]"]},
            "f": {"kind": "function", "name": "f", "visibility": "public", "parameters": []}
        })))
        .unwrap();
        let paths = s.item_importable_paths("f").unwrap();
        assert_eq!(paths.len(), 1);
        assert!(!paths[0].public_api);
        assert!(!s.is_public_api("f").unwrap());
        assert!(matches!(s.is_public_api("nope"), Err(SnapshotError::UnknownItem(_))));
    }

    #[test]
    fn reexport_cycles_terminate() {
        let s = load_snapshot(&doc(serde_json::json!({
            "m0": {"kind": "module", "name": "x", "visibility": "public", "items": ["a"]},
            "a": {"kind": "module", "name": "a", "visibility": "public", "reexports": [{"target": "m0", "name": "root"}]}
        })))
        .unwrap();
        let paths: Vec<_> = s
            .item_importable_paths("m0")
            .unwrap()
            .iter()
            .map(|p| p.joined())
            .collect();
        assert_eq!(paths, ["x", "x::a::root"]);
    }

    #[test]
    fn repr_int_is_derived_from_attributes() {
        let s = load_snapshot(&doc(serde_json::json!({
            "m0": {"kind": "module", "name": "x", "visibility": "public", "items": ["e"]},
            "e": {"kind": "enum", "name": "E", "visibility": "public", "attributes": ["#[repr(u8)]"]}
        })))
        .unwrap();
        assert!(matches!(&s.items["e"].data, KindData::Enum { repr_int: Some(r), .. } if r == "u8"));
    }
}
