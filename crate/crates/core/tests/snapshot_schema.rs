//! `docs/snapshot.schema.json` stays in step with the loader: every fixture
//! the loader accepts also fits the schema's per-kind key sets, and the
//! schema rejects keys the loader rejects.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use breakcheck::snapshot::load_snapshot;
use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Kind name -> (allowed keys, required keys), read from the schema.
fn kind_rules(schema: &Value) -> BTreeMap<String, (Vec<String>, Vec<String>)> {
    let strings = |v: &Value| -> Vec<String> {
        v.as_array()
            .unwrap()
            .iter()
            .map(|s| s.as_str().unwrap().to_string())
            .collect()
    };
    schema["$defs"]["item"]["allOf"]
        .as_array()
        .unwrap()
        .iter()
        .map(|rule| {
            let kind = rule["if"]["properties"]["kind"]["const"].as_str().unwrap().to_string();
            let then = &rule["then"];
            let allowed = then["properties"].as_object().unwrap().keys().cloned().collect();
            (kind, (allowed, strings(&then["required"])))
        })
        .collect()
}

fn fixture_files() -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![repo().join("test_crates"), repo().join("fixtures")];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "json") {
                out.push(p);
            }
        }
    }
    out
}

#[test]
fn fixtures_fit_the_schema() {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(repo().join("docs/snapshot.schema.json")).unwrap()).unwrap();
    let rules = kind_rules(&schema);
    assert_eq!(rules.len(), 11);
    let mut checked = 0;
    for file in fixture_files() {
        let bytes = std::fs::read(&file).unwrap();
        if load_snapshot(&bytes).is_err() {
            continue;
        }
        let doc: Value = serde_json::from_slice(&bytes).unwrap();
        for (id, item) in doc["items"].as_object().unwrap() {
            let kind = item["kind"].as_str().unwrap();
            let (allowed, required) = &rules[kind];
            for key in item.as_object().unwrap().keys() {
                assert!(
                    allowed.contains(key),
                    "{}: {id}: `{key}` not in schema for {kind}",
                    file.display()
                );
            }
            for key in required {
                assert!(item.get(key).is_some(), "{}: {id}: missing `{key}`", file.display());
            }
        }
        checked += 1;
    }
    assert!(checked > 100, "{checked}");
}

fn minimal_item(kind: &str) -> Value {
    let mut item = serde_json::json!({"kind": kind, "name": "t", "visibility": "public"});
    match kind {
        "struct" => item["struct_kind"] = serde_json::json!("unit"),
        "field" => item["declared_type"] = serde_json::json!("u8"),
        "function" | "method" => item["parameters"] = serde_json::json!([]),
        _ => {}
    }
    item
}

/// A snapshot holding `item` unattached next to an empty root module.
fn wrap(item: Value) -> Value {
    serde_json::json!({
        "format_version": 1, "crate_name": "c", "crate_version": "1.0.0", "root_module": "m",
        "items": {"m": {"kind": "module", "name": "c", "visibility": "public", "items": []}, "t": item}
    })
}

#[test]
fn schema_and_loader_agree_on_disallowed_keys() {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(repo().join("docs/snapshot.schema.json")).unwrap()).unwrap();
    let rules = kind_rules(&schema);
    let every_key: Vec<&String> = {
        let mut keys: Vec<&String> = rules.values().flat_map(|(a, _)| a).collect();
        keys.sort();
        keys.dedup();
        keys
    };
    for (kind, (allowed, _)) in &rules {
        assert!(
            load_snapshot(wrap(minimal_item(kind)).to_string().as_bytes()).is_ok(),
            "{kind}"
        );
        for key in &every_key {
            if allowed.contains(key) {
                continue;
            }
            let mut item = minimal_item(kind);
            item[key.as_str()] = match key.as_str() {
                "is_unsafe" | "is_const" | "is_negative" | "doc_hidden" => serde_json::json!(false),
                "span" => serde_json::json!({"filename": "f", "begin_line": 1}),
                "declared_type" | "repr_int" | "implemented_trait_name" => serde_json::json!("u8"),
                "struct_kind" => serde_json::json!("unit"),
                "provenance" => serde_json::json!("ordinary"),
                _ => serde_json::json!([]),
            };
            let doc = wrap(item);
            assert!(
                load_snapshot(doc.to_string().as_bytes()).is_err(),
                "loader accepts `{key}` on {kind} but the schema does not"
            );
        }
    }
}

#[test]
fn documented_example_loads() {
    let text = std::fs::read_to_string(repo().join("docs/snapshot-format.md")).unwrap();
    let start = text.find("```json\n").unwrap() + 8;
    let end = start + text[start..].find("```").unwrap();
    let snapshot = load_snapshot(&text.as_bytes()[start..end]).unwrap();
    assert!(snapshot
        .item_at_path(&["x".into(), "Mode".into()])
        .unwrap()
        .is_non_exhaustive());
}
