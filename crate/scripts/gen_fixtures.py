#!/usr/bin/env python3
"""Regenerates the snapshot fixtures under test_crates/ and fixtures/snapshots/.

Every crate pair is a mutation of one kitchen-sink crate `x`. Run from the
repository root:

    python3 scripts/gen_fixtures.py

expected.txt files are NOT generated; they are written by hand and checked
into the repository next to each pair.
"""

import json
import os

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
AUTO = ["Send", "Sync", "Unpin", "UnwindSafe", "RefUnwindSafe"]


class Crate:
    def __init__(self, name, version):
        self.name = name
        self.version = version
        self.items = {}
        self.line = 1
        self.items["root"] = {"kind": "module", "name": name, "visibility": "public", "items": []}

    def _span(self, lines=1):
        span = {"filename": "src/lib.rs", "begin_line": self.line}
        self.line += lines
        return span

    def add(self, id, item, module="root"):
        self.items[id] = item
        if module is not None:
            self.items[module]["items"].append(id)
        return id

    def module(self, id, name, visibility="public", parent="root", attributes=()):
        item = {"kind": "module", "name": name, "visibility": visibility, "items": [], "span": self._span()}
        if attributes:
            item["attributes"] = list(attributes)
        return self.add(id, item, parent)

    def reexport(self, module, target, name=None):
        r = {"target": target}
        if name:
            r["name"] = name
        self.items[module].setdefault("reexports", []).append(r)

    def impls(self, owner, auto=AUTO, derives=(), inherent=None, traits=()):
        """Attach impls to `owner`; `inherent` is a list of method specs."""
        out = []
        for t in auto:
            id = f"{owner}.auto.{t}"
            self.items[id] = {"kind": "impl", "name": "", "visibility": "public",
                              "provenance": "auto_trait", "implemented_trait_name": t}
            out.append(id)
        for t in derives:
            id = f"{owner}.derive.{t}"
            self.items[id] = {"kind": "impl", "name": "", "visibility": "public",
                              "provenance": "derive", "implemented_trait_name": t,
                              "implemented_trait_path": ["core", "clone" if t == "Clone" else "fmt", t]}
            out.append(id)
        for t in traits:
            id = f"{owner}.impl.{t}"
            self.items[id] = {"kind": "impl", "name": "", "visibility": "public",
                              "implemented_trait_name": t, "implemented_trait_path": [self.name, t]}
            out.append(id)
        if inherent is not None:
            id = f"{owner}.inherent"
            self._span()
            methods = [self.method(f"{owner}.{m['name']}", **m) for m in inherent]
            self.line += 1
            self.items[id] = {"kind": "impl", "name": "", "visibility": "public", "methods": methods}
            out.append(id)
        self.items[owner]["impls"] = out

    def method(self, id, name, parameters, visibility="public", unsafe=False, const=False, attributes=()):
        item = {"kind": "method", "name": name, "visibility": visibility, "parameters": list(parameters),
                "span": self._span(3)}
        if unsafe:
            item["is_unsafe"] = True
        if const:
            item["is_const"] = True
        if attributes:
            item["attributes"] = list(attributes)
        self.items[id] = item
        return id

    def struct(self, id, name, kind, fields=(), attributes=(), module="root", visibility="public", type_params=()):
        """fields: (name, visibility, type) triples."""
        item = {"kind": "struct", "name": name, "visibility": visibility, "struct_kind": kind,
                "span": self._span()}
        if attributes:
            item["attributes"] = list(attributes)
        if type_params:
            item["type_params"] = [{"name": p} for p in type_params]
        ids = []
        for fname, fvis, ftype in fields:
            fid = f"{id}.{fname}"
            self.items[fid] = {"kind": "field", "name": fname, "visibility": fvis, "declared_type": ftype,
                               "span": self._span()}
            ids.append(fid)
        self.line += 1
        item["fields"] = ids
        return self.add(id, item, module)

    def enum(self, id, name, variants, attributes=(), module="root"):
        """variants: (name, kind, [field names]) with kind plain/tuple/struct."""
        item = {"kind": "enum", "name": name, "visibility": "public", "span": self._span()}
        if attributes:
            item["attributes"] = list(attributes)
        ids = []
        for vname, vkind, vfields in variants:
            vid = f"{id}.{vname}"
            v = {"kind": f"variant_{vkind}", "name": vname, "visibility": "public", "span": self._span()}
            fids = []
            for fname in vfields:
                fid = f"{vid}.{fname}"
                self.items[fid] = {"kind": "field", "name": fname, "visibility": "public", "declared_type": "u32"}
                fids.append(fid)
            if vkind != "plain":
                v["fields"] = fids
            self.items[vid] = v
            ids.append(vid)
        self.line += 1
        item["variants"] = ids
        return self.add(id, item, module)

    def function(self, id, name, parameters, unsafe=False, attributes=(), module="root", visibility="public"):
        item = {"kind": "function", "name": name, "visibility": visibility, "parameters": list(parameters),
                "span": self._span(3)}
        if unsafe:
            item["is_unsafe"] = True
        if attributes:
            item["attributes"] = list(attributes)
        return self.add(id, item, module)

    def trait(self, id, name, methods, unsafe=False, attributes=()):
        item = {"kind": "trait", "name": name, "visibility": "public", "span": self._span()}
        if unsafe:
            item["is_unsafe"] = True
        if attributes:
            item["attributes"] = list(attributes)
        item["methods"] = [self.method(f"{id}.{m}", m, ["self"]) for m in methods]
        self.line += 1
        return self.add(id, item)

    def document(self):
        return {
            "format_version": 1,
            "crate_name": self.name,
            "crate_version": self.version,
            "root_module": "root",
            "items": self.items,
        }

    def manifest(self):
        return f'[package]\nname = "{self.name}"\nversion = "{self.version}"\n\n[features]\ndefault = []\n'


def kitchen_sink(version, m=None):
    """The shared fixture crate. `m` names the mutation applied for a pair."""
    c = Crate("x", version)

    # Point: plain struct, all fields public, constructible.
    point_fields = [("x", "public", "i64"), ("y", "public", "i64")]
    if m == "struct_pub_field_missing":
        point_fields = [("x", "public", "i64")]
    if m == "constructible_struct_adds_field":
        point_fields.append(("z", "public", "i64"))
    if m == "constructible_struct_adds_private_field":
        point_fields.append(("cache", "private", "u64"))
    if m not in ("struct_missing", "multiple_removals"):
        attrs = ["#[must_use]"] if m == "struct_must_use_added" else []
        c.struct("Point", "Point", "plain", point_fields, attributes=attrs)
        derives = ["Debug"] if m == "derive_trait_impl_removed" else ["Debug", "Clone"]
        norm_attrs = ["#[must_use]"] if m == "inherent_method_must_use_added" else []
        methods = [
            dict(name="new", parameters=["x", "y"]),
            dict(name="origin", parameters=[], const=m != "inherent_method_const_removed"),
            dict(name="scale", parameters=["self", "k"] + (["offset"] if m == "method_parameter_count_changed" else []),
                 unsafe=m == "inherent_method_unsafe_added"),
            dict(name="reset", parameters=["self"]),
        ]
        if m != "inherent_method_missing":
            methods.append(dict(name="norm", parameters=["self"], attributes=norm_attrs))
        c.impls("Point", derives=derives, inherent=methods,
                traits=["Render"] if m != "trait_missing" else [])

    # Handle: tuple struct.
    if m == "tuple_struct_to_plain_struct":
        c.struct("Handle", "Handle", "plain", [("id", "public", "u32")])
    else:
        c.struct("Handle", "Handle", "tuple", [("0", "public", "u32")])
    auto = [t for t in AUTO if not (m == "auto_trait_impl_removed" and t == "Sync")]
    c.impls("Handle", auto=auto, derives=["Debug"])

    # Marker: unit struct.
    if m == "unit_struct_changed_kind":
        c.struct("Marker", "Marker", "tuple", [("0", "public", "u8")])
    else:
        c.struct("Marker", "Marker", "unit")
    c.impls("Marker")

    # Config: repr(C), has a private field, so it is not externally constructible.
    cfg_attrs = [] if m == "struct_repr_c_removed" else ["#[repr(C)]"]
    cfg_fields = [("verbose", "public", "bool"), ("inner", "private", "u32")]
    if m == "nonconstructible_struct_adds_field":
        cfg_fields.insert(1, ("level", "public", "u8"))
    c.struct("Config", "Config", "plain", cfg_fields, attributes=cfg_attrs)
    c.impls("Config", derives=["Debug", "Clone"], inherent=[dict(name="builder", parameters=[])])

    # Wrapper: a generic struct.
    c.struct("Wrapper", "Wrapper", "tuple", [("0", "public", "T")], type_params=["T"])
    c.impls("Wrapper", auto=[])

    # Enums.
    color = [("Red", "plain", []), ("Green", "plain", []), ("Blue", "plain", []), ("Cyan", "plain", [])]
    if m == "enum_variant_missing":
        color = color[:3]
    if m == "enum_variant_added":
        color.append(("Magenta", "plain", []))
    if m not in ("enum_missing", "multiple_removals"):
        attrs = []
        if m == "enum_marked_non_exhaustive":
            attrs.append("#[non_exhaustive]")
        if m == "enum_must_use_added":
            attrs.append("#[must_use]")
        c.enum("Color", "Color", color, attributes=attrs)
        c.impls("Color", derives=["Debug", "Clone"])

    circle = ["0"]
    if m == "enum_tuple_variant_field_missing":
        circle = []
    if m == "enum_tuple_variant_field_added":
        circle = ["0", "1"]
    rect = ["width", "height"]
    if m == "enum_struct_variant_field_missing":
        rect = ["width"]
    if m == "enum_struct_variant_field_added":
        rect = ["width", "height", "depth"]
    c.enum("Shape", "Shape", [("Circle", "tuple", circle), ("Rect", "struct", rect), ("Empty", "plain", [])])
    c.impls("Shape")

    level_attrs = ["#[repr(u8)]"] if m != "enum_repr_int_removed" else []
    c.enum("Level", "Level", [("Low", "plain", []), ("High", "plain", [])], attributes=level_attrs)
    c.impls("Level")

    event = [("Start", "plain", []), ("Stop", "plain", [])]
    if m == "non_exhaustive_enum_variant_added":
        event.append(("Pause", "plain", []))
    c.enum("Event", "Event", event, attributes=["#[non_exhaustive]"])
    c.impls("Event")

    # Traits.
    if m != "trait_missing":
        render_attrs = ["#[must_use]"] if m == "trait_must_use_added" else []
        c.trait("Render", "Render", ["render"], unsafe=m == "trait_unsafe_added", attributes=render_attrs)
    c.trait("RawAccess", "RawAccess", ["as_ptr"], unsafe=m != "trait_unsafe_removed")

    # Functions.
    if m not in ("function_missing", "multiple_removals"):
        c.function("init", "init", [])
    parse_params = ["input"] + (["strict"] if m == "function_parameter_count_changed" else [])
    c.function("parse", "parse", parse_params)
    compute_attrs = ["#[must_use]"] if m == "function_must_use_added" else []
    c.function("compute", "compute", ["a", "b"], unsafe=m == "function_unsafe_added", attributes=compute_attrs)
    if m != "hidden_function_removed":
        c.function("hidden", "__private_helper", [], attributes=["#[doc(hidden)]"])
    if m == "function_added":
        c.function("shutdown", "shutdown", [])

    # Modules.
    if m != "module_removed":
        if m == "function_moved_and_reexported":
            c.module("util", "util")
            c.module("imp", "imp", visibility="private", parent="util")
            c.function("helper", "helper", ["value"], module="imp")
            c.reexport("util", "helper")
        else:
            c.module("util", "util")
            c.function("helper", "helper", ["value"], module="util")

    # A doc-hidden module whose contents are not public API.
    c.module("internals", "__internals", attributes=["#[doc(hidden)]"])
    if m != "hidden_module_struct_removed":
        c.struct("Slot", "Slot", "plain", [("raw", "public", "usize")], module="internals")
        c.impls("Slot", inherent=[dict(name="get", parameters=["self"])])

    if m == "derive_replaced_by_manual_impl":
        # Clone on Config moves from a derive to a hand-written impl.
        del c.items["Config.derive.Clone"]
        c.items["Config"]["impls"].remove("Config.derive.Clone")
        c.items["Config.impl.Clone"] = {"kind": "impl", "name": "", "visibility": "public",
                                        "implemented_trait_name": "Clone",
                                        "implemented_trait_path": ["core", "clone", "Clone"]}
        c.items["Config"]["impls"].append("Config.impl.Clone")
    return c


def motivating(version, bar_is_thread_safe):
    """Two structs `Foo` and `Bar`; in the later release `Bar` holds an `Rc`."""
    c = Crate("x", version)
    c.struct("Foo", "Foo", "plain", [("value", "public", "i64")])
    c.impls("Foo")
    c.struct("Bar", "Bar", "plain", [("value", "private", "i64" if bar_is_thread_safe else "Rc<i64>")])
    c.impls("Bar", auto=AUTO if bar_is_thread_safe else ["Unpin", "UnwindSafe", "RefUnwindSafe"])
    return c


def enum_missing_example(version, m):
    c = Crate("x", version)
    c.enum("Color", "Color", [("Red", "plain", []), ("Green", "plain", [])])
    c.impls("Color", auto=[])
    if m != "removed":
        c.enum("Shape", "Shape", [("Circle", "plain", [])])
        c.impls("Shape", auto=[])
    c.enum("Mode", "Mode", [("Fast", "plain", [])])
    c.impls("Mode", auto=[])
    if m == "removed":
        c.items["Mode"]["visibility"] = "crate"
    return c


MUTATIONS = [
    "auto_trait_impl_removed",
    "constructible_struct_adds_field",
    "constructible_struct_adds_private_field",
    "derive_trait_impl_removed",
    "enum_marked_non_exhaustive",
    "enum_missing",
    "enum_must_use_added",
    "enum_repr_int_removed",
    "enum_struct_variant_field_added",
    "enum_struct_variant_field_missing",
    "enum_tuple_variant_field_added",
    "enum_tuple_variant_field_missing",
    "enum_variant_added",
    "enum_variant_missing",
    "function_missing",
    "function_must_use_added",
    "function_parameter_count_changed",
    "function_unsafe_added",
    "inherent_method_const_removed",
    "inherent_method_missing",
    "inherent_method_must_use_added",
    "inherent_method_unsafe_added",
    "method_parameter_count_changed",
    "struct_missing",
    "struct_must_use_added",
    "struct_pub_field_missing",
    "struct_repr_c_removed",
    "trait_missing",
    "trait_must_use_added",
    "trait_unsafe_added",
    "trait_unsafe_removed",
    "tuple_struct_to_plain_struct",
    "unit_struct_changed_kind",
    # Pairs that exercise several lints or none at all.
    "multiple_removals",
    "module_removed",
    "hidden_function_removed",
    "hidden_module_struct_removed",
    "function_moved_and_reexported",
    "function_added",
    "non_exhaustive_enum_variant_added",
    "nonconstructible_struct_adds_field",
    "derive_replaced_by_manual_impl",
    "no_change",
]


def write_json(path, doc):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def write_side(dir, crate):
    os.makedirs(dir, exist_ok=True)
    write_json(os.path.join(dir, "snapshot.json"), crate.document())
    with open(os.path.join(dir, "Cargo.toml"), "w") as f:
        f.write(crate.manifest())


def write_pair(name, baseline, current):
    base = os.path.join(ROOT, "test_crates", name)
    write_side(os.path.join(base, "baseline"), baseline)
    write_side(os.path.join(base, "current"), current)


def main():
    for m in MUTATIONS:
        write_pair(m, kitchen_sink("0.1.0"), kitchen_sink("0.2.0", m))
    write_pair("motivating_auto_trait", motivating("3.1.0", True), motivating("3.2.0", False))

    snaps = os.path.join(ROOT, "fixtures", "snapshots")
    write_json(os.path.join(snaps, "motivating_bar_baseline.json"), motivating("3.1.0", True).document())
    write_json(os.path.join(snaps, "motivating_bar_current.json"), motivating("3.2.0", False).document())
    write_json(os.path.join(snaps, "enum_missing_baseline.json"), enum_missing_example("1.0.0", None).document())
    write_json(os.path.join(snaps, "enum_missing_current.json"), enum_missing_example("1.1.0", "removed").document())
    write_json(os.path.join(snaps, "kitchen_sink.json"), kitchen_sink("0.1.0").document())


if __name__ == "__main__":
    main()
