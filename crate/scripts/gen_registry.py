#!/usr/bin/env python3
"""Regenerates the desk-scale registry under fixtures/registry/.

Five crates, twelve releases, with breaks seeded by hand:

    alpha    1.0.0 -> 1.1.0   function_missing, enum_variant_added, function_must_use_added
             1.1.0 -> 2.0.0   major bump, skipped
    beta     0.1.0 -> 0.1.1   published before the cutoff, skipped
             0.1.1 -> 0.1.2   struct_missing x2, inherent_method_missing
    gamma    2.0.1 is yanked; 2.0.0 -> 2.1.0 only removes doc-hidden items
    delta    a single release
    epsilon  1.0.1 has an unreadable snapshot

The expected CSVs in fixtures/crater/ are written by hand.
"""

import json
import os

from gen_fixtures import ROOT, Crate

REG = os.path.join(ROOT, "fixtures", "registry")


def alpha(version):
    c = Crate("alpha", version)
    variants = [("Fast", "plain", []), ("Slow", "plain", [])]
    if version != "1.0.0":
        variants.append(("Balanced", "plain", []))
    c.enum("Mode", "Mode", variants)
    c.impls("Mode")
    if version == "1.0.0":
        c.function("start", "start", [])
    run_attrs = ["#[must_use]"] if version != "1.0.0" else []
    c.function("run", "run", ["mode"], attributes=run_attrs)
    if version == "2.0.0":
        c.function("stop", "stop", [])
    return c


def beta(version):
    c = Crate("beta", version)
    if version == "0.1.0":
        c.enum("Legacy", "Legacy", [("Old", "plain", [])])
        c.impls("Legacy")
    if version != "0.1.2":
        c.struct("Reader", "Reader", "plain", [("pos", "private", "usize")])
        c.impls("Reader")
        c.struct("Writer", "Writer", "plain", [("len", "private", "usize")])
        c.impls("Writer")
    methods = [dict(name="new", parameters=[]), dict(name="len", parameters=["self"])]
    if version != "0.1.2":
        methods.append(dict(name="clear", parameters=["self"]))
    c.struct("Buffer", "Buffer", "plain", [("data", "private", "Vec<u8>")])
    c.impls("Buffer", inherent=methods)
    return c


def gamma(version):
    c = Crate("gamma", version)
    c.struct("Client", "Client", "plain", [("url", "private", "String")])
    c.impls("Client", inherent=[dict(name="connect", parameters=["url"])])
    if version == "2.0.1":
        # The yanked release drops a public function; nothing may see it.
        pass
    else:
        c.function("fetch", "fetch", ["client"])
    if version != "2.1.0":
        c.function("hidden", "__gamma_internal", [], attributes=["#[doc(hidden)]"])
    c.module("private", "__private", attributes=["#[doc(hidden)]"])
    if version != "2.1.0":
        c.struct("Token", "Token", "unit", module="private")
        c.impls("Token")
    return c


def delta(version):
    c = Crate("delta", version)
    c.function("compute", "compute", ["input"])
    return c


def epsilon(version):
    c = Crate("epsilon", version)
    c.struct("Grid", "Grid", "plain", [("cells", "private", "Vec<u8>")])
    c.impls("Grid")
    return c


RELEASES = [
    # (crate, builder, version, date, yanked)
    ("alpha", alpha, "1.0.0", "2018-03-01", False),
    ("alpha", alpha, "1.1.0", "2018-06-01", False),
    ("alpha", alpha, "2.0.0", "2019-01-15", False),
    ("beta", beta, "0.1.0", "2016-02-01", False),
    ("beta", beta, "0.1.1", "2016-08-01", False),
    ("beta", beta, "0.1.2", "2018-02-01", False),
    ("gamma", gamma, "2.0.0", "2019-04-01", False),
    ("gamma", gamma, "2.0.1", "2019-04-02", True),
    ("gamma", gamma, "2.1.0", "2019-05-01", False),
    ("delta", delta, "0.3.0", "2020-01-01", False),
    ("epsilon", epsilon, "1.0.0", "2020-02-01", False),
    ("epsilon", epsilon, "1.0.1", "2020-03-01", False),
]

RANK = ["alpha", "beta", "gamma", "delta", "epsilon"]


def index_path(name):
    if len(name) <= 2:
        return os.path.join(str(len(name)), name)
    if len(name) == 3:
        return os.path.join("3", name[0], name)
    return os.path.join(name[:2], name[2:4], name)


def main():
    lines = {}
    for name, build, version, date, yanked in RELEASES:
        crate = build(version)
        snap = f"snapshots/{name}/{version}.json"
        manifest = f"manifests/{name}/{version}/Cargo.toml"
        os.makedirs(os.path.dirname(os.path.join(REG, snap)), exist_ok=True)
        with open(os.path.join(REG, snap), "w") as f:
            if name == "epsilon" and version == "1.0.1":
                f.write('{"format_version": 1, "crate_name": "epsilon", "items": \n')
            else:
                json.dump(crate.document(), f, indent=2, sort_keys=True)
                f.write("\n")
        os.makedirs(os.path.dirname(os.path.join(REG, manifest)), exist_ok=True)
        with open(os.path.join(REG, manifest), "w") as f:
            f.write(crate.manifest())
        record = {"name": name, "vers": version, "yanked": yanked, "published_at": date,
                  "snapshot": snap, "manifest": manifest}
        lines.setdefault(name, []).append(json.dumps(record, sort_keys=True))
    for name, records in lines.items():
        path = os.path.join(REG, index_path(name))
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w") as f:
            f.write("\n".join(records) + "\n")
    with open(os.path.join(REG, "crates.txt"), "w") as f:
        f.write("# most downloaded first\n" + "\n".join(RANK) + "\n")


if __name__ == "__main__":
    main()
