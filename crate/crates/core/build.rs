use std::fmt::Write as _;
use std::path::PathBuf;

fn main() {
    let manifest_dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    let lint_dir = manifest_dir
        .join("../../lints")
        .canonicalize()
        .expect("lints directory exists");
    println!("cargo:rerun-if-changed={}", lint_dir.display());

    let mut files: Vec<PathBuf> = std::fs::read_dir(&lint_dir)
        .expect("read lints directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "ron"))
        .collect();
    files.sort();

    let mut out = String::from("pub static EMBEDDED_LINTS: &[(&str, &str)] = &[\n");
    for path in &files {
        println!("cargo:rerun-if-changed={}", path.display());
        let name = path.file_name().unwrap().to_str().unwrap();
        writeln!(out, "    ({name:?}, include_str!({:?})),", path.display().to_string()).unwrap();
    }
    out.push_str("];\n");
    let dest = PathBuf::from(std::env::var("OUT_DIR").unwrap()).join("embedded_lints.rs");
    std::fs::write(dest, out).expect("write embedded lint table");
}
