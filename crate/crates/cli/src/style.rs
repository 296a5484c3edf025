//! Diagnostics on stderr. Colored only when stderr is a terminal and
//! `NO_COLOR` is unset or empty.

use std::io::IsTerminal;

fn colored() -> bool {
    std::io::stderr().is_terminal() && std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty())
}

fn paint(code: &str, text: &str) -> String {
    if colored() {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

pub fn error(message: &str) {
    eprintln!("{}: {message}", paint("1;31", "error"));
}

/// Cargo-style right-aligned status line.
pub fn status(verb: &str, message: &str) {
    eprintln!("{} {message}", paint("1;32", &format!("{verb:>12}")));
}

pub fn warning(message: &str) {
    eprintln!("{}: {message}", paint("1;33", "warning"));
}
