//! Graphviz export.

use std::fmt::Write;

use minbrain_core::{StateRelabeledTS, TransitionSystem};

/// Escapes a string for use inside a double-quoted DOT id.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// States as nodes annotated with their label, edges annotated with the
/// edge label. The initial state is drawn with a double circle.
pub fn to_dot(srts: &StateRelabeledTS, name: &str) -> String {
    render(&srts.system, name, |s| Some(srts.label_of(s)))
}

/// A system without state labels.
pub fn system_to_dot(ts: &TransitionSystem, name: &str) -> String {
    render(ts, name, |_| None)
}

fn render<'a>(ts: &TransitionSystem, name: &str, label: impl Fn(usize) -> Option<&'a str>) -> String {
    let mut out = String::new();
    writeln!(out, "digraph \"{}\" {{", escape(name)).unwrap();
    out.push_str("  rankdir=LR;\n  node [shape=circle];\n");
    for (s, n) in ts.states().iter().enumerate() {
        let shape = if ts.initial() == Some(s) { ", shape=doublecircle" } else { "" };
        match label(s) {
            Some(l) => writeln!(
                out,
                "  \"{}\" [label=\"{}\\n{}\"{shape}];",
                escape(n),
                escape(n),
                escape(l)
            ),
            None => writeln!(out, "  \"{}\" [label=\"{}\"{shape}];", escape(n), escape(n)),
        }
        .unwrap();
    }
    for (f, l, t) in ts.named_edges() {
        writeln!(out, "  \"{}\" -> \"{}\" [label=\"{}\"];", escape(f), escape(t), escape(l)).unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_quotes_and_backslashes() {
        assert_eq!(escape(r#"a"b\c"#), r#"a\"b\\c"#);
    }
}
