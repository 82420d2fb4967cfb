use rustpython_parser::ast::{self, Expr, Visitor};

use crate::python::{parse_suite, SyntaxError};

/// Replaces notebook shell escapes and magics (`!pip …`, `%matplotlib …`)
/// with `pass` so the rest of the script still parses. Line count and
/// indentation are preserved.
pub fn mask_magics(script: &str) -> String {
    let mut out = String::with_capacity(script.len());
    for line in script.split_inclusive('\n') {
        let body = line.trim_start_matches([' ', '\t']);
        if body.starts_with('%') || body.starts_with('!') {
            out.push_str(&line[..line.len() - body.len()]);
            out.push_str("pass");
            if line.ends_with('\n') {
                out.push('\n');
            }
        } else {
            out.push_str(line);
        }
    }
    out
}

#[derive(Default)]
struct CallCollector {
    calls: Vec<(usize, String)>,
}

impl Visitor for CallCollector {
    fn visit_expr_call(&mut self, node: ast::ExprCall) {
        match node.func.as_ref() {
            Expr::Name(n) => self.calls.push((usize::from(n.range.start()), n.id.to_string())),
            Expr::Attribute(a) => {
                let offset = usize::from(a.range.end()).saturating_sub(a.attr.len());
                self.calls.push((offset, a.attr.to_string()));
            }
            _ => {}
        }
        self.generic_visit_expr_call(node);
    }

    // The generated visitor stops at the following node types; descend
    // into every expression they hold.

    fn visit_keyword(&mut self, node: ast::Keyword) {
        self.visit_expr(node.value);
    }

    fn visit_comprehension(&mut self, node: ast::Comprehension) {
        self.visit_expr(node.target);
        self.visit_expr(node.iter);
        for e in node.ifs {
            self.visit_expr(e);
        }
    }

    fn visit_arguments(&mut self, node: ast::Arguments) {
        let with_defaults = node.posonlyargs.into_iter().chain(node.args).chain(node.kwonlyargs);
        for a in with_defaults {
            self.visit_arg(a.def);
            if let Some(d) = a.default {
                self.visit_expr(*d);
            }
        }
        for a in node.vararg.into_iter().chain(node.kwarg) {
            self.visit_arg(*a);
        }
    }

    fn visit_arg(&mut self, node: ast::Arg) {
        if let Some(a) = node.annotation {
            self.visit_expr(*a);
        }
    }

    fn visit_withitem(&mut self, node: ast::WithItem) {
        self.visit_expr(node.context_expr);
        if let Some(v) = node.optional_vars {
            self.visit_expr(*v);
        }
    }

    fn visit_match_case(&mut self, node: ast::MatchCase) {
        if let Some(g) = node.guard {
            self.visit_expr(*g);
        }
        for s in node.body {
            self.visit_stmt(s);
        }
    }
}

/// Terminal name of every call expression, in source order with duplicates.
pub fn extract_call_names(script: &str) -> Result<Vec<String>, SyntaxError> {
    let suite = parse_suite(&mask_magics(script), "<script>")?;
    let mut collector = CallCollector::default();
    for stmt in suite {
        collector.visit_stmt(stmt);
    }
    collector.calls.sort_by_key(|(offset, _)| *offset);
    Ok(collector.calls.into_iter().map(|(_, name)| name).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_names_in_order() {
        assert_eq!(extract_call_names("qft(x)\nbuilder.qpe(y)\n").unwrap(), ["qft", "qpe"]);
        assert_eq!(extract_call_names("f(g(x))").unwrap(), ["f", "g"]);
        assert!(extract_call_names("x = 1\n").unwrap().is_empty());
    }

    #[test]
    fn chained_and_nested_calls() {
        assert_eq!(
            extract_call_names("a.b(c()).d(e)\n@deco(1)\ndef f(): return [h(i) for i in r()]\n").unwrap(),
            ["b", "c", "d", "deco", "h", "r"]
        );
        assert_eq!(
            extract_call_names("f(x=g())\nwith open(p) as fh:\n    pass\ndef k(a=m(), *, b: t() = n()): pass\nz = lambda q=w(): q\n").unwrap(),
            ["f", "g", "open", "m", "t", "n", "w"]
        );
        assert_eq!(
            extract_call_names("match v:\n    case 1 if ok():\n        run()\n").unwrap(),
            ["ok", "run"]
        );
    }

    #[test]
    fn duplicates_preserved() {
        assert_eq!(extract_call_names("for i in range(3):\n    h(i)\nh(0)\n").unwrap(), ["range", "h", "h"]);
    }

    #[test]
    fn magics_masked() {
        let src = "!pip install x\nif True:\n    %time run()\nqft(1)\n";
        assert_eq!(mask_magics(src), "pass\nif True:\n    pass\nqft(1)\n");
        assert_eq!(extract_call_names(src).unwrap(), ["qft"]);
    }

    #[test]
    fn syntax_error_reported() {
        assert!(extract_call_names("def f(:\n").is_err());
    }
}
