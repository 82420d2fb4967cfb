use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use rayon::prelude::*;
use rustpython_parser::ast::{self, Constant, Expr, Stmt};
use tracing::warn;

use super::{ConceptKind, ExtractError, ExtractionRule, Inclusion, RawConcept};
use crate::fsutil::{list_files, relative_slash};
use crate::knowledge_base::Concept;
use crate::python::{docstring, parse_suite, source_text, SyntaxError};

/// A file that could not be read or parsed; extraction continued without it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionWarning {
    pub file: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub concepts: Vec<RawConcept>,
    pub warnings: Vec<ExtractionWarning>,
}

/// Collects documented components of the package selected by `rule`.
///
/// Sources are parsed, never executed. Files are visited in bytewise order
/// of their relative paths, so repeated runs give identical output.
pub fn extract_concepts(rule: &ExtractionRule, source_root: &Path) -> Result<Extraction, ExtractError> {
    if !source_root.is_dir() {
        return Err(ExtractError::MissingRoot(source_root.to_path_buf()));
    }
    let package_dir = source_root.join(&rule.root_relative_path);
    if !package_dir.is_dir() {
        return Err(ExtractError::MissingRoot(package_dir));
    }
    let mut extraction = match rule.inclusion {
        Inclusion::PublicApiList => extract_public_api(rule, source_root, &package_dir)?,
        Inclusion::DocumentedTypeDefinitions | Inclusion::DocumentedPublicDefinitions => {
            scan_package(rule, source_root, &package_dir)
        }
    };
    for w in &extraction.warnings {
        warn!(file = %w.file.display(), "{}", w.message);
    }
    extraction.warnings.sort_by(|a, b| a.file.cmp(&b.file));
    Ok(extraction)
}

/// A definition header and the pieces of it that extraction consumes.
#[derive(Debug, Clone)]
struct Definition {
    /// Dotted nesting chain inside the module (`Outer.Inner`).
    local_path: String,
    name: String,
    kind: ConceptKind,
    docstring: Option<String>,
    deprecated: bool,
}

fn is_deprecated(doc: Option<&str>, decorators: &[&str]) -> bool {
    let doc_hit = doc.is_some_and(|d| d.to_lowercase().contains("deprecated"));
    doc_hit
        || decorators.iter().any(|d| {
            let d = d.to_lowercase();
            d.contains("deprecated") || d.contains("deprecate_func")
        })
}

fn decorator_texts<'a>(source: &'a str, decorators: &[Expr]) -> Vec<&'a str> {
    decorators.iter().map(|d| source_text(source, d)).collect()
}

/// Decorators on a class's `__init__`; deprecating the constructor
/// deprecates the type.
fn init_decorators<'a>(source: &'a str, body: &[Stmt]) -> Vec<&'a str> {
    body.iter()
        .find_map(|s| match s {
            Stmt::FunctionDef(f) if f.name.as_str() == "__init__" => Some(decorator_texts(source, &f.decorator_list)),
            _ => None,
        })
        .unwrap_or_default()
}

fn definition_of(source: &str, stmt: &Stmt, prefix: &str) -> Option<Definition> {
    let (name, body, decorators, kind) = match stmt {
        Stmt::FunctionDef(f) => (f.name.as_str(), &f.body, &f.decorator_list, ConceptKind::Callable),
        Stmt::AsyncFunctionDef(f) => (f.name.as_str(), &f.body, &f.decorator_list, ConceptKind::Callable),
        Stmt::ClassDef(c) => (c.name.as_str(), &c.body, &c.decorator_list, ConceptKind::TypeDefinition),
        _ => return None,
    };
    let doc = docstring(body);
    let mut decos = decorator_texts(source, decorators);
    if kind == ConceptKind::TypeDefinition {
        decos.extend(init_decorators(source, body));
    }
    Some(Definition {
        local_path: if prefix.is_empty() { name.to_string() } else { format!("{prefix}.{name}") },
        name: name.to_string(),
        kind,
        deprecated: is_deprecated(doc, &decos),
        docstring: doc.map(str::to_string),
    })
}

/// Dotted module name of a source-root-relative `.py` path.
fn module_name(relative: &str) -> String {
    let trimmed = relative.strip_suffix(".py").unwrap_or(relative);
    let trimmed = trimmed.strip_suffix("/__init__").unwrap_or(trimmed);
    trimmed.replace('/', ".")
}

fn to_raw(rule: &ExtractionRule, module: &str, file: &str, def: Definition) -> Option<RawConcept> {
    let summary = def.docstring?;
    if summary.trim().is_empty() {
        return None;
    }
    Some(RawConcept {
        concept: Concept {
            framework: rule.framework.clone(),
            qualified_path: format!("{module}.{}", def.local_path),
            summary,
        },
        kind: def.kind,
        deprecated: def.deprecated,
        origin_file: PathBuf::from(file),
    })
}

struct ParsedFile {
    relative: String,
    source: String,
    suite: Vec<Stmt>,
}

fn read_and_parse(path: &Path, relative: String) -> Result<ParsedFile, ExtractionWarning> {
    let source = fs::read_to_string(path).map_err(|e| ExtractionWarning {
        file: PathBuf::from(&relative),
        message: format!("unreadable: {e}"),
    })?;
    let suite = parse_suite(&source, &relative).map_err(|e: SyntaxError| ExtractionWarning {
        file: PathBuf::from(&relative),
        message: e.to_string(),
    })?;
    Ok(ParsedFile { relative, source, suite })
}

fn scan_package(rule: &ExtractionRule, source_root: &Path, package_dir: &Path) -> Extraction {
    let (files, walk_warnings) = list_files(package_dir, "py", &rule.excluded_subdirs);
    let mut warnings: Vec<ExtractionWarning> = walk_warnings
        .into_iter()
        .map(|w| ExtractionWarning {
            file: w.path,
            message: w.message,
        })
        .collect();

    let parsed: Vec<Result<ParsedFile, ExtractionWarning>> = files
        .par_iter()
        .map(|f| read_and_parse(&f.path, relative_slash(source_root, &f.path)))
        .collect();

    let mut concepts = Vec::new();
    for file in parsed {
        let file = match file {
            Ok(f) => f,
            Err(w) => {
                warnings.push(w);
                continue;
            }
        };
        let module = module_name(&file.relative);
        let mut defs = Vec::new();
        match rule.inclusion {
            Inclusion::DocumentedTypeDefinitions => collect_classes(&file.source, &file.suite, "", &mut defs),
            _ => defs.extend(file.suite.iter().filter_map(|s| definition_of(&file.source, s, ""))),
        }
        for def in defs {
            if rule.exclude_underscore_prefixed && def.name.starts_with('_') {
                continue;
            }
            if let Some(c) = to_raw(rule, &module, &file.relative, def) {
                concepts.push(c);
            }
        }
    }
    Extraction { concepts, warnings }
}

/// Every class definition, including those nested in classes, functions
/// and compound statements.
fn collect_classes(source: &str, body: &[Stmt], prefix: &str, out: &mut Vec<Definition>) {
    for stmt in body {
        match stmt {
            Stmt::ClassDef(c) => {
                let def = definition_of(source, stmt, prefix).expect("class definition");
                let nested = def.local_path.clone();
                out.push(def);
                collect_classes(source, &c.body, &nested, out);
            }
            Stmt::FunctionDef(f) => {
                collect_classes(source, &f.body, &join(prefix, f.name.as_str()), out);
            }
            Stmt::AsyncFunctionDef(f) => {
                collect_classes(source, &f.body, &join(prefix, f.name.as_str()), out);
            }
            _ => {
                for block in nested_blocks(stmt) {
                    collect_classes(source, block, prefix, out);
                }
            }
        }
    }
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn nested_blocks(stmt: &Stmt) -> Vec<&[Stmt]> {
    match stmt {
        Stmt::If(s) => vec![&s.body, &s.orelse],
        Stmt::For(s) => vec![&s.body, &s.orelse],
        Stmt::AsyncFor(s) => vec![&s.body, &s.orelse],
        Stmt::While(s) => vec![&s.body, &s.orelse],
        Stmt::With(s) => vec![&s.body],
        Stmt::AsyncWith(s) => vec![&s.body],
        Stmt::Try(s) => {
            let mut v: Vec<&[Stmt]> = vec![&s.body, &s.orelse, &s.finalbody];
            for h in &s.handlers {
                let ast::ExceptHandler::ExceptHandler(h) = h;
                v.push(&h.body);
            }
            v
        }
        Stmt::TryStar(s) => {
            let mut v: Vec<&[Stmt]> = vec![&s.body, &s.orelse, &s.finalbody];
            for h in &s.handlers {
                let ast::ExceptHandler::ExceptHandler(h) = h;
                v.push(&h.body);
            }
            v
        }
        Stmt::Match(s) => s.cases.iter().map(|c| c.body.as_slice()).collect(),
        _ => Vec::new(),
    }
}

// ---------------------------------------------------------------------------
// Public API list resolution
// ---------------------------------------------------------------------------

fn extract_public_api(
    rule: &ExtractionRule,
    source_root: &Path,
    package_dir: &Path,
) -> Result<Extraction, ExtractError> {
    let init = package_dir.join("__init__.py");
    let package = module_name(&relative_slash(source_root, &init));
    let mut resolver = Resolver::new(source_root);
    let info = resolver
        .load(&package)
        .ok_or_else(|| ExtractError::MissingApiList(init.clone()))?;
    let names = info.exports.clone().ok_or_else(|| ExtractError::MissingApiList(init.clone()))?;

    let mut concepts = Vec::new();
    let mut seen = HashSet::new();
    for name in names {
        if rule.exclude_underscore_prefixed && name.starts_with('_') {
            continue;
        }
        let mut visited = HashSet::new();
        match resolver.resolve(&package, &name, &mut visited) {
            Some((module, file, def)) => {
                if let Some(c) = to_raw(rule, &module, &file, def) {
                    if seen.insert(c.concept.qualified_path.clone()) {
                        concepts.push(c);
                    }
                }
            }
            None => resolver.warnings.push(ExtractionWarning {
                file: PathBuf::from(&info.relative),
                message: format!("exported name `{name}` has no resolvable definition"),
            }),
        }
    }
    Ok(Extraction {
        concepts,
        warnings: resolver.warnings,
    })
}

struct ModuleInfo {
    relative: String,
    is_package: bool,
    source: String,
    suite: Vec<Stmt>,
    exports: Option<Vec<String>>,
}

/// Follows `from … import …` chains through the source tree to the module
/// that actually defines a name.
struct Resolver<'a> {
    root: &'a Path,
    modules: HashMap<String, Option<Rc<ModuleInfo>>>,
    warnings: Vec<ExtractionWarning>,
}

impl<'a> Resolver<'a> {
    fn new(root: &'a Path) -> Self {
        Self {
            root,
            modules: HashMap::new(),
            warnings: Vec::new(),
        }
    }

    fn load(&mut self, module: &str) -> Option<Rc<ModuleInfo>> {
        if let Some(cached) = self.modules.get(module) {
            return cached.clone();
        }
        let base = module.replace('.', "/");
        let candidates = [(format!("{base}.py"), false), (format!("{base}/__init__.py"), true)];
        let mut loaded = None;
        for (rel, is_package) in candidates {
            let path = self.root.join(&rel);
            if !path.is_file() {
                continue;
            }
            match read_and_parse(&path, rel) {
                Ok(file) => {
                    let exports = dunder_all(&file.suite);
                    loaded = Some(Rc::new(ModuleInfo {
                        relative: file.relative,
                        is_package,
                        source: file.source,
                        suite: file.suite,
                        exports,
                    }));
                }
                Err(w) => self.warnings.push(w),
            }
            break;
        }
        self.modules.insert(module.to_string(), loaded.clone());
        loaded
    }

    /// Absolute module targeted by an import statement inside `module`.
    fn import_target(info: &ModuleInfo, module: &str, target: Option<&str>, level: usize) -> Option<String> {
        if level == 0 {
            return target.map(str::to_string);
        }
        let mut parts: Vec<&str> = module.split('.').collect();
        if !info.is_package {
            parts.pop();
        }
        for _ in 1..level {
            parts.pop()?;
        }
        let mut base = parts.join(".");
        if let Some(t) = target {
            if !base.is_empty() {
                base.push('.');
            }
            base.push_str(t);
        }
        (!base.is_empty()).then_some(base)
    }

    fn resolve(
        &mut self,
        module: &str,
        name: &str,
        visited: &mut HashSet<(String, String)>,
    ) -> Option<(String, String, Definition)> {
        if !visited.insert((module.to_string(), name.to_string())) {
            return None;
        }
        let info = self.load(module)?;
        // Later bindings shadow earlier ones.
        for stmt in info.suite.iter().rev() {
            match stmt {
                Stmt::FunctionDef(_) | Stmt::AsyncFunctionDef(_) | Stmt::ClassDef(_) => {
                    let def = definition_of(&info.source, stmt, "").expect("definition");
                    if def.name == name {
                        return Some((module.to_string(), info.relative.clone(), def));
                    }
                }
                Stmt::ImportFrom(imp) => {
                    let level = imp.level.as_ref().map_or(0, |l| l.to_usize());
                    let Some(target) = Self::import_target(&info, module, imp.module.as_deref(), level) else {
                        continue;
                    };
                    for alias in imp.names.iter().rev() {
                        if alias.name.as_str() == "*" {
                            let exported = match self.load(&target) {
                                Some(t) => match &t.exports {
                                    Some(all) => all.iter().any(|n| n == name),
                                    None => !name.starts_with('_'),
                                },
                                None => false,
                            };
                            if exported {
                                if let Some(found) = self.resolve(&target, name, visited) {
                                    return Some(found);
                                }
                            }
                        } else {
                            let bound = alias.asname.as_ref().unwrap_or(&alias.name);
                            if bound.as_str() == name {
                                if let Some(found) = self.resolve(&target, alias.name.as_str(), visited) {
                                    return Some(found);
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        None
    }
}

/// Names in a module's `__all__`, supporting list/tuple literals joined with
/// `+`, `+=` and `.extend(...)`.
fn dunder_all(suite: &[Stmt]) -> Option<Vec<String>> {
    let mut names: Option<Vec<String>> = None;
    for stmt in suite {
        match stmt {
            Stmt::Assign(a) if a.targets.iter().any(is_dunder_all) => {
                names = Some(string_list(&a.value).unwrap_or_default());
            }
            Stmt::AnnAssign(a) if is_dunder_all(&a.target) => {
                if let Some(v) = &a.value {
                    names = Some(string_list(v).unwrap_or_default());
                }
            }
            Stmt::AugAssign(a) if is_dunder_all(&a.target) => {
                names.get_or_insert_with(Vec::new).extend(string_list(&a.value).unwrap_or_default());
            }
            Stmt::Expr(e) => {
                if let Expr::Call(call) = e.value.as_ref() {
                    if let Expr::Attribute(attr) = call.func.as_ref() {
                        if attr.attr.as_str() == "extend" && is_dunder_all(&attr.value) {
                            if let Some(arg) = call.args.first() {
                                names.get_or_insert_with(Vec::new).extend(string_list(arg).unwrap_or_default());
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
    names
}

fn is_dunder_all(expr: &Expr) -> bool {
    matches!(expr, Expr::Name(n) if n.id.as_str() == "__all__")
}

fn string_list(expr: &Expr) -> Option<Vec<String>> {
    let elts = match expr {
        Expr::List(l) => &l.elts,
        Expr::Tuple(t) => &t.elts,
        Expr::BinOp(b) if matches!(b.op, ast::Operator::Add) => {
            let mut left = string_list(&b.left)?;
            left.extend(string_list(&b.right)?);
            return Some(left);
        }
        _ => return None,
    };
    Some(
        elts.iter()
            .filter_map(|e| match e {
                Expr::Constant(c) => match &c.value {
                    Constant::Str(s) => Some(s.clone()),
                    _ => None,
                },
                _ => None,
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(root: &Path, rel: &str, content: &str) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }

    fn qiskit_like_rule() -> ExtractionRule {
        ExtractionRule {
            deduplicate: false,
            ..ExtractionRule::qiskit()
        }
    }

    #[test]
    fn private_definition_is_excluded() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "qiskit/circuit/library/mod.py",
            "def adder():\n    \"\"\"Adds.\"\"\"\n\ndef _helper():\n    \"\"\"Private.\"\"\"\n",
        );
        let out = extract_concepts(&qiskit_like_rule(), dir.path()).unwrap();
        assert_eq!(out.concepts.len(), 1);
        assert_eq!(out.concepts[0].qualified_path(), "qiskit.circuit.library.mod.adder");
        assert_eq!(out.concepts[0].kind, ConceptKind::Callable);
    }

    #[test]
    fn undocumented_and_excluded_dirs_skipped() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "qiskit/circuit/library/a.py", "class A:\n    pass\n");
        write(
            dir.path(),
            "qiskit/circuit/library/standard_gates/h.py",
            "class HGate:\n    \"\"\"Hadamard.\"\"\"\n",
        );
        write(
            dir.path(),
            "qiskit/circuit/library/templates/t.py",
            "def t():\n    \"\"\"T.\"\"\"\n",
        );
        let out = extract_concepts(&qiskit_like_rule(), dir.path()).unwrap();
        assert!(out.concepts.is_empty());
    }

    #[test]
    fn unparseable_file_warns_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "qiskit/circuit/library/bad.py", "def broken(:\n");
        write(dir.path(), "qiskit/circuit/library/good.py", "class G:\n    \"\"\"Good.\"\"\"\n");
        let out = extract_concepts(&qiskit_like_rule(), dir.path()).unwrap();
        assert_eq!(out.concepts.len(), 1);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].file.ends_with("bad.py"));
    }

    #[test]
    fn missing_root_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            extract_concepts(&ExtractionRule::qiskit(), dir.path()),
            Err(ExtractError::MissingRoot(_))
        ));
    }

    #[test]
    fn nested_classes_found_for_type_rule() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "pennylane/templates/layers.py",
            "class Outer:\n    \"\"\"Outer doc.\"\"\"\n    class Inner:\n        \"\"\"Inner doc.\"\"\"\n\ndef f():\n    \"\"\"Function, not a type.\"\"\"\n",
        );
        let out = extract_concepts(&ExtractionRule::pennylane(), dir.path()).unwrap();
        let paths: Vec<_> = out.concepts.iter().map(|c| c.qualified_path()).collect();
        assert_eq!(
            paths,
            ["pennylane.templates.layers.Outer", "pennylane.templates.layers.Outer.Inner"]
        );
        assert!(out.concepts.iter().all(|c| c.kind == ConceptKind::TypeDefinition));
    }

    #[test]
    fn deprecation_detected_on_docstring_and_init() {
        let dir = tempfile::tempdir().unwrap();
        write(
            dir.path(),
            "qiskit/circuit/library/d.py",
            "class Old:\n    \"\"\"An old gate.\"\"\"\n    @deprecate_func(since='2.1')\n    def __init__(self):\n        pass\n\n\
def legacy():\n    \"\"\"Deprecated: use new.\"\"\"\n\ndef fresh():\n    \"\"\"Fresh.\"\"\"\n",
        );
        let out = extract_concepts(&qiskit_like_rule(), dir.path()).unwrap();
        let flags: Vec<_> = out.concepts.iter().map(|c| (c.concept.qualified_path.as_str(), c.deprecated)).collect();
        assert_eq!(
            flags,
            [
                ("qiskit.circuit.library.d.Old", true),
                ("qiskit.circuit.library.d.legacy", true),
                ("qiskit.circuit.library.d.fresh", false)
            ]
        );
    }

    #[test]
    fn public_api_list_follows_imports() {
        let dir = tempfile::tempdir().unwrap();
        let r = dir.path();
        write(
            r,
            "pkg/lib/__init__.py",
            "from .a import *\nfrom .b import beta as b2\n__all__ = ['alpha', 'b2'] + ['gamma', 'missing']\n__all__ += ['nodoc']\n",
        );
        write(
            r,
            "pkg/lib/a.py",
            "from pkg.core.g import gamma\n\ndef alpha():\n    \"\"\"Alpha.\"\"\"\n\ndef nodoc():\n    pass\n",
        );
        write(r, "pkg/lib/b.py", "def beta():\n    \"\"\"Beta.\"\"\"\n");
        write(r, "pkg/core/g.py", "def gamma():\n    \"\"\"Gamma.\"\"\"\n");
        let rule = ExtractionRule {
            root_relative_path: PathBuf::from("pkg/lib"),
            ..ExtractionRule::classiq()
        };
        let out = extract_concepts(&rule, r).unwrap();
        let paths: Vec<_> = out.concepts.iter().map(|c| c.qualified_path()).collect();
        assert_eq!(paths, ["pkg.lib.a.alpha", "pkg.lib.b.beta", "pkg.core.g.gamma"]);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].message.contains("missing"));
    }

    #[test]
    fn module_names() {
        assert_eq!(module_name("a/b/c.py"), "a.b.c");
        assert_eq!(module_name("a/b/__init__.py"), "a.b");
    }
}
