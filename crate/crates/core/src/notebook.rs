//! Notebook discovery and conversion to plain scripts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;
use tracing::warn;

use crate::fsutil::{list_files, WalkWarning};

#[derive(Debug, Error)]
pub enum NotebookError {
    #[error("notebook root `{0}` does not exist")]
    MissingRoot(PathBuf),
    #[error("`{path}`: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("`{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Code,
    Markdown,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub kind: CellKind,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotebookDocument {
    pub path: PathBuf,
    pub cells: Vec<Cell>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SourceField {
    Text(String),
    Lines(Vec<String>),
}

#[derive(Deserialize)]
struct RawCell {
    cell_type: String,
    #[serde(default)]
    source: Option<SourceField>,
}

#[derive(Deserialize)]
struct RawNotebook {
    nbformat: u32,
    cells: Vec<RawCell>,
}

impl NotebookDocument {
    /// Parses notebook JSON (format 4.x). Unknown cell types read as raw.
    pub fn parse(bytes: &[u8], path: impl Into<PathBuf>) -> Result<Self, NotebookError> {
        let path = path.into();
        let raw: RawNotebook = serde_json::from_slice(bytes).map_err(|e| NotebookError::Malformed {
            path: path.clone(),
            message: format!("invalid notebook JSON: {e}"),
        })?;
        if raw.nbformat < 4 {
            return Err(NotebookError::Malformed {
                path,
                message: format!("unsupported nbformat {}", raw.nbformat),
            });
        }
        let cells = raw
            .cells
            .into_iter()
            .map(|c| Cell {
                kind: match c.cell_type.as_str() {
                    "code" => CellKind::Code,
                    "markdown" => CellKind::Markdown,
                    _ => CellKind::Raw,
                },
                source: match c.source {
                    Some(SourceField::Text(s)) => s,
                    Some(SourceField::Lines(lines)) => lines.concat(),
                    None => String::new(),
                },
            })
            .collect();
        Ok(Self { path, cells })
    }

    pub fn read(path: &Path) -> Result<Self, NotebookError> {
        let bytes = fs::read(path).map_err(|source| NotebookError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&bytes, path)
    }
}

/// Notebook paths under `root`, relative and in lexicographic order.
pub fn discover_notebooks(root: &Path) -> Result<(Vec<String>, Vec<WalkWarning>), NotebookError> {
    if !root.is_dir() {
        return Err(NotebookError::MissingRoot(root.to_path_buf()));
    }
    let (files, warnings) = list_files(root, "ipynb", &[]);
    for w in &warnings {
        warn!(path = %w.path.display(), "{}", w.message);
    }
    Ok((files.into_iter().map(|f| f.relative).collect(), warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvertOptions {
    pub markdown_as_comments: bool,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        Self {
            markdown_as_comments: true,
        }
    }
}

fn strip_trailing_newline(s: &str) -> &str {
    s.strip_suffix("\r\n").or_else(|| s.strip_suffix('\n')).unwrap_or(s)
}

/// Renders a notebook as a script: code cells verbatim, markdown as `# `
/// comment lines, raw cells dropped, one blank line between cells.
pub fn convert_notebook(nb: &NotebookDocument, options: ConvertOptions) -> String {
    let mut blocks: Vec<String> = Vec::new();
    for cell in &nb.cells {
        if cell.source.trim().is_empty() {
            continue;
        }
        match cell.kind {
            CellKind::Code => blocks.push(strip_trailing_newline(&cell.source).to_string()),
            CellKind::Markdown if options.markdown_as_comments => blocks.push(
                strip_trailing_newline(&cell.source)
                    .lines()
                    .map(|l| if l.trim().is_empty() { "#".to_string() } else { format!("# {l}") })
                    .collect::<Vec<_>>()
                    .join("\n"),
            ),
            CellKind::Markdown | CellKind::Raw => {}
        }
    }
    if blocks.is_empty() {
        return String::new();
    }
    let mut out = blocks.join("\n\n");
    out.push('\n');
    out
}

/// Output path of a converted notebook, relative to the converted root.
pub fn script_path(notebook_relative: &str) -> String {
    let stem = notebook_relative.strip_suffix(".ipynb").unwrap_or(notebook_relative);
    format!("{stem}.py")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConvertSummary {
    /// Relative paths of written scripts, in notebook order.
    pub converted: Vec<String>,
    /// Notebooks that could not be converted, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Converts every notebook under `notebooks_root`, mirroring the folder
/// layout under `converted_root`. Bad notebooks are skipped with a warning.
pub fn convert_corpus(
    notebooks_root: &Path,
    converted_root: &Path,
    options: ConvertOptions,
) -> Result<ConvertSummary, NotebookError> {
    let (notebooks, walk_warnings) = discover_notebooks(notebooks_root)?;
    let results: Vec<(String, Result<String, String>)> = notebooks
        .par_iter()
        .map(|rel| {
            let out = NotebookDocument::read(&notebooks_root.join(rel))
                .map_err(|e| e.to_string())
                .and_then(|nb| {
                    let script = script_path(rel);
                    let target = converted_root.join(&script);
                    if let Some(parent) = target.parent() {
                        fs::create_dir_all(parent).map_err(|e| e.to_string())?;
                    }
                    fs::write(&target, convert_notebook(&nb, options)).map_err(|e| e.to_string())?;
                    Ok(script)
                });
            (rel.clone(), out)
        })
        .collect();
    let mut summary = ConvertSummary::default();
    for w in walk_warnings {
        summary.skipped.push((w.path.display().to_string(), w.message));
    }
    for (rel, result) in results {
        match result {
            Ok(script) => summary.converted.push(script),
            Err(reason) => {
                warn!(notebook = %rel, "skipped: {reason}");
                summary.skipped.push((rel, reason));
            }
        }
    }
    Ok(summary)
}
