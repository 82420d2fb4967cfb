use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Deserialize;

use super::PipelineError;
use crate::concepts::{Inclusion, DEFAULT_CLUSTER_THRESHOLD};
use crate::harvest::DEFAULT_QUERIES;
use crate::matcher::MatcherConfig;

/// Pipeline configuration, read from TOML. Relative paths are resolved
/// against the directory holding the config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory receiving every stage artifact.
    #[serde(default = "default_work_dir")]
    pub work_dir: PathBuf,
    pub knowledge_base: Option<KnowledgeBaseConfig>,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub extract: Vec<ExtractConfig>,
    pub harvest: Option<HarvestConfig>,
    pub convert: Option<ConvertConfig>,
    #[serde(rename = "match")]
    pub matching: Option<MatchConfig>,
    pub report: Option<ReportConfig>,
}

fn default_work_dir() -> PathBuf {
    PathBuf::from("patmine-out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeBaseConfig {
    pub path: PathBuf,
    /// Extra catalog patterns merged into the built-in catalog.
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Test,
    Reference,
    Remote,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "test" => Ok(Backend::Test),
            "reference" => Ok(Backend::Reference),
            "remote" => Ok(Backend::Remote),
            other => Err(format!("unknown backend `{other}` (expected test, reference or remote)")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    #[serde(default = "default_backend")]
    pub backend: Backend,
    /// Persistent vector cache; in-memory only when absent.
    pub cache_dir: Option<PathBuf>,
    /// Remote service base URL; falls back to `PATMINE_EMBED_URL`.
    pub url: Option<String>,
    /// Reference model name or local directory.
    pub model: Option<String>,
    /// Interpreter hosting the reference model.
    pub python: Option<String>,
}

fn default_backend() -> Backend {
    Backend::Test
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Test,
            cache_dir: None,
            url: None,
            model: None,
            python: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractConfig {
    pub framework: String,
    /// Directory containing the framework's top-level package.
    pub source_root: PathBuf,
    pub root_relative_path: Option<PathBuf>,
    pub inclusion: Option<Inclusion>,
    pub excluded_subdirs: Option<Vec<PathBuf>>,
    pub exclude_underscore_prefixed: Option<bool>,
    pub deduplicate: Option<bool>,
    #[serde(default = "default_cluster_threshold")]
    pub cluster_threshold: f64,
    /// Output CSV; defaults to `concepts_<framework>.csv` in the work dir.
    pub output: Option<PathBuf>,
}

fn default_cluster_threshold() -> f64 {
    DEFAULT_CLUSTER_THRESHOLD
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarvestConfig {
    #[serde(default = "default_queries")]
    pub queries: Vec<String>,
    pub reference_date: DateTime<Utc>,
    #[serde(default = "default_min_stars")]
    pub min_stars: u64,
    #[serde(default = "default_min_contributors")]
    pub min_contributors: u64,
    #[serde(default = "default_inactivity")]
    pub max_inactivity_days: i64,
    #[serde(default)]
    pub exclusion_list: Vec<String>,
    /// File with one `owner/name` per line; `#` starts a comment.
    pub exclusion_file: Option<PathBuf>,
    #[serde(default)]
    pub reinstatement_list: Vec<String>,
    pub api_base: Option<String>,
    /// Clone URLs are `<clone_base>/<owner>/<name>.git`.
    #[serde(default = "default_clone_base")]
    pub clone_base: String,
    /// Snapshot directory; defaults to `snapshots` in the work dir.
    pub snapshot_dir: Option<PathBuf>,
    /// Materialize accepted repositories (otherwise only select them).
    #[serde(default = "yes")]
    pub snapshot: bool,
    /// Monorepo annotations: `owner/name` to group label.
    #[serde(default)]
    pub groups: BTreeMap<String, String>,
}

fn default_queries() -> Vec<String> {
    DEFAULT_QUERIES.iter().map(|q| q.to_string()).collect()
}
fn default_min_stars() -> u64 {
    30
}
fn default_min_contributors() -> u64 {
    10
}
fn default_inactivity() -> i64 {
    365
}
fn default_clone_base() -> String {
    "https://github.com".into()
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvertConfig {
    /// Notebook tree; defaults to the harvest snapshot directory.
    pub notebooks_root: Option<PathBuf>,
    /// Script tree; defaults to `converted` in the work dir.
    pub converted_root: Option<PathBuf>,
    #[serde(default = "yes")]
    pub markdown_as_comments: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchConfig {
    #[serde(default = "default_name_threshold")]
    pub name_threshold: f64,
    #[serde(default = "default_summary_threshold")]
    pub summary_threshold: f64,
    /// Script tree to scan; defaults to the convert stage's output.
    pub converted_root: Option<PathBuf>,
}

fn default_name_threshold() -> f64 {
    MatcherConfig::default().name_threshold
}
fn default_summary_threshold() -> f64 {
    MatcherConfig::default().summary_threshold
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            name_threshold: default_name_threshold(),
            summary_threshold: default_summary_threshold(),
            converted_root: None,
        }
    }
}

impl MatchConfig {
    pub fn matcher(&self) -> MatcherConfig {
        MatcherConfig {
            name_threshold: self.name_threshold,
            summary_threshold: self.summary_threshold,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    /// Leading path segments of a script path that name its project.
    #[serde(default = "one")]
    pub project_depth: usize,
    #[serde(default)]
    pub csv_tables: bool,
}

fn one() -> usize {
    1
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            project_depth: 1,
            csv_tables: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.resolve(base_dir);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read `{}`: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    /// Makes every configured path absolute with respect to `base`.
    pub fn resolve(&mut self, base: &Path) {
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut self.work_dir);
        if let Some(kb) = &mut self.knowledge_base {
            abs(&mut kb.path);
            kb.catalog.as_mut().map(abs);
        }
        self.embedding.cache_dir.as_mut().map(abs);
        for e in &mut self.extract {
            abs(&mut e.source_root);
            e.output.as_mut().map(abs);
        }
        if let Some(h) = &mut self.harvest {
            h.exclusion_file.as_mut().map(abs);
            h.snapshot_dir.as_mut().map(abs);
        }
        if let Some(c) = &mut self.convert {
            c.notebooks_root.as_mut().map(abs);
            c.converted_root.as_mut().map(abs);
        }
        if let Some(m) = &mut self.matching {
            m.converted_root.as_mut().map(abs);
        }
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        if let Some(m) = &self.matching {
            m.matcher().validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        for e in &self.extract {
            if !(e.cluster_threshold > 0.0 && e.cluster_threshold <= 1.0) {
                return Err(PipelineError::Config(format!(
                    "extract `{}`: cluster_threshold {} is outside (0, 1]",
                    e.framework, e.cluster_threshold
                )));
            }
        }
        if let Some(h) = &self.harvest {
            if h.queries.is_empty() {
                return Err(PipelineError::Config("harvest.queries must not be empty".into()));
            }
        }
        if let Some(r) = &self.report {
            if r.project_depth == 0 {
                return Err(PipelineError::Config("report.project_depth must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn snapshot_dir(&self) -> PathBuf {
        self.harvest
            .as_ref()
            .and_then(|h| h.snapshot_dir.clone())
            .unwrap_or_else(|| self.work_dir.join("snapshots"))
    }

    pub fn converted_root(&self) -> PathBuf {
        self.matching
            .as_ref()
            .and_then(|m| m.converted_root.clone())
            .or_else(|| self.convert.as_ref().and_then(|c| c.converted_root.clone()))
            .unwrap_or_else(|| self.work_dir.join("converted"))
    }
}
