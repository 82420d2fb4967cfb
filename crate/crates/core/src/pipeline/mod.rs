//! Stage orchestration driven by a [`PipelineConfig`].

mod config;

use std::collections::BTreeMap;
use std::error::Error as StdError;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use thiserror::Error;
use tracing::info;

pub use config::{
    Backend, ConvertConfig, EmbeddingConfig, ExtractConfig, HarvestConfig, KnowledgeBaseConfig, MatchConfig,
    PipelineConfig, ReportConfig,
};

use crate::concepts::{dedup_exact, dedup_semantic, extract_concepts, write_concepts_csv, ExtractionRule};
use crate::embedding::{
    CachedProvider, EmbeddingCache, EmbeddingProvider, HashedEmbedding, ReferenceEmbedding, RemoteEmbedding,
    EMBED_URL_ENV,
};
use crate::fsutil::{hash_path, list_files};
use crate::harvest::{
    filter_repositories, search_repositories, snapshot_repository, write_projects_manifest, GitHubClient,
    SelectionCriteria, PROJECTS_MANIFEST_FILE,
};
use crate::knowledge_base::{load_kb, seed_catalog, validate_kb, Framework, KnowledgeBase};
use crate::matcher::{match_corpus, write_matches_csv, write_skipped_csv, ConceptIndex, MATCHES_FILE, SKIPPED_FILE};
use crate::notebook::{convert_corpus, ConvertOptions};
use crate::report::{aggregate, project_key, read_matches_csv, render_report, write_csv_tables, REPORT_FILE};

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";
pub const KB_VALIDATION_FILE: &str = "kb_validation.txt";
pub const CONVERT_SKIPPED_FILE: &str = "convert_skipped.csv";
pub const REPORT_TABLES_DIR: &str = "report_tables";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Extract,
    KbValidate,
    Harvest,
    Convert,
    Match,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Extract,
        Stage::KbValidate,
        Stage::Harvest,
        Stage::Convert,
        Stage::Match,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Extract => "extract",
            Stage::KbValidate => "kb-validate",
            Stage::Harvest => "harvest",
            Stage::Convert => "convert",
            Stage::Match => "match",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{stage}: missing prerequisite: {message}")]
    Precondition { stage: Stage, message: String },
    #[error("{stage} failed: {message}")]
    Stage { stage: Stage, message: String },
}

impl PipelineError {
    /// Process exit status: 2 for configuration and usage errors, 1 for
    /// stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn describe(err: &dyn StdError) -> String {
    let mut out = err.to_string();
    let mut cur = err.source();
    while let Some(e) = cur {
        let s = e.to_string();
        if !out.contains(&s) {
            out.push_str(": ");
            out.push_str(&s);
        }
        cur = e.source();
    }
    out
}

fn stage_err(stage: Stage) -> impl Fn(&dyn StdError) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: describe(e),
    }
}

fn precondition(stage: Stage, message: impl Into<String>) -> PipelineError {
    PipelineError::Precondition {
        stage,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub duration_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunManifest {
    pub started_at: String,
    pub stages: Vec<StageRecord>,
}

/// Stages whose configuration sections are present, in pipeline order.
pub fn default_stages(cfg: &PipelineConfig) -> Vec<Stage> {
    let mut stages = Vec::new();
    if !cfg.extract.is_empty() {
        stages.push(Stage::Extract);
    }
    if cfg.knowledge_base.is_some() {
        stages.push(Stage::KbValidate);
    }
    if cfg.harvest.is_some() {
        stages.push(Stage::Harvest);
    }
    if cfg.convert.is_some() {
        stages.push(Stage::Convert);
    }
    if cfg.matching.is_some() {
        stages.push(Stage::Match);
    }
    if cfg.report.is_some() {
        stages.push(Stage::Report);
    }
    stages
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    provider: Option<Box<dyn EmbeddingProvider>>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl Ctx<'_> {
    fn label(&self, path: &Path) -> String {
        path.strip_prefix(&self.cfg.work_dir)
            .map(|p| p.display().to_string())
            .unwrap_or_else(|_| path.display().to_string())
    }

    fn record(&self, path: &Path) -> (String, String) {
        (self.label(path), hash_path(path).unwrap_or_else(|e| format!("unhashable: {e}")))
    }

    fn input(&mut self, path: &Path) {
        let (k, v) = self.record(path);
        self.inputs.insert(k, v);
    }

    fn output(&mut self, path: &Path) {
        let (k, v) = self.record(path);
        self.outputs.insert(k, v);
    }

    fn provider(&mut self, stage: Stage) -> Result<&dyn EmbeddingProvider, PipelineError> {
        if self.provider.is_none() {
            self.provider = Some(build_provider(&self.cfg.embedding).map_err(|e| PipelineError::Stage {
                stage,
                message: e,
            })?);
        }
        Ok(self.provider.as_deref().expect("provider built"))
    }
}

/// Constructs the configured embedding backend behind the vector cache.
pub fn build_provider(cfg: &EmbeddingConfig) -> Result<Box<dyn EmbeddingProvider>, String> {
    let inner: Box<dyn EmbeddingProvider> = match cfg.backend {
        Backend::Test => Box::new(HashedEmbedding::default()),
        Backend::Reference => {
            let model = cfg.model.clone().unwrap_or_else(|| {
                std::env::var(crate::embedding::REFERENCE_MODEL_ENV)
                    .unwrap_or_else(|_| crate::embedding::REFERENCE_MODEL.to_string())
            });
            let python = cfg.python.clone().unwrap_or_else(|| {
                std::env::var(crate::embedding::PYTHON_ENV).unwrap_or_else(|_| "python3".to_string())
            });
            Box::new(ReferenceEmbedding::start(&python, &model).map_err(|e| describe(&e))?)
        }
        Backend::Remote => {
            let url = cfg
                .url
                .clone()
                .or_else(|| std::env::var(EMBED_URL_ENV).ok())
                .ok_or_else(|| format!("remote backend needs embedding.url or {EMBED_URL_ENV}"))?;
            Box::new(RemoteEmbedding::connect(&url).map_err(|e| describe(&e))?)
        }
    };
    let cache = match &cfg.cache_dir {
        Some(dir) => EmbeddingCache::open(dir).map_err(|e| format!("cache `{}`: {e}", dir.display()))?,
        None => EmbeddingCache::in_memory(),
    };
    Ok(Box::new(CachedProvider::new(inner, cache)))
}

/// Loads the configured knowledge base against the built-in catalog plus
/// any configured extension.
pub fn load_knowledge_base(cfg: &KnowledgeBaseConfig) -> Result<KnowledgeBase, String> {
    let mut catalog = seed_catalog();
    if let Some(path) = &cfg.catalog {
        let f = fs::File::open(path).map_err(|e| format!("catalog `{}`: {e}", path.display()))?;
        catalog
            .extend_from_csv(f)
            .map_err(|e| format!("catalog `{}`: {}", path.display(), describe(&e)))?;
    }
    let f = fs::File::open(&cfg.path).map_err(|e| format!("knowledge base `{}`: {e}", cfg.path.display()))?;
    load_kb(f, &catalog).map_err(|e| format!("knowledge base `{}`: {}", cfg.path.display(), describe(&e)))
}

fn write_file(stage: Stage, path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| stage_err(stage)(&e))?;
    }
    fs::write(path, bytes).map_err(|e| PipelineError::Stage {
        stage,
        message: format!("cannot write `{}`: {e}", path.display()),
    })
}

/// Runs `stages` in pipeline order and writes the run manifest. An empty
/// stage set does nothing and writes nothing.
pub fn run_pipeline(cfg: &PipelineConfig, stages: &[Stage]) -> Result<RunManifest, PipelineError> {
    let mut ordered = stages.to_vec();
    ordered.sort();
    ordered.dedup();
    let mut manifest = RunManifest {
        started_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        stages: Vec::new(),
    };
    if ordered.is_empty() {
        return Ok(manifest);
    }
    cfg.check()?;
    fs::create_dir_all(&cfg.work_dir)
        .map_err(|e| PipelineError::Config(format!("work_dir `{}`: {e}", cfg.work_dir.display())))?;

    let mut ctx = Ctx {
        cfg,
        provider: None,
        inputs: BTreeMap::new(),
        outputs: BTreeMap::new(),
    };
    let mut failure = None;
    for stage in ordered {
        let start = Instant::now();
        info!(%stage, "stage started");
        let result = match stage {
            Stage::Extract => run_extract(&mut ctx),
            Stage::KbValidate => run_kb_validate(&mut ctx),
            Stage::Harvest => run_harvest(&mut ctx),
            Stage::Convert => run_convert(&mut ctx),
            Stage::Match => run_match(&mut ctx),
            Stage::Report => run_report(&mut ctx),
        };
        manifest.stages.push(StageRecord {
            stage,
            status: if result.is_ok() { "ok" } else { "failed" }.to_string(),
            inputs: std::mem::take(&mut ctx.inputs),
            outputs: std::mem::take(&mut ctx.outputs),
            duration_ms: start.elapsed().as_millis(),
        });
        if let Err(e) = result {
            failure = Some(e);
            break;
        }
    }
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_file(Stage::Report, &cfg.work_dir.join(RUN_MANIFEST_FILE), &json)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

fn extraction_rule(e: &ExtractConfig) -> Result<ExtractionRule, PipelineError> {
    let framework: Framework = e.framework.parse().unwrap_or_else(|never| match never {});
    let mut rule = match ExtractionRule::builtin(&framework) {
        Some(rule) => rule,
        None => {
            let (Some(root), Some(inclusion)) = (&e.root_relative_path, e.inclusion) else {
                return Err(PipelineError::Config(format!(
                    "extract `{}`: root_relative_path and inclusion are required for frameworks without a built-in rule",
                    e.framework
                )));
            };
            ExtractionRule {
                framework,
                root_relative_path: root.clone(),
                inclusion,
                excluded_subdirs: Vec::new(),
                exclude_underscore_prefixed: false,
                deduplicate: false,
            }
        }
    };
    if let Some(v) = &e.root_relative_path {
        rule.root_relative_path = v.clone();
    }
    if let Some(v) = e.inclusion {
        rule.inclusion = v;
    }
    if let Some(v) = &e.excluded_subdirs {
        rule.excluded_subdirs = v.clone();
    }
    if let Some(v) = e.exclude_underscore_prefixed {
        rule.exclude_underscore_prefixed = v;
    }
    if let Some(v) = e.deduplicate {
        rule.deduplicate = v;
    }
    Ok(rule)
}

fn run_extract(ctx: &mut Ctx<'_>) -> Result<(), PipelineError> {
    let stage = Stage::Extract;
    if ctx.cfg.extract.is_empty() {
        return Err(precondition(stage, "no [[extract]] sections configured"));
    }
    for e in &ctx.cfg.extract {
        let rule = extraction_rule(e)?;
        let package = e.source_root.join(&rule.root_relative_path);
        if !package.is_dir() {
            return Err(precondition(stage, format!("source tree `{}` does not exist", package.display())));
        }
        ctx.input(&package);
        let extraction = extract_concepts(&rule, &e.source_root).map_err(|e| stage_err(stage)(&e))?;
        let mut concepts = extraction.concepts;
        if rule.deduplicate {
            concepts = dedup_exact(concepts);
            let provider = ctx.provider(stage)?;
            concepts = dedup_semantic(concepts, provider, e.cluster_threshold).map_err(|e| stage_err(stage)(&e))?;
        }
        let output = e
            .output
            .clone()
            .unwrap_or_else(|| ctx.cfg.work_dir.join(format!("concepts_{}.csv", rule.framework.as_str())));
        let mut buf = Vec::new();
        write_concepts_csv(&concepts, &mut buf).map_err(|e| stage_err(stage)(&e))?;
        write_file(stage, &output, &buf)?;
        info!(framework = %rule.framework, concepts = concepts.len(), warnings = extraction.warnings.len(), "extracted");
        ctx.output(&output);
    }
    Ok(())
}

fn kb_config(ctx: &Ctx<'_>, stage: Stage) -> Result<KnowledgeBaseConfig, PipelineError> {
    let kb = ctx
        .cfg
        .knowledge_base
        .clone()
        .ok_or_else(|| precondition(stage, "no [knowledge_base] section configured"))?;
    if !kb.path.is_file() {
        return Err(precondition(stage, format!("knowledge base `{}` does not exist", kb.path.display())));
    }
    Ok(kb)
}

fn kb_inputs(ctx: &mut Ctx<'_>, kb: &KnowledgeBaseConfig) {
    ctx.input(&kb.path);
    if let Some(c) = &kb.catalog {
        ctx.input(c);
    }
}

fn run_kb_validate(ctx: &mut Ctx<'_>) -> Result<(), PipelineError> {
    let stage = Stage::KbValidate;
    let kb_cfg = kb_config(ctx, stage)?;
    kb_inputs(ctx, &kb_cfg);
    let out = ctx.cfg.work_dir.join(KB_VALIDATION_FILE);
    let (text, ok) = match load_knowledge_base(&kb_cfg) {
        Ok(kb) => {
            let report = validate_kb(&kb);
            (report.render(), report.is_clean())
        }
        Err(message) => (format!("error\t{message}\n"), false),
    };
    write_file(stage, &out, text.as_bytes())?;
    ctx.output(&out);
    if ok {
        Ok(())
    } else {
        Err(PipelineError::Stage {
            stage,
            message: text.trim_end().to_string(),
        })
    }
}

fn read_name_list(path: &Path) -> Result<Vec<String>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("`{}`: {e}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn run_harvest(ctx: &mut Ctx<'_>) -> Result<(), PipelineError> {
    let stage = Stage::Harvest;
    let h = ctx
        .cfg
        .harvest
        .clone()
        .ok_or_else(|| precondition(stage, "no [harvest] section configured"))?;
    let mut criteria = SelectionCriteria::with_reference_date(h.reference_date);
    criteria.min_stars = h.min_stars;
    criteria.min_contributors = h.min_contributors;
    criteria.max_inactivity_days = h.max_inactivity_days;
    criteria.exclusion_list = h.exclusion_list.clone();
    if let Some(file) = &h.exclusion_file {
        criteria
            .exclusion_list
            .extend(read_name_list(file).map_err(|m| precondition(stage, m))?);
        ctx.input(file);
    }
    criteria.reinstatement_list = h.reinstatement_list.clone();

    let client = GitHubClient::from_env(h.api_base.as_deref());
    let records = search_repositories(&h.queries, &client).map_err(|e| stage_err(stage)(&e))?;
    let outcome = filter_repositories(&records, &criteria);

    let snapshot_dir = ctx.cfg.snapshot_dir();
    let mut commits = BTreeMap::new();
    if h.snapshot {
        for a in &outcome.accepted {
            let name = &a.record.full_name;
            let url = format!("{}/{name}.git", h.clone_base.trim_end_matches('/'));
            let group = h.groups.get(name).map(String::as_str);
            let m = snapshot_repository(&a.record, &url, &snapshot_dir, group).map_err(|e| stage_err(stage)(&e))?;
            commits.insert(name.clone(), m.commit);
        }
    }
    let out = ctx.cfg.work_dir.join(PROJECTS_MANIFEST_FILE);
    let mut buf = Vec::new();
    write_projects_manifest(&records, &outcome, &commits, &mut buf).map_err(|e| stage_err(stage)(&e))?;
    write_file(stage, &out, &buf)?;
    ctx.output(&out);
    if h.snapshot && snapshot_dir.is_dir() {
        ctx.output(&snapshot_dir);
    }
    Ok(())
}

fn run_convert(ctx: &mut Ctx<'_>) -> Result<(), PipelineError> {
    let stage = Stage::Convert;
    let c = ctx
        .cfg
        .convert
        .clone()
        .ok_or_else(|| precondition(stage, "no [convert] section configured"))?;
    let notebooks = match (&c.notebooks_root, &ctx.cfg.harvest) {
        (Some(root), _) => root.clone(),
        (None, Some(_)) => ctx.cfg.snapshot_dir(),
        (None, None) => return Err(precondition(stage, "convert.notebooks_root is not set and no harvest is configured")),
    };
    if !notebooks.is_dir() {
        return Err(precondition(stage, format!("notebook tree `{}` does not exist", notebooks.display())));
    }
    ctx.input(&notebooks);
    let converted = c
        .converted_root
        .clone()
        .unwrap_or_else(|| ctx.cfg.work_dir.join("converted"));
    let options = ConvertOptions {
        markdown_as_comments: c.markdown_as_comments,
    };
    let summary = convert_corpus(&notebooks, &converted, options).map_err(|e| stage_err(stage)(&e))?;
    fs::create_dir_all(&converted).map_err(|e| stage_err(stage)(&e))?;
    let skipped = ctx.cfg.work_dir.join(CONVERT_SKIPPED_FILE);
    let mut buf = Vec::new();
    write_skipped_csv(&summary.skipped, &mut buf).map_err(|e| stage_err(stage)(&e))?;
    write_file(stage, &skipped, &buf)?;
    info!(converted = summary.converted.len(), skipped = summary.skipped.len(), "notebooks converted");
    ctx.output(&converted);
    ctx.output(&skipped);
    Ok(())
}

fn run_match(ctx: &mut Ctx<'_>) -> Result<(), PipelineError> {
    let stage = Stage::Match;
    let m = ctx.cfg.matching.clone().unwrap_or_default();
    let kb_cfg = kb_config(ctx, stage)?;
    let converted = ctx.cfg.converted_root();
    if !converted.is_dir() {
        return Err(precondition(
            stage,
            format!("converted corpus `{}` does not exist; run convert first", converted.display()),
        ));
    }
    kb_inputs(ctx, &kb_cfg);
    ctx.input(&converted);
    let kb = load_knowledge_base(&kb_cfg).map_err(|message| PipelineError::Stage { stage, message })?;
    let matcher = m.matcher();
    let provider = ctx.provider(stage)?;
    let index = ConceptIndex::build(&kb, provider).map_err(|e| stage_err(stage)(&e))?;
    let result = match_corpus(&converted, &index, provider, &matcher).map_err(|e| stage_err(stage)(&e))?;

    let matches_path = ctx.cfg.work_dir.join(MATCHES_FILE);
    let mut buf = Vec::new();
    write_matches_csv(&result.matches, &mut buf).map_err(|e| stage_err(stage)(&e))?;
    write_file(stage, &matches_path, &buf)?;
    let skipped_path = ctx.cfg.work_dir.join(SKIPPED_FILE);
    let mut buf = Vec::new();
    write_skipped_csv(&result.skipped, &mut buf).map_err(|e| stage_err(stage)(&e))?;
    write_file(stage, &skipped_path, &buf)?;
    info!(matches = result.matches.len(), files = result.scanned_files.len(), "corpus matched");
    ctx.output(&matches_path);
    ctx.output(&skipped_path);
    Ok(())
}

fn run_report(ctx: &mut Ctx<'_>) -> Result<(), PipelineError> {
    let stage = Stage::Report;
    let r = ctx.cfg.report.clone().unwrap_or_default();
    let kb_cfg = kb_config(ctx, stage)?;
    let matches_path = ctx.cfg.work_dir.join(MATCHES_FILE);
    if !matches_path.is_file() {
        return Err(precondition(
            stage,
            format!("match CSV `{}` does not exist; run match first", matches_path.display()),
        ));
    }
    kb_inputs(ctx, &kb_cfg);
    ctx.input(&matches_path);
    let kb = load_knowledge_base(&kb_cfg).map_err(|message| PipelineError::Stage { stage, message })?;
    let f = fs::File::open(&matches_path).map_err(|e| stage_err(stage)(&e))?;
    let rows = read_matches_csv(f).map_err(|e| stage_err(stage)(&e))?;

    let converted = ctx.cfg.converted_root();
    let scanned: Option<Vec<String>> = converted
        .is_dir()
        .then(|| list_files(&converted, "py", &[]).0.into_iter().map(|f| f.relative).collect());
    let depth = r.project_depth;
    let project_of = move |p: &str| project_key(p, depth);
    let stats = aggregate(&rows, &kb, &project_of, scanned.as_deref()).map_err(|e| stage_err(stage)(&e))?;

    let report_path = ctx.cfg.work_dir.join(REPORT_FILE);
    write_file(stage, &report_path, render_report(&stats).as_bytes())?;
    ctx.output(&report_path);
    if r.csv_tables {
        let dir = ctx.cfg.work_dir.join(REPORT_TABLES_DIR);
        for p in write_csv_tables(&stats, &dir).map_err(|e| stage_err(stage)(&e))? {
            ctx.output(&p);
        }
    }
    Ok(())
}
