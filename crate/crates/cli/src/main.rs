use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use patmine::pipeline::{
    default_stages, run_pipeline, Backend, ConvertConfig, ExtractConfig, KnowledgeBaseConfig, MatchConfig,
    PipelineConfig, PipelineError, ReportConfig, Stage,
};

const DEFAULT_CONFIG: &str = "patmine.toml";

/// Mine quantum software patterns from framework sources and notebooks.
#[derive(Parser)]
#[command(name = "patmine", version)]
struct Cli {
    /// Pipeline configuration (TOML). Defaults to ./patmine.toml when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `work_dir` from the configuration.
    #[arg(long, global = true)]
    work_dir: Option<PathBuf>,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract documented concepts from framework sources.
    Extract(ExtractArgs),
    /// Knowledge base commands.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
    /// Search, select and snapshot repositories.
    Harvest,
    /// Convert notebooks to scripts.
    Convert(ConvertArgs),
    /// Match scripts against the knowledge base.
    Match(MatchArgs),
    /// Aggregate matches into the final report.
    Report(ReportArgs),
    /// Run several stages in pipeline order.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum KbCommand {
    /// Check the knowledge base against the pattern catalog.
    Validate(KbArgs),
}

#[derive(Args)]
struct KbArgs {
    /// Knowledge base CSV.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Extra catalog patterns (CSV).
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Framework id (classiq, pennylane, qiskit); replaces configured rules.
    #[arg(long, requires = "source_root")]
    framework: Option<String>,
    /// Directory containing the framework's top-level package.
    #[arg(long, requires = "framework")]
    source_root: Option<PathBuf>,
    /// Output CSV.
    #[arg(long, requires = "framework")]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    notebooks_root: Option<PathBuf>,
    #[arg(long)]
    converted_root: Option<PathBuf>,
    /// Emit markdown cells as comments.
    #[arg(long, value_enum)]
    markdown_as_comments: Option<Switch>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Test,
    Reference,
    Remote,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Test => Backend::Test,
            BackendArg::Reference => Backend::Reference,
            BackendArg::Remote => Backend::Remote,
        }
    }
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    converted_root: Option<PathBuf>,
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    name_threshold: Option<f64>,
    #[arg(long)]
    summary_threshold: Option<f64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Also write every report section as CSV.
    #[arg(long)]
    csv_tables: bool,
    /// Leading path segments that name a project.
    #[arg(long)]
    project_depth: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated stages; defaults to every configured stage.
    #[arg(long, value_delimiter = ',')]
    stages: Option<Vec<String>>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
}

fn cwd() -> PathBuf {
    std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."))
}

fn abs(p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        cwd().join(p)
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None if Path::new(DEFAULT_CONFIG).is_file() => PipelineConfig::load(Path::new(DEFAULT_CONFIG))?,
        None => PipelineConfig::from_toml("", &cwd())?,
    };
    if let Some(w) = &cli.work_dir {
        cfg.work_dir = abs(w.clone());
    }
    Ok(cfg)
}

fn set_kb(cfg: &mut PipelineConfig, kb: Option<PathBuf>, catalog: Option<PathBuf>) {
    if let Some(path) = kb {
        let catalog = catalog.or_else(|| cfg.knowledge_base.as_ref().and_then(|k| k.catalog.clone()));
        cfg.knowledge_base = Some(KnowledgeBaseConfig {
            path: abs(path),
            catalog: catalog.map(abs),
        });
    } else if let (Some(c), Some(k)) = (catalog, cfg.knowledge_base.as_mut()) {
        k.catalog = Some(abs(c));
    }
}

fn set_backend(cfg: &mut PipelineConfig, backend: Option<BackendArg>) {
    if let Some(b) = backend {
        cfg.embedding.backend = b.into();
    }
}

fn plan(cli: &Cli, cfg: &mut PipelineConfig) -> Result<Vec<Stage>, PipelineError> {
    Ok(match &cli.command {
        Command::Extract(a) => {
            set_backend(cfg, a.backend);
            if let (Some(framework), Some(root)) = (&a.framework, &a.source_root) {
                cfg.extract = vec![ExtractConfig {
                    framework: framework.clone(),
                    source_root: abs(root.clone()),
                    root_relative_path: None,
                    inclusion: None,
                    excluded_subdirs: None,
                    exclude_underscore_prefixed: None,
                    deduplicate: None,
                    cluster_threshold: patmine::concepts::DEFAULT_CLUSTER_THRESHOLD,
                    output: a.output.clone().map(abs),
                }];
            }
            vec![Stage::Extract]
        }
        Command::Kb {
            command: KbCommand::Validate(a),
        } => {
            set_kb(cfg, a.kb.clone(), a.catalog.clone());
            vec![Stage::KbValidate]
        }
        Command::Harvest => vec![Stage::Harvest],
        Command::Convert(a) => {
            let c = cfg.convert.get_or_insert(ConvertConfig {
                notebooks_root: None,
                converted_root: None,
                markdown_as_comments: true,
            });
            if let Some(p) = &a.notebooks_root {
                c.notebooks_root = Some(abs(p.clone()));
            }
            if let Some(p) = &a.converted_root {
                c.converted_root = Some(abs(p.clone()));
            }
            if let Some(s) = a.markdown_as_comments {
                c.markdown_as_comments = s == Switch::On;
            }
            vec![Stage::Convert]
        }
        Command::Match(a) => {
            set_kb(cfg, a.kb.clone(), None);
            set_backend(cfg, a.backend);
            let m = cfg.matching.get_or_insert_with(MatchConfig::default);
            if let Some(t) = a.name_threshold {
                m.name_threshold = t;
            }
            if let Some(t) = a.summary_threshold {
                m.summary_threshold = t;
            }
            if let Some(p) = &a.converted_root {
                m.converted_root = Some(abs(p.clone()));
            }
            vec![Stage::Match]
        }
        Command::Report(a) => {
            set_kb(cfg, a.kb.clone(), None);
            let r = cfg.report.get_or_insert_with(ReportConfig::default);
            if a.csv_tables {
                r.csv_tables = true;
            }
            if let Some(d) = a.project_depth {
                r.project_depth = d;
            }
            vec![Stage::Report]
        }
        Command::Run(a) => {
            set_backend(cfg, a.backend);
            match &a.stages {
                None => default_stages(cfg),
                Some(list) => list
                    .iter()
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<Stage>().map_err(PipelineError::Config))
                    .collect::<Result<_, _>>()?,
            }
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();

    let result = load_config(&cli).and_then(|mut cfg| {
        let stages = plan(&cli, &mut cfg)?;
        cfg.check()?;
        run_pipeline(&cfg, &stages)
    });
    match result {
        Ok(manifest) => {
            for s in &manifest.stages {
                eprintln!("{}: ok ({} ms)", s.stage, s.duration_ms);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
