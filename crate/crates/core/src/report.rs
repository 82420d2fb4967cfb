//! Aggregation of match rows into the final pattern report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::knowledge_base::{csv_writer, KnowledgeBase};
use crate::matcher::{Match, MatchType, MATCHES_HEADER};

pub const REPORT_FILE: &str = "final_pattern_report.txt";
pub const TOP_CONCEPTS: usize = 20;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("match row {line}: {message}")]
    Row { line: u64, message: String },
    #[error("match CSV header must be `{}`", MATCHES_HEADER.join(","))]
    Header,
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A match row with the CSV line it came from (header is line 1).
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRow {
    pub line: u64,
    pub row: Match,
}

#[derive(Deserialize)]
struct CsvRow {
    file_path: String,
    concept_path: String,
    pattern_name: String,
    match_type: String,
    matched_text: String,
    score: String,
}

pub fn read_matches_csv<R: Read>(reader: R) -> Result<Vec<MatchRow>, ReportError> {
    let mut rdr = csv::Reader::from_reader(reader);
    if rdr.headers()?.iter().ne(MATCHES_HEADER) {
        return Err(ReportError::Header);
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.deserialize::<CsvRow>().enumerate() {
        let line = i as u64 + 2;
        let raw = record.map_err(|e| ReportError::Row {
            line,
            message: e.to_string(),
        })?;
        let bad = |message: String| ReportError::Row { line, message };
        let match_type: MatchType = raw.match_type.parse().map_err(bad)?;
        let score: f64 = raw
            .score
            .parse()
            .map_err(|_| bad(format!("score `{}` is not a number", raw.score)))?;
        rows.push(MatchRow {
            line,
            row: Match {
                file_path: raw.file_path,
                concept_path: raw.concept_path,
                pattern_name: raw.pattern_name,
                match_type,
                matched_text: raw.matched_text,
                score,
            },
        });
    }
    Ok(rows)
}

/// The first `depth` path segments of a corpus-relative file path.
pub fn project_key(file_path: &str, depth: usize) -> String {
    let segments: Vec<&str> = file_path.split('/').collect();
    let keep = depth.max(1).min(segments.len().saturating_sub(1).max(1));
    segments[..keep].join("/")
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChannelStats {
    pub count: usize,
    /// Mean raw score; `None` when the channel has no matches.
    pub mean_score: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameworkStats {
    pub matches: usize,
    pub concepts: usize,
    pub projects: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportStats {
    pub total_matches: usize,
    pub unique_files: usize,
    /// Projects with at least one match.
    pub unique_projects: usize,
    /// Projects in the scanned corpus, when the scan list is known.
    pub scanned_projects: Option<usize>,
    pub unique_concepts: usize,
    pub per_channel: BTreeMap<MatchType, ChannelStats>,
    /// Keyed by framework display name.
    pub per_framework: BTreeMap<String, FrameworkStats>,
    /// Matched patterns, count descending then name ascending.
    pub per_pattern: Vec<(String, usize)>,
    pub unmatched_patterns: BTreeSet<String>,
    /// Concept paths with counts, count descending then path ascending.
    pub top_concepts: Vec<(String, String, usize)>,
}

/// Computes report statistics. Every row must name a KB concept and carry
/// that concept's pattern.
pub fn aggregate(
    rows: &[MatchRow],
    kb: &KnowledgeBase,
    project_of: &dyn Fn(&str) -> String,
    scanned_files: Option<&[String]>,
) -> Result<ReportStats, ReportError> {
    let mut files = BTreeSet::new();
    let mut projects = BTreeSet::new();
    let mut concepts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut patterns: BTreeMap<&str, usize> = BTreeMap::new();
    let mut channels: BTreeMap<MatchType, (usize, f64)> = BTreeMap::new();
    let mut frameworks: BTreeMap<String, (usize, BTreeSet<&str>, BTreeSet<String>)> = BTreeMap::new();

    for MatchRow { line, row } in rows {
        let entry = kb.get(&row.concept_path).ok_or_else(|| ReportError::Row {
            line: *line,
            message: format!("concept `{}` is not in the knowledge base", row.concept_path),
        })?;
        if entry.pattern_name != row.pattern_name {
            return Err(ReportError::Row {
                line: *line,
                message: format!(
                    "pattern `{}` disagrees with the knowledge base (`{}`) for `{}`",
                    row.pattern_name, entry.pattern_name, row.concept_path
                ),
            });
        }
        let project = project_of(&row.file_path);
        files.insert(row.file_path.as_str());
        projects.insert(project.clone());
        *concepts.entry(row.concept_path.as_str()).or_default() += 1;
        *patterns.entry(entry.pattern_name.as_str()).or_default() += 1;
        let ch = channels.entry(row.match_type).or_default();
        ch.0 += 1;
        ch.1 += row.score;
        let fw = frameworks
            .entry(entry.concept.framework.display_name().to_string())
            .or_default();
        fw.0 += 1;
        fw.1.insert(row.concept_path.as_str());
        fw.2.insert(project);
    }

    let mut per_channel = BTreeMap::new();
    for t in [MatchType::Name, MatchType::Summary] {
        let (count, sum) = channels.get(&t).copied().unwrap_or_default();
        per_channel.insert(
            t,
            ChannelStats {
                count,
                mean_score: (count > 0).then(|| sum / count as f64),
            },
        );
    }

    let mut per_pattern: Vec<(String, usize)> = patterns.iter().map(|(p, c)| (p.to_string(), *c)).collect();
    per_pattern.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let unmatched_patterns = kb
        .used_patterns()
        .into_iter()
        .filter(|p| !patterns.contains_key(p))
        .map(str::to_string)
        .collect();

    let mut top: Vec<(String, String, usize)> = concepts
        .iter()
        .map(|(c, n)| {
            let pattern = kb.get(c).map(|e| e.pattern_name.clone()).unwrap_or_default();
            (c.to_string(), pattern, *n)
        })
        .collect();
    top.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    top.truncate(TOP_CONCEPTS);

    let scanned_projects = scanned_files.map(|fs| {
        fs.iter()
            .map(|f| project_of(f))
            .chain(projects.iter().cloned())
            .collect::<BTreeSet<_>>()
            .len()
    });

    Ok(ReportStats {
        total_matches: rows.len(),
        unique_files: files.len(),
        unique_projects: projects.len(),
        scanned_projects,
        unique_concepts: concepts.len(),
        per_channel,
        per_framework: frameworks
            .into_iter()
            .map(|(k, (m, c, p))| {
                (
                    k,
                    FrameworkStats {
                        matches: m,
                        concepts: c.len(),
                        projects: p.len(),
                    },
                )
            })
            .collect(),
        per_pattern,
        unmatched_patterns,
        top_concepts: top,
    })
}

fn mean(m: Option<f64>) -> String {
    m.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

fn heading(out: &mut String, title: &str) {
    let _ = writeln!(out, "{title}\n{}", "-".repeat(title.chars().count()));
}

/// Left-aligned columns separated by two spaces.
fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    let rules: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", line(rules.iter().map(String::as_str).collect()));
    for row in rows {
        let _ = writeln!(out, "{}", line(row.iter().map(String::as_str).collect()));
    }
}

pub fn render_report(stats: &ReportStats) -> String {
    let mut out = String::new();
    let title = "Quantum Software Pattern Report";
    let _ = writeln!(out, "{title}\n{}\n", "=".repeat(title.len()));

    heading(&mut out, "Overall Summary");
    let name = stats.per_channel.get(&MatchType::Name).copied().unwrap_or_default();
    let summary = stats.per_channel.get(&MatchType::Summary).copied().unwrap_or_default();
    let scanned = stats.scanned_projects.map_or_else(|| "n/a".to_string(), |n| n.to_string());
    let _ = writeln!(out, "Total matches: {}", stats.total_matches);
    let _ = writeln!(out, "Unique files with matches: {}", stats.unique_files);
    let _ = writeln!(out, "Unique projects with matches: {}", stats.unique_projects);
    let _ = writeln!(out, "Projects scanned: {scanned}");
    let _ = writeln!(out, "Unique concepts matched: {}", stats.unique_concepts);
    let _ = writeln!(out, "Name matches: {} (mean score {})", name.count, mean(name.mean_score));
    let _ = writeln!(out, "Summary matches: {} (mean score {})\n", summary.count, mean(summary.mean_score));

    heading(&mut out, "Source & Adoption");
    let rows: Vec<Vec<String>> = stats
        .per_framework
        .iter()
        .map(|(f, s)| vec![f.clone(), s.matches.to_string(), s.concepts.to_string(), s.projects.to_string()])
        .collect();
    table(&mut out, &["Framework", "Matches", "Concepts", "Projects"], &rows);
    out.push('\n');

    heading(&mut out, "Pattern Prevalence");
    let mut rows: Vec<Vec<String>> = stats
        .per_pattern
        .iter()
        .map(|(p, c)| vec![p.clone(), c.to_string()])
        .collect();
    rows.push(vec!["Total".to_string(), stats.per_pattern.iter().map(|p| p.1).sum::<usize>().to_string()]);
    table(&mut out, &["Pattern", "Matches"], &rows);
    out.push('\n');

    heading(&mut out, "Gap Analysis");
    let _ = writeln!(
        out,
        "Patterns in the knowledge base never matched: {}",
        stats.unmatched_patterns.len()
    );
    for p in &stats.unmatched_patterns {
        let _ = writeln!(out, "- {p}");
    }
    out.push('\n');

    heading(&mut out, &format!("Top Matched Concepts (top {TOP_CONCEPTS})"));
    let rows: Vec<Vec<String>> = stats
        .top_concepts
        .iter()
        .enumerate()
        .map(|(i, (c, p, n))| vec![(i + 1).to_string(), n.to_string(), c.clone(), p.clone()])
        .collect();
    table(&mut out, &["Rank", "Matches", "Concept", "Pattern"], &rows);
    out
}

type Table<'a> = (&'a str, Vec<&'a str>, Vec<Vec<String>>);

/// Writes each report section as its own CSV file into `dir`; returns the
/// written paths.
pub fn write_csv_tables(stats: &ReportStats, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let name = stats.per_channel.get(&MatchType::Name).copied().unwrap_or_default();
    let summary = stats.per_channel.get(&MatchType::Summary).copied().unwrap_or_default();
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:.2}"));
    let tables: Vec<Table> = vec![
        (
            "report_overall_summary.csv",
            vec!["metric", "value"],
            vec![
                vec!["total_matches".into(), stats.total_matches.to_string()],
                vec!["unique_files".into(), stats.unique_files.to_string()],
                vec!["unique_projects".into(), stats.unique_projects.to_string()],
                vec!["scanned_projects".into(), stats.scanned_projects.map_or_else(String::new, |n| n.to_string())],
                vec!["unique_concepts".into(), stats.unique_concepts.to_string()],
                vec!["name_matches".into(), name.count.to_string()],
                vec!["name_mean_score".into(), opt(name.mean_score)],
                vec!["summary_matches".into(), summary.count.to_string()],
                vec!["summary_mean_score".into(), opt(summary.mean_score)],
            ],
        ),
        (
            "report_source_adoption.csv",
            vec!["framework", "matches", "concepts", "projects"],
            stats
                .per_framework
                .iter()
                .map(|(f, s)| vec![f.clone(), s.matches.to_string(), s.concepts.to_string(), s.projects.to_string()])
                .collect(),
        ),
        (
            "report_pattern_prevalence.csv",
            vec!["pattern", "matches"],
            stats.per_pattern.iter().map(|(p, c)| vec![p.clone(), c.to_string()]).collect(),
        ),
        (
            "report_gap_analysis.csv",
            vec!["pattern"],
            stats.unmatched_patterns.iter().map(|p| vec![p.clone()]).collect(),
        ),
        (
            "report_top_concepts.csv",
            vec!["rank", "concept_path", "pattern", "matches"],
            stats
                .top_concepts
                .iter()
                .enumerate()
                .map(|(i, (c, p, n))| vec![(i + 1).to_string(), c.clone(), p.clone(), n.to_string()])
                .collect(),
        ),
    ];
    let mut written = Vec::new();
    for (file, header, rows) in tables {
        let path = dir.join(file);
        let f = fs::File::create(&path).map_err(|source| ReportError::Io {
            path: path.clone(),
            source,
        })?;
        let mut wtr = csv_writer(f);
        wtr.write_record(header)?;
        for r in rows {
            wtr.write_record(r)?;
        }
        wtr.flush().map_err(|source| ReportError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
