//! Repository discovery, selection and snapshotting.

mod github;
mod snapshot;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge_base::csv_writer;

pub use github::{GitHubClient, RetryPolicy, DEFAULT_API_BASE, HOSTING_TOKEN_ENV};
pub use snapshot::{read_snapshot_manifest, snapshot_repository, SnapshotManifest};

pub const DEFAULT_QUERIES: [&str; 3] = [
    "topic:quantum-computing language:Python",
    "topic:quantum-machine-learning language:Python",
    "topic:quantum-algorithms language:Python",
];

pub const PROJECTS_MANIFEST_FILE: &str = "projects_manifest.csv";
pub const PROJECTS_MANIFEST_HEADER: [&str; 8] =
    ["full_name", "stars", "contributors", "archived", "last_push", "verdict", "reason", "commit"];

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("rate limit still exceeded after {attempts} attempts ({url})")]
    RateLimited { url: String, attempts: u32 },
    #[error("hosting API rejected the credentials: {0}")]
    Credential(String),
    #[error("hosting API returned {status} for {url}: {message}")]
    Api { status: u16, url: String, message: String },
    #[error("request to {url} failed: {message}")]
    Transport { url: String, message: String },
    #[error("transfer of `{repo}` failed: {message}")]
    Transfer { repo: String, message: String },
    #[error("at least one search query is required")]
    NoQueries,
    #[error("`{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoRecord {
    pub full_name: String,
    pub stars: u64,
    pub contributors: u64,
    pub archived: bool,
    pub last_push: DateTime<Utc>,
    pub topics: Vec<String>,
}

/// Access to a code-hosting service.
pub trait HostingApi {
    /// Repositories matching `query`. `contributors` is left at zero.
    fn search(&self, query: &str) -> Result<Vec<RepoRecord>, HarvestError>;

    fn count_contributors(&self, full_name: &str) -> Result<u64, HarvestError>;
}

/// Union of all query results by repository name, with contributor counts
/// filled in, sorted by stars descending then name ascending.
pub fn search_repositories<Q: AsRef<str>>(
    queries: &[Q],
    api: &dyn HostingApi,
) -> Result<Vec<RepoRecord>, HarvestError> {
    if queries.is_empty() {
        return Err(HarvestError::NoQueries);
    }
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for q in queries {
        for r in api.search(q.as_ref())? {
            if seen.insert(r.full_name.to_lowercase()) {
                records.push(r);
            }
        }
    }
    for r in &mut records {
        r.contributors = api.count_contributors(&r.full_name)?;
    }
    sort_records(&mut records);
    Ok(records)
}

pub fn sort_records(records: &mut [RepoRecord]) {
    records.sort_by(|a, b| b.stars.cmp(&a.stars).then_with(|| a.full_name.cmp(&b.full_name)));
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCriteria {
    pub min_stars: u64,
    pub min_contributors: u64,
    pub max_inactivity_days: i64,
    pub exclusion_list: Vec<String>,
    pub reinstatement_list: Vec<String>,
    pub reference_date: DateTime<Utc>,
}

impl SelectionCriteria {
    /// Thresholds of 30 stars, 10 contributors and one year of inactivity.
    pub fn with_reference_date(reference_date: DateTime<Utc>) -> Self {
        Self {
            min_stars: 30,
            min_contributors: 10,
            max_inactivity_days: 365,
            exclusion_list: Vec::new(),
            reinstatement_list: Vec::new(),
            reference_date,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MinStars,
    MinContributors,
    Archived,
    Inactive,
    Excluded,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::MinStars => "min_stars",
            RejectReason::MinContributors => "min_contributors",
            RejectReason::Archived => "archived",
            RejectReason::Inactive => "inactive",
            RejectReason::Excluded => "excluded",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An accepted record; `reinstated_over` holds the rule it failed when it
/// was accepted only through the reinstatement list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Accepted {
    pub record: RepoRecord,
    pub reinstated_over: Option<RejectReason>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterOutcome {
    pub accepted: Vec<Accepted>,
    pub rejected: Vec<(RepoRecord, RejectReason)>,
}

/// First selection rule `record` fails, checked in the order stars,
/// contributors, archived, inactivity, exclusion.
pub fn first_failure(record: &RepoRecord, criteria: &SelectionCriteria) -> Option<RejectReason> {
    let listed = |list: &[String]| list.iter().any(|n| n.eq_ignore_ascii_case(&record.full_name));
    if record.stars < criteria.min_stars {
        Some(RejectReason::MinStars)
    } else if record.contributors < criteria.min_contributors {
        Some(RejectReason::MinContributors)
    } else if record.archived {
        Some(RejectReason::Archived)
    } else if criteria.reference_date - record.last_push > Duration::days(criteria.max_inactivity_days) {
        Some(RejectReason::Inactive)
    } else if listed(&criteria.exclusion_list) {
        Some(RejectReason::Excluded)
    } else {
        None
    }
}

pub fn filter_repositories(records: &[RepoRecord], criteria: &SelectionCriteria) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for r in records {
        let reinstated = criteria
            .reinstatement_list
            .iter()
            .any(|n| n.eq_ignore_ascii_case(&r.full_name));
        match (first_failure(r, criteria), reinstated) {
            (None, _) => out.accepted.push(Accepted {
                record: r.clone(),
                reinstated_over: None,
            }),
            (Some(reason), true) => out.accepted.push(Accepted {
                record: r.clone(),
                reinstated_over: Some(reason),
            }),
            (Some(reason), false) => out.rejected.push((r.clone(), reason)),
        }
    }
    out
}

/// Writes `projects_manifest.csv`: every record with its verdict, in the
/// order of `records`. `commits` maps accepted names to snapshot commits.
pub fn write_projects_manifest<W: Write>(
    records: &[RepoRecord],
    outcome: &FilterOutcome,
    commits: &BTreeMap<String, String>,
    writer: W,
) -> Result<(), HarvestError> {
    let mut verdicts: BTreeMap<&str, (&str, String)> = BTreeMap::new();
    for a in &outcome.accepted {
        let reason = a
            .reinstated_over
            .map_or_else(String::new, |r| format!("reinstated:{r}"));
        verdicts.insert(&a.record.full_name, ("accepted", reason));
    }
    for (r, reason) in &outcome.rejected {
        verdicts.insert(&r.full_name, ("rejected", reason.to_string()));
    }
    let mut wtr = csv_writer(writer);
    wtr.write_record(PROJECTS_MANIFEST_HEADER)?;
    for r in records {
        let (verdict, reason) = verdicts
            .get(r.full_name.as_str())
            .cloned()
            .unwrap_or(("rejected", String::new()));
        wtr.write_record([
            r.full_name.as_str(),
            &r.stars.to_string(),
            &r.contributors.to_string(),
            if r.archived { "true" } else { "false" },
            &r.last_push.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            verdict,
            &reason,
            commits.get(&r.full_name).map_or("", String::as_str),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use std::cell::RefCell;

    fn reference() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2025, 6, 1, 0, 0, 0).unwrap()
    }

    fn rec(name: &str, stars: u64) -> RepoRecord {
        RepoRecord {
            full_name: name.into(),
            stars,
            contributors: 12,
            archived: false,
            last_push: reference() - Duration::days(10),
            topics: vec![],
        }
    }

    struct FakeApi {
        results: BTreeMap<String, Vec<RepoRecord>>,
        contributor_calls: RefCell<usize>,
    }

    impl HostingApi for FakeApi {
        fn search(&self, query: &str) -> Result<Vec<RepoRecord>, HarvestError> {
            Ok(self.results.get(query).cloned().unwrap_or_default())
        }
        fn count_contributors(&self, _: &str) -> Result<u64, HarvestError> {
            *self.contributor_calls.borrow_mut() += 1;
            Ok(11)
        }
    }

    #[test]
    fn union_and_order() {
        let api = FakeApi {
            results: BTreeMap::from([
                ("q1".to_string(), vec![rec("x/small", 5), rec("x/b", 50)]),
                ("q2".to_string(), vec![rec("x/a", 50), rec("x/b", 50)]),
            ]),
            contributor_calls: RefCell::new(0),
        };
        let out = search_repositories(&["q1", "q2"], &api).unwrap();
        let names: Vec<_> = out.iter().map(|r| r.full_name.as_str()).collect();
        assert_eq!(names, ["x/a", "x/b", "x/small"]);
        assert_eq!(*api.contributor_calls.borrow(), 3);
        assert!(out.iter().all(|r| r.contributors == 11));
        assert!(search_repositories(&["none"], &api).unwrap().is_empty());
        assert!(matches!(search_repositories::<&str>(&[], &api), Err(HarvestError::NoQueries)));
    }

    #[test]
    fn reasons_follow_rule_order() {
        let c = SelectionCriteria::with_reference_date(reference());
        let mut r = rec("o/n", 29);
        r.archived = true;
        assert_eq!(first_failure(&r, &c), Some(RejectReason::MinStars));
        r.stars = 30;
        assert_eq!(first_failure(&r, &c), Some(RejectReason::Archived));
    }

    #[test]
    fn reinstatement_overrides() {
        let mut c = SelectionCriteria::with_reference_date(reference());
        c.reinstatement_list.push("rigetti/grove".into());
        let mut r = rec("rigetti/grove", 300);
        r.last_push = Utc.with_ymd_and_hms(2021, 3, 1, 0, 0, 0).unwrap();
        let out = filter_repositories(&[r], &c);
        assert_eq!(out.accepted.len(), 1);
        assert_eq!(out.accepted[0].reinstated_over, Some(RejectReason::Inactive));
    }

    #[test]
    fn manifest_lists_every_record() {
        let c = SelectionCriteria::with_reference_date(reference());
        let records = vec![rec("a/ok", 40), rec("b/low", 3)];
        let outcome = filter_repositories(&records, &c);
        let commits = BTreeMap::from([("a/ok".to_string(), "abc".to_string())]);
        let mut buf = Vec::new();
        write_projects_manifest(&records, &outcome, &commits, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "full_name,stars,contributors,archived,last_push,verdict,reason,commit\n\
a/ok,40,12,false,2025-05-22T00:00:00Z,accepted,,abc\n\
b/low,3,12,false,2025-05-22T00:00:00Z,rejected,min_stars,\n"
        );
    }
}
