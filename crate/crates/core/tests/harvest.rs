mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use chrono::{DateTime, Duration as Days, TimeZone, Utc};

use common::{MockServer, Reply};
use patmine::harvest::{
    filter_repositories, first_failure, read_snapshot_manifest, search_repositories, snapshot_repository,
    write_projects_manifest, GitHubClient, HarvestError, HostingApi, RejectReason, RepoRecord, RetryPolicy,
    SelectionCriteria,
};

fn reference() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2025, 6, 1, 12, 0, 0).unwrap()
}

fn repo(name: &str, stars: u64, contributors: u64, archived: bool, age_days: i64) -> RepoRecord {
    RepoRecord {
        full_name: name.into(),
        stars,
        contributors,
        archived,
        last_push: reference() - Days::days(age_days),
        topics: vec!["quantum-computing".into()],
    }
}

fn criteria() -> SelectionCriteria {
    SelectionCriteria {
        exclusion_list: vec!["qiskit/qiskit".into()],
        reinstatement_list: vec!["rigetti/grove".into()],
        ..SelectionCriteria::with_reference_date(reference())
    }
}

#[test]
fn filter_boundaries() {
    let table: [(RepoRecord, Option<RejectReason>, bool); 12] = [
        (repo("a/stars29", 29, 50, false, 1), Some(RejectReason::MinStars), false),
        (repo("a/stars30", 30, 50, false, 1), None, true),
        (repo("a/contrib9", 100, 9, false, 1), Some(RejectReason::MinContributors), false),
        (repo("a/contrib10", 100, 10, false, 1), None, true),
        (repo("a/push365", 100, 50, false, 365), None, true),
        (repo("a/push366", 100, 50, false, 366), Some(RejectReason::Inactive), false),
        (repo("a/archived", 100, 50, true, 1), Some(RejectReason::Archived), false),
        (repo("qiskit/qiskit", 5000, 500, false, 1), Some(RejectReason::Excluded), false),
        (repo("Qiskit/Qiskit", 5000, 500, false, 1), Some(RejectReason::Excluded), false),
        (repo("rigetti/grove", 200, 20, true, 2000), Some(RejectReason::Archived), true),
        (repo("a/everything", 0, 0, true, 5000), Some(RejectReason::MinStars), false),
        (repo("a/archived-old", 100, 50, true, 900), Some(RejectReason::Archived), false),
    ];
    let c = criteria();
    let records: Vec<RepoRecord> = table.iter().map(|(r, _, _)| r.clone()).collect();
    let outcome = filter_repositories(&records, &c);
    for (record, reason, accepted) in &table {
        assert_eq!(first_failure(record, &c), *reason, "{}", record.full_name);
        let found = outcome.accepted.iter().find(|a| a.record.full_name == record.full_name);
        assert_eq!(found.is_some(), *accepted, "{}", record.full_name);
        if let Some(a) = found {
            assert_eq!(a.reinstated_over, if *accepted { *reason } else { None });
        } else {
            let (_, r) = outcome
                .rejected
                .iter()
                .find(|(r, _)| r.full_name == record.full_name)
                .unwrap();
            assert_eq!(Some(*r), *reason);
        }
    }
}

#[test]
fn projects_manifest_records_verdicts() {
    let records = vec![
        repo("a/ok", 100, 50, false, 1),
        repo("a/small", 3, 50, false, 1),
        repo("rigetti/grove", 200, 20, true, 2000),
    ];
    let outcome = filter_repositories(&records, &criteria());
    let commits = BTreeMap::from([("a/ok".to_string(), "abc123".to_string())]);
    let mut out = Vec::new();
    write_projects_manifest(&records, &outcome, &commits, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "full_name,stars,contributors,archived,last_push,verdict,reason,commit");
    assert_eq!(lines[1], "a/ok,100,50,false,2025-05-31T12:00:00Z,accepted,,abc123");
    assert_eq!(lines[2], "a/small,3,50,false,2025-05-31T12:00:00Z,rejected,min_stars,");
    assert_eq!(lines[3], "rigetti/grove,200,20,true,2019-12-10T12:00:00Z,accepted,reinstated:archived,");
}

fn search_item(name: &str, stars: u64) -> String {
    format!(
        r#"{{"full_name":"{name}","stargazers_count":{stars},"archived":false,"pushed_at":"2025-05-01T00:00:00Z","topics":["quantum-computing"]}}"#
    )
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        max_attempts: 3,
        base_delay: Duration::from_millis(5),
        max_delay: Duration::from_millis(20),
    }
}

#[test]
fn github_search_follows_pages_and_counts_contributors() {
    let server = MockServer::start(|req| {
        let t = req.target.as_str();
        if t.starts_with("/search/repositories") && t.contains("page=2") {
            Reply::json(200, format!(r#"{{"items":[{}]}}"#, search_item("b/two", 40)))
        } else if t.starts_with("/search/repositories") {
            assert!(t.contains("per_page=100"));
            let host = req.header("host").unwrap();
            Reply::json(200, format!(r#"{{"items":[{},{}]}}"#, search_item("a/one", 90), search_item("B/Two", 40)))
                .with_header("Link", format!("<http://{host}/search/repositories?q=x&page=2>; rel=\"next\""))
        } else if t.starts_with("/repos/a/one/contributors") {
            let host = req.header("host").unwrap();
            Reply::json(200, "[{}]").with_header(
                "Link",
                format!(
                    "<http://{host}/repos/a/one/contributors?per_page=1&page=2>; rel=\"next\", <http://{host}/repos/a/one/contributors?per_page=1&page=37>; rel=\"last\""
                ),
            )
        } else if t.contains("/contributors") {
            Reply::json(200, "[{}]")
        } else {
            Reply::json(404, "{}")
        }
    });
    let client = GitHubClient::new(&server.base, Some("secret".into())).with_retry(fast_retry());
    let found = search_repositories(&["topic:quantum"], &client).unwrap();
    let summary: Vec<(&str, u64, u64)> = found
        .iter()
        .map(|r| (r.full_name.as_str(), r.stars, r.contributors))
        .collect();
    assert_eq!(summary, [("a/one", 90, 37), ("B/Two", 40, 1)]);
    let reqs = server.requests.lock().unwrap();
    assert!(reqs.iter().all(|r| r.header("authorization") == Some("Bearer secret")));
}

#[test]
fn github_retries_rate_limits_then_succeeds() {
    let throttled = MockServer::start({
        let calls = std::sync::atomic::AtomicUsize::new(0);
        move |_| {
            if calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst) < 2 {
                Reply::json(403, r#"{"message":"rate limited"}"#)
                    .with_header("X-RateLimit-Remaining", "0")
                    .with_header("Retry-After", "0")
            } else {
                Reply::json(200, r#"{"items":[]}"#)
            }
        }
    });
    let client = GitHubClient::new(&throttled.base, None).with_retry(fast_retry());
    assert!(client.search("q").unwrap().is_empty());
    assert_eq!(throttled.count(), 3);

    let always = MockServer::start(|_| Reply::json(429, "{}").with_header("Retry-After", "0"));
    let client = GitHubClient::new(&always.base, None).with_retry(fast_retry());
    assert!(matches!(client.search("q"), Err(HarvestError::RateLimited { attempts: 3, .. })));
    assert_eq!(always.count(), 3);
}

#[test]
fn github_credential_and_api_errors() {
    let server = MockServer::start(|_| Reply::json(401, r#"{"message":"Bad credentials"}"#));
    let client = GitHubClient::new(&server.base, Some("bad".into())).with_retry(fast_retry());
    assert!(matches!(client.search("q"), Err(HarvestError::Credential(_))));
    assert_eq!(server.count(), 1);

    let server = MockServer::start(|_| Reply::json(422, r#"{"message":"Validation Failed"}"#));
    let client = GitHubClient::new(&server.base, None).with_retry(fast_retry());
    match client.search("q") {
        Err(HarvestError::Api { status, message, .. }) => {
            assert_eq!(status, 422);
            assert!(message.contains("Validation Failed"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

fn git(dir: &Path, args: &[&str]) {
    let ok = Command::new("git")
        .args(args)
        .current_dir(dir)
        .env("GIT_AUTHOR_DATE", "2025-01-02T03:04:05Z")
        .env("GIT_COMMITTER_DATE", "2025-01-02T03:04:05Z")
        .status()
        .unwrap()
        .success();
    assert!(ok, "git {args:?}");
}

fn local_remote(root: &Path) -> String {
    let work = root.join("work");
    std::fs::create_dir_all(work.join("nb")).unwrap();
    git(&work, &["init", "-q", "-b", "main"]);
    git(&work, &["config", "user.email", "t@example.com"]);
    git(&work, &["config", "user.name", "t"]);
    std::fs::write(work.join("nb/a.ipynb"), "{}").unwrap();
    std::fs::write(work.join("README.md"), "demo").unwrap();
    git(&work, &["add", "."]);
    git(&work, &["commit", "-q", "-m", "init"]);
    let bare = root.join("remote/owner/demo.git");
    std::fs::create_dir_all(bare.parent().unwrap()).unwrap();
    git(root, &["clone", "-q", "--bare", work.to_str().unwrap(), bare.to_str().unwrap()]);
    format!("file://{}", bare.display())
}

#[test]
fn snapshot_is_idempotent_and_records_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let remote = local_remote(dir.path());
    let dest = dir.path().join("snapshots");
    let record = repo("owner/demo", 100, 20, false, 1);

    let first = snapshot_repository(&record, &remote, &dest, Some("mono")).unwrap();
    assert_eq!(first.file_count, 2);
    assert_eq!(first.commit.len(), 40);
    assert_eq!(first.timestamp, "2025-01-02T03:04:05+00:00");
    assert!(dest.join("owner/demo/nb/a.ipynb").is_file());
    assert!(!dest.join("owner/demo/.git").exists());
    assert_eq!(read_snapshot_manifest(&dest, "owner/demo"), Some(first.clone()));

    let marker = dest.join("owner/demo/marker");
    std::fs::write(&marker, "kept").unwrap();
    let second = snapshot_repository(&record, &remote, &dest, Some("mono")).unwrap();
    assert_eq!(second, first);
    assert!(marker.exists(), "up-to-date snapshot must not be re-cloned");
    let leftovers = std::fs::read_dir(&dest).unwrap().count();
    assert_eq!(leftovers, 1, "only the owner directory remains");
}

#[test]
fn snapshot_of_missing_repository_is_a_transfer_error() {
    let dir = tempfile::tempdir().unwrap();
    let record = repo("owner/missing", 100, 20, false, 1);
    let url = format!("file://{}/nope.git", dir.path().display());
    let err = snapshot_repository(&record, &url, &dir.path().join("s"), None).unwrap_err();
    assert!(matches!(err, HarvestError::Transfer { ref repo, .. } if repo == "owner/missing"), "{err}");
}

struct FakeApi;

impl HostingApi for FakeApi {
    fn search(&self, query: &str) -> Result<Vec<RepoRecord>, HarvestError> {
        Ok(match query {
            "q1" => vec![repo("x/a", 10, 0, false, 1), repo("x/b", 50, 0, false, 1)],
            _ => vec![repo("X/A", 10, 0, false, 1), repo("x/c", 50, 0, false, 1)],
        })
    }

    fn count_contributors(&self, full_name: &str) -> Result<u64, HarvestError> {
        Ok(full_name.len() as u64)
    }
}

#[test]
fn search_union_is_case_insensitive_and_sorted() {
    let found = search_repositories(&["q1", "q2"], &FakeApi).unwrap();
    let names: Vec<&str> = found.iter().map(|r| r.full_name.as_str()).collect();
    assert_eq!(names, ["x/b", "x/c", "x/a"]);
    assert!(found.iter().all(|r| r.contributors == 3));
    assert!(matches!(
        search_repositories::<&str>(&[], &FakeApi),
        Err(HarvestError::NoQueries)
    ));
}
