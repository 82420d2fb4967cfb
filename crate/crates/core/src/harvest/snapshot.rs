use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use tracing::info;
use walkdir::WalkDir;

use super::{HarvestError, RepoRecord};

/// Provenance of a materialized working tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub full_name: String,
    pub commit: String,
    /// Committer timestamp of `commit`, ISO 8601.
    pub timestamp: String,
    pub file_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

fn manifest_path(destination: &Path, full_name: &str) -> PathBuf {
    destination.join(format!("{full_name}.snapshot.json"))
}

pub fn read_snapshot_manifest(destination: &Path, full_name: &str) -> Option<SnapshotManifest> {
    let bytes = fs::read(manifest_path(destination, full_name)).ok()?;
    serde_json::from_slice(&bytes).ok()
}

fn git(args: &[&str], cwd: Option<&Path>, repo: &str) -> Result<String, HarvestError> {
    let mut cmd = Command::new("git");
    cmd.args(args).env("GIT_TERMINAL_PROMPT", "0");
    if let Some(dir) = cwd {
        cmd.current_dir(dir);
    }
    let out = cmd.output().map_err(|e| HarvestError::Transfer {
        repo: repo.to_string(),
        message: format!("cannot run git: {e}"),
    })?;
    if !out.status.success() {
        return Err(HarvestError::Transfer {
            repo: repo.to_string(),
            message: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarvestError + '_ {
    move |source| HarvestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Materializes the default-branch tree of `record` from `remote_url` under
/// `destination/<full_name>` and writes `<full_name>.snapshot.json` beside
/// it. A snapshot already at the remote head is left untouched.
pub fn snapshot_repository(
    record: &RepoRecord,
    remote_url: &str,
    destination: &Path,
    group: Option<&str>,
) -> Result<SnapshotManifest, HarvestError> {
    let name = record.full_name.as_str();
    let head = git(&["ls-remote", remote_url, "HEAD"], None, name)?;
    let head = head.split_whitespace().next().unwrap_or("").to_string();
    if head.is_empty() {
        return Err(HarvestError::Transfer {
            repo: name.to_string(),
            message: "remote has no HEAD".into(),
        });
    }
    let tree = destination.join(name);
    if let Some(existing) = read_snapshot_manifest(destination, name) {
        if existing.commit == head && tree.is_dir() && existing.group.as_deref() == group {
            info!(repo = name, commit = %head, "snapshot up to date");
            return Ok(existing);
        }
    }

    fs::create_dir_all(destination).map_err(io_err(destination))?;
    let staging = tempfile::tempdir_in(destination).map_err(io_err(destination))?;
    let checkout = staging.path().join("tree");
    let checkout_str = checkout.to_string_lossy().into_owned();
    git(&["clone", "--depth", "1", "--quiet", remote_url, &checkout_str], None, name)?;
    let commit = git(&["rev-parse", "HEAD"], Some(&checkout), name)?;
    let timestamp = git(&["log", "-1", "--format=%cI"], Some(&checkout), name)?;
    let dot_git = checkout.join(".git");
    fs::remove_dir_all(&dot_git).map_err(io_err(&dot_git))?;
    let file_count = WalkDir::new(&checkout)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .count();

    if tree.exists() {
        fs::remove_dir_all(&tree).map_err(io_err(&tree))?;
    }
    if let Some(parent) = tree.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::rename(&checkout, &tree).map_err(io_err(&tree))?;

    let manifest = SnapshotManifest {
        full_name: name.to_string(),
        commit,
        timestamp,
        file_count,
        group: group.map(str::to_string),
    };
    let path = manifest_path(destination, name);
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(io_err(&path))?;
    info!(repo = name, commit = %manifest.commit, files = file_count, "snapshot written");
    Ok(manifest)
}
