//! Deterministic directory listing and content hashing.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use walkdir::WalkDir;

/// A file found under a root, with its root-relative path in `/` form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Listed {
    pub relative: String,
    pub path: PathBuf,
}

/// Unreadable entry encountered while walking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkWarning {
    pub path: PathBuf,
    pub message: String,
}

/// All files under `root` whose extension equals `extension`, sorted
/// bytewise by relative path. Directories named in `skip_dirs` (relative to
/// `root`) and `__pycache__` directories are pruned. Unreadable entries are
/// reported and skipped.
pub fn list_files(
    root: &Path,
    extension: &str,
    skip_dirs: &[PathBuf],
) -> (Vec<Listed>, Vec<WalkWarning>) {
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    let walker = WalkDir::new(root).follow_links(false).into_iter().filter_entry(|e| {
        if !e.file_type().is_dir() || e.depth() == 0 {
            return true;
        }
        if e.file_name() == "__pycache__" {
            return false;
        }
        let rel = e.path().strip_prefix(root).unwrap_or(e.path());
        !skip_dirs.iter().any(|s| rel == s.as_path())
    });
    for entry in walker {
        match entry {
            Ok(e) if e.file_type().is_file() => {
                if e.path().extension().and_then(|x| x.to_str()) == Some(extension) {
                    files.push(Listed {
                        relative: relative_slash(root, e.path()),
                        path: e.path().to_path_buf(),
                    });
                }
            }
            Ok(_) => {}
            Err(err) => warnings.push(WalkWarning {
                path: err.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
                message: err.to_string(),
            }),
        }
    }
    files.sort();
    (files, warnings)
}

pub fn relative_slash(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of a file, or of a directory tree (sorted `path\0hash` listing).
pub fn hash_path(path: &Path) -> io::Result<String> {
    if path.is_dir() {
        let mut entries: Vec<(String, String)> = Vec::new();
        for entry in WalkDir::new(path) {
            let entry = entry.map_err(io::Error::other)?;
            if entry.file_type().is_file() {
                entries.push((
                    relative_slash(path, entry.path()),
                    sha256_bytes(&fs::read(entry.path())?),
                ));
            }
        }
        entries.sort();
        let mut listing = String::new();
        for (rel, h) in entries {
            listing.push_str(&rel);
            listing.push('\0');
            listing.push_str(&h);
            listing.push('\n');
        }
        Ok(sha256_bytes(listing.as_bytes()))
    } else {
        Ok(sha256_bytes(&fs::read(path)?))
    }
}
