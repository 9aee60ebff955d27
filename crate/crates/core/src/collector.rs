//! Commit range capture and collection.
//!
//! A promotion aligns the target branch with the source, after which the
//! range between them is gone. [`capture_range`] therefore pins the range to
//! resolved commit ids so that a later [`collect_commits`] sees the same
//! commits regardless of what happened to the branches in between.

use std::collections::BTreeSet;

use chrono::{DateTime, FixedOffset};
use serde::Serialize;
use thiserror::Error;

use crate::git::{self, GitError, Repo};

#[derive(Debug, Error)]
pub enum CollectError {
    #[error("unknown ref `{0}`")]
    UnknownRef(String),
    #[error("unknown commit `{0}`")]
    UnknownCommit(String),
    #[error("cannot resolve range `{range}`: {reason}")]
    RangeResolutionFailed { range: String, reason: String },
    #[error("repository access failed: {0}")]
    RepositoryAccessFailed(#[from] GitError),
    #[error("unexpected git output: {0}")]
    Parse(String),
}

/// The set of commits a promotion moves: reachable from `source_ref` but
/// not from `target_ref`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RangeSpec {
    pub source_ref: String,
    pub target_ref: String,
    /// `<target>..<source>` as recorded before the promotion.
    pub captured_range: Option<String>,
    /// The same range with both ends resolved to commit ids at capture time.
    pub pinned_range: Option<String>,
}

impl RangeSpec {
    pub fn from_refs(source_ref: impl Into<String>, target_ref: impl Into<String>) -> Self {
        Self {
            source_ref: source_ref.into(),
            target_ref: target_ref.into(),
            captured_range: None,
            pinned_range: None,
        }
    }

    /// A range captured by an earlier step, e.g. `staging..development` or
    /// `<hash>..<hash>`.
    pub fn from_captured(range: impl Into<String>) -> Self {
        let range = range.into();
        let (target, source) = range
            .split_once("..")
            .map(|(t, s)| (t.to_string(), s.to_string()))
            .unwrap_or_default();
        Self {
            source_ref: source,
            target_ref: target,
            captured_range: Some(range),
            pinned_range: None,
        }
    }

    /// The revision range text handed to git.
    pub fn revision_range(&self) -> String {
        if let Some(pinned) = &self.pinned_range {
            return pinned.clone();
        }
        if let Some(captured) = &self.captured_range {
            return captured.clone();
        }
        format!("{}..{}", self.target_ref, self.source_ref)
    }

    /// Human-readable range for provenance.
    pub fn display_range(&self) -> String {
        match (&self.captured_range, &self.pinned_range) {
            (Some(c), Some(p)) if c != p => format!("{c} ({p})"),
            (Some(c), _) => c.clone(),
            (None, Some(p)) => p.clone(),
            (None, None) => format!("{}..{}", self.target_ref, self.source_ref),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DiffStat {
    pub files_changed: usize,
    pub insertions: usize,
    pub deletions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommitRecord {
    pub hash: String,
    pub parents: Vec<String>,
    pub summary: String,
    pub body: String,
    pub author_name: String,
    pub author_email: String,
    pub date: DateTime<FixedOffset>,
    pub changed_files: Vec<String>,
    pub diffstat: DiffStat,
    pub url: String,
}

impl CommitRecord {
    pub fn short_hash(&self) -> &str {
        &self.hash[..self.hash.len().min(7)]
    }

    pub fn is_merge(&self) -> bool {
        self.parents.len() > 1
    }
}

pub fn commit_url(web_base_url: &str, hash: &str) -> String {
    format!("{}/commit/{}", web_base_url.trim_end_matches('/'), hash)
}

/// Records the range between `target_ref` and `source_ref` before any branch
/// is moved.
pub fn capture_range(repo: &Repo, source_ref: &str, target_ref: &str) -> Result<RangeSpec, CollectError> {
    let source = repo
        .resolve_commit(source_ref)?
        .ok_or_else(|| CollectError::UnknownRef(source_ref.to_string()))?;
    let target = repo
        .resolve_commit(target_ref)?
        .ok_or_else(|| CollectError::UnknownRef(target_ref.to_string()))?;
    Ok(RangeSpec {
        source_ref: source_ref.to_string(),
        target_ref: target_ref.to_string(),
        captured_range: Some(format!("{target_ref}..{source_ref}")),
        pinned_range: Some(format!("{target}..{source}")),
    })
}

const FIELD_SEP: char = '\u{1f}';
const RECORD_SEP: char = '\u{1e}';

/// Walks `range` newest-first (topological order) and returns one fully
/// populated record per commit, merges included.
pub fn collect_commits(repo: &Repo, range: &RangeSpec, web_base_url: &str) -> Result<Vec<CommitRecord>, CollectError> {
    let revisions = range.revision_range();
    let (from, to) = revisions
        .split_once("..")
        .filter(|(_, to)| !to.starts_with('.'))
        .ok_or_else(|| CollectError::RangeResolutionFailed {
            range: revisions.clone(),
            reason: "expected `<target>..<source>`".into(),
        })?;
    repo.verify()?;
    for end in [from, to] {
        if end.is_empty() {
            return Err(CollectError::RangeResolutionFailed {
                range: revisions.clone(),
                reason: "empty range endpoint".into(),
            });
        }
        if repo.resolve_commit(end)?.is_none() {
            return Err(if git::is_full_hash(end) {
                CollectError::UnknownCommit(end.to_string())
            } else {
                CollectError::UnknownRef(end.to_string())
            });
        }
    }

    let log = repo
        .run(&[
            "log",
            "--topo-order",
            "--no-color",
            "--format=%H%x1f%P%x1f%an%x1f%ae%x1f%aI%x1f%B%x1e",
            "--end-of-options",
            &revisions,
            "--",
        ])
        .map_err(|e| match e {
            GitError::Failed { stderr, .. } => CollectError::RangeResolutionFailed {
                range: revisions.clone(),
                reason: stderr,
            },
            other => CollectError::RepositoryAccessFailed(other),
        })?;

    let mut records = Vec::new();
    for raw in log.split(RECORD_SEP) {
        let raw = raw.trim_start_matches('\n');
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.splitn(6, FIELD_SEP).collect();
        let [hash, parents, author_name, author_email, date, message] = fields[..] else {
            return Err(CollectError::Parse(format!("malformed log record: {raw:?}")));
        };
        if !git::is_full_hash(hash) {
            return Err(CollectError::Parse(format!("bad commit id {hash:?}")));
        }
        let date = DateTime::parse_from_rfc3339(date)
            .map_err(|e| CollectError::Parse(format!("bad author date {date:?}: {e}")))?;
        let body = message.trim_end_matches('\n').to_string();
        let summary = body.lines().next().unwrap_or_default().trim_end().to_string();
        let parents: Vec<String> = parents.split_whitespace().map(str::to_string).collect();
        let (diffstat, changed_files) = diff_against_first_parent(repo, hash, parents.first().map(String::as_str))?;
        records.push(CommitRecord {
            hash: hash.to_string(),
            url: commit_url(web_base_url, hash),
            parents,
            summary,
            body,
            author_name: author_name.to_string(),
            author_email: author_email.to_string(),
            date,
            changed_files,
            diffstat,
        });
    }
    Ok(records)
}

/// Diff statistics of `hash` against its first parent, or against the empty
/// tree for a root commit.
pub fn compute_diffstat(repo: &Repo, hash: &str) -> Result<DiffStat, CollectError> {
    let full = repo
        .resolve_commit(hash)?
        .ok_or_else(|| CollectError::UnknownCommit(hash.to_string()))?;
    let parents = repo.run(&["rev-list", "--parents", "-n", "1", &full])?;
    let first_parent = parents.split_whitespace().nth(1);
    Ok(diff_against_first_parent(repo, &full, first_parent)?.0)
}

fn diff_against_first_parent(
    repo: &Repo,
    hash: &str,
    first_parent: Option<&str>,
) -> Result<(DiffStat, Vec<String>), CollectError> {
    let base = match first_parent {
        Some(p) => p.to_string(),
        None => repo.empty_tree()?,
    };
    let out = repo.run_raw(&["diff-tree", "-r", "--numstat", "-z", "--no-renames", "--no-commit-id", &base, hash])?;
    let out = String::from_utf8(out).map_err(|_| CollectError::Parse("non-UTF-8 path in diff".into()))?;
    parse_numstat_z(&out)
}

fn parse_numstat_z(out: &str) -> Result<(DiffStat, Vec<String>), CollectError> {
    let mut stat = DiffStat::default();
    let mut seen = BTreeSet::new();
    let mut files = Vec::new();
    for entry in out.split('\0').filter(|e| !e.is_empty()) {
        let mut parts = entry.splitn(3, '\t');
        let (Some(added), Some(deleted), Some(path)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(CollectError::Parse(format!("malformed numstat entry {entry:?}")));
        };
        // binary files report "-"
        stat.insertions += added.parse::<usize>().unwrap_or(0);
        stat.deletions += deleted.parse::<usize>().unwrap_or(0);
        let path = path.replace('\\', "/");
        if seen.insert(path.clone()) {
            files.push(path);
        }
    }
    stat.files_changed = files.len();
    Ok((stat, files))
}
