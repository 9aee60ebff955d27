//! Builders for in-memory commit records used by unit tests.

use chrono::{DateTime, Duration, FixedOffset};

use crate::collector::{commit_url, CommitRecord, DiffStat};

pub const BASE_URL: &str = "https://example.com/org/catalog";

/// A synthetic commit; `seq` makes the hash unique and orders dates.
pub fn commit(seq: usize, summary: &str) -> CommitRecord {
    commit_with_files(seq, summary, &[])
}

pub fn commit_with_files(seq: usize, summary: &str, files: &[&str]) -> CommitRecord {
    let hash = format!("{:040x}", 0xabc0_0000_u64 + seq as u64);
    let date: DateTime<FixedOffset> = DateTime::parse_from_rfc3339("2026-01-01T00:00:00+00:00").unwrap()
        + Duration::minutes(seq as i64);
    CommitRecord {
        url: commit_url(BASE_URL, &hash),
        hash,
        parents: vec![format!("{:040x}", 1)],
        summary: summary.to_string(),
        body: summary.to_string(),
        author_name: format!("Author {}", seq % 3),
        author_email: format!("author{}@example.com", seq % 3),
        date,
        changed_files: files.iter().map(|f| f.to_string()).collect(),
        diffstat: DiffStat {
            files_changed: files.len(),
            insertions: files.len() * 2,
            deletions: files.len(),
        },
    }
}
