use std::collections::BTreeSet;

use serde::Serialize;

use crate::collector::CommitRecord;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PromotionStats {
    /// All collected commits, before filtering.
    pub commit_count: usize,
    pub substantive_count: usize,
    /// Distinct author emails.
    pub contributor_count: usize,
    /// Distinct paths across all commits.
    pub total_files_changed: usize,
    pub total_insertions: usize,
    pub total_deletions: usize,
}

pub fn aggregate_stats(all_commits: &[CommitRecord], substantive: &[CommitRecord]) -> PromotionStats {
    let contributors: BTreeSet<&str> = all_commits.iter().map(|c| c.author_email.as_str()).collect();
    let files: BTreeSet<&str> = all_commits
        .iter()
        .flat_map(|c| c.changed_files.iter().map(String::as_str))
        .collect();
    PromotionStats {
        commit_count: all_commits.len(),
        substantive_count: substantive.len(),
        contributor_count: contributors.len(),
        total_files_changed: files.len(),
        total_insertions: all_commits.iter().map(|c| c.diffstat.insertions).sum(),
        total_deletions: all_commits.iter().map(|c| c.diffstat.deletions).sum(),
    }
}
