use std::collections::BTreeSet;

use serde::Serialize;

use super::parse::{match_url, StructuredSummary};
use crate::collector::CommitRecord;
use crate::filter::{classify_commit, CommitKind, RuleTable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub missing_feat_commits: Vec<String>,
    pub missing_fix_commits: Vec<String>,
    pub unknown_urls: Vec<String>,
    pub complete: bool,
}

/// Checks that every feat/fix commit in `commits` is linked from a summary
/// item, and that no item links a commit outside the input.
pub fn verify_summary(summary: &StructuredSummary, commits: &[CommitRecord], rules: &RuleTable) -> VerificationReport {
    let matched: BTreeSet<&str> = summary.items().filter_map(|i| i.matched_hash.as_deref()).collect();
    let mut missing_feat_commits = Vec::new();
    let mut missing_fix_commits = Vec::new();
    for c in commits {
        if matched.contains(c.hash.as_str()) {
            continue;
        }
        match classify_commit(c, rules).kind {
            CommitKind::Feature => missing_feat_commits.push(c.hash.clone()),
            CommitKind::Fix => missing_fix_commits.push(c.hash.clone()),
            _ => {}
        }
    }
    let unknown_urls: Vec<String> = summary
        .items()
        .filter_map(|i| i.commit_url.as_deref())
        .filter(|u| match_url(u, commits).is_none())
        .map(str::to_string)
        .collect();
    let complete = missing_feat_commits.is_empty() && missing_fix_commits.is_empty();
    VerificationReport {
        missing_feat_commits,
        missing_fix_commits,
        unknown_urls,
        complete,
    }
}
