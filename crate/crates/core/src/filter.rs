//! Rule-based commit classification.
//!
//! Conventional-commit prefixes are checked first, then suppression
//! keywords. A `feat` or `fix` prefix always wins, so no keyword can drop a
//! substantive commit.

use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::Serialize;
use std::sync::OnceLock;

use crate::collector::CommitRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitKind {
    Feature,
    Fix,
    Chore,
    Docs,
    Test,
    Ci,
    Style,
    Refactor,
    Merge,
    Revert,
    Wip,
    DependencyBump,
    Other,
}

impl CommitKind {
    pub fn is_substantive(self) -> bool {
        matches!(self, CommitKind::Feature | CommitKind::Fix | CommitKind::Other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CommitKind::Feature => "feature",
            CommitKind::Fix => "fix",
            CommitKind::Chore => "chore",
            CommitKind::Docs => "docs",
            CommitKind::Test => "test",
            CommitKind::Ci => "ci",
            CommitKind::Style => "style",
            CommitKind::Refactor => "refactor",
            CommitKind::Merge => "merge",
            CommitKind::Revert => "revert",
            CommitKind::Wip => "wip",
            CommitKind::DependencyBump => "dependency_bump",
            CommitKind::Other => "other",
        }
    }
}

impl fmt::Display for CommitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CommitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "feature" => CommitKind::Feature,
            "fix" => CommitKind::Fix,
            "chore" => CommitKind::Chore,
            "docs" => CommitKind::Docs,
            "test" => CommitKind::Test,
            "ci" => CommitKind::Ci,
            "style" => CommitKind::Style,
            "refactor" => CommitKind::Refactor,
            "merge" => CommitKind::Merge,
            "revert" => CommitKind::Revert,
            "wip" => CommitKind::Wip,
            "dependency_bump" => CommitKind::DependencyBump,
            "other" => CommitKind::Other,
            _ => return Err(format!("unknown commit kind `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CommitClass {
    pub kind: CommitKind,
    pub substantive: bool,
}

impl From<CommitKind> for CommitClass {
    fn from(kind: CommitKind) -> Self {
        Self {
            kind,
            substantive: kind.is_substantive(),
        }
    }
}

/// Prefix and keyword tables. Lookups are case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    /// Conventional-commit type (lowercase) to kind.
    pub prefixes: Vec<(String, CommitKind)>,
    /// Summary substring (lowercase) to kind, checked in order.
    pub keywords: Vec<(String, CommitKind)>,
}

impl Default for RuleTable {
    fn default() -> Self {
        let prefixes = [
            ("feat", CommitKind::Feature),
            ("fix", CommitKind::Fix),
            ("chore", CommitKind::Chore),
            ("docs", CommitKind::Docs),
            ("test", CommitKind::Test),
            ("ci", CommitKind::Ci),
            ("style", CommitKind::Style),
            ("refactor", CommitKind::Refactor),
        ];
        let keywords = [
            ("bump", CommitKind::DependencyBump),
            ("dependency update", CommitKind::DependencyBump),
            ("merge", CommitKind::Merge),
            ("revert", CommitKind::Revert),
            ("work in progress", CommitKind::Wip),
        ];
        Self {
            prefixes: prefixes.iter().map(|(p, k)| (p.to_string(), *k)).collect(),
            keywords: keywords.iter().map(|(w, k)| (w.to_string(), *k)).collect(),
        }
    }
}

impl RuleTable {
    /// Replaces the suppressed prefixes. `feat` and `fix` stay mapped to
    /// their substantive kinds; a name that is not a known kind maps to
    /// `chore`.
    pub fn with_suppressed_prefixes<S: AsRef<str>>(mut self, prefixes: &[S]) -> Self {
        self.prefixes.retain(|(_, k)| matches!(k, CommitKind::Feature | CommitKind::Fix));
        for p in prefixes {
            let p = p.as_ref().trim().to_ascii_lowercase();
            if p.is_empty() || p == "feat" || p == "fix" {
                continue;
            }
            let kind = match p.parse::<CommitKind>() {
                Ok(k) if !k.is_substantive() => k,
                _ => CommitKind::Chore,
            };
            self.prefixes.push((p, kind));
        }
        self
    }

    /// Replaces the suppression keywords. Known default keywords keep their
    /// kind, new ones map to `chore`.
    pub fn with_keywords<S: AsRef<str>>(mut self, keywords: &[S]) -> Self {
        let defaults = RuleTable::default().keywords;
        self.keywords = keywords
            .iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .map(|w| {
                let kind = defaults
                    .iter()
                    .find(|(d, _)| *d == w)
                    .map(|(_, k)| *k)
                    .unwrap_or(CommitKind::Chore);
                (w, kind)
            })
            .collect();
        self
    }

    fn prefix_kind(&self, commit_type: &str) -> Option<CommitKind> {
        self.prefixes
            .iter()
            .find(|(p, _)| p.eq_ignore_ascii_case(commit_type))
            .map(|(_, k)| *k)
    }
}

fn prefix_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*([A-Za-z][A-Za-z0-9_-]*)(\([^)]*\))?!?:").expect("valid regex"))
}

/// Classifies a summary line. `parent_count` only matters for the `merge`
/// keyword, which otherwise requires the summary to start with "merge".
pub fn classify_summary(summary: &str, parent_count: usize, rules: &RuleTable) -> CommitClass {
    if let Some(caps) = prefix_regex().captures(summary) {
        let commit_type = &caps[1];
        if let Some(kind) = rules.prefix_kind(commit_type) {
            return kind.into();
        }
        // unrecognized conventional prefix (perf:, build:, ...) is kept
        return CommitKind::Other.into();
    }
    let lower = summary.trim().to_lowercase();
    for (keyword, kind) in &rules.keywords {
        if !lower.contains(keyword.as_str()) {
            continue;
        }
        if *kind == CommitKind::Merge && !(lower.starts_with(keyword.as_str()) || parent_count > 1) {
            continue;
        }
        return (*kind).into();
    }
    CommitKind::Other.into()
}

pub fn classify_commit(commit: &CommitRecord, rules: &RuleTable) -> CommitClass {
    classify_summary(&commit.summary, commit.parents.len(), rules)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterResult {
    pub kept: Vec<CommitRecord>,
    pub suppressed: Vec<(CommitRecord, CommitClass)>,
    pub reduction_ratio: f64,
}

pub fn filter_substantive(commits: &[CommitRecord], rules: &RuleTable) -> FilterResult {
    let mut kept = Vec::new();
    let mut suppressed = Vec::new();
    for commit in commits {
        let class = classify_commit(commit, rules);
        if class.substantive {
            kept.push(commit.clone());
        } else {
            suppressed.push((commit.clone(), class));
        }
    }
    let reduction_ratio = suppressed.len() as f64 / commits.len().max(1) as f64;
    FilterResult {
        kept,
        suppressed,
        reduction_ratio,
    }
}
