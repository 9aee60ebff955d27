//! Changed-task extraction from commit file paths.
//!
//! A task lives at `<root>/<category>/<name>/<name>.yaml`. Any file under
//! the task directory (tests, scripts, docs) counts as a change to the task.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::collector::CommitRecord;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskCategory {
    Managed,
    Internal,
    Collectors,
    Other(String),
}

impl TaskCategory {
    pub fn from_dir(name: &str) -> Self {
        match name {
            "managed" => TaskCategory::Managed,
            "internal" => TaskCategory::Internal,
            "collectors" => TaskCategory::Collectors,
            other => TaskCategory::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            TaskCategory::Managed => "managed",
            TaskCategory::Internal => "internal",
            TaskCategory::Collectors => "collectors",
            TaskCategory::Other(s) => s,
        }
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for TaskCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChangedTask {
    pub name: String,
    pub category: TaskCategory,
    pub definition_path: String,
    /// Hashes of the commits touching the task directory, newest first.
    pub commits: Vec<String>,
}

/// Where tasks live in the repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskLayout {
    /// Repository-relative root, `tasks` by default. May span several
    /// segments (`catalog/tasks`).
    pub root: String,
    /// Directory levels between the root and a task directory: 2 for
    /// `<category>/<name>`, 1 for `<name>` alone.
    pub depth: usize,
}

impl Default for TaskLayout {
    fn default() -> Self {
        Self {
            root: "tasks".into(),
            depth: 2,
        }
    }
}

/// Category assigned when the layout has no category level.
pub const UNCATEGORIZED: &str = "uncategorized";

impl TaskLayout {
    pub fn with_root(root: impl Into<String>) -> Self {
        Self {
            root: root.into(),
            ..Self::default()
        }
    }

    fn root_segments(&self) -> Vec<&str> {
        self.root.split('/').filter(|s| !s.is_empty() && *s != ".").collect()
    }

    /// Returns (category, name, definition_path) when `path` lies strictly
    /// inside a task directory.
    pub fn match_path(&self, path: &str) -> Option<(TaskCategory, String, String)> {
        let root = self.root_segments();
        let segments: Vec<&str> = path
            .trim_start_matches("./")
            .split('/')
            .filter(|s| !s.is_empty())
            .collect();
        let depth = self.depth.clamp(1, 2);
        // root + task dir levels + at least one entry inside the task dir
        if segments.len() < root.len() + depth + 1 || segments[..root.len()] != root[..] {
            return None;
        }
        let rest = &segments[root.len()..];
        let (category, name) = if depth == 2 {
            (TaskCategory::from_dir(rest[0]), rest[1])
        } else {
            (TaskCategory::Other(UNCATEGORIZED.into()), rest[0])
        };
        let mut definition = root.join("/");
        if depth == 2 {
            definition.push('/');
            definition.push_str(category.as_str());
        }
        definition.push_str(&format!("/{name}/{name}.yaml"));
        Some((category, name.to_string(), definition))
    }
}

/// Deduplicated tasks touched by `commits`, sorted by category then name.
pub fn extract_changed_tasks(commits: &[CommitRecord], layout: &TaskLayout) -> Vec<ChangedTask> {
    let mut tasks: BTreeMap<(String, String), ChangedTask> = BTreeMap::new();
    let mut seen: HashSet<(String, String, &str)> = HashSet::new();
    for commit in commits {
        for path in &commit.changed_files {
            let Some((category, name, definition_path)) = layout.match_path(path) else {
                continue;
            };
            let key = (category.as_str().to_string(), name.clone());
            let task = tasks.entry(key.clone()).or_insert_with(|| ChangedTask {
                name,
                category,
                definition_path,
                commits: Vec::new(),
            });
            if seen.insert((key.0, key.1, commit.hash.as_str())) {
                task.commits.push(commit.hash.clone());
            }
        }
    }
    tasks.into_values().collect()
}
