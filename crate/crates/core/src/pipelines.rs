//! Tekton pipeline loading and task-reference resolution.
//!
//! Pipelines reference tasks in three ways: a git resolver with a
//! `pathInRepo` parameter, a git resolver carrying only a task name, and a
//! plain `taskRef` name. Both `spec.tasks` and `spec.finally` are scanned.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_yaml::Value;
use thiserror::Error;
use walkdir::WalkDir;

use crate::tasks::ChangedTask;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("pipelines directory not found: {0}")]
    DirectoryNotFound(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "mechanism", rename_all = "snake_case")]
pub enum RefMechanism {
    GitResolverPath {
        path_in_repo: String,
        url: Option<String>,
        revision: Option<String>,
    },
    GitResolverName {
        name: String,
    },
    Direct {
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskReference {
    pub pipeline_task_name: String,
    pub mechanism: RefMechanism,
    pub in_finally: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PipelineDefinition {
    pub name: String,
    pub file_path: String,
    pub references: Vec<TaskReference>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub file_path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadedPipelines {
    pub pipelines: Vec<PipelineDefinition>,
    pub warnings: Vec<LoadWarning>,
}

/// Parses every `*.yaml`/`*.yml` file under `repo_root/pipelines_dir`.
///
/// Files are parsed in parallel; output is sorted by file path and then by
/// document order. A file that fails to parse is reported in `warnings` and
/// contributes nothing.
pub fn load_pipelines(repo_root: &Path, pipelines_dir: &str) -> Result<LoadedPipelines, PipelineError> {
    let root = repo_root.join(pipelines_dir);
    if !root.is_dir() {
        return Err(PipelineError::DirectoryNotFound(root));
    }
    let mut files: Vec<PathBuf> = WalkDir::new(&root)
        .follow_links(false)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("yaml" | "yml")))
        .collect();
    files.sort();

    let parsed: Vec<(String, Result<Vec<PipelineDefinition>, String>)> = files
        .par_iter()
        .map(|path| {
            let rel = relative_path(repo_root, path);
            let result = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read file: {e}"))
                .and_then(|text| parse_pipeline_documents(&text, &rel));
            (rel, result)
        })
        .collect();

    let mut loaded = LoadedPipelines::default();
    for (file_path, result) in parsed {
        match result {
            Ok(defs) => loaded.pipelines.extend(defs),
            Err(message) => {
                tracing::warn!(file = %file_path, %message, "skipping pipeline file");
                loaded.warnings.push(LoadWarning { file_path, message });
            }
        }
    }
    Ok(loaded)
}

fn relative_path(repo_root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(repo_root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Parses a multi-document YAML stream and returns the `kind: Pipeline`
/// resources in document order.
pub fn parse_pipeline_documents(text: &str, file_path: &str) -> Result<Vec<PipelineDefinition>, String> {
    let mut out = Vec::new();
    for (index, document) in serde_yaml::Deserializer::from_str(text).enumerate() {
        let value = Value::deserialize(document).map_err(|e| format!("document {}: {e}", index + 1))?;
        if value.get("kind").and_then(Value::as_str) != Some("Pipeline") {
            continue;
        }
        let Some(name) = value
            .get("metadata")
            .and_then(|m| m.get("name"))
            .and_then(Value::as_str)
        else {
            tracing::warn!(file = %file_path, document = index + 1, "Pipeline without metadata.name skipped");
            continue;
        };
        let spec = value.get("spec");
        let mut references = Vec::new();
        for (section, in_finally) in [("tasks", false), ("finally", true)] {
            let Some(entries) = spec.and_then(|s| s.get(section)).and_then(Value::as_sequence) else {
                continue;
            };
            for entry in entries {
                if let Some(reference) = parse_task_entry(entry, in_finally) {
                    references.push(reference);
                } else {
                    tracing::debug!(file = %file_path, pipeline = name, "task entry without a supported taskRef");
                }
            }
        }
        out.push(PipelineDefinition {
            name: name.to_string(),
            file_path: file_path.to_string(),
            references,
        });
    }
    Ok(out)
}

fn parse_task_entry(entry: &Value, in_finally: bool) -> Option<TaskReference> {
    let pipeline_task_name = entry.get("name").and_then(Value::as_str).unwrap_or_default().to_string();
    let task_ref = entry.get("taskRef")?;
    let mechanism = match task_ref {
        Value::String(name) if !name.trim().is_empty() => RefMechanism::Direct { name: name.clone() },
        Value::Mapping(_) => {
            let resolver = task_ref.get("resolver").and_then(Value::as_str);
            let ref_name = task_ref.get("name").and_then(Value::as_str).filter(|n| !n.is_empty());
            match resolver {
                None => RefMechanism::Direct {
                    name: ref_name?.to_string(),
                },
                Some("git") => {
                    let params = resolver_params(task_ref);
                    match params.get("pathInRepo").filter(|p| !p.is_empty()) {
                        Some(path) => RefMechanism::GitResolverPath {
                            path_in_repo: path.clone(),
                            url: params.get("url").cloned(),
                            revision: params.get("revision").cloned(),
                        },
                        None => RefMechanism::GitResolverName {
                            name: params
                                .get("name")
                                .map(String::as_str)
                                .or(ref_name)
                                .filter(|n| !n.is_empty())?
                                .to_string(),
                        },
                    }
                }
                // bundles, cluster and hub resolvers are not analyzed
                Some(_) => return None,
            }
        }
        _ => return None,
    };
    Some(TaskReference {
        pipeline_task_name,
        mechanism,
        in_finally,
    })
}

fn resolver_params(task_ref: &Value) -> BTreeMap<String, String> {
    let mut params = BTreeMap::new();
    match task_ref.get("params") {
        Some(Value::Sequence(items)) => {
            for item in items {
                if let (Some(name), Some(value)) = (
                    item.get("name").and_then(Value::as_str),
                    item.get("value").and_then(Value::as_str),
                ) {
                    params.insert(name.to_string(), value.to_string());
                }
            }
        }
        Some(Value::Mapping(map)) => {
            for (k, v) in map {
                if let (Some(k), Some(v)) = (k.as_str(), v.as_str()) {
                    params.insert(k.to_string(), v.to_string());
                }
            }
        }
        _ => {}
    }
    params
}

/// Strips leading `./` and collapses repeated separators. Case is kept.
pub fn normalize_repo_path(path: &str) -> String {
    let mut p = path.trim();
    while let Some(rest) = p.strip_prefix("./") {
        p = rest.trim_start_matches('/');
    }
    p.split('/').filter(|s| !s.is_empty()).collect::<Vec<_>>().join("/")
}

/// Canonical form used to compare repository URLs.
pub fn normalize_repo_url(url: &str) -> String {
    let u = url.trim().trim_end_matches('/');
    u.strip_suffix(".git").unwrap_or(u).to_string()
}

fn has_unexpanded_variable(s: &str) -> bool {
    s.contains("$(")
}

/// Whether `reference` points at `task`.
pub fn resolve_reference(reference: &TaskReference, task: &ChangedTask, self_repo_urls: &BTreeSet<String>) -> bool {
    match &reference.mechanism {
        RefMechanism::GitResolverPath { path_in_repo, url, .. } => {
            if has_unexpanded_variable(path_in_repo) || url.as_deref().is_some_and(has_unexpanded_variable) {
                tracing::debug!(
                    task = %reference.pipeline_task_name,
                    path = %path_in_repo,
                    "parameterized git resolver reference treated as non-match"
                );
                return false;
            }
            if normalize_repo_path(path_in_repo) != normalize_repo_path(&task.definition_path) {
                return false;
            }
            match url {
                None => true,
                Some(url) => {
                    let url = normalize_repo_url(url);
                    self_repo_urls.iter().any(|u| normalize_repo_url(u) == url)
                }
            }
        }
        RefMechanism::GitResolverName { name } | RefMechanism::Direct { name } => {
            if has_unexpanded_variable(name) {
                tracing::debug!(task = %reference.pipeline_task_name, %name, "parameterized task name treated as non-match");
                return false;
            }
            *name == task.name
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AffectedPipeline {
    /// Pipeline name, suffixed with ` (<file_path>)` when several loaded
    /// pipelines share the name.
    pub name: String,
    pub file_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactEntry {
    pub task: ChangedTask,
    pub pipelines: Vec<AffectedPipeline>,
    pub pipeline_count: usize,
}

impl ImpactEntry {
    pub fn pipeline_names(&self) -> BTreeSet<&str> {
        self.pipelines.iter().map(|p| p.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImpactMatrix {
    pub entries: Vec<ImpactEntry>,
}

/// Display names for `pipelines`, disambiguating duplicates by file.
pub fn pipeline_display_names(pipelines: &[PipelineDefinition]) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for p in pipelines {
        *counts.entry(p.name.as_str()).or_default() += 1;
    }
    pipelines
        .iter()
        .map(|p| {
            if counts[p.name.as_str()] > 1 {
                format!("{} ({})", p.name, p.file_path)
            } else {
                p.name.clone()
            }
        })
        .collect()
}

pub fn compute_impact(
    changed: &[ChangedTask],
    pipelines: &[PipelineDefinition],
    self_repo_urls: &BTreeSet<String>,
) -> ImpactMatrix {
    let display = pipeline_display_names(pipelines);
    let mut entries: Vec<ImpactEntry> = changed
        .iter()
        .map(|task| {
            let affected: BTreeSet<AffectedPipeline> = pipelines
                .iter()
                .zip(&display)
                .filter(|(p, _)| p.references.iter().any(|r| resolve_reference(r, task, self_repo_urls)))
                .map(|(p, name)| AffectedPipeline {
                    name: name.clone(),
                    file_path: p.file_path.clone(),
                })
                .collect();
            ImpactEntry {
                task: task.clone(),
                pipeline_count: affected.len(),
                pipelines: affected.into_iter().collect(),
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.pipeline_count
            .cmp(&a.pipeline_count)
            .then_with(|| a.task.name.cmp(&b.task.name))
            .then_with(|| a.task.category.cmp(&b.task.category))
    });
    ImpactMatrix { entries }
}

#[derive(Serialize)]
struct ImpactJsonEntry<'a> {
    task: &'a str,
    category: &'a str,
    definition_path: &'a str,
    pipelines: Vec<&'a str>,
    pipeline_count: usize,
    commits: &'a [String],
}

#[derive(Serialize)]
struct ImpactJson<'a> {
    entries: Vec<ImpactJsonEntry<'a>>,
}

impl ImpactMatrix {
    /// Machine-readable form with a fixed key order and sorted pipeline
    /// names. Ends with a newline.
    pub fn to_json(&self) -> String {
        let doc = ImpactJson {
            entries: self
                .entries
                .iter()
                .map(|e| ImpactJsonEntry {
                    task: &e.task.name,
                    category: e.task.category.as_str(),
                    definition_path: &e.task.definition_path,
                    pipelines: e.pipeline_names().into_iter().collect(),
                    pipeline_count: e.pipeline_count,
                    commits: &e.task.commits,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("impact matrix serializes");
        s.push('\n');
        s
    }
}
