//! Summarizer backends.
//!
//! [`ChatCompletionBackend`] talks to any OpenAI-style `/chat/completions`
//! endpoint. [`DeterministicBackend`] builds the summary directly from the
//! commit classes and needs no network.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use serde_json::json;
use thiserror::Error;

use super::prompt::{GenerationSettings, PromptPair, ReportContext, EXECUTIVE_HEADING, FEATURES_HEADING, FIXES_HEADING};
use crate::collector::CommitRecord;
use crate::filter::{classify_commit, CommitKind, RuleTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend refused the request: {0}")]
    Refused(String),
}

pub struct SummaryRequest<'a> {
    pub prompts: &'a PromptPair,
    /// The commits listed in the user prompt, newest first.
    pub commits: &'a [CommitRecord],
    pub settings: &'a GenerationSettings,
}

pub trait SummarizerBackend {
    fn name(&self) -> &str;

    /// Returns the raw Markdown produced for `request`.
    fn complete(&self, request: &SummaryRequest<'_>) -> Result<String, BackendError>;
}

/// Offline backend producing a template summary from commit classes.
#[derive(Debug, Clone)]
pub struct DeterministicBackend {
    context: ReportContext,
    rules: RuleTable,
}

impl DeterministicBackend {
    pub fn new(context: ReportContext, rules: RuleTable) -> Self {
        Self { context, rules }
    }
}

/// Backslash-escapes Markdown punctuation so commit text cannot form links
/// or emphasis.
pub fn escape_markdown(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        if matches!(ch, '\\' | '[' | ']' | '(' | ')' | '*' | '_' | '`' | '#' | '<' | '>' | '!') {
            out.push('\\');
        }
        out.push(ch);
    }
    out
}

/// Summary text without its conventional prefix; the scope, if any, is kept
/// as a trailing reference.
pub fn describe_commit(summary: &str) -> String {
    let trimmed = summary.trim();
    if let Some((head, rest)) = trimmed.split_once(':') {
        let head = head.trim_end_matches('!');
        let (ty, scope) = match head.split_once('(') {
            Some((ty, scope)) => (ty, scope.strip_suffix(')')),
            None => (head, None),
        };
        let is_type = !ty.is_empty() && ty.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let rest = rest.trim();
        if is_type && !rest.is_empty() {
            return match scope.filter(|s| !s.is_empty()) {
                Some(scope) => format!("{rest} ({scope})"),
                None => rest.to_string(),
            };
        }
    }
    trimmed.to_string()
}

fn plural(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

impl SummarizerBackend for DeterministicBackend {
    fn name(&self) -> &str {
        "deterministic"
    }

    fn complete(&self, request: &SummaryRequest<'_>) -> Result<String, BackendError> {
        let commits = request.commits;
        let mut features = Vec::new();
        let mut fixes = Vec::new();
        for c in commits {
            match classify_commit(c, &self.rules).kind {
                CommitKind::Feature => features.push(c),
                _ => fixes.push(c),
            }
        }
        let authors: BTreeSet<&str> = commits.iter().map(|c| c.author_email.as_str()).collect();
        let files: BTreeSet<&str> = commits
            .iter()
            .flat_map(|c| c.changed_files.iter().map(String::as_str))
            .collect();
        let insertions: usize = commits.iter().map(|c| c.diffstat.insertions).sum();
        let deletions: usize = commits.iter().map(|c| c.diffstat.deletions).sum();

        let mut md = String::new();
        let _ = writeln!(md, "## {EXECUTIVE_HEADING}\n");
        if commits.is_empty() {
            let _ = writeln!(
                md,
                "This {} promotion contains no substantive changes.\n",
                self.context.promotion_type
            );
        } else {
            let _ = writeln!(
                md,
                "This {} promotion carries {} from {}: {} and {}. Together they touch {} \
with {} and {}.\n",
                self.context.promotion_type,
                plural(commits.len(), "substantive commit", "substantive commits"),
                plural(authors.len(), "contributor", "contributors"),
                plural(features.len(), "new feature", "new features"),
                plural(fixes.len(), "fix or improvement", "fixes or improvements"),
                plural(files.len(), "file", "files"),
                plural(insertions, "insertion", "insertions"),
                plural(deletions, "deletion", "deletions"),
            );
            // widest footprint first, ties broken by input order
            let mut by_size: Vec<&CommitRecord> = commits.iter().collect();
            by_size.sort_by_key(|c| std::cmp::Reverse(c.diffstat.files_changed));
            let highlights: Vec<String> = by_size
                .iter()
                .take(3)
                .map(|c| {
                    format!(
                        "\"{}\" ({})",
                        escape_markdown(&describe_commit(&c.summary)),
                        plural(c.diffstat.files_changed, "file", "files")
                    )
                })
                .collect();
            let _ = writeln!(
                md,
                "The largest changes by footprint are {}. Review these first during validation.\n",
                highlights.join(", ")
            );
        }
        for (heading, items) in [(FEATURES_HEADING, &features), (FIXES_HEADING, &fixes)] {
            let _ = writeln!(md, "## {heading}\n");
            if items.is_empty() {
                let _ = writeln!(md, "None in this promotion.\n");
                continue;
            }
            for c in items.iter() {
                let _ = writeln!(
                    md,
                    "- {} ([{}]({}))",
                    escape_markdown(&describe_commit(&c.summary)),
                    c.short_hash(),
                    c.url
                );
            }
            md.push('\n');
        }
        Ok(md.trim_end().to_string() + "\n")
    }
}

/// Provider-agnostic chat-completion backend.
#[derive(Debug, Clone)]
pub struct ChatCompletionBackend {
    pub base_url: String,
    pub model: String,
    pub key_file: PathBuf,
    pub timeout: Duration,
}

impl ChatCompletionBackend {
    fn read_key(&self) -> Result<String, BackendError> {
        let key = std::fs::read_to_string(&self.key_file).map_err(|e| {
            BackendError::Unavailable(format!("cannot read key file {}: {e}", self.key_file.display()))
        })?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(BackendError::Unavailable(format!(
                "key file {} is empty",
                self.key_file.display()
            )));
        }
        Ok(key)
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

impl SummarizerBackend for ChatCompletionBackend {
    fn name(&self) -> &str {
        "remote"
    }

    fn complete(&self, request: &SummaryRequest<'_>) -> Result<String, BackendError> {
        let key = self.read_key()?;
        let body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.prompts.system_prompt},
                {"role": "user", "content": request.prompts.user_prompt},
            ],
            "temperature": request.settings.temperature,
            "max_tokens": request.settings.max_output_tokens,
        });
        tracing::debug!(
            endpoint = %self.endpoint(),
            authorization = "Bearer [REDACTED]",
            body = %body,
            "chat completion request"
        );
        let agent = ureq::AgentBuilder::new().timeout(self.timeout).build();
        let response = agent
            .post(&self.endpoint())
            .set("Authorization", &format!("Bearer {key}"))
            .set("Content-Type", "application/json")
            .send_json(body);
        let response = match response {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let detail = r.into_string().unwrap_or_default();
                let detail = detail.replace(&key, "[REDACTED]");
                tracing::debug!(status = code, body = %detail, "chat completion error response");
                return Err(match code {
                    400..=499 if code != 401 && code != 403 && code != 408 && code != 429 => {
                        BackendError::Refused(format!("HTTP {code}"))
                    }
                    _ => BackendError::Unavailable(format!("HTTP {code}")),
                });
            }
            Err(ureq::Error::Transport(t)) => {
                return Err(BackendError::Unavailable(t.to_string().replace(&key, "[REDACTED]")));
            }
        };
        let value: serde_json::Value = response
            .into_json()
            .map_err(|e| BackendError::Refused(format!("invalid JSON response: {e}")))?;
        tracing::debug!(body = %value, "chat completion response");
        let content = value
            .pointer("/choices/0/message/content")
            .and_then(serde_json::Value::as_str)
            .unwrap_or_default()
            .to_string();
        if content.trim().is_empty() {
            return Err(BackendError::Refused("empty completion".into()));
        }
        Ok(content)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn describe_strips_prefix_and_keeps_scope() {
        assert_eq!(
            describe_commit("feat(PROJ-1234): add cosign signing support for FBC releases"),
            "add cosign signing support for FBC releases (PROJ-1234)"
        );
        assert_eq!(describe_commit("fix: timeout"), "timeout");
        assert_eq!(describe_commit("Plain summary"), "Plain summary");
        assert_eq!(describe_commit("Note: the rest"), "the rest");
        assert_eq!(describe_commit("weird: "), "weird:");
    }

    #[test]
    fn markdown_escaping() {
        assert_eq!(escape_markdown("[x](y) *b*"), "\\[x\\]\\(y\\) \\*b\\*");
    }
}
