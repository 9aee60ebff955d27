//! Prompt construction, backend invocation and completeness checking.

mod backend;
mod parse;
mod prompt;
mod verify;

pub use backend::{
    describe_commit, escape_markdown, BackendError, ChatCompletionBackend, DeterministicBackend, SummarizerBackend,
    SummaryRequest,
};
pub use parse::{heading_text, match_url, parse_summary, url_commit_id, MissingSections, StructuredSummary, SummaryItem};
pub use prompt::{
    build_prompts, build_system_prompt, build_user_prompt, GenerationSettings, PromptPair, ReportContext,
    EXECUTIVE_HEADING, FEATURES_HEADING, FIXES_HEADING, MAX_PROMPT_COMMITS,
};
pub use verify::{verify_summary, VerificationReport};

use thiserror::Error;

use crate::collector::CommitRecord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SummarizeError {
    #[error("summarizer backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("summarizer backend returned no usable output: {0}")]
    BackendRefusal(String),
    /// The backend answered but the mandatory headings were missing. The raw
    /// text is kept so it can still be delivered.
    #[error("summary is missing mandatory section headings")]
    SectionParseFailure { raw_markdown: String },
}

/// Runs `backend` on `prompts` and parses the result.
///
/// `commits` must be the commits listed in the user prompt. Non-conforming
/// output is retried once.
pub fn summarize(
    prompts: &PromptPair,
    commits: &[CommitRecord],
    settings: &GenerationSettings,
    backend: &dyn SummarizerBackend,
) -> Result<StructuredSummary, SummarizeError> {
    let commits = &commits[..commits.len().min(prompts.commit_count_included)];
    let request = SummaryRequest {
        prompts,
        commits,
        settings,
    };
    let mut last_raw = String::new();
    let mut last_refusal = None;
    for attempt in 1..=2 {
        match backend.complete(&request) {
            Ok(raw) => match parse_summary(&raw, commits) {
                Ok(summary) => return Ok(summary),
                Err(missing) => {
                    tracing::warn!(attempt, backend = backend.name(), ?missing, "non-conforming summary output");
                    last_raw = raw;
                }
            },
            Err(BackendError::Unavailable(reason)) => return Err(SummarizeError::BackendUnavailable(reason)),
            Err(BackendError::Refused(reason)) => {
                tracing::warn!(attempt, backend = backend.name(), %reason, "summary request refused");
                last_refusal = Some(reason);
            }
        }
    }
    if last_raw.trim().is_empty() {
        return Err(SummarizeError::BackendRefusal(
            last_refusal.unwrap_or_else(|| "empty output".into()),
        ));
    }
    Err(SummarizeError::SectionParseFailure { raw_markdown: last_raw })
}
