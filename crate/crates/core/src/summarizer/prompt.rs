use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::Serialize;

use crate::collector::CommitRecord;
use crate::promotion::PromotionType;

pub const MAX_PROMPT_COMMITS: usize = 50;
pub const FEATURES_HEADING: &str = "New Features & Enhancements";
pub const FIXES_HEADING: &str = "Bug Fixes & Improvements";
pub const EXECUTIVE_HEADING: &str = "Executive Summary";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReportContext {
    pub promotion_type: PromotionType,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptPair {
    pub system_prompt: String,
    pub user_prompt: String,
    pub commit_count_included: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationSettings {
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        Self {
            temperature: 0.7,
            max_output_tokens: 2500,
        }
    }
}

impl GenerationSettings {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if self.max_output_tokens == 0 {
            return Err("max output tokens must be positive".into());
        }
        Ok(())
    }
}

pub fn build_system_prompt(context: &ReportContext) -> String {
    format!(
        "You are a professional DevOps engineer creating a promotion report for a {promotion} promotion \
of a Tekton release catalog. The report is dated {date}.

Write the report in Markdown with exactly this structure:

1. \"## {EXECUTIVE_HEADING}\": 2-3 paragraphs describing the most significant changes and their business impact.
2. \"## {FEATURES_HEADING}\": one bullet point per feature commit.
3. \"## {FIXES_HEADING}\": one bullet point per fix or improvement commit.

Use these headings exactly as written. Do not add other headings.

Rules:
- ALWAYS include ALL feat() and fix() commits. Every feat() commit goes under \"{FEATURES_HEADING}\" \
and every fix() commit goes under \"{FIXES_HEADING}\". Commits without a conventional prefix go under \
\"{FIXES_HEADING}\".
- Each commit gets its own bullet. Never combine commits and never omit one.
- Every bullet ends with a Markdown link to the commit URL exactly as given in the input, for example \
[abc1234](<URL>).
- Produce the same categorization every time you are given the same input.
- Do not invent commits, links or details that are not present in the input.
",
        promotion = context.promotion_type,
        date = context.date.format("%Y-%m-%d"),
    )
}

/// Lists at most [`MAX_PROMPT_COMMITS`] commits from the newest-first
/// input, dropping the oldest.
pub fn build_user_prompt(commits: &[CommitRecord]) -> (String, usize, bool) {
    let included = &commits[..commits.len().min(MAX_PROMPT_COMMITS)];
    let truncated = commits.len() > MAX_PROMPT_COMMITS;
    let mut out = String::new();
    if included.is_empty() {
        out.push_str("There are no substantive changes in this promotion. No commits are listed.\n");
        return (out, 0, false);
    }
    let _ = writeln!(out, "Summarize the following {} commit(s) in this promotion.", included.len());
    if truncated {
        let _ = writeln!(
            out,
            "Only the {} newest of {} substantive commits are listed.",
            included.len(),
            commits.len()
        );
    }
    for (i, c) in included.iter().enumerate() {
        let _ = write!(
            out,
            "\n### Commit {n}\n\
Summary: {summary}\n\
Author: {name} <{email}>\n\
Date: {date}\n\
URL: {url}\n\
File count: {files}\n\
Diff stats: {files} file(s) changed, {ins} insertion(s)(+), {del} deletion(s)(-)\n\
Full message:\n",
            n = i + 1,
            summary = c.summary,
            name = c.author_name,
            email = c.author_email,
            date = c.date.to_rfc3339(),
            url = c.url,
            files = c.diffstat.files_changed,
            ins = c.diffstat.insertions,
            del = c.diffstat.deletions,
        );
        for line in c.body.lines() {
            let _ = writeln!(out, "    {line}");
        }
    }
    (out, included.len(), truncated)
}

pub fn build_prompts(context: &ReportContext, commits: &[CommitRecord]) -> PromptPair {
    let (user_prompt, commit_count_included, truncated) = build_user_prompt(commits);
    PromptPair {
        system_prompt: build_system_prompt(context),
        user_prompt,
        commit_count_included,
        truncated,
    }
}
