//! Section parsing of backend Markdown.
//!
//! Sections are found by heading text, not position, and any heading level
//! is accepted.

use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use super::prompt::{EXECUTIVE_HEADING, FEATURES_HEADING, FIXES_HEADING};
use crate::collector::CommitRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SummaryItem {
    pub text: String,
    pub commit_url: Option<String>,
    pub matched_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructuredSummary {
    pub executive_summary: String,
    pub features: Vec<SummaryItem>,
    pub fixes: Vec<SummaryItem>,
    pub raw_markdown: String,
}

impl StructuredSummary {
    /// A summary holding only the raw text, used when sections could not be
    /// located.
    pub fn raw_only(raw_markdown: String) -> Self {
        Self {
            executive_summary: String::new(),
            features: Vec::new(),
            fixes: Vec::new(),
            raw_markdown,
        }
    }

    pub fn items(&self) -> impl Iterator<Item = &SummaryItem> {
        self.features.iter().chain(self.fixes.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingSections {
    pub features: bool,
    pub fixes: bool,
}

fn heading_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s{0,3}#{1,6}\s+(.*?)\s*#*\s*$").expect("valid regex"))
}

fn bold_line_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s{0,3}\*\*(.+?)\*\*:?\s*$").expect("valid regex"))
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"https?://[^\s)<>\]"']+"#).expect("valid regex"))
}

fn bullet_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*[-*+]\s+(.*)$").expect("valid regex"))
}

/// Heading text of `line`, if it is a heading.
pub fn heading_text(line: &str) -> Option<String> {
    let caps = heading_regex()
        .captures(line)
        .or_else(|| bold_line_regex().captures(line))?;
    let text = caps[1].trim().trim_matches('*').trim();
    Some(text.replace("&amp;", "&"))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Features,
    Fixes,
    Ignored,
}

/// Commit id encoded at the end of a `/commit/<hash>` URL.
pub fn url_commit_id(url: &str) -> Option<String> {
    let (_, tail) = url.rsplit_once("/commit/")?;
    let hex: String = tail.chars().take_while(|c| c.is_ascii_hexdigit()).collect();
    (hex.len() >= 7).then(|| hex.to_ascii_lowercase())
}

/// Input commit whose hash begins with the id in `url`.
pub fn match_url(url: &str, commits: &[CommitRecord]) -> Option<String> {
    let id = url_commit_id(url)?;
    let mut matches = commits.iter().filter(|c| c.hash.starts_with(&id));
    let first = matches.next()?;
    matches.next().is_none().then(|| first.hash.clone())
}

fn make_item(text: String, commits: &[CommitRecord]) -> SummaryItem {
    let urls: Vec<&str> = url_regex().find_iter(&text).map(|m| m.as_str()).collect();
    let commit_url = urls.iter().find(|u| u.contains("/commit/")).map(|u| u.to_string());
    let matched_hash = commit_url.as_deref().and_then(|u| match_url(u, commits));
    SummaryItem {
        text,
        commit_url,
        matched_hash,
    }
}

/// Splits `markdown` into the executive summary and the two item lists.
/// Fails when either mandatory heading is absent.
pub fn parse_summary(markdown: &str, commits: &[CommitRecord]) -> Result<StructuredSummary, MissingSections> {
    let mut section = Section::Preamble;
    let mut seen_features = false;
    let mut seen_fixes = false;
    let mut preamble = Vec::new();
    let mut features: Vec<String> = Vec::new();
    let mut fixes: Vec<String> = Vec::new();

    for line in markdown.lines() {
        if let Some(text) = heading_text(line) {
            if text == FEATURES_HEADING {
                section = Section::Features;
                seen_features = true;
                continue;
            }
            if text == FIXES_HEADING {
                section = Section::Fixes;
                seen_fixes = true;
                continue;
            }
            if section == Section::Preamble && text == EXECUTIVE_HEADING {
                continue;
            }
            if section != Section::Preamble {
                section = Section::Ignored;
                continue;
            }
        }
        let items = match section {
            Section::Preamble => {
                preamble.push(line);
                continue;
            }
            Section::Features => &mut features,
            Section::Fixes => &mut fixes,
            Section::Ignored => continue,
        };
        if let Some(caps) = bullet_regex().captures(line) {
            items.push(caps[1].trim().to_string());
        } else if !line.trim().is_empty() && line.starts_with(char::is_whitespace) {
            if let Some(last) = items.last_mut() {
                last.push(' ');
                last.push_str(line.trim());
            }
        }
    }

    if !(seen_features && seen_fixes) {
        return Err(MissingSections {
            features: !seen_features,
            fixes: !seen_fixes,
        });
    }
    Ok(StructuredSummary {
        executive_summary: preamble.join("\n").trim().to_string(),
        features: features.into_iter().map(|t| make_item(t, commits)).collect(),
        fixes: fixes.into_iter().map(|t| make_item(t, commits)).collect(),
        raw_markdown: markdown.to_string(),
    })
}
