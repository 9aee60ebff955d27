//! HTML and Markdown promotion reports.
//!
//! All untrusted text (commit summaries, author names, task and pipeline
//! names, backend output) passes through [`escape_html`] or the Markdown
//! renderer. The HTML uses inline styles only so it renders the same in
//! mail clients.

mod markdown;
mod stats;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::Serialize;

pub use markdown::{escape_html, render_markdown_to_html, render_markdown_with, RenderOptions};
pub use stats::{aggregate_stats, PromotionStats};

use crate::collector::commit_url;
use crate::filter::CommitClass;
use crate::pipelines::ImpactMatrix;
use crate::promotion::PromotionType;
use crate::summarizer::{url_commit_id, StructuredSummary, VerificationReport};

/// Builds web links into the repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportLinks {
    pub web_base_url: String,
    /// Branch or commit used for file links.
    pub blob_ref: String,
}

impl ReportLinks {
    pub fn commit(&self, hash: &str) -> String {
        commit_url(&self.web_base_url, hash)
    }

    pub fn file(&self, path: &str) -> String {
        format!("{}/blob/{}/{}", self.web_base_url.trim_end_matches('/'), self.blob_ref, path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuppressedEntry {
    pub hash: String,
    pub summary: String,
    pub class: CommitClass,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub repository_url: String,
    pub range: String,
    pub backend: String,
    /// (violation kind, operator reason)
    pub overrides: Vec<(String, String)>,
    /// Guard findings and other run notes shown in the footer.
    pub notes: Vec<String>,
}

pub struct ReportInputs<'a> {
    pub promotion_type: PromotionType,
    pub generated_at: DateTime<Utc>,
    pub stats: PromotionStats,
    pub summary: &'a StructuredSummary,
    /// Warning banners shown above the summary (fallbacks, parse failures).
    pub notices: &'a [String],
    pub verification: Option<&'a VerificationReport>,
    pub impact: &'a ImpactMatrix,
    pub suppressed: &'a [SuppressedEntry],
    pub provenance: &'a Provenance,
    pub links: &'a ReportLinks,
    /// Every commit id in the promoted range.
    pub collected_hashes: &'a [String],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromotionReport {
    pub promotion_type: PromotionType,
    pub generated_at: DateTime<Utc>,
    pub stats: PromotionStats,
    pub summary: StructuredSummary,
    pub impact: ImpactMatrix,
    pub suppressed_audit: Vec<SuppressedEntry>,
    pub repo_provenance: Provenance,
    pub html: String,
    pub markdown: String,
}

const BODY_STYLE: &str = "margin:0;padding:24px;background:#f5f6f8;font-family:Helvetica,Arial,sans-serif;color:#1f2328;";
const CARD_STYLE: &str = "max-width:960px;margin:0 auto;background:#ffffff;border:1px solid #d0d7de;border-radius:6px;padding:24px;";
const TABLE_STYLE: &str = "border-collapse:collapse;width:100%;font-size:14px;";
const TH_STYLE: &str = "text-align:left;border-bottom:2px solid #d0d7de;padding:6px 8px;background:#f6f8fa;";
const TD_STYLE: &str = "border-bottom:1px solid #eaeef2;padding:6px 8px;vertical-align:top;";
const LINK_STYLE: &str = "color:#0969da;text-decoration:none;";
const WARN_STYLE: &str = "background:#fff8c5;border:1px solid #d4a72c;border-radius:6px;padding:8px 12px;margin:12px 0;";
const STAT_STYLE: &str = "display:inline-block;min-width:120px;margin:0 12px 12px 0;padding:8px 12px;background:#f6f8fa;border-radius:6px;";
const FOOTER_STYLE: &str = "margin-top:24px;padding-top:12px;border-top:1px solid #d0d7de;font-size:12px;color:#57606a;";

fn anchor(url: &str, text: &str) -> String {
    format!(
        "<a href=\"{}\" style=\"{LINK_STYLE}\">{}</a>",
        escape_html(url),
        escape_html(text)
    )
}

fn short(hash: &str) -> &str {
    &hash[..hash.len().min(7)]
}

fn date_line(at: &DateTime<Utc>) -> String {
    at.format("%Y-%m-%d %H:%M UTC").to_string()
}

/// The impact table, or a notice when no task definitions changed.
pub fn render_impact_table(impact: &ImpactMatrix, links: &ReportLinks) -> String {
    if impact.entries.is_empty() {
        return "<p>No task definitions changed in this promotion.</p>\n".to_string();
    }
    let mut html = String::new();
    let _ = writeln!(html, "<table style=\"{TABLE_STYLE}\">");
    html.push_str("<thead><tr>");
    for header in ["Task", "Category", "Affected pipelines", "Pipeline count", "Commits"] {
        let _ = write!(html, "<th style=\"{TH_STYLE}\">{header}</th>");
    }
    html.push_str("</tr></thead>\n<tbody>\n");
    for entry in &impact.entries {
        let pipelines = if entry.pipelines.is_empty() {
            "<em>none</em>".to_string()
        } else {
            entry
                .pipelines
                .iter()
                .map(|p| anchor(&links.file(&p.file_path), &p.name))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let commits = entry
            .task
            .commits
            .iter()
            .map(|h| anchor(&links.commit(h), short(h)))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = writeln!(
            html,
            "<tr><td style=\"{TD_STYLE}\">{}</td><td style=\"{TD_STYLE}\">{}</td><td style=\"{TD_STYLE}\">{}</td><td style=\"{TD_STYLE}\">{}</td><td style=\"{TD_STYLE}\">{}</td></tr>",
            anchor(&links.file(&entry.task.definition_path), &entry.task.name),
            escape_html(entry.task.category.as_str()),
            pipelines,
            entry.pipeline_count,
            commits,
        );
    }
    html.push_str("</tbody>\n</table>\n");
    html
}

fn md_cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

fn html_stats(stats: &PromotionStats) -> String {
    let items = [
        ("Commits (all)", stats.commit_count.to_string()),
        ("Substantive commits", stats.substantive_count.to_string()),
        ("Contributors", stats.contributor_count.to_string()),
        ("Files changed", stats.total_files_changed.to_string()),
        (
            "Lines",
            format!("+{} / -{}", stats.total_insertions, stats.total_deletions),
        ),
    ];
    let mut html = String::from("<div>\n");
    for (label, value) in items {
        let _ = writeln!(
            html,
            "<div style=\"{STAT_STYLE}\"><div style=\"font-size:12px;color:#57606a;\">{label}</div><div style=\"font-size:20px;font-weight:bold;\">{}</div></div>",
            escape_html(&value)
        );
    }
    html.push_str("</div>\n");
    html
}

fn verification_lines(v: &VerificationReport) -> Vec<String> {
    let mut lines = Vec::new();
    if !v.missing_feat_commits.is_empty() {
        lines.push(format!(
            "Summary omits {} feature commit(s): {}",
            v.missing_feat_commits.len(),
            v.missing_feat_commits.iter().map(|h| short(h)).collect::<Vec<_>>().join(", ")
        ));
    }
    if !v.missing_fix_commits.is_empty() {
        lines.push(format!(
            "Summary omits {} fix commit(s): {}",
            v.missing_fix_commits.len(),
            v.missing_fix_commits.iter().map(|h| short(h)).collect::<Vec<_>>().join(", ")
        ));
    }
    if !v.unknown_urls.is_empty() {
        lines.push(format!(
            "Summary links {} commit(s) outside the promoted range; those links were removed.",
            v.unknown_urls.len()
        ));
    }
    lines
}

pub fn compose_report(inputs: &ReportInputs<'_>) -> PromotionReport {
    let collected: BTreeSet<&str> = inputs.collected_hashes.iter().map(String::as_str).collect();
    let link_ok = |url: &str| -> bool {
        if !url.contains("/commit/") {
            return true;
        }
        match url_commit_id(url) {
            Some(id) => collected.iter().any(|h| h.starts_with(&id)),
            None => false,
        }
    };
    let html = compose_html(inputs, &link_ok);
    let markdown = compose_markdown(inputs);
    PromotionReport {
        promotion_type: inputs.promotion_type,
        generated_at: inputs.generated_at,
        stats: inputs.stats,
        summary: inputs.summary.clone(),
        impact: inputs.impact.clone(),
        suppressed_audit: inputs.suppressed.to_vec(),
        repo_provenance: inputs.provenance.clone(),
        html,
        markdown,
    }
}

fn notices(inputs: &ReportInputs<'_>) -> Vec<String> {
    let mut all: Vec<String> = inputs.notices.to_vec();
    if let Some(v) = inputs.verification {
        all.extend(verification_lines(v));
    }
    all
}

fn compose_html(inputs: &ReportInputs<'_>, link_ok: &dyn Fn(&str) -> bool) -> String {
    let title = format!("Promotion Report: {}", inputs.promotion_type);
    let mut html = String::new();
    let _ = writeln!(
        html,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n</head>\n<body style=\"{BODY_STYLE}\">\n<div style=\"{CARD_STYLE}\">",
        escape_html(&title)
    );
    let _ = writeln!(
        html,
        "<h1 style=\"margin-top:0;\">{}</h1>\n<p style=\"color:#57606a;\">{}</p>",
        escape_html(&title),
        escape_html(&date_line(&inputs.generated_at))
    );
    html.push_str(&html_stats(&inputs.stats));

    if inputs.stats.commit_count == 0 {
        html.push_str("<p>No changes were promoted.</p>\n");
    } else {
        html.push_str("<h2>Summary</h2>\n");
        for notice in notices(inputs) {
            let _ = writeln!(html, "<div style=\"{WARN_STYLE}\"><strong>Warning:</strong> {}</div>", escape_html(&notice));
        }
        let options = RenderOptions {
            heading_offset: 1,
            allow_link: link_ok,
            link_style: LINK_STYLE,
        };
        html.push_str(&render_markdown_with(&inputs.summary.raw_markdown, &options));

        html.push_str("<h2>Task Impact</h2>\n");
        html.push_str(&render_impact_table(inputs.impact, inputs.links));

        if !inputs.suppressed.is_empty() {
            let _ = writeln!(
                html,
                "<details style=\"margin-top:16px;\">\n<summary>Suppressed commits ({})</summary>\n<table style=\"{TABLE_STYLE}\">\n<thead><tr><th style=\"{TH_STYLE}\">Commit</th><th style=\"{TH_STYLE}\">Class</th><th style=\"{TH_STYLE}\">Summary</th></tr></thead>\n<tbody>",
                inputs.suppressed.len()
            );
            for s in inputs.suppressed {
                let _ = writeln!(
                    html,
                    "<tr><td style=\"{TD_STYLE}\">{}</td><td style=\"{TD_STYLE}\">{}</td><td style=\"{TD_STYLE}\">{}</td></tr>",
                    anchor(&inputs.links.commit(&s.hash), short(&s.hash)),
                    escape_html(s.class.kind.as_str()),
                    escape_html(&s.summary),
                );
            }
            html.push_str("</tbody>\n</table>\n</details>\n");
        }
    }

    let p = inputs.provenance;
    let _ = writeln!(html, "<div style=\"{FOOTER_STYLE}\">");
    let _ = writeln!(
        html,
        "<div>Repository: {}</div>\n<div>Range: {}</div>\n<div>Summarizer: {}</div>\n<div>Generated: {}</div>",
        anchor(&p.repository_url, &p.repository_url),
        escape_html(&p.range),
        escape_html(&p.backend),
        escape_html(&inputs.generated_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
    );
    for (kind, reason) in &p.overrides {
        let _ = writeln!(html, "<div>Override {}: {}</div>", escape_html(kind), escape_html(reason));
    }
    for note in &p.notes {
        let _ = writeln!(html, "<div>{}</div>", escape_html(note));
    }
    html.push_str("</div>\n</div>\n</body>\n</html>\n");
    html
}

/// Shifts every Markdown heading one level down so the summary nests under
/// the report's own section heading.
fn demote_headings(md: &str) -> String {
    md.lines()
        .map(|l| {
            let t = l.trim_start();
            if t.starts_with('#') && t.trim_start_matches('#').starts_with([' ', '\t']) && !t.starts_with("######") {
                format!("#{t}")
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn compose_markdown(inputs: &ReportInputs<'_>) -> String {
    let mut md = String::new();
    let _ = writeln!(md, "# Promotion Report: {}\n", inputs.promotion_type);
    let _ = writeln!(md, "{}\n", date_line(&inputs.generated_at));
    let s = &inputs.stats;
    let _ = writeln!(
        md,
        "| Metric | Value |\n| --- | --- |\n| Commits (all) | {} |\n| Substantive commits | {} |\n| Contributors | {} |\n| Files changed | {} |\n| Lines | +{} / -{} |\n",
        s.commit_count, s.substantive_count, s.contributor_count, s.total_files_changed, s.total_insertions, s.total_deletions
    );

    if s.commit_count == 0 {
        md.push_str("No changes were promoted.\n\n");
    } else {
        md.push_str("## Summary\n\n");
        for notice in notices(inputs) {
            let _ = writeln!(md, "> **Warning:** {notice}\n");
        }
        md.push_str(demote_headings(inputs.summary.raw_markdown.trim_end()).as_str());
        md.push_str("\n\n## Task Impact\n\n");
        if inputs.impact.entries.is_empty() {
            md.push_str("No task definitions changed in this promotion.\n\n");
        } else {
            md.push_str("| Task | Category | Affected pipelines | Pipeline count | Commits |\n| --- | --- | --- | --- | --- |\n");
            for e in &inputs.impact.entries {
                let pipelines = if e.pipelines.is_empty() {
                    "none".to_string()
                } else {
                    e.pipelines
                        .iter()
                        .map(|p| format!("[{}]({})", md_cell(&p.name), inputs.links.file(&p.file_path)))
                        .collect::<Vec<_>>()
                        .join(", ")
                };
                let commits = e
                    .task
                    .commits
                    .iter()
                    .map(|h| format!("[{}]({})", short(h), inputs.links.commit(h)))
                    .collect::<Vec<_>>()
                    .join(", ");
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} | {} |",
                    md_cell(&e.task.name),
                    md_cell(e.task.category.as_str()),
                    pipelines,
                    e.pipeline_count,
                    commits
                );
            }
            md.push('\n');
        }
        if !inputs.suppressed.is_empty() {
            let _ = writeln!(md, "## Suppressed Commits ({})\n", inputs.suppressed.len());
            md.push_str("| Commit | Class | Summary |\n| --- | --- | --- |\n");
            for e in inputs.suppressed {
                let _ = writeln!(
                    md,
                    "| [{}]({}) | {} | {} |",
                    short(&e.hash),
                    inputs.links.commit(&e.hash),
                    e.class.kind.as_str(),
                    md_cell(&e.summary)
                );
            }
            md.push('\n');
        }
    }

    let p = inputs.provenance;
    md.push_str("---\n\n");
    let _ = writeln!(md, "- Repository: {}", p.repository_url);
    let _ = writeln!(md, "- Range: {}", p.range);
    let _ = writeln!(md, "- Summarizer: {}", p.backend);
    let _ = writeln!(
        md,
        "- Generated: {}",
        inputs.generated_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    );
    for (kind, reason) in &p.overrides {
        let _ = writeln!(md, "- Override {kind}: {reason}");
    }
    for note in &p.notes {
        let _ = writeln!(md, "- {note}");
    }
    md
}
