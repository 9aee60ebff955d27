//! Stage sequencing and the degradation ladder.

use std::path::{Path, PathBuf};

use chrono::Utc;

use super::config::{BackendKind, GuardMode, RunConfig};
use super::email::send_email;
use super::status::{Outcome, RunStatus};
use crate::collector::{capture_range, collect_commits, RangeSpec};
use crate::filter::filter_substantive;
use crate::git::Repo;
use crate::guard::{evaluate, GuardDecision, GuardSettings, SoakMarker};
use crate::pipelines::{compute_impact, load_pipelines};
use crate::promotion::PromotionType;
use crate::report::{aggregate_stats, compose_report, Provenance, ReportInputs, ReportLinks, SuppressedEntry};
use crate::summarizer::{
    build_prompts, summarize, verify_summary, ChatCompletionBackend, DeterministicBackend, ReportContext,
    StructuredSummary, SummarizeError, SummarizerBackend,
};
use crate::tasks::extract_changed_tasks;

pub const IMPACT_FILE: &str = "impact.json";
pub const HTML_FILE: &str = "report.html";
pub const MARKDOWN_FILE: &str = "report.md";

struct Run {
    messages: Vec<String>,
    artifacts: Vec<PathBuf>,
}

impl Run {
    fn finish(self, outcome: Outcome) -> RunStatus {
        let (label, code) = match outcome {
            Outcome::ReportOk => ("report_ok", 0),
            Outcome::ReportFailed => ("report_failed", 0),
            Outcome::GuardBlocked => ("guard_blocked", 2),
        };
        tracing::info!(outcome = label, exit_code = code, "run finished");
        RunStatus {
            outcome,
            messages: self.messages,
            artifacts: self.artifacts,
        }
    }

    fn fail(mut self, message: String) -> RunStatus {
        tracing::error!(%message, "report generation failed");
        self.messages.push(message);
        self.finish(Outcome::ReportFailed)
    }

    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> Result<(), String> {
        std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        self.artifacts.push(path);
        Ok(())
    }
}

fn guard_notes(decision: &GuardDecision) -> Vec<String> {
    decision
        .violations
        .iter()
        .map(|v| {
            let state = if decision.overrides_applied.contains(&v.kind) {
                "overridden"
            } else {
                "unresolved"
            };
            format!("guard {} ({state}): {}", v.kind, v.detail)
        })
        .collect()
}

fn configured_backend(config: &RunConfig, context: ReportContext) -> Box<dyn SummarizerBackend> {
    match config.backend.kind {
        BackendKind::Deterministic => Box::new(DeterministicBackend::new(context, config.rules.clone())),
        BackendKind::Remote => Box::new(ChatCompletionBackend {
            base_url: config.backend.url.clone().unwrap_or_default(),
            model: config.backend.model.clone().unwrap_or_default(),
            key_file: config.backend.key_file.clone().unwrap_or_default(),
            timeout: config.backend.timeout,
        }),
    }
}

/// Runs every stage with the backend named in `config`.
pub fn run(config: &RunConfig) -> RunStatus {
    run_with_backend(config, None)
}

/// Like [`run`], but `backend` (when given) replaces the configured
/// summarizer backend.
pub fn run_with_backend(config: &RunConfig, backend: Option<&dyn SummarizerBackend>) -> RunStatus {
    let mut run = Run {
        messages: config.warnings.clone(),
        artifacts: Vec::new(),
    };
    let now = config.generated_at.unwrap_or_else(Utc::now);
    let repo = Repo::open(&config.repo_path);
    let promotion = config.promotion_type;
    let (source, target) = config.branches.endpoints(promotion);

    let decision = evaluate(
        promotion,
        &repo,
        &GuardSettings {
            branches: config.branches.clone(),
            required_soak_days: config.soak_days,
            marker_path: config.soak_marker_path(),
        },
        now,
        &config.overrides,
    );
    let notes = guard_notes(&decision);
    if config.guard_mode == GuardMode::PreCheck && !decision.allowed {
        run.messages.extend(notes);
        return run.finish(Outcome::GuardBlocked);
    }
    run.messages.extend(notes.iter().cloned());

    let range = match &config.captured_range {
        Some(captured) => RangeSpec::from_captured(captured.clone()),
        None => match capture_range(&repo, source, target) {
            Ok(r) => r,
            Err(e) => return run.fail(format!("commit range: {e}")),
        },
    };
    let commits = match collect_commits(&repo, &range, &config.web_base_url) {
        Ok(c) => c,
        Err(e) => return run.fail(format!("commit collection: {e}")),
    };
    let filtered = filter_substantive(&commits, &config.rules);
    let changed = extract_changed_tasks(&filtered.kept, &config.task_layout);
    let loaded = match load_pipelines(&config.repo_path, &config.pipelines_root) {
        Ok(l) => l,
        Err(e) => return run.fail(format!("pipeline catalog: {e}")),
    };
    for w in &loaded.warnings {
        run.messages.push(format!("skipped pipeline file {}: {}", w.file_path, w.message));
    }
    let impact = compute_impact(&changed, &loaded.pipelines, &config.self_repo_urls);
    if let Err(e) = run.write(&config.output_dir, IMPACT_FILE, &impact.to_json()) {
        return run.fail(e);
    }

    let context = ReportContext {
        promotion_type: promotion,
        date: now.date_naive(),
    };
    let prompts = build_prompts(&context, &filtered.kept);
    let configured = configured_backend(config, context);
    let primary: &dyn SummarizerBackend = backend.unwrap_or(configured.as_ref());
    let mut notices = Vec::new();
    if prompts.truncated {
        notices.push(format!(
            "Only the {} most recent of {} substantive commits were summarized.",
            prompts.commit_count_included,
            filtered.kept.len()
        ));
    }
    let mut backend_name = primary.name().to_string();
    let mut structured = true;
    let summary: StructuredSummary = match summarize(&prompts, &filtered.kept, &config.backend.settings, primary) {
        Ok(s) => s,
        Err(SummarizeError::SectionParseFailure { raw_markdown }) => {
            notices.push("The summary did not follow the expected structure and is shown unprocessed.".into());
            run.messages.push("summary output missing mandatory sections; delivered raw".into());
            structured = false;
            StructuredSummary::raw_only(raw_markdown)
        }
        Err(e) if config.backend.fallback && primary.name() != "deterministic" => {
            run.messages.push(format!("{e}; using deterministic summary"));
            notices.push("The summary service was unavailable; this summary was generated from commit metadata.".into());
            let fallback = DeterministicBackend::new(context, config.rules.clone());
            backend_name = format!("{} (fallback from {})", fallback.name(), primary.name());
            match summarize(&prompts, &filtered.kept, &config.backend.settings, &fallback) {
                Ok(s) => s,
                Err(e) => return run.fail(format!("summary: {e}")),
            }
        }
        Err(e) => return run.fail(format!("summary: {e}")),
    };
    let included = &filtered.kept[..prompts.commit_count_included];
    let verification = structured.then(|| verify_summary(&summary, included, &config.rules));
    if let Some(v) = &verification {
        if !v.complete {
            run.messages.push(format!(
                "summary incomplete: {} feat and {} fix commit(s) not mentioned",
                v.missing_feat_commits.len(),
                v.missing_fix_commits.len()
            ));
        }
    }

    let suppressed: Vec<SuppressedEntry> = filtered
        .suppressed
        .iter()
        .map(|(c, class)| SuppressedEntry {
            hash: c.hash.clone(),
            summary: c.summary.clone(),
            class: *class,
        })
        .collect();
    let provenance = Provenance {
        repository_url: config.web_base_url.clone(),
        range: range.display_range(),
        backend: backend_name,
        overrides: decision
            .overrides_applied
            .iter()
            .map(|k| (k.to_string(), config.overrides[k].clone()))
            .collect(),
        notes,
    };
    let blob_ref = range
        .pinned_range
        .as_deref()
        .and_then(|r| r.split_once("..").map(|(_, s)| s.to_string()))
        .unwrap_or_else(|| source.to_string());
    let links = ReportLinks {
        web_base_url: config.web_base_url.clone(),
        blob_ref,
    };
    let hashes: Vec<String> = commits.iter().map(|c| c.hash.clone()).collect();
    let report = compose_report(&ReportInputs {
        promotion_type: promotion,
        generated_at: now,
        stats: aggregate_stats(&commits, &filtered.kept),
        summary: &summary,
        notices: &notices,
        verification: verification.as_ref(),
        impact: &impact,
        suppressed: &suppressed,
        provenance: &provenance,
        links: &links,
        collected_hashes: &hashes,
    });
    for (name, body) in [(HTML_FILE, &report.html), (MARKDOWN_FILE, &report.markdown)] {
        if let Err(e) = run.write(&config.output_dir, name, body) {
            return run.fail(e);
        }
    }

    if config.dry_run {
        tracing::info!("dry run: skipping email and soak marker");
        return run.finish(Outcome::ReportOk);
    }
    if let Some(smtp) = config.smtp.as_ref().filter(|_| config.send_email) {
        match send_email(&report, smtp) {
            Ok(receipt) => tracing::info!(recipients = receipt.recipients, "report email sent"),
            Err(e) => return run.fail(format!("email delivery: {e}")),
        }
    }
    if promotion == PromotionType::DevelopmentToStaging && config.guard_mode == GuardMode::PostReport {
        record_staging_entry(config, &repo, now, &mut run);
    }
    run.finish(Outcome::ReportOk)
}

/// Stamps the current staging tip with the time it entered staging, unless
/// the marker already names that tip.
fn record_staging_entry(config: &RunConfig, repo: &Repo, now: chrono::DateTime<Utc>, run: &mut Run) {
    let tip = match repo.resolve_commit(&config.branches.staging) {
        Ok(Some(tip)) => tip,
        _ => {
            run.messages.push(format!("soak marker not written: cannot resolve {}", config.branches.staging));
            return;
        }
    };
    let path = config.soak_marker_path();
    if SoakMarker::read(&path).is_some_and(|m| m.staging_tip == tip) {
        return;
    }
    let marker = SoakMarker {
        staging_tip: tip,
        entered_at: now,
    };
    if let Err(e) = marker.write(&path) {
        run.messages.push(format!("soak marker not written: {e}"));
    }
}
