mod common;

use std::process::Command;

use common::*;
use promotion_report::cli::{report_status, run, run_with_backend, Outcome};
use promotion_report::guard::SoakMarker;
use promotion_report::summarizer::{BackendError, SummarizerBackend, SummaryRequest};

const AT: &str = "2026-03-09T10:00:00Z";

fn artifacts(dir: &std::path::Path) -> Vec<(String, String)> {
    ["impact.json", "report.html", "report.md"]
        .iter()
        .map(|n| (n.to_string(), read(dir, n)))
        .collect()
}

#[test]
fn case_study_report() {
    let cs = case_study();
    let out = tempfile::tempdir().unwrap();
    let config = run_config(cs.fixture.path(), out.path(), "development-to-staging", AT, &["--dry-run"]);
    let status = run(&config);
    assert_eq!(status.outcome, Outcome::ReportOk, "{status:?}");
    assert_eq!(status.artifacts.len(), 3);
    let (text, code) = report_status(&status);
    assert_eq!(code, 0);
    assert!(text.ends_with("STATUS: promotion report generated\n"));

    let html = read(out.path(), "report.html");
    for needle in [
        "development-to-staging",
        "New Features &amp; Enhancements",
        "Bug Fixes &amp; Improvements",
        "sign-image-cosign",
        "publish-repository",
        "sign-kmods",
        "push-disk-images-to-cdn",
        "docs: fix typo",
        &cs.substantive[0][..7],
    ] {
        assert!(html.contains(needle), "report.html lacks {needle}");
    }
    assert!(!html.contains("<script"));
    let md = read(out.path(), "report.md");
    assert!(md.contains("sign-image-cosign"));
    assert!(md.contains("New Features & Enhancements"));

    let impact: serde_json::Value = serde_json::from_str(&read(out.path(), "impact.json")).unwrap();
    assert_eq!(impact["entries"][0]["pipeline_count"], 5);
    assert_eq!(impact["entries"][1]["pipeline_count"], 3);
    assert_eq!(impact["entries"][2]["pipeline_count"], 1);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cs = case_study();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        let config = run_config(cs.fixture.path(), dir, "development-to-staging", AT, &["--dry-run"]);
        assert_eq!(run(&config).outcome, Outcome::ReportOk);
    }
    assert_eq!(artifacts(a.path()), artifacts(b.path()));
}

#[test]
fn captured_range_survives_promotion() {
    let cs = case_study();
    let f = &cs.fixture;
    let range = f.reference(&["rev-parse", "staging"]).trim().to_string() + ".." + &f.rev("development");
    f.set_branch("staging", "development");
    let out = tempfile::tempdir().unwrap();
    let mut config = run_config(f.path(), out.path(), "development-to-staging", AT, &["--dry-run"]);
    config.captured_range = Some(range);
    assert_eq!(run(&config).outcome, Outcome::ReportOk);
    let impact: serde_json::Value = serde_json::from_str(&read(out.path(), "impact.json")).unwrap();
    assert_eq!(impact["entries"].as_array().unwrap().len(), 3);
}

#[test]
fn pre_check_blocks_on_parity() {
    let cs = case_study();
    cs.fixture.set_branch("staging", &cs.substantive[0]);
    let out = tempfile::tempdir().unwrap();
    let config = run_config(
        cs.fixture.path(),
        out.path(),
        "development-to-staging",
        AT,
        &["--guard-mode", "pre-check", "--dry-run"],
    );
    let status = run(&config);
    assert_eq!(status.outcome, Outcome::GuardBlocked);
    assert_eq!(status.exit_code(), 2);
    assert!(status.messages.iter().any(|m| m.contains("parity")));
    assert!(!out.path().join("report.html").exists());

    let config = run_config(
        cs.fixture.path(),
        out.path(),
        "development-to-staging",
        AT,
        &["--guard-mode", "pre-check", "--dry-run", "--override-parity", "staging hotfix verified by QA"],
    );
    let status = run(&config);
    assert_eq!(status.outcome, Outcome::ReportOk, "{status:?}");
    let html = read(out.path(), "report.html");
    assert!(html.contains("staging hotfix verified by QA"));
}

#[test]
fn post_report_guard_findings_are_advisory() {
    let cs = case_study();
    let out = tempfile::tempdir().unwrap();
    // staging entered one minute after the epoch; AT is eight days later,
    // so use an earlier clock to trip the soak rule
    let config = run_config(
        cs.fixture.path(),
        out.path(),
        "staging-to-production",
        "2026-03-03T00:00:00Z",
        &["--dry-run"],
    );
    let status = run(&config);
    assert_eq!(status.outcome, Outcome::ReportOk);
    assert!(status.messages.iter().any(|m| m.contains("soak")));
    assert!(read(out.path(), "report.html").contains("soak"));
}

#[test]
fn empty_promotion() {
    let cs = case_study();
    let out = tempfile::tempdir().unwrap();
    let config = run_config(cs.fixture.path(), out.path(), "staging-to-production", AT, &["--dry-run"]);
    let status = run(&config);
    assert_eq!(status.outcome, Outcome::ReportOk, "{status:?}");
    assert!(read(out.path(), "report.html").contains("No changes were promoted."));
    let impact: serde_json::Value = serde_json::from_str(&read(out.path(), "impact.json")).unwrap();
    assert!(impact["entries"].as_array().unwrap().is_empty());
}

fn remote_args<'a>(url: &'a str, key: &'a str) -> Vec<&'a str> {
    vec![
        "--dry-run",
        "--backend",
        "remote",
        "--backend-url",
        url,
        "--backend-model",
        "test-model",
        "--backend-key-file",
        key,
        "--backend-timeout",
        "5",
    ]
}

#[test]
fn unreachable_backend_falls_back() {
    let cs = case_study();
    let out = tempfile::tempdir().unwrap();
    let key = out.path().join("key");
    std::fs::write(&key, "k-123\n").unwrap();
    let key = key.display().to_string();
    let config = run_config(
        cs.fixture.path(),
        &out.path().join("a"),
        "development-to-staging",
        AT,
        &remote_args("http://127.0.0.1:9/v1", &key),
    );
    let status = run(&config);
    assert_eq!(status.outcome, Outcome::ReportOk, "{status:?}");
    let html = read(&out.path().join("a"), "report.html");
    assert!(html.contains("generated from commit metadata"));
    assert!(html.contains("sign-image-cosign"));

    let mut args = remote_args("http://127.0.0.1:9/v1", &key);
    args.push("--backend-fallback=false");
    let config = run_config(cs.fixture.path(), &out.path().join("b"), "development-to-staging", AT, &args);
    let status = run(&config);
    assert_eq!(status.outcome, Outcome::ReportFailed);
    assert_eq!(status.exit_code(), 0);
    assert!(out.path().join("b/impact.json").exists());
    assert!(!out.path().join("b/report.html").exists());
    assert!(report_status(&status).0.ends_with("STATUS: promotion succeeded, report generation failed\n"));
}

#[test]
fn remote_backend_summary_is_used() {
    let cs = case_study();
    let out = tempfile::tempdir().unwrap();
    let key = out.path().join("key");
    std::fs::write(&key, "k-456\n").unwrap();
    let [cosign, publish, kmods] = [&cs.substantive[0], &cs.substantive[1], &cs.substantive[2]];
    let md = format!(
        "## Executive Summary\n\nSigning and publishing improvements.\n\n## New Features & Enhancements\n\n- Keyless signing [{c}]({WEB}/commit/{cosign})\n- Kernel module signing [{k}]({WEB}/commit/{kmods})\n\n## Bug Fixes & Improvements\n\n- Publish retries [{p}]({WEB}/commit/{publish})\n- Bogus [deadbee]({WEB}/commit/deadbeefdeadbeef)\n",
        c = &cosign[..7],
        k = &kmods[..7],
        p = &publish[..7],
    );
    let stub = HttpStub::start(vec![(200, completion(&md))]);
    let config = run_config(
        cs.fixture.path(),
        out.path(),
        "development-to-staging",
        AT,
        &remote_args(&stub.url, &key.display().to_string()),
    );
    let status = run(&config);
    let requests = stub.finish();
    assert_eq!(status.outcome, Outcome::ReportOk, "{status:?}");
    assert_eq!(requests.len(), 1);
    assert!(requests[0].head.starts_with("POST /v1/chat/completions"));
    assert!(requests[0].head.contains("Bearer k-456"));
    let body: serde_json::Value = serde_json::from_str(&requests[0].body).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.7);
    assert_eq!(body["max_tokens"], 2500);
    let html = read(out.path(), "report.html");
    assert!(html.contains("Keyless signing"));
    // links outside the promoted range are not rendered as links
    assert!(!html.contains("href=\"https://git.example.com/org/release-catalog/commit/deadbeefdeadbeef\""));
}

struct Rambling;

impl SummarizerBackend for Rambling {
    fn name(&self) -> &str {
        "rambling"
    }

    fn complete(&self, _: &SummaryRequest<'_>) -> Result<String, BackendError> {
        Ok("Here are some thoughts about the release.\n\n- it is good\n".into())
    }
}

#[test]
fn unstructured_summary_is_delivered_raw() {
    let cs = case_study();
    let out = tempfile::tempdir().unwrap();
    let config = run_config(cs.fixture.path(), out.path(), "development-to-staging", AT, &["--dry-run"]);
    let status = run_with_backend(&config, Some(&Rambling));
    assert_eq!(status.outcome, Outcome::ReportOk);
    let html = read(out.path(), "report.html");
    assert!(html.contains("some thoughts about the release"));
    assert!(html.contains("shown unprocessed"));
}

#[test]
fn email_is_sent_once_to_all_recipients() {
    let cs = case_study();
    let out = tempfile::tempdir().unwrap();
    let sink = SmtpSink::start();
    let port = sink.port.to_string();
    let config = run_config(
        cs.fixture.path(),
        out.path(),
        "development-to-staging",
        AT,
        &[
            "--send-email",
            "--smtp-host",
            "127.0.0.1",
            "--smtp-port",
            &port,
            "--smtp-sender",
            "releases@example.com",
            "--smtp-recipients",
            "a@example.com,b@example.com,c@example.com",
            "--soak-marker",
            &out.path().join("marker.json").display().to_string(),
        ],
    );
    let status = run(&config);
    let capture = sink.finish();
    assert_eq!(status.outcome, Outcome::ReportOk, "{status:?}");
    assert_eq!(capture.rcpt_to.len(), 3);
    assert_eq!(capture.messages.len(), 1);
    let message = &capture.messages[0];
    assert!(message.contains("Subject: development-to-staging Promotion Report"));
    assert!(message.contains("2026-03-09"));
    assert!(message.contains("multipart/alternative"));
    assert!(message.contains("text/plain"));
    assert!(message.contains("text/html"));
    assert!(capture.auth_lines.is_empty());

    // the promotion was confirmed, so the staging tip gets a soak marker
    let marker = SoakMarker::read(&out.path().join("marker.json")).unwrap();
    assert_eq!(marker.staging_tip, cs.fixture.rev("staging"));
    assert_eq!(marker.entered_at.to_rfc3339(), "2026-03-09T10:00:00+00:00");
}

#[test]
fn authenticated_email_without_credentials_fails_before_connecting() {
    let cs = case_study();
    let out = tempfile::tempdir().unwrap();
    let missing = out.path().join("no-such-credentials");
    let config = run_config(
        cs.fixture.path(),
        out.path(),
        "development-to-staging",
        AT,
        &[
            "--send-email",
            "--smtp-mode",
            "authenticated",
            "--smtp-credentials-file",
            &missing.display().to_string(),
            "--smtp-host",
            "127.0.0.1",
            "--smtp-port",
            "9",
            "--smtp-tls=false",
            "--smtp-sender",
            "releases@example.com",
            "--smtp-recipients",
            "a@example.com",
            "--soak-marker",
            &out.path().join("marker.json").display().to_string(),
        ],
    );
    let status = run(&config);
    assert_eq!(status.outcome, Outcome::ReportFailed);
    assert!(status.messages.iter().any(|m| m.contains("SMTP authentication failed")), "{status:?}");
    assert!(out.path().join("report.html").exists());
}

#[test]
fn authenticated_email_sends_credentials_to_server() {
    let cs = case_study();
    let out = tempfile::tempdir().unwrap();
    let creds = out.path().join("smtp-creds");
    std::fs::write(&creds, "mailer\nhunter2-secret\n").unwrap();
    let sink = SmtpSink::start();
    let port = sink.port.to_string();
    let config = run_config(
        cs.fixture.path(),
        out.path(),
        "development-to-staging",
        AT,
        &[
            "--send-email",
            "--smtp-credentials-file",
            &creds.display().to_string(),
            "--smtp-host",
            "127.0.0.1",
            "--smtp-port",
            &port,
            "--smtp-tls=false",
            "--smtp-sender",
            "releases@example.com",
            "--smtp-recipients",
            "a@example.com",
            "--soak-marker",
            &out.path().join("marker.json").display().to_string(),
        ],
    );
    let status = run(&config);
    let capture = sink.finish();
    assert_eq!(status.outcome, Outcome::ReportOk, "{status:?}");
    assert_eq!(capture.auth_lines.len(), 1);
    assert_eq!(capture.messages.len(), 1);
}

fn binary() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_promotion-report"));
    for (k, _) in std::env::vars() {
        if k.starts_with("PROMO_") {
            c.env_remove(k);
        }
    }
    c
}

#[test]
fn binary_exit_codes() {
    let cs = case_study();
    let out = tempfile::tempdir().unwrap();
    let bad = binary()
        .args(["--promotion-type", "sideways", "--web-base-url", WEB])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("promotion-type"));

    let range = binary()
        .args(["capture-range", "--repo"])
        .arg(cs.fixture.path())
        .args(["--source", "development", "--target", "staging"])
        .output()
        .unwrap();
    assert!(range.status.success());
    let range = String::from_utf8(range.stdout).unwrap();
    assert_eq!(range.trim(), format!("{}..{}", cs.fixture.rev("staging"), cs.fixture.rev("development")));

    cs.fixture.set_branch("staging", "development");
    let ok = binary()
        .args(["--promotion-type", "development-to-staging", "--dry-run", "--web-base-url", WEB])
        .arg("--repo")
        .arg(cs.fixture.path())
        .arg("--output-dir")
        .arg(out.path())
        .env("PROMO_COMMIT_RANGE", range.trim())
        .env("PROMO_GENERATED_AT", AT)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(ok.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("STATUS: promotion report generated"));
    assert!(read(out.path(), "impact.json").contains("sign-kmods"));

    let blocked = binary()
        .args(["--promotion-type", "development-to-staging", "--guard-mode", "pre-check", "--web-base-url", WEB])
        .arg("--repo")
        .arg(cs.fixture.path())
        .arg("--output-dir")
        .arg(out.path().join("blocked"))
        .output()
        .unwrap();
    assert_eq!(blocked.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&blocked.stdout).contains("STATUS: promotion blocked by guard"));
}
