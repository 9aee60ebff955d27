//! Shared fixtures: throwaway git repositories with pinned dates, the case
//! study catalog, and an in-process SMTP sink.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::Command;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use chrono::{DateTime, Duration, Utc};

pub const WEB: &str = "https://git.example.com/org/release-catalog";
pub const EPOCH: &str = "2026-03-01T00:00:00Z";

pub fn epoch() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339(EPOCH).unwrap().with_timezone(&Utc)
}

pub struct Author {
    pub name: &'static str,
    pub email: &'static str,
}

pub const ALICE: Author = Author {
    name: "Alice Example",
    email: "alice@example.com",
};
pub const BOB: Author = Author {
    name: "Bob Example",
    email: "bob@example.com",
};
pub const CAROL: Author = Author {
    name: "Carol Example",
    email: "carol@example.com",
};

pub struct Fixture {
    pub dir: tempfile::TempDir,
    /// Minutes after [`EPOCH`] used for the next commit.
    pub clock: i64,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let f = Fixture { dir, clock: 0 };
        f.git(&["init", "-q", "-b", "development"]);
        f.git(&["config", "user.name", "Fixture"]);
        f.git(&["config", "user.email", "fixture@example.com"]);
        f.git(&["config", "commit.gpgsign", "false"]);
        f
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn git(&self, args: &[&str]) -> String {
        self.git_at(args, epoch() + Duration::minutes(self.clock), &ALICE)
    }

    fn git_at(&self, args: &[&str], at: DateTime<Utc>, author: &Author) -> String {
        let date = at.to_rfc3339();
        let out = Command::new("git")
            .args(args)
            .current_dir(self.path())
            .env("GIT_AUTHOR_NAME", author.name)
            .env("GIT_AUTHOR_EMAIL", author.email)
            .env("GIT_AUTHOR_DATE", &date)
            .env("GIT_COMMITTER_NAME", author.name)
            .env("GIT_COMMITTER_EMAIL", author.email)
            .env("GIT_COMMITTER_DATE", &date)
            .env("GIT_CONFIG_NOSYSTEM", "1")
            .env("HOME", self.path())
            .output()
            .expect("git runs");
        assert!(
            out.status.success(),
            "git {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    pub fn write(&self, path: &str, contents: &str) {
        let full = self.path().join(path);
        std::fs::create_dir_all(full.parent().unwrap()).unwrap();
        std::fs::write(full, contents).unwrap();
    }

    pub fn remove(&self, path: &str) {
        std::fs::remove_file(self.path().join(path)).unwrap();
    }

    /// Writes `files`, stages everything and commits. Returns the new hash.
    pub fn commit(&mut self, author: &Author, message: &str, files: &[(&str, &str)]) -> String {
        for (path, contents) in files {
            self.write(path, contents);
        }
        self.clock += 1;
        let at = epoch() + Duration::minutes(self.clock);
        self.git_at(&["add", "-A"], at, author);
        self.git_at(&["commit", "-q", "--allow-empty", "-m", message], at, author);
        self.head()
    }

    pub fn head(&self) -> String {
        self.git(&["rev-parse", "HEAD"]).trim().to_string()
    }

    pub fn rev(&self, r: &str) -> String {
        self.git(&["rev-parse", r]).trim().to_string()
    }

    pub fn checkout(&self, branch: &str) {
        self.git(&["checkout", "-q", branch]);
    }

    /// Points `branch` at `target`, creating it when missing.
    pub fn set_branch(&self, branch: &str, target: &str) {
        self.git(&["branch", "-f", branch, target]);
    }

    /// Merge commit of `branch` into the current branch.
    pub fn merge(&mut self, author: &Author, branch: &str, message: &str) -> String {
        self.clock += 1;
        let at = epoch() + Duration::minutes(self.clock);
        self.git_at(&["merge", "-q", "--no-ff", "-m", message, branch], at, author);
        self.head()
    }

    /// Output of an arbitrary git command, used as reference data.
    pub fn reference(&self, args: &[&str]) -> String {
        self.git(args)
    }
}

pub fn lines(n: usize, tag: &str) -> String {
    (1..=n).map(|i| format!("{tag} line {i}\n")).collect()
}

pub const COSIGN_TASK: &str = "tasks/managed/sign-image-cosign/sign-image-cosign.yaml";
pub const PUBLISH_TASK: &str = "tasks/managed/publish-repository/publish-repository.yaml";
pub const KMODS_TASK: &str = "tasks/managed/sign-kmods/sign-kmods.yaml";

fn task_yaml(name: &str, version: &str) -> String {
    format!(
        "apiVersion: tekton.dev/v1\nkind: Task\nmetadata:\n  name: {name}\n  labels:\n    app.kubernetes.io/version: \"{version}\"\nspec:\n  steps:\n    - name: run\n      image: quay.io/example/{name}:{version}\n      script: |\n        echo {name}\n"
    )
}

fn git_path_ref(task: &str, path: &str, url: &str) -> String {
    format!(
        "    - name: {task}\n      taskRef:\n        resolver: git\n        params:\n          - name: url\n            value: {url}\n          - name: revision\n            value: production\n          - name: pathInRepo\n            value: {path}\n"
    )
}

fn pipeline(name: &str, tasks: &str, finally: &str) -> String {
    let mut s = format!("apiVersion: tekton.dev/v1\nkind: Pipeline\nmetadata:\n  name: {name}\nspec:\n  params:\n    - name: release\n  tasks:\n{tasks}");
    if !finally.is_empty() {
        s.push_str("  finally:\n");
        s.push_str(finally);
    }
    s
}

/// The six pipelines of the case study, covering every reference style.
pub fn case_study_pipelines() -> Vec<(String, String)> {
    let web_git = format!("{WEB}.git");
    let foreign = "https://git.example.com/other/catalog.git";
    vec![
        (
            "pipelines/managed/fbc-release/fbc-release.yaml".into(),
            pipeline(
                "fbc-release",
                &format!(
                    "{}{}",
                    git_path_ref("sign", COSIGN_TASK, &web_git),
                    git_path_ref("publish", PUBLISH_TASK, WEB)
                ),
                "",
            ),
        ),
        (
            "pipelines/managed/push-to-registry/push-to-registry.yaml".into(),
            pipeline(
                "push-to-registry",
                "    - name: sign\n      taskRef:\n        resolver: git\n        params:\n          - name: name\n            value: sign-image-cosign\n    - name: publish\n      taskRef:\n        name: publish-repository\n",
                "",
            ),
        ),
        (
            "pipelines/managed/push-to-external-registry/push-to-external-registry.yaml".into(),
            pipeline(
                "push-to-external-registry",
                &git_path_ref("publish", "./tasks//managed/publish-repository/publish-repository.yaml", &web_git),
                &git_path_ref("sign", COSIGN_TASK, &format!("{WEB}/")),
            ),
        ),
        (
            "pipelines/managed/advisories/advisories.yaml".into(),
            format!(
                "{}---\n{}",
                task_yaml("advisory-helper", "0.1"),
                pipeline("advisories", &git_path_ref("sign", COSIGN_TASK, &web_git), "")
            ),
        ),
        (
            "pipelines/managed/rpm-advisories/rpm-advisories.yaml".into(),
            pipeline(
                "rpm-advisories",
                &format!(
                    "{}{}",
                    git_path_ref("sign", COSIGN_TASK, WEB),
                    git_path_ref("publish", PUBLISH_TASK, foreign)
                ),
                "",
            ),
        ),
        (
            "pipelines/internal/push-disk-images-to-cdn/push-disk-images-to-cdn.yaml".into(),
            pipeline(
                "push-disk-images-to-cdn",
                &format!(
                    "{}{}{}",
                    git_path_ref("kmods", KMODS_TASK, &web_git),
                    git_path_ref("sign", COSIGN_TASK, foreign),
                    git_path_ref("dyn", "$(params.taskPath)", &web_git)
                ),
                "",
            ),
        ),
    ]
}

pub struct CaseStudy {
    pub fixture: Fixture,
    /// Substantive commits in promotion order: cosign, publish, kmods.
    pub substantive: Vec<String>,
    pub docs: String,
}

/// Catalog with staging and production at the base commit and four new
/// commits on development: three task changes by three authors touching
/// eight files, plus a documentation typo fix.
pub fn case_study() -> CaseStudy {
    let mut f = Fixture::new();
    let mut base: Vec<(String, String)> = case_study_pipelines();
    base.push((COSIGN_TASK.into(), task_yaml("sign-image-cosign", "1.0")));
    base.push((PUBLISH_TASK.into(), task_yaml("publish-repository", "1.0")));
    base.push((KMODS_TASK.into(), task_yaml("sign-kmods", "1.0")));
    base.push(("README.md".into(), "# Release catalog\n\nTeh tasks.\n".into()));
    let refs: Vec<(&str, &str)> = base.iter().map(|(p, c)| (p.as_str(), c.as_str())).collect();
    let root = f.commit(&ALICE, "chore: initial catalog", &refs);
    f.set_branch("staging", &root);
    f.set_branch("production", &root);

    let cosign = f.commit(
        &ALICE,
        "feat(PROJ-1234): add cosign signing support for FBC releases\n\nSigns FBC fragments with cosign.",
        &[
            (COSIGN_TASK, &task_yaml("sign-image-cosign", "1.1")),
            ("tasks/managed/sign-image-cosign/tests/test-fbc.yaml", "kind: Pipeline\n"),
            ("tasks/managed/sign-image-cosign/tests/test-image.yaml", "kind: Pipeline\n"),
        ],
    );
    let publish = f.commit(
        &BOB,
        "fix(PROJ-1235): correct repository publication timeout",
        &[(PUBLISH_TASK, &task_yaml("publish-repository", "1.0.1"))],
    );
    let kmods = f.commit(
        &CAROL,
        "feat(PROJ-1236): support multi-arch kernel module signing",
        &[
            (KMODS_TASK, &task_yaml("sign-kmods", "2.0")),
            ("tasks/managed/sign-kmods/tests/test-basic.yaml", "kind: Pipeline\n"),
            ("tasks/managed/sign-kmods/tests/test-multi-arch.yaml", "kind: Pipeline\n"),
            ("tasks/managed/sign-kmods/tests/test-missing-key.yaml", "kind: Pipeline\n"),
        ],
    );
    let docs = f.commit(&ALICE, "docs: fix typo", &[("README.md", "# Release catalog\n\nThe tasks.\n")]);
    CaseStudy {
        fixture: f,
        substantive: vec![cosign, publish, kmods],
        docs,
    }
}

/// Captured SMTP session.
#[derive(Debug, Default, Clone)]
pub struct SmtpCapture {
    pub mail_from: Vec<String>,
    pub rcpt_to: Vec<String>,
    pub messages: Vec<String>,
    pub auth_lines: Vec<String>,
}

pub struct SmtpSink {
    pub port: u16,
    pub capture: Arc<Mutex<SmtpCapture>>,
    handle: Option<JoinHandle<()>>,
}

impl SmtpSink {
    /// Accepts a single plain-text SMTP session on localhost.
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let capture = Arc::new(Mutex::new(SmtpCapture::default()));
        let shared = Arc::clone(&capture);
        let handle = std::thread::spawn(move || {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut writer = stream.try_clone().unwrap();
            let mut reader = BufReader::new(stream);
            let mut send = |s: &str| {
                let _ = writer.write_all(s.as_bytes());
                let _ = writer.flush();
            };
            send("220 sink.example.com ESMTP\r\n");
            let mut line = String::new();
            loop {
                line.clear();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    return;
                }
                let cmd = line.trim_end().to_string();
                let upper = cmd.to_ascii_uppercase();
                if upper.starts_with("EHLO") || upper.starts_with("HELO") {
                    send("250-sink.example.com\r\n250-AUTH PLAIN LOGIN\r\n250 8BITMIME\r\n");
                } else if upper.starts_with("AUTH") {
                    shared.lock().unwrap().auth_lines.push(cmd);
                    send("235 2.7.0 accepted\r\n");
                } else if upper.starts_with("MAIL FROM") {
                    shared.lock().unwrap().mail_from.push(cmd);
                    send("250 ok\r\n");
                } else if upper.starts_with("RCPT TO") {
                    shared.lock().unwrap().rcpt_to.push(cmd);
                    send("250 ok\r\n");
                } else if upper == "DATA" {
                    send("354 go ahead\r\n");
                    let mut body = String::new();
                    loop {
                        line.clear();
                        if reader.read_line(&mut line).unwrap_or(0) == 0 {
                            return;
                        }
                        if line == ".\r\n" {
                            break;
                        }
                        body.push_str(&line);
                    }
                    shared.lock().unwrap().messages.push(body);
                    send("250 queued\r\n");
                } else if upper == "QUIT" {
                    send("221 bye\r\n");
                    return;
                } else {
                    send("250 ok\r\n");
                }
            }
        });
        SmtpSink {
            port,
            capture,
            handle: Some(handle),
        }
    }

    pub fn finish(mut self) -> SmtpCapture {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
        self.capture.lock().unwrap().clone()
    }
}

/// Run configuration for `repo` built through the real flag parser.
/// Output goes to `out`; the clock is pinned to `at`.
pub fn run_config(
    repo: &Path,
    out: &Path,
    promotion: &str,
    at: &str,
    extra: &[&str],
) -> promotion_report::cli::RunConfig {
    use clap::Parser;
    let repo = repo.display().to_string();
    let out = out.display().to_string();
    let mut argv = vec![
        "promotion-report",
        "--promotion-type",
        promotion,
        "--repo",
        &repo,
        "--output-dir",
        &out,
        "--web-base-url",
        WEB,
        "--generated-at",
        at,
    ];
    argv.extend_from_slice(extra);
    let cli = promotion_report::cli::Cli::try_parse_from(argv).unwrap();
    promotion_report::cli::load_config(&cli.run, &|_| None, None).unwrap()
}

pub fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}


/// Captured HTTP request: head (request line and headers) and body.
#[derive(Debug, Clone, Default)]
pub struct HttpRequest {
    pub head: String,
    pub body: String,
}

/// Serves `responses` (status, JSON body) to successive connections on
/// localhost and records the requests.
pub struct HttpStub {
    pub url: String,
    pub requests: Arc<Mutex<Vec<HttpRequest>>>,
    handle: Option<JoinHandle<()>>,
}

impl HttpStub {
    pub fn start(responses: Vec<(u16, String)>) -> Self {
        use std::io::Read;
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let shared = Arc::clone(&requests);
        let handle = std::thread::spawn(move || {
            for (status, body) in responses {
                let Ok((stream, _)) = listener.accept() else { return };
                let mut writer = stream.try_clone().unwrap();
                let mut reader = BufReader::new(stream);
                let mut head = String::new();
                let mut length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap_or(0);
                    }
                    head.push_str(&line);
                }
                let mut buf = vec![0u8; length];
                let _ = reader.read_exact(&mut buf);
                shared.lock().unwrap().push(HttpRequest {
                    head,
                    body: String::from_utf8_lossy(&buf).into_owned(),
                });
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = writer.write_all(reply.as_bytes());
                let _ = writer.flush();
            }
        });
        HttpStub {
            url,
            requests,
            handle: Some(handle),
        }
    }

    pub fn finish(mut self) -> Vec<HttpRequest> {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
        self.requests.lock().unwrap().clone()
    }
}

/// A chat-completion response whose content is `markdown`.
pub fn completion(markdown: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": markdown}}]}).to_string()
}
