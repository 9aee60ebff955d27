//! Run configuration.
//!
//! Every setting has a kebab-case key. Values are looked up in order: CLI
//! flag, environment variable `PROMO_<KEY>` (upper snake case), config file,
//! built-in default. Secrets are never taken from these layers directly; only
//! paths to files holding them are.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::filter::RuleTable;
use crate::guard::{ViolationKind, DEFAULT_SOAK_DAYS, DEFAULT_SOAK_MARKER};
use crate::promotion::{BranchNames, PromotionType};
use crate::summarizer::GenerationSettings;
use crate::tasks::TaskLayout;

/// Environment variable carrying the range captured before promotion.
pub const RANGE_ENV: &str = "PROMO_COMMIT_RANGE";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("invalid configuration: {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot read config file {path}: {message}")]
    File { path: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Parser)]
#[command(name = "promotion-report", version, about = "Promotion guard and release report generator")]
#[command(args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the commit range between two refs, pinned to commit ids, for
    /// export as PROMO_COMMIT_RANGE before the promotion push.
    CaptureRange {
        #[arg(long, default_value = ".")]
        repo: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Remote,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GuardMode {
    /// Block (exit 2) on unapproved violations.
    PreCheck,
    /// Record violations in the report only.
    PostReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmtpMode {
    Authenticated,
    UnauthenticatedRelay,
}

#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub promotion_type: Option<String>,
    #[arg(long)]
    pub repo: Option<String>,
    #[arg(long)]
    pub pipelines_root: Option<String>,
    #[arg(long)]
    pub tasks_root: Option<String>,
    #[arg(long)]
    pub web_base_url: Option<String>,
    #[arg(long)]
    pub output_dir: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub send_email: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dry_run: Option<String>,
    #[arg(long, value_name = "REASON")]
    pub override_parity: Option<String>,
    #[arg(long, value_name = "REASON")]
    pub override_soak: Option<String>,
    #[arg(long, value_name = "REASON")]
    pub override_hotfix: Option<String>,
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub backend_key_file: Option<String>,
    #[arg(long)]
    pub backend_url: Option<String>,
    #[arg(long)]
    pub backend_model: Option<String>,
    #[arg(long, value_name = "SECONDS")]
    pub backend_timeout: Option<String>,
    /// Fall back to the deterministic backend when the remote one fails.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub backend_fallback: Option<String>,
    #[arg(long)]
    pub temperature: Option<String>,
    #[arg(long)]
    pub max_output_tokens: Option<String>,
    #[arg(long)]
    pub smtp_host: Option<String>,
    #[arg(long)]
    pub smtp_port: Option<String>,
    #[arg(long)]
    pub smtp_mode: Option<String>,
    #[arg(long)]
    pub smtp_credentials_file: Option<String>,
    #[arg(long)]
    pub smtp_sender: Option<String>,
    /// Comma-separated recipient addresses.
    #[arg(long)]
    pub smtp_recipients: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub smtp_tls: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub guard_mode: Option<String>,
    #[arg(long)]
    pub soak_days: Option<String>,
    #[arg(long)]
    pub soak_marker: Option<String>,
    /// Comma-separated URLs under which this repository is referenced by git
    /// resolvers.
    #[arg(long)]
    pub self_repo_urls: Option<String>,
    #[arg(long)]
    pub development_branch: Option<String>,
    #[arg(long)]
    pub staging_branch: Option<String>,
    #[arg(long)]
    pub production_branch: Option<String>,
    /// Pins the clock (RFC 3339) for the report timestamp and soak checks.
    #[arg(long)]
    pub generated_at: Option<String>,
    /// Comma-separated conventional-commit types to suppress.
    #[arg(long)]
    pub suppress_prefixes: Option<String>,
    /// Comma-separated summary keywords that suppress a commit.
    #[arg(long)]
    pub suppress_keywords: Option<String>,
    #[arg(long)]
    pub task_depth: Option<String>,
}

pub const KEYS: &[&str] = &[
    "promotion-type",
    "repo",
    "pipelines-root",
    "tasks-root",
    "web-base-url",
    "output-dir",
    "send-email",
    "dry-run",
    "override-parity",
    "override-soak",
    "override-hotfix",
    "backend",
    "backend-key-file",
    "backend-url",
    "backend-model",
    "backend-timeout",
    "backend-fallback",
    "temperature",
    "max-output-tokens",
    "smtp-host",
    "smtp-port",
    "smtp-mode",
    "smtp-credentials-file",
    "smtp-sender",
    "smtp-recipients",
    "smtp-tls",
    "guard-mode",
    "soak-days",
    "soak-marker",
    "self-repo-urls",
    "development-branch",
    "staging-branch",
    "production-branch",
    "generated-at",
    "suppress-prefixes",
    "suppress-keywords",
    "task-depth",
];

impl RunArgs {
    fn flag_values(&self) -> BTreeMap<&'static str, String> {
        let pairs: [(&'static str, &Option<String>); 37] = [
            ("promotion-type", &self.promotion_type),
            ("repo", &self.repo),
            ("pipelines-root", &self.pipelines_root),
            ("tasks-root", &self.tasks_root),
            ("web-base-url", &self.web_base_url),
            ("output-dir", &self.output_dir),
            ("send-email", &self.send_email),
            ("dry-run", &self.dry_run),
            ("override-parity", &self.override_parity),
            ("override-soak", &self.override_soak),
            ("override-hotfix", &self.override_hotfix),
            ("backend", &self.backend),
            ("backend-key-file", &self.backend_key_file),
            ("backend-url", &self.backend_url),
            ("backend-model", &self.backend_model),
            ("backend-timeout", &self.backend_timeout),
            ("backend-fallback", &self.backend_fallback),
            ("temperature", &self.temperature),
            ("max-output-tokens", &self.max_output_tokens),
            ("smtp-host", &self.smtp_host),
            ("smtp-port", &self.smtp_port),
            ("smtp-mode", &self.smtp_mode),
            ("smtp-credentials-file", &self.smtp_credentials_file),
            ("smtp-sender", &self.smtp_sender),
            ("smtp-recipients", &self.smtp_recipients),
            ("smtp-tls", &self.smtp_tls),
            ("guard-mode", &self.guard_mode),
            ("soak-days", &self.soak_days),
            ("soak-marker", &self.soak_marker),
            ("self-repo-urls", &self.self_repo_urls),
            ("development-branch", &self.development_branch),
            ("staging-branch", &self.staging_branch),
            ("production-branch", &self.production_branch),
            ("generated-at", &self.generated_at),
            ("suppress-prefixes", &self.suppress_prefixes),
            ("suppress-keywords", &self.suppress_keywords),
            ("task-depth", &self.task_depth),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect()
    }
}

pub fn env_var_name(key: &str) -> String {
    format!("PROMO_{}", key.replace('-', "_").to_ascii_uppercase())
}

/// Parses a flat `key = value` TOML document whose keys mirror the flags.
pub fn parse_config_file(text: &str, path: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::File {
        path: path.to_string(),
        message: e.to_string(),
    })?;
    let mut out = BTreeMap::new();
    for (key, value) in table {
        if !KEYS.contains(&key.as_str()) {
            return Err(invalid(&key, format!("unknown key in {path}")));
        }
        let text = match value {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(b) => b.to_string(),
            toml::Value::Array(items) => items
                .into_iter()
                .map(|v| match v {
                    toml::Value::String(s) => Ok(s),
                    other => Err(invalid(&key, format!("array items must be strings, found {other}"))),
                })
                .collect::<Result<Vec<_>, _>>()?
                .join(","),
            other => return Err(invalid(&key, format!("unsupported value {other}"))),
        };
        out.insert(key, text);
    }
    Ok(out)
}

struct Layers<'a> {
    flags: BTreeMap<&'static str, String>,
    env: &'a dyn Fn(&str) -> Option<String>,
    file: BTreeMap<String, String>,
}

impl Layers<'_> {
    fn get(&self, key: &str) -> Option<String> {
        if let Some(v) = self.flags.get(key) {
            return Some(v.clone());
        }
        if let Some(v) = (self.env)(&env_var_name(key)) {
            return Some(v);
        }
        self.file.get(key).cloned()
    }

    fn string(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or_else(|| default.to_string())
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.trim().parse().map(Some).map_err(|e| invalid(key, format!("`{v}`: {e}"))),
        }
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => match v.trim().to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                _ => Err(invalid(key, format!("`{v}` is not a boolean"))),
            },
        }
    }

    fn choice<T: ValueEnum>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => T::from_str(v.trim(), false).map(Some).map_err(|_| {
                let options: Vec<String> = T::value_variants()
                    .iter()
                    .filter_map(|x| x.to_possible_value().map(|p| p.get_name().to_string()))
                    .collect();
                invalid(key, format!("`{v}` is not one of {}", options.join(", ")))
            }),
        }
    }

    fn list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key).map(|v| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub key_file: Option<PathBuf>,
    pub url: Option<String>,
    pub model: Option<String>,
    pub timeout: Duration,
    pub fallback: bool,
    pub settings: GenerationSettings,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtpConfig {
    pub host: String,
    pub port: u16,
    pub mode: SmtpMode,
    pub credentials_file: Option<PathBuf>,
    pub sender: String,
    pub recipients: Vec<String>,
    pub use_tls: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub promotion_type: PromotionType,
    pub repo_path: PathBuf,
    pub pipelines_root: String,
    pub task_layout: TaskLayout,
    pub web_base_url: String,
    pub output_dir: PathBuf,
    pub send_email: bool,
    pub dry_run: bool,
    pub overrides: BTreeMap<ViolationKind, String>,
    pub backend: BackendConfig,
    pub smtp: Option<SmtpConfig>,
    pub captured_range: Option<String>,
    pub guard_mode: GuardMode,
    pub soak_days: u32,
    pub soak_marker: PathBuf,
    pub self_repo_urls: BTreeSet<String>,
    pub branches: BranchNames,
    pub generated_at: Option<DateTime<Utc>>,
    pub rules: RuleTable,
    /// Non-fatal configuration findings, surfaced in the run status.
    pub warnings: Vec<String>,
}

impl RunConfig {
    /// Soak marker path, resolved against the repository when relative.
    pub fn soak_marker_path(&self) -> PathBuf {
        if self.soak_marker.is_absolute() {
            self.soak_marker.clone()
        } else {
            self.repo_path.join(&self.soak_marker)
        }
    }
}

fn is_http_url(s: &str) -> bool {
    s.starts_with("https://") || s.starts_with("http://")
}

/// Builds a [`RunConfig`] from parsed flags, an environment lookup and an
/// optional config file.
pub fn load_config(
    args: &RunArgs,
    env: &dyn Fn(&str) -> Option<String>,
    config_file: Option<&Path>,
) -> Result<RunConfig, ConfigError> {
    let config_path = config_file
        .map(Path::to_path_buf)
        .or_else(|| args.config.clone())
        .or_else(|| env("PROMO_CONFIG").map(PathBuf::from));
    let file = match &config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            parse_config_file(&text, &path.display().to_string())?
        }
        None => BTreeMap::new(),
    };
    let layers = Layers {
        flags: args.flag_values(),
        env,
        file,
    };
    let mut warnings = Vec::new();

    let promotion_type = match layers.get("promotion-type") {
        None => return Err(invalid("promotion-type", "required")),
        Some(v) => v.parse::<PromotionType>().map_err(|e| invalid("promotion-type", e))?,
    };

    let web_base_url = layers
        .get("web-base-url")
        .ok_or_else(|| invalid("web-base-url", "required"))?
        .trim_end_matches('/')
        .to_string();
    if !is_http_url(&web_base_url) {
        return Err(invalid("web-base-url", "must be an absolute http(s) URL"));
    }

    let dry_run = layers.flag("dry-run", false)?;
    let mut send_email = layers.flag("send-email", false)?;
    if dry_run && send_email {
        warnings.push("dry run: email delivery suppressed".to_string());
        send_email = false;
    }

    let mut overrides = BTreeMap::new();
    for (key, kind) in [
        ("override-parity", ViolationKind::Parity),
        ("override-soak", ViolationKind::Soak),
        ("override-hotfix", ViolationKind::HotfixLoss),
    ] {
        if let Some(reason) = layers.get(key) {
            if reason.trim().is_empty() {
                return Err(invalid(key, "an override needs a non-empty reason"));
            }
            overrides.insert(kind, reason.trim().to_string());
        }
    }

    let key_file = layers.get("backend-key-file").map(PathBuf::from);
    let kind = layers.choice::<BackendKind>("backend")?.unwrap_or(if key_file.is_some() {
        BackendKind::Remote
    } else {
        BackendKind::Deterministic
    });
    let settings = GenerationSettings {
        temperature: layers.parsed("temperature")?.unwrap_or(0.7),
        max_output_tokens: layers.parsed("max-output-tokens")?.unwrap_or(2500),
    };
    settings.validate().map_err(|e| invalid("temperature/max-output-tokens", e))?;
    let backend = BackendConfig {
        kind,
        url: layers.get("backend-url"),
        model: layers.get("backend-model"),
        timeout: Duration::from_secs(layers.parsed::<u64>("backend-timeout")?.unwrap_or(120)),
        fallback: layers.flag("backend-fallback", true)?,
        key_file,
        settings,
    };
    if backend.kind == BackendKind::Remote {
        if backend.key_file.is_none() {
            return Err(invalid("backend-key-file", "required for the remote backend"));
        }
        match &backend.url {
            Some(u) if is_http_url(u) => {}
            Some(_) => return Err(invalid("backend-url", "must be an absolute http(s) URL")),
            None => return Err(invalid("backend-url", "required for the remote backend")),
        }
        if backend.model.as_deref().is_none_or(str::is_empty) {
            return Err(invalid("backend-model", "required for the remote backend"));
        }
    }

    let smtp = if send_email {
        let credentials_file = layers.get("smtp-credentials-file").map(PathBuf::from);
        let mode = layers.choice::<SmtpMode>("smtp-mode")?.unwrap_or(if credentials_file.is_some() {
            SmtpMode::Authenticated
        } else {
            SmtpMode::UnauthenticatedRelay
        });
        let use_tls = layers.flag("smtp-tls", mode == SmtpMode::Authenticated)?;
        let default_port = match (mode, use_tls) {
            (_, true) => 587,
            (_, false) => 25,
        };
        let recipients = layers.list("smtp-recipients").unwrap_or_default();
        if recipients.is_empty() {
            return Err(invalid("smtp-recipients", "at least one recipient is required when sending email"));
        }
        Some(SmtpConfig {
            host: layers
                .get("smtp-host")
                .ok_or_else(|| invalid("smtp-host", "required when sending email"))?,
            port: layers.parsed("smtp-port")?.unwrap_or(default_port),
            mode,
            credentials_file,
            sender: layers
                .get("smtp-sender")
                .ok_or_else(|| invalid("smtp-sender", "required when sending email"))?,
            recipients,
            use_tls,
        })
    } else {
        None
    };

    let branches = BranchNames {
        development: layers.string("development-branch", "development"),
        staging: layers.string("staging-branch", "staging"),
        production: layers.string("production-branch", "production"),
    };

    let generated_at = match layers.get("generated-at") {
        None => None,
        Some(v) => Some(
            DateTime::parse_from_rfc3339(v.trim())
                .map_err(|e| invalid("generated-at", format!("`{v}`: {e}")))?
                .with_timezone(&Utc),
        ),
    };

    let self_repo_urls: BTreeSet<String> = layers
        .list("self-repo-urls")
        .unwrap_or_else(|| vec![web_base_url.clone(), format!("{web_base_url}.git")])
        .into_iter()
        .collect();

    let mut rules = RuleTable::default();
    if let Some(prefixes) = layers.list("suppress-prefixes") {
        rules = rules.with_suppressed_prefixes(&prefixes);
    }
    if let Some(keywords) = layers.list("suppress-keywords") {
        rules = rules.with_keywords(&keywords);
    }

    let task_depth = layers.parsed::<usize>("task-depth")?.unwrap_or(2);
    if !(1..=2).contains(&task_depth) {
        return Err(invalid("task-depth", "must be 1 or 2"));
    }

    Ok(RunConfig {
        promotion_type,
        repo_path: PathBuf::from(layers.string("repo", ".")),
        pipelines_root: layers.string("pipelines-root", "pipelines"),
        task_layout: TaskLayout {
            root: layers.string("tasks-root", "tasks"),
            depth: task_depth,
        },
        web_base_url,
        output_dir: PathBuf::from(layers.string("output-dir", "promotion-report")),
        send_email,
        dry_run,
        overrides,
        backend,
        smtp,
        captured_range: env(RANGE_ENV).filter(|r| !r.trim().is_empty()),
        guard_mode: layers.choice::<GuardMode>("guard-mode")?.unwrap_or(GuardMode::PostReport),
        soak_days: layers.parsed("soak-days")?.unwrap_or(DEFAULT_SOAK_DAYS),
        soak_marker: PathBuf::from(layers.string("soak-marker", DEFAULT_SOAK_MARKER)),
        self_repo_urls,
        branches,
        generated_at,
        rules,
        warnings,
    })
}
