//! Promotion safety invariants: staging/production parity, minimum soak
//! time in staging, and loss of commits applied directly to the target.
//!
//! Every check fails closed. An error while checking becomes a violation of
//! the corresponding kind, which only an explicit override can clear.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collector::{collect_commits, CollectError, CommitRecord, RangeSpec};
use crate::git::Repo;
use crate::promotion::{BranchNames, PromotionType};

pub const DEFAULT_SOAK_DAYS: u32 = 6;
/// Soak marker location relative to the repository root.
pub const DEFAULT_SOAK_MARKER: &str = ".promotion/staging-soak.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Parity,
    Soak,
    HotfixLoss,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Parity => "parity",
            ViolationKind::Soak => "soak",
            ViolationKind::HotfixLoss => "hotfix_loss",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
    pub overridable: bool,
}

impl Violation {
    fn new(kind: ViolationKind, detail: impl Into<String>) -> Self {
        Self {
            kind,
            detail: detail.into(),
            overridable: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GuardDecision {
    pub allowed: bool,
    pub violations: Vec<Violation>,
    pub overrides_applied: Vec<ViolationKind>,
}

#[derive(Debug, Error)]
pub enum GuardError {
    #[error("unknown ref `{0}`")]
    UnknownRef(String),
    #[error("no soak timestamp available: {0}")]
    SoakTimestampUnavailable(String),
    #[error(transparent)]
    Collect(#[from] CollectError),
    #[error(transparent)]
    Git(#[from] crate::git::GitError),
}

fn resolve(repo: &Repo, reference: &str) -> Result<String, GuardError> {
    repo.resolve_commit(reference)?
        .ok_or_else(|| GuardError::UnknownRef(reference.to_string()))
}

/// Violation when the staging and production tips differ in either
/// direction.
pub fn check_parity(repo: &Repo, staging_ref: &str, production_ref: &str) -> Result<Option<Violation>, GuardError> {
    let staging = resolve(repo, staging_ref)?;
    let production = resolve(repo, production_ref)?;
    if staging == production {
        return Ok(None);
    }
    Ok(Some(Violation::new(
        ViolationKind::Parity,
        format!("{staging_ref} ({staging}) differs from {production_ref} ({production})"),
    )))
}

/// Record of when the current staging tip entered staging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoakMarker {
    pub staging_tip: String,
    pub entered_at: DateTime<Utc>,
}

impl SoakMarker {
    pub fn read(path: &Path) -> Option<SoakMarker> {
        let text = std::fs::read_to_string(path).ok()?;
        match serde_json::from_str(&text) {
            Ok(m) => Some(m),
            Err(e) => {
                tracing::warn!(path = %path.display(), error = %e, "ignoring unreadable soak marker");
                None
            }
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut text = serde_json::to_string_pretty(self).expect("marker serializes");
        text.push('\n');
        std::fs::write(path, text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoakStatus {
    pub staging_tip_entered_at: DateTime<Utc>,
    pub days_in_staging: f64,
    pub required_days: u32,
}

/// When the current staging tip entered staging: the marker file if it
/// names the current tip, else the tip's committer date.
pub fn soak_status(
    repo: &Repo,
    staging_ref: &str,
    now: DateTime<Utc>,
    required_days: u32,
    marker_path: &Path,
) -> Result<SoakStatus, GuardError> {
    let tip = resolve(repo, staging_ref)?;
    let entered_at = match SoakMarker::read(marker_path).filter(|m| m.staging_tip == tip) {
        Some(marker) => marker.entered_at,
        None => {
            let out = repo
                .run(&["show", "-s", "--format=%cI", &tip])
                .map_err(|e| GuardError::SoakTimestampUnavailable(e.to_string()))?;
            DateTime::parse_from_rfc3339(out.trim())
                .map_err(|e| GuardError::SoakTimestampUnavailable(format!("bad committer date {:?}: {e}", out.trim())))?
                .with_timezone(&Utc)
        }
    };
    let seconds = (now - entered_at).num_seconds().max(0) as f64;
    Ok(SoakStatus {
        staging_tip_entered_at: entered_at,
        days_in_staging: seconds / 86_400.0,
        required_days,
    })
}

/// Soak rule alone: at least `required_days`, inclusive.
pub fn soak_violation(status: &SoakStatus) -> Option<Violation> {
    if status.days_in_staging >= f64::from(status.required_days) {
        return None;
    }
    Some(Violation::new(
        ViolationKind::Soak,
        format!(
            "staging content has soaked {:.2} days (entered {}), {} required",
            status.days_in_staging,
            status.staging_tip_entered_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            status.required_days
        ),
    ))
}

pub fn check_soak(
    repo: &Repo,
    staging_ref: &str,
    now: DateTime<Utc>,
    required_days: u32,
    marker_path: &Path,
) -> Result<Option<Violation>, GuardError> {
    Ok(soak_violation(&soak_status(repo, staging_ref, now, required_days, marker_path)?))
}

/// Commits reachable from `target_ref` but not `source_ref`: what aligning
/// the target onto the source would lose. Hash based, so a cherry-picked
/// copy on the source still counts.
pub fn detect_hotfixes(repo: &Repo, source_ref: &str, target_ref: &str) -> Result<Vec<CommitRecord>, GuardError> {
    resolve(repo, source_ref)?;
    resolve(repo, target_ref)?;
    let range = RangeSpec::from_refs(target_ref, source_ref);
    Ok(collect_commits(repo, &range, "")?)
}

#[derive(Debug, Clone)]
pub struct GuardSettings {
    pub branches: BranchNames,
    pub required_soak_days: u32,
    pub marker_path: std::path::PathBuf,
}

/// Runs the checks that apply to `promotion` and applies `overrides`.
/// Parity and hotfix checks guard development-to-staging; soak and hotfix
/// checks guard staging-to-production.
pub fn evaluate(
    promotion: PromotionType,
    repo: &Repo,
    settings: &GuardSettings,
    now: DateTime<Utc>,
    overrides: &BTreeMap<ViolationKind, String>,
) -> GuardDecision {
    let b = &settings.branches;
    let mut violations = Vec::new();
    let (source, target) = b.endpoints(promotion);

    match promotion {
        PromotionType::DevelopmentToStaging => match check_parity(repo, &b.staging, &b.production) {
            Ok(v) => violations.extend(v),
            Err(e) => violations.push(Violation::new(ViolationKind::Parity, format!("parity check failed: {e}"))),
        },
        PromotionType::StagingToProduction => {
            match check_soak(repo, &b.staging, now, settings.required_soak_days, &settings.marker_path) {
                Ok(v) => violations.extend(v),
                Err(e) => violations.push(Violation::new(ViolationKind::Soak, format!("soak check failed: {e}"))),
            }
        }
    }
    match detect_hotfixes(repo, source, target) {
        Ok(hotfixes) if hotfixes.is_empty() => {}
        Ok(hotfixes) => {
            let listed: Vec<String> = hotfixes
                .iter()
                .map(|c| format!("{} {}", c.short_hash(), c.summary))
                .collect();
            violations.push(Violation::new(
                ViolationKind::HotfixLoss,
                format!(
                    "{} commit(s) on {target} are missing from {source} and would be lost: {}",
                    hotfixes.len(),
                    listed.join("; ")
                ),
            ));
        }
        Err(e) => violations.push(Violation::new(
            ViolationKind::HotfixLoss,
            format!("hotfix check failed: {e}"),
        )),
    }

    let mut overrides_applied: Vec<ViolationKind> = violations
        .iter()
        .map(|v| v.kind)
        .filter(|k| overrides.contains_key(k))
        .collect();
    overrides_applied.dedup();
    let allowed = violations.iter().all(|v| v.overridable && overrides.contains_key(&v.kind));
    GuardDecision {
        allowed,
        violations,
        overrides_applied,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    fn status(days: f64) -> SoakStatus {
        let now = DateTime::parse_from_rfc3339("2026-05-10T12:00:00Z").unwrap().with_timezone(&Utc);
        SoakStatus {
            staging_tip_entered_at: now - Duration::seconds((days * 86_400.0) as i64),
            days_in_staging: days,
            required_days: DEFAULT_SOAK_DAYS,
        }
    }

    #[test]
    fn soak_boundaries() {
        assert!(soak_violation(&status(6.5)).is_none());
        assert!(soak_violation(&status(6.0)).is_none());
        let v = soak_violation(&status(5.9)).unwrap();
        assert_eq!(v.kind, ViolationKind::Soak);
        assert!(v.overridable);
    }

    #[test]
    fn marker_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/marker.json");
        let m = SoakMarker {
            staging_tip: "a".repeat(40),
            entered_at: DateTime::parse_from_rfc3339("2026-05-01T00:00:00Z").unwrap().with_timezone(&Utc),
        };
        m.write(&path).unwrap();
        assert_eq!(SoakMarker::read(&path), Some(m));
        std::fs::write(&path, "not json").unwrap();
        assert_eq!(SoakMarker::read(&path), None);
    }
}
