//! Thin wrapper over the system `git` executable.
//!
//! Every invocation is read-only plumbing (`rev-parse`, `log`, `diff-tree`,
//! `show`). Optional locks are disabled so that status-like commands never
//! touch the index.

use std::path::{Path, PathBuf};
use std::process::Command;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GitError {
    #[error("failed to run git in {path}: {source}")]
    Spawn {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("git {command} failed: {stderr}")]
    Failed { command: String, stderr: String },
    #[error("git produced non-UTF-8 output for {command}")]
    Encoding { command: String },
}

/// Handle to a local repository working tree.
#[derive(Debug, Clone)]
pub struct Repo {
    path: PathBuf,
}

impl Repo {
    pub fn open(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Runs git with `args` and returns stdout on success.
    pub fn run(&self, args: &[&str]) -> Result<String, GitError> {
        let bytes = self.run_raw(args)?;
        String::from_utf8(bytes).map_err(|_| GitError::Encoding {
            command: args.first().copied().unwrap_or_default().to_string(),
        })
    }

    pub fn run_raw(&self, args: &[&str]) -> Result<Vec<u8>, GitError> {
        tracing::debug!(repo = %self.path.display(), args = ?args, "git invocation");
        let output = Command::new("git")
            .arg("-C")
            .arg(&self.path)
            .args(args)
            .env("GIT_OPTIONAL_LOCKS", "0")
            .env("GIT_TERMINAL_PROMPT", "0")
            .env_remove("GIT_DIR")
            .env_remove("GIT_WORK_TREE")
            .output()
            .map_err(|source| GitError::Spawn {
                path: self.path.clone(),
                source,
            })?;
        if !output.status.success() {
            return Err(GitError::Failed {
                command: args.join(" "),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }
        Ok(output.stdout)
    }

    /// Resolves `reference` to a full commit id, or `None` if it does not
    /// name a commit.
    pub fn resolve_commit(&self, reference: &str) -> Result<Option<String>, GitError> {
        if reference.is_empty() || reference.starts_with('-') {
            return Ok(None);
        }
        let spec = format!("{reference}^{{commit}}");
        match self.run(&["rev-parse", "--verify", "--quiet", "--end-of-options", &spec]) {
            Ok(out) => Ok(Some(out.trim().to_string())),
            Err(GitError::Failed { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Fails unless the path is a readable git repository.
    pub fn verify(&self) -> Result<(), GitError> {
        self.run(&["rev-parse", "--git-dir"]).map(|_| ())
    }

    /// Id of the empty tree in this repository's object format.
    pub fn empty_tree(&self) -> Result<String, GitError> {
        Ok(self
            .run(&["hash-object", "-t", "tree", "/dev/null"])?
            .trim()
            .to_string())
    }
}

pub(crate) fn is_full_hash(s: &str) -> bool {
    (s.len() == 40 || s.len() == 64) && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}
