use std::path::PathBuf;

/// Final classification of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Report produced, possibly degraded.
    ReportOk,
    /// The promotion went ahead but no complete report was produced.
    ReportFailed,
    /// A pre-check found unapproved guard violations.
    GuardBlocked,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStatus {
    pub outcome: Outcome,
    /// Warnings and degradations, in the order they happened.
    pub messages: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self.outcome {
            Outcome::ReportOk | Outcome::ReportFailed => 0,
            Outcome::GuardBlocked => 2,
        }
    }
}

pub fn status_line(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::ReportOk => "STATUS: promotion report generated",
        Outcome::ReportFailed => "STATUS: promotion succeeded, report generation failed",
        Outcome::GuardBlocked => "STATUS: promotion blocked by guard",
    }
}

/// Text printed for the pipeline log and the process exit code.
pub fn report_status(status: &RunStatus) -> (String, i32) {
    let mut out = String::new();
    for message in &status.messages {
        out.push_str("warning: ");
        out.push_str(message);
        out.push('\n');
    }
    for artifact in &status.artifacts {
        out.push_str(&format!("artifact: {}\n", artifact.display()));
    }
    out.push_str(status_line(status.outcome));
    out.push('\n');
    (out, status.exit_code())
}
