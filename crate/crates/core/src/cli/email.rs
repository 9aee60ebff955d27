//! Report delivery over SMTP: one multipart message (Markdown plain-text
//! part plus the HTML body) addressed to every recipient.

use std::time::Duration;

use lettre::message::{header::ContentType, Mailbox, MultiPart, SinglePart};
use lettre::transport::smtp::authentication::Credentials;
use lettre::transport::smtp::client::{Tls, TlsParameters};
use lettre::{Message, SmtpTransport, Transport};
use thiserror::Error;

use super::config::{SmtpConfig, SmtpMode};
use crate::report::PromotionReport;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmailError {
    #[error("SMTP connection failed: {0}")]
    SmtpConnectFailed(String),
    #[error("SMTP authentication failed: {0}")]
    SmtpAuthFailed(String),
    #[error("SMTP server rejected the message: {0}")]
    SmtpRejected(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryReceipt {
    pub recipients: usize,
    pub server_response: String,
}

pub fn subject(report: &PromotionReport) -> String {
    format!(
        "{} Promotion Report — {}",
        report.promotion_type,
        report.generated_at.format("%Y-%m-%d")
    )
}

impl SmtpConfig {
    /// Checks that authenticated mode has readable credentials. Runs before
    /// any connection is opened.
    pub fn validate(&self) -> Result<Option<Credentials>, EmailError> {
        if self.mode == SmtpMode::UnauthenticatedRelay {
            return Ok(None);
        }
        let path = self
            .credentials_file
            .as_ref()
            .ok_or_else(|| EmailError::SmtpAuthFailed("authenticated mode needs a credentials file".into()))?;
        let text = std::fs::read_to_string(path).map_err(|e| {
            EmailError::SmtpAuthFailed(format!("cannot read credentials file {}: {e}", path.display()))
        })?;
        let mut lines = text.lines();
        match (lines.next().map(str::trim), lines.next().map(str::trim)) {
            (Some(user), Some(password)) if !user.is_empty() && !password.is_empty() => {
                Ok(Some(Credentials::new(user.to_string(), password.to_string())))
            }
            _ => Err(EmailError::SmtpAuthFailed(format!(
                "credentials file {} must hold a username line and a password line",
                path.display()
            ))),
        }
    }
}

pub fn build_message(report: &PromotionReport, smtp: &SmtpConfig) -> Result<Message, EmailError> {
    let sender: Mailbox = smtp
        .sender
        .parse()
        .map_err(|e| EmailError::SmtpRejected(format!("invalid sender {}: {e}", smtp.sender)))?;
    let mut builder = Message::builder().from(sender).subject(subject(report));
    for recipient in &smtp.recipients {
        let mailbox: Mailbox = recipient
            .parse()
            .map_err(|e| EmailError::SmtpRejected(format!("invalid recipient {recipient}: {e}")))?;
        builder = builder.to(mailbox);
    }
    builder
        .multipart(
            MultiPart::alternative()
                .singlepart(
                    SinglePart::builder()
                        .header(ContentType::TEXT_PLAIN)
                        .body(report.markdown.clone()),
                )
                .singlepart(
                    SinglePart::builder()
                        .header(ContentType::TEXT_HTML)
                        .body(report.html.clone()),
                ),
        )
        .map_err(|e| EmailError::SmtpRejected(e.to_string()))
}

pub fn send_email(report: &PromotionReport, smtp: &SmtpConfig) -> Result<DeliveryReceipt, EmailError> {
    let credentials = smtp.validate()?;
    let message = build_message(report, smtp)?;

    let mut builder = SmtpTransport::builder_dangerous(&smtp.host)
        .port(smtp.port)
        .timeout(Some(Duration::from_secs(60)));
    if smtp.use_tls {
        let params = TlsParameters::new(smtp.host.clone()).map_err(|e| EmailError::SmtpConnectFailed(e.to_string()))?;
        builder = builder.tls(Tls::Required(params));
    }
    if let Some(credentials) = credentials {
        builder = builder.credentials(credentials);
    }
    let transport = builder.build();
    tracing::info!(host = %smtp.host, port = smtp.port, recipients = smtp.recipients.len(), "sending report email");
    match transport.send(&message) {
        Ok(response) => Ok(DeliveryReceipt {
            recipients: smtp.recipients.len(),
            server_response: response.message().collect::<Vec<_>>().join(" "),
        }),
        Err(e) => {
            let text = e.to_string();
            if e.is_permanent() || e.is_transient() {
                if text.contains("authentication") || e.status().is_some_and(|c| c.to_string().starts_with("53")) {
                    return Err(EmailError::SmtpAuthFailed(text));
                }
                return Err(EmailError::SmtpRejected(text));
            }
            Err(EmailError::SmtpConnectFailed(text))
        }
    }
}
