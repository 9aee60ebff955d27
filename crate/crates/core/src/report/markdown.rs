//! Minimal Markdown to HTML renderer.
//!
//! Handles headings, paragraphs, bullet lists, `**bold**`, inline links and
//! backslash escapes. Everything else is emitted as escaped text, so no
//! input can produce live markup.

use std::fmt::Write as _;

pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(ch),
        }
    }
    out
}

pub struct RenderOptions<'a> {
    /// Added to every heading level, capped at 6.
    pub heading_offset: usize,
    /// Decides whether a link target may be emitted as an anchor. Rejected
    /// links render as plain text followed by the escaped URL.
    pub allow_link: &'a dyn Fn(&str) -> bool,
    /// Inline style for anchors.
    pub link_style: &'a str,
}

impl Default for RenderOptions<'_> {
    fn default() -> Self {
        Self {
            heading_offset: 0,
            allow_link: &|_| true,
            link_style: "",
        }
    }
}

pub fn render_markdown_to_html(md: &str) -> String {
    render_markdown_with(md, &RenderOptions::default())
}

enum Block {
    Heading(usize, String),
    Paragraph(Vec<String>),
    List(Vec<String>),
}

fn parse_heading(line: &str) -> Option<(usize, String)> {
    let trimmed = line.trim_start();
    if line.len() - trimmed.len() > 3 {
        return None;
    }
    let level = trimmed.chars().take_while(|c| *c == '#').count();
    if !(1..=6).contains(&level) {
        return None;
    }
    let rest = &trimmed[level..];
    if !rest.is_empty() && !rest.starts_with(' ') && !rest.starts_with('\t') {
        return None;
    }
    let text = rest.trim().trim_end_matches('#').trim_end();
    Some((level, text.to_string()))
}

fn parse_bullet(line: &str) -> Option<&str> {
    let trimmed = line.trim_start();
    for marker in ["- ", "* ", "+ "] {
        if let Some(rest) = trimmed.strip_prefix(marker) {
            return Some(rest.trim());
        }
    }
    None
}

fn blocks(md: &str) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::new();
    let mut paragraph: Vec<String> = Vec::new();
    let mut list: Vec<String> = Vec::new();

    fn flush(out: &mut Vec<Block>, paragraph: &mut Vec<String>, list: &mut Vec<String>) {
        if !paragraph.is_empty() {
            out.push(Block::Paragraph(std::mem::take(paragraph)));
        }
        if !list.is_empty() {
            out.push(Block::List(std::mem::take(list)));
        }
    }

    for line in md.lines() {
        if line.trim().is_empty() {
            flush(&mut out, &mut paragraph, &mut list);
            continue;
        }
        if let Some((level, text)) = parse_heading(line) {
            flush(&mut out, &mut paragraph, &mut list);
            out.push(Block::Heading(level, text));
            continue;
        }
        if let Some(item) = parse_bullet(line) {
            if !paragraph.is_empty() {
                out.push(Block::Paragraph(std::mem::take(&mut paragraph)));
            }
            list.push(item.to_string());
            continue;
        }
        if let Some(last) = list.last_mut().filter(|_| line.starts_with(char::is_whitespace)) {
            last.push(' ');
            last.push_str(line.trim());
            continue;
        }
        if !list.is_empty() {
            out.push(Block::List(std::mem::take(&mut list)));
        }
        paragraph.push(line.trim().to_string());
    }
    flush(&mut out, &mut paragraph, &mut list);
    out
}

pub fn render_markdown_with(md: &str, options: &RenderOptions<'_>) -> String {
    let mut html = String::new();
    for block in blocks(md) {
        match block {
            Block::Heading(level, text) => {
                let level = (level + options.heading_offset).min(6);
                let _ = writeln!(html, "<h{level}>{}</h{level}>", render_inline(&text, options, true));
            }
            Block::Paragraph(lines) => {
                let inner: Vec<String> = lines.iter().map(|l| render_inline(l, options, true)).collect();
                let _ = writeln!(html, "<p>{}</p>", inner.join("\n"));
            }
            Block::List(items) => {
                html.push_str("<ul>\n");
                for item in items {
                    let _ = writeln!(html, "<li>{}</li>", render_inline(&item, options, true));
                }
                html.push_str("</ul>\n");
            }
        }
    }
    html
}

fn is_safe_url(url: &str) -> bool {
    let lower = url.to_ascii_lowercase();
    (lower.starts_with("https://") || lower.starts_with("http://") || lower.starts_with("mailto:"))
        && !url.chars().any(|c| c.is_whitespace() || c.is_control())
}

/// Finds `[text](url)` at the start of `s`; returns (text, url, consumed).
fn parse_link(s: &str) -> Option<(&str, &str, usize)> {
    debug_assert!(s.starts_with('['));
    let bytes = s.as_bytes();
    let mut depth = 0usize;
    let mut i = 0;
    let mut close = None;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 1,
            b'[' => depth += 1,
            b']' => {
                depth -= 1;
                if depth == 0 {
                    close = Some(i);
                    break;
                }
            }
            _ => {}
        }
        i += 1;
    }
    let close = close?;
    let rest = &s[close + 1..];
    let rest = rest.strip_prefix('(')?;
    let end = rest.find(')')?;
    let url = rest[..end].trim();
    Some((&s[1..close], url, close + 1 + 1 + end + 1))
}

fn render_inline(text: &str, options: &RenderOptions<'_>, allow_links: bool) -> String {
    let mut out = String::new();
    let mut rest = text;
    while let Some(ch) = rest.chars().next() {
        if ch == '\\' {
            if let Some(next) = rest[1..].chars().next().filter(|c| c.is_ascii_punctuation()) {
                out.push_str(&escape_html(&next.to_string()));
                rest = &rest[1 + next.len_utf8()..];
                continue;
            }
        }
        if let Some(after) = rest.strip_prefix("**") {
            if let Some(end) = find_unescaped(after, "**").filter(|e| *e > 0) {
                let _ = write!(out, "<strong>{}</strong>", render_inline(&after[..end], options, allow_links));
                rest = &after[end + 2..];
                continue;
            }
        }
        if ch == '[' && allow_links {
            if let Some((label, url, consumed)) = parse_link(rest) {
                let label_html = render_inline(label, options, false);
                if is_safe_url(url) && (options.allow_link)(url) {
                    let style = if options.link_style.is_empty() {
                        String::new()
                    } else {
                        format!(" style=\"{}\"", escape_html(options.link_style))
                    };
                    let _ = write!(out, "<a href=\"{}\"{style}>{label_html}</a>", escape_html(url));
                } else {
                    let _ = write!(out, "{label_html} ({})", escape_html(url));
                }
                rest = &rest[consumed..];
                continue;
            }
        }
        out.push_str(&escape_html(&ch.to_string()));
        rest = &rest[ch.len_utf8()..];
    }
    out
}

fn find_unescaped(haystack: &str, needle: &str) -> Option<usize> {
    let mut start = 0;
    while let Some(pos) = haystack[start..].find(needle) {
        let abs = start + pos;
        let backslashes = haystack[..abs].chars().rev().take_while(|c| *c == '\\').count();
        if backslashes % 2 == 0 {
            return Some(abs);
        }
        start = abs + needle.len();
    }
    None
}
