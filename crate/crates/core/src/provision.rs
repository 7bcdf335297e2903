//! Provisioning variable files and generation manifests.
//!
//! The vars file is a flat YAML mapping, loadable directly as configuration
//! management extra-vars:
//!
//! ```text
//! # generated by labforge 0.1.0
//! # exercise: hw01
//! # digest: 5c1f...
//! telnet_port: "41247"
//! ```
//!
//! Keys are unquoted identifiers, values are always double-quoted, lines end
//! in LF.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generate::ValueAssignment;
use crate::timefmt::{self, Timestamp};
use crate::GENERATOR_VERSION;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvisionDocument {
    pub exercise_id: String,
    pub value_digest: String,
    pub variables: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub student_id: String,
    pub exercise_id: String,
    pub value_digest: String,
    #[serde(with = "timefmt::rfc3339")]
    pub generated_at: Timestamp,
}

/// Hex SHA-256 over `key=value\n` lines with keys sorted, so the digest is
/// independent of map order and of the generation time.
pub fn value_digest<'a>(values: impl IntoIterator<Item = (&'a String, &'a String)>) -> String {
    let mut pairs: Vec<_> = values.into_iter().collect();
    pairs.sort_by(|a, b| a.0.cmp(b.0));
    let mut hasher = Sha256::new();
    for (k, v) in pairs {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

pub fn emit_vars(values: &ValueAssignment) -> ProvisionDocument {
    ProvisionDocument {
        exercise_id: values.exercise_id.clone(),
        value_digest: value_digest(&values.values),
        variables: values.values.clone(),
    }
}

pub fn write_manifest(values: &ValueAssignment) -> GenerationManifest {
    GenerationManifest {
        student_id: values.student_id.clone(),
        exercise_id: values.exercise_id.clone(),
        value_digest: value_digest(&values.values),
        generated_at: values.generated_at,
    }
}

/// Appends one JSON line to a `manifests.jsonl` file, creating it if needed.
pub fn append_manifest(path: &Path, manifest: &GenerationManifest) -> Result<()> {
    let mut line = serde_json::to_string(manifest)?;
    line.push('\n');
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    file.write_all(line.as_bytes())?;
    Ok(())
}

impl ProvisionDocument {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# generated by {GENERATOR_VERSION}");
        let _ = writeln!(out, "# exercise: {}", self.exercise_id.replace('\n', " "));
        let _ = writeln!(out, "# digest: {}", self.value_digest);
        for (key, value) in &self.variables {
            let _ = writeln!(out, "{key}: {}", quote(value));
        }
        out
    }
}

/// Characters outside YAML's printable set, plus the YAML 1.1 line breaks,
/// must be escaped inside a double-quoted scalar.
fn needs_unicode_escape(c: char) -> bool {
    let cp = c as u32;
    matches!(cp, 0x00..=0x1F | 0x7F..=0x9F | 0x2028 | 0x2029 | 0xFEFF | 0xFFFE | 0xFFFF)
}

pub fn quote(value: &str) -> String {
    let mut out = String::with_capacity(value.len() + 2);
    out.push('"');
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if needs_unicode_escape(c) => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn unquote(raw: &str, line: usize) -> Result<String> {
    let bad = |what: &str| Error::validation(format!("vars line {line}: {what}"));
    let inner = raw
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .ok_or_else(|| bad("value is not double-quoted"))?;
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                let esc = chars.next().ok_or_else(|| bad("dangling backslash"))?;
                let hex = |chars: &mut std::str::Chars<'_>, n: usize| -> Result<char> {
                    let digits: String = chars.by_ref().take(n).collect();
                    u32::from_str_radix(&digits, 16)
                        .ok()
                        .filter(|_| digits.len() == n)
                        .and_then(char::from_u32)
                        .ok_or_else(|| bad("invalid hex escape"))
                };
                out.push(match esc {
                    '\\' => '\\',
                    '"' => '"',
                    '/' => '/',
                    ' ' => ' ',
                    'n' => '\n',
                    'r' => '\r',
                    't' => '\t',
                    '0' => '\0',
                    'x' => hex(&mut chars, 2)?,
                    'u' => hex(&mut chars, 4)?,
                    'U' => hex(&mut chars, 8)?,
                    other => return Err(bad(&format!("unsupported escape `\\{other}`"))),
                });
            }
            '"' => return Err(bad("unescaped quote")),
            c => out.push(c),
        }
    }
    Ok(out)
}

/// Parses a vars file produced by [`ProvisionDocument::render`].
pub fn parse_vars(text: &str) -> Result<IndexMap<String, String>> {
    let mut vars = IndexMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(": ").ok_or_else(|| {
            Error::validation(format!("vars line {lineno}: expected `key: \"value\"`"))
        })?;
        let value = unquote(value, lineno)?;
        if vars.insert(key.to_owned(), value).is_some() {
            return Err(Error::validation(format!(
                "vars line {lineno}: duplicate key `{key}`"
            )));
        }
    }
    Ok(vars)
}
