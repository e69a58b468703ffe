//! Report rows and their TSV/JSON rendering.
//!
//! Every front-end table is a flat list of rows (section, name, value,
//! detail, flags) with deterministic ordering and locale-independent
//! numeric formatting at 12 significant digits, so repeated runs are
//! byte-identical and diffable.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report: nothing to emit")]
    EmptyReport,
}

/// One output row. `value` is rendered with 12 significant digits; rows
/// without a numeric payload leave it absent (empty TSV cell, JSON null)
/// and put text in `detail`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub section: String,
    pub name: String,
    pub value: Option<f64>,
    pub detail: Option<String>,
    pub flags: Vec<String>,
}

impl ReportRow {
    pub fn value(section: &str, name: &str, value: f64) -> Self {
        ReportRow {
            section: section.to_string(),
            name: name.to_string(),
            value: Some(value),
            detail: None,
            flags: Vec::new(),
        }
    }

    pub fn text(section: &str, name: &str, detail: &str) -> Self {
        ReportRow {
            section: section.to_string(),
            name: name.to_string(),
            value: None,
            detail: Some(detail.to_string()),
            flags: Vec::new(),
        }
    }

    pub fn with_detail(mut self, detail: &str) -> Self {
        self.detail = Some(detail.to_string());
        self
    }

    pub fn with_flag(mut self, flag: &str) -> Self {
        self.flags.push(flag.to_string());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
}

/// Locale-independent scientific rendering with 12 significant digits.
pub fn format_sig12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Round to the 12 significant digits the reports carry, so both formats
/// parse back to the same number.
fn round_sig12(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format_sig12(v).parse().unwrap_or(v)
}

/// Stable report order: section, then name, both lexicographic.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| (&a.section, &a.name).cmp(&(&b.section, &b.name)));
}

fn sanitize_cell(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

/// Render rows as TSV (header plus one line per row, LF endings) or as a
/// JSON array of objects with stable key order.
pub fn emit(rows: &[ReportRow], format: ReportFormat) -> Result<String, ReportError> {
    if rows.is_empty() {
        return Err(ReportError::EmptyReport);
    }
    match format {
        ReportFormat::Tsv => {
            let mut out = String::from("section\tname\tvalue\tdetail\tflags\n");
            for row in rows {
                let value = row.value.map(format_sig12).unwrap_or_default();
                let detail = row.detail.as_deref().map(sanitize_cell).unwrap_or_default();
                let flags = row.flags.join(",");
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    sanitize_cell(&row.section),
                    sanitize_cell(&row.name),
                    value,
                    detail,
                    flags
                ));
            }
            Ok(out)
        }
        ReportFormat::Json => {
            let rounded: Vec<ReportRow> = rows
                .iter()
                .map(|r| ReportRow {
                    section: r.section.clone(),
                    name: r.name.clone(),
                    value: r.value.map(round_sig12),
                    detail: r.detail.clone(),
                    flags: r.flags.clone(),
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&rounded).expect("row serialization");
            text.push('\n');
            Ok(text)
        }
    }
}
