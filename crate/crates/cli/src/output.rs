//! Versioned CSV reports: config header, data rows, trailing notes.

use crate::config::{Settings, HEADER_PREFIX};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub schema: &'static str,
    pub config: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Comment lines after the data.
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(schema: &'static str, settings: &Settings, columns: &[&'static str]) -> Self {
        Self {
            schema,
            config: settings.echo(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    /// Everything after the config header.
    pub fn body(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        for n in &self.notes {
            s.push_str("# ");
            s.push_str(n);
            s.push('\n');
        }
        s
    }

    pub fn render(&self) -> String {
        format!("{HEADER_PREFIX}{}\n{}{}", self.schema, self.config, self.body())
    }
}

/// Shortest round-trip text of `x`, in exponent form when very small or large.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// Splits rendered output into header and body at the column row.
pub fn split_body(text: &str) -> (&str, &str) {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if !line.starts_with('#') {
            break;
        }
        offset += line.len();
    }
    text.split_at(offset)
}
