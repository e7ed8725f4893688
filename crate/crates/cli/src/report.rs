//! Comma-delimited reports with `#`-prefixed metadata lines.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

/// Default number of decimals, matching the benchmark table.
pub const DECIMALS: usize = 6;

#[derive(Debug, Clone, Copy)]
pub struct Style {
    pub full_precision: bool,
    pub timestamp: bool,
}

impl Style {
    /// Values: fixed decimals, or shortest round-trip form.
    pub fn num(&self, x: f64) -> String {
        if self.full_precision {
            x.to_string()
        } else {
            format!("{x:.DECIMALS$}")
        }
    }

    /// Error estimates and other small magnitudes.
    pub fn sci(&self, x: f64) -> String {
        if self.full_precision {
            format!("{x:e}")
        } else {
            format!("{x:.3e}")
        }
    }
}

pub struct Report {
    style: Style,
    text: String,
}

impl Report {
    pub fn new(kind: &str, style: Style) -> Self {
        let mut r = Report {
            style,
            text: String::new(),
        };
        r.meta("report", kind);
        if style.timestamp {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            r.meta("generated_unix", secs);
        }
        r
    }

    pub fn style(&self) -> Style {
        self.style
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "# {key}={value}");
    }

    pub fn line(&mut self, line: &str) {
        self.text.push_str(line);
        if !line.ends_with('\n') {
            self.text.push('\n');
        }
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
