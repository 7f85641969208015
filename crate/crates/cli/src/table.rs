//! Comma-separated output with a `#` metadata block.

use std::fmt::Write as _;

pub struct Table {
    meta: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    digits: usize,
}

impl Table {
    pub fn new(command: &str, digits: u8) -> Self {
        let argv: Vec<String> = std::env::args().skip(1).collect();
        Self {
            meta: vec![
                format!("qminority {} {command}", env!("CARGO_PKG_VERSION")),
                format!("command: qminority {}", argv.join(" ")),
            ],
            header: Vec::new(),
            rows: Vec::new(),
            digits: digits as usize,
        }
    }

    pub fn meta(&mut self, line: impl Into<String>) -> &mut Self {
        self.meta.push(line.into());
        self
    }

    pub fn header(&mut self, columns: &[&str]) -> &mut Self {
        self.header = columns.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        self.rows.push(cells);
        self
    }

    /// Fixed-point number at the table's precision, never `-0.000`.
    pub fn num(&self, x: f64) -> String {
        let s = format!("{x:.*}", self.digits);
        if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
            s[1..].to_string()
        } else {
            s
        }
    }

    /// The `#` block alone, for commands with their own body format.
    pub fn render_meta(&self) -> String {
        let mut out = String::new();
        for m in &self.meta {
            let _ = writeln!(out, "# {m}");
        }
        out
    }

    pub fn render(&self) -> String {
        let mut out = self.render_meta();
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}
