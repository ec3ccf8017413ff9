//! Deterministic text output: `#` headers and fixed nine-significant-digit floats.

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

/// Round to nine significant digits so JSON output is as stable as the CSVs.
pub fn sig9(x: f64) -> f64 {
    if x.is_finite() {
        num(x).parse().unwrap_or(x)
    } else {
        x
    }
}

pub struct Table {
    header: Vec<String>,
    columns: Vec<&'static str>,
    rows: Vec<String>,
}

impl Table {
    pub fn new(command: &str, columns: &[&'static str]) -> Self {
        Self {
            header: vec![format!("phonoscope {command}")],
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl std::fmt::Display) {
        self.header.push(format!("{key} = {value}"));
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells.join(", "));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for h in &self.header {
            s.push_str("# ");
            s.push_str(h);
            s.push('\n');
        }
        s.push_str(&self.columns.join(", "));
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
