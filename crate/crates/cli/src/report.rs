//! Collected results and their text/CSV renderings.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::Context;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Text(String),
    Flag(bool),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            // Display for f64 is the shortest string that parses back exactly.
            Value::Num(x) => write!(f, "{x}"),
            Value::Text(s) => f.write_str(s),
            Value::Flag(b) => write!(f, "{b}"),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Flag(b)
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Row {
    pub section: String,
    pub label: String,
    pub value: Value,
}

#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Report {
    pub rows: Vec<Row>,
    pub checks: Vec<CheckLine>,
}

impl Report {
    pub fn push(&mut self, section: &str, label: impl Into<String>, value: impl Into<Value>) {
        self.rows.push(Row {
            section: section.to_string(),
            label: label.into(),
            value: value.into(),
        });
    }

    /// Records a check and its verdict as a row too, so the CSV carries it.
    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.push("check", name, passed);
        self.checks.push(CheckLine {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Rows grouped under their section headings.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current: Option<&str> = None;
        for row in self.rows.iter().filter(|r| r.section != "check") {
            if current != Some(row.section.as_str()) {
                let _ = writeln!(out, "{}:", row.section);
                current = Some(&row.section);
            }
            let _ = writeln!(out, "  {:<24} {}", row.label, row.value);
        }
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{tag} {}: {}", c.name, c.detail);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["section", "label", "value"])?;
        for row in &self.rows {
            w.write_record([
                row.section.as_str(),
                row.label.as_str(),
                &row.value.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> anyhow::Result<()> {
        let file = std::fs::File::create(path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        self.write_csv(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_numbers() {
        let mut r = Report::default();
        let x = 0.1 + 0.2;
        r.push("payoff", "player 1", x);
        r.check("ok", true, "fine");
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let mut reader = csv::Reader::from_reader(buf.as_slice());
        let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        assert_eq!(rows[0][2].parse::<f64>().unwrap(), x);
        assert_eq!(&rows[1][2], "true");
        assert!(r.to_text().contains(&x.to_string()));
    }
}
