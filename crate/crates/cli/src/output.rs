use std::fmt::Display;
use std::io::Write;

use serde_json::Value;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Self {
        Self::from_strings(header.iter().map(|h| h.to_string()).collect(), rows)
    }

    pub fn from_strings(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Self {
        Self { header, rows: rows.collect() }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut writer = csv::Writer::from_writer(w);
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Result of one subcommand: a JSON value that is hashed and replayed, a
/// human-readable summary and an optional table.
pub struct Output {
    pub result: Value,
    pub summary: Vec<(String, String)>,
    pub table: Option<Table>,
    /// Whether the result comes from exact arithmetic only.
    pub exact: bool,
}

impl Output {
    pub fn exact(result: Value) -> Self {
        Self { result, summary: Vec::new(), table: None, exact: true }
    }

    pub fn float(result: Value) -> Self {
        Self { exact: false, ..Self::exact(result) }
    }

    pub fn line(&mut self, key: &str, value: impl Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn summary_table(&self) -> Table {
        Table::new(&["key", "value"], self.summary.iter().map(|(k, v)| vec![k.clone(), v.clone()]))
    }
}
