//! Versioned CSV tables.

use std::path::Path;

use crate::error::{Error, Result};

/// Schema version written into the header comment.
pub const CSV_VERSION: &str = "v1";

/// Rectangular table emitted as CSV with the header comment
/// `# scatter-cs v1 <experiment>`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub experiment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row; panics if its width differs from the header.
    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        let body = String::from_utf8(body).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(format!("# scatter-cs {CSV_VERSION} {}\n{body}", self.experiment))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_string(path, &self.to_csv()?)
    }

    /// Parses text produced by [`Table::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let (first, body) = text.split_once('\n').unwrap_or((text, ""));
        let prefix = format!("# scatter-cs {CSV_VERSION} ");
        let experiment = first
            .strip_prefix(&prefix)
            .ok_or_else(|| Error::Parse { line: 1, msg: format!("expected `{prefix}<experiment>`") })?;
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { experiment: experiment.to_string(), columns, rows })
    }
}

/// Shortest round-trip representation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Empty cell for absent values.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_comment_and_round_trip() {
        let mut t = Table::new("mc-demo", &["a", "b"]);
        t.push(vec!["1".into(), fmt_f64(0.1)]);
        t.push(vec!["x,y".into(), fmt_opt(None)]);
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("# scatter-cs v1 mc-demo\na,b\n1,0.1\n"));
        assert_eq!(Table::from_csv(&text).unwrap(), t);
        assert!(Table::from_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, 1e-300, f64::MAX, -2.5e17] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
