//! CSV output: comma separated, header row, LF line endings, reals with 17
//! significant digits.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// An in-memory CSV file, serialised only when the experiment finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }
}

/// Record of one written file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, 3.279_085_228_505_164e-6, 1e300, -2.5e-310] {
            assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn table_bytes() {
        let mut t = Table::new("t.csv", &["a", "b"]);
        t.push(vec!["1".into(), fmt_real(0.5)]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "a,b\n1,5.0000000000000000e-1\n");
        assert_eq!(sha256_hex(b"").len(), 64);
    }
}
