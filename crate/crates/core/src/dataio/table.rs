use std::path::Path;

use crate::error::{Error, Result};

/// Shortest decimal string that parses back to the same `f64` (never more
/// than 17 significant digits).
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        // fold -0.0 so tables do not depend on the sign of an empty sum
        return "0".to_string();
    }
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Null,
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Null, Cell::Float)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub id: String,
    pub chunk_id: Option<usize>,
    /// Aligned with [`ResultTable::columns`]; all null on error rows.
    pub values: Vec<Cell>,
    pub error: Option<String>,
}

/// Output of every operation. Serialized as
/// `id,chunk_id,<columns…>,error`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Cell by row index and column name.
    pub fn get(&self, row: usize, column: &str) -> Option<&Cell> {
        let c = self.column_index(column)?;
        self.rows.get(row).map(|r| &r.values[c])
    }

    pub fn error_rows(&self) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = Vec::with_capacity(self.columns.len() + 3);
        h.push("id".to_string());
        h.push("chunk_id".to_string());
        h.extend(self.columns.iter().cloned());
        h.push("error".to_string());
        h
    }

    /// RFC 4180 CSV bytes, header first, rows in table order.
    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for row in &self.rows {
            let mut rec = Vec::with_capacity(self.columns.len() + 3);
            rec.push(row.id.clone());
            rec.push(row.chunk_id.map(|c| c.to_string()).unwrap_or_default());
            rec.extend(row.values.iter().map(Cell::render));
            rec.push(row.error.clone().unwrap_or_default());
            w.write_record(&rec).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

pub fn save_table(t: &ResultTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, t.to_csv_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        assert_eq!(format_float(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(format_float(5.0), "5");
        assert_eq!(format_float(-0.0), "0");
        for v in [1.0 / 3.0, 1e-300, 6.02e23, -123.456, f64::MAX, f64::MIN_POSITIVE] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = ResultTable::new(vec!["mean".into()]);
        assert_eq!(t.to_csv_bytes(), b"id,chunk_id,mean,error\r\n");
    }

    #[test]
    fn error_rows_have_empty_outputs() {
        let mut t = ResultTable::new(vec!["mean".into(), "count".into()]);
        t.rows.push(ResultRow {
            id: "a".into(),
            chunk_id: Some(0),
            values: vec![Cell::Float(0.1 + 0.2), Cell::Float(3.0)],
            error: None,
        });
        t.rows.push(ResultRow {
            id: "b".into(),
            chunk_id: Some(1),
            values: vec![Cell::Null, Cell::Null],
            error: Some("boom, \"quoted\"".into()),
        });
        let text = String::from_utf8(t.to_csv_bytes()).unwrap();
        assert_eq!(
            text,
            "id,chunk_id,mean,count,error\r\na,0,0.30000000000000004,3,\r\nb,1,,,\"boom, \"\"quoted\"\"\"\r\n"
        );
    }
}
