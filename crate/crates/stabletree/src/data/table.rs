//! Typed CSV tables.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Cells that count as missing.
const MISSING: [&str; 3] = ["", "NA", "NaN"];

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnData::Numeric(v) => v[row].is_none(),
            ColumnData::Categorical(v) => v[row].is_none(),
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ColumnData::Numeric(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// Rectangular table with uniquely named, typed columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<Column>,
    n_rows: usize,
}

/// Type overrides applied while loading.
#[derive(Debug, Clone, Default)]
pub struct SchemaHints {
    /// Columns read as categorical even if every cell parses as a number.
    pub categorical: Vec<String>,
}

impl RawTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |c| c.data.len());
        let mut seen = HashSet::new();
        for c in &columns {
            if c.data.len() != n_rows {
                return Err(Error::Data(format!(
                    "column '{}' has {} rows, expected {n_rows}",
                    c.name,
                    c.data.len()
                )));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Data(format!("duplicate column '{}'", c.name)));
            }
        }
        Ok(Self { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Parses CSV text with a header row. `source` labels errors.
    pub fn from_reader<R: Read>(reader: R, source: &str, hints: &SchemaHints) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let csv_err = |e: csv::Error| {
            let line = e.position().map_or(1, |p| p.line());
            Error::Csv {
                path: source.to_string(),
                line,
                message: e.to_string(),
            }
        };
        let header: Vec<String> = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if header.is_empty() || header.iter().all(|h| h.is_empty()) {
            return Err(Error::Csv {
                path: source.to_string(),
                line: 1,
                message: "missing header row".into(),
            });
        }
        let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            for (col, v) in cells.iter_mut().zip(rec.iter()) {
                col.push(v.trim().to_string());
            }
        }

        let columns = header
            .into_iter()
            .zip(cells)
            .map(|(name, raw)| {
                let forced = hints.categorical.iter().any(|c| *c == name);
                let data = if forced { None } else { parse_numeric(&raw) };
                let data = data.unwrap_or_else(|| {
                    ColumnData::Categorical(
                        raw.into_iter()
                            .map(|v| (!MISSING.contains(&v.as_str())).then_some(v))
                            .collect(),
                    )
                });
                Column { name, data }
            })
            .collect();
        Self::new(columns)
    }
}

/// `Some` iff every non-missing cell parses as a finite number.
fn parse_numeric(raw: &[String]) -> Option<ColumnData> {
    raw.iter()
        .map(|v| {
            if MISSING.contains(&v.as_str()) {
                Some(None)
            } else {
                v.parse::<f64>().ok().filter(|x| x.is_finite()).map(Some)
            }
        })
        .collect::<Option<Vec<_>>>()
        .map(ColumnData::Numeric)
}

/// Loads a CSV file and checks that `target` (if given) is one of its
/// columns.
pub fn load_csv(path: &Path, target: Option<&str>, hints: &SchemaHints) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let table = RawTable::from_reader(std::io::BufReader::new(file), &path.display().to_string(), hints)?;
    if let Some(t) = target {
        if table.column(t).is_none() {
            return Err(Error::Data(format!(
                "{}: target column '{t}' not found",
                path.display()
            )));
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RawTable> {
        RawTable::from_reader(s.as_bytes(), "test", &SchemaHints::default())
    }

    #[test]
    fn detects_column_types() {
        let t = parse("a,b\n1,x\n2.5,y\nNA,z\n").unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(
            t.column("a").unwrap().data,
            ColumnData::Numeric(vec![Some(1.0), Some(2.5), None])
        );
        assert!(!t.column("b").unwrap().data.is_numeric());
    }

    #[test]
    fn hints_force_categorical() {
        let hints = SchemaHints {
            categorical: vec!["a".into()],
        };
        let t = RawTable::from_reader("a\n1\n2\n".as_bytes(), "t", &hints).unwrap();
        assert!(!t.column("a").unwrap().data.is_numeric());
    }

    #[test]
    fn empty_and_ragged_input_fail_with_line() {
        assert!(matches!(parse(""), Err(Error::Csv { line: 1, .. })));
        match parse("a,b\n1,2\n3\n") {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(parse("a,a\n1,2\n").is_err());
    }
}
