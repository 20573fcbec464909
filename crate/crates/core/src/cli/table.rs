//! Comma-separated tables with a required header row.

use std::io::Write;
use std::path::Path;

use super::CliError;

/// Column names treated as row labels rather than predictors.
pub const LABEL_COLUMNS: [&str; 2] = ["date", "time"];

pub fn is_label(name: &str) -> bool {
    LABEL_COLUMNS.iter().any(|l| l.eq_ignore_ascii_case(name))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::input(format!("{}: bad header: {e}", path.display())))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
            return Err(CliError::input(format!("{}: missing header row", path.display())));
        }
        for (i, h) in headers.iter().enumerate() {
            if h.is_empty() {
                return Err(CliError::input(format!(
                    "{}: empty column name at position {}",
                    path.display(),
                    i + 1
                )));
            }
            if headers[..i].contains(h) {
                return Err(CliError::input(format!("{}: duplicate column `{h}`", path.display())));
            }
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| CliError::input(format!("{}: row {}: {e}", path.display(), i + 1)))?;
            rows.push(rec.iter().map(|c| c.trim().to_string()).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize, CliError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::input(format!("column `{name}` not found")))
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Parses column `j` as finite numbers; empty and NaN cells are rejected.
    pub fn numeric(&self, j: usize) -> Result<Vec<f64>, CliError> {
        let name = &self.headers[j];
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let cell = row[j].as_str();
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ if cell.is_empty() => Err(CliError::input(format!("column `{name}`, row {}: empty cell", i + 1))),
                    _ => Err(CliError::input(format!(
                        "column `{name}`, row {}: `{cell}` is not a finite number",
                        i + 1
                    ))),
                }
            })
            .collect()
    }

    pub fn numeric_by_name(&self, name: &str) -> Result<Vec<f64>, CliError> {
        self.numeric(self.column_index(name)?)
    }

    /// Index of the first label column, if any.
    pub fn label_column(&self) -> Option<usize> {
        self.headers.iter().position(|h| is_label(h))
    }
}

/// Writes a header and rows of already formatted cells.
pub fn write_csv<W: Write>(out: W, headers: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(headers).map_err(CliError::io)?;
    for r in rows {
        w.write_record(r).map_err(CliError::io)?;
    }
    w.flush().map_err(|e| CliError::io(e.into()))?;
    Ok(())
}

pub fn write_csv_file(path: &Path, headers: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let file =
        std::fs::File::create(path).map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))?;
    write_csv(std::io::BufWriter::new(file), headers, rows)
}

/// Shortest decimal that round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Result<Table, CliError> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, text).unwrap();
        Table::read(&p)
    }

    #[test]
    fn parses_and_rejects_cells() {
        let t = table("a,b\n1,2.5\n3,-4e-3\n").unwrap();
        assert_eq!(t.numeric(1).unwrap(), vec![2.5, -4e-3]);
        let bad = table("a,b\n1,\n").unwrap();
        assert!(bad.numeric(1).unwrap_err().message.contains("empty"));
        let nan = table("a,b\n1,NaN\n").unwrap();
        assert!(nan.numeric(1).is_err());
        assert!(table("a,a\n1,2\n").is_err());
        assert!(table("a,b\n1,2,3\n").is_err());
    }

    #[test]
    fn header_only_is_empty() {
        let t = table("a,b\n").unwrap();
        assert_eq!(t.n_rows(), 0);
        assert_eq!(t.numeric(0).unwrap(), Vec::<f64>::new());
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e10, 0.69016] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
