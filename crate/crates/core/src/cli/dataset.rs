//! Dataset CSV: a header of variable names, then one row of decimals per
//! observation. Lines starting with `#` and blank lines are skipped.

use std::path::Path;

use nalgebra::DMatrix;

use crate::dag::is_identifier;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    /// Rows are observations.
    pub rows: DMatrix<f64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn m(&self) -> usize {
        self.rows.nrows()
    }

    /// CSV text; values carry 17 significant digits so parsing returns the
    /// same bits.
    pub fn to_csv(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for r in 0..self.m() {
            let line: Vec<String> = (0..self.n()).map(|c| format!("{:.16e}", self.rows[(r, c)])).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn parse_dataset(text: &str) -> Result<Dataset> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        column: 1,
        message: "missing header row".into(),
    })?;
    let mut names = Vec::new();
    let mut column = 1;
    for field in header.split(',') {
        let name = field.trim();
        if !is_identifier(name) {
            return Err(Error::Parse { line: header_line, column, message: format!("invalid variable name {name:?}") });
        }
        if names.iter().any(|n| n == name) {
            return Err(Error::Parse { line: header_line, column, message: format!("duplicate variable name {name:?}") });
        }
        names.push(name.to_string());
        column += field.len() + 1;
    }

    let n = names.len();
    let mut values = Vec::new();
    let mut row = 0;
    for (line_no, line) in lines {
        row += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() > n {
            return Err(Error::Parse {
                line: line_no,
                column: line.len() + 1,
                message: format!("expected {n} fields, found {}", fields.len()),
            });
        }
        let mut column = 1;
        for c in 0..n {
            let Some(raw) = fields.get(c) else {
                return Err(Error::MissingValue { row, column: c + 1 });
            };
            let field = raw.trim();
            if field.is_empty() {
                return Err(Error::MissingValue { row, column: c + 1 });
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                column,
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row, column: c + 1 });
            }
            values.push(v);
            column += raw.len() + 1;
        }
    }
    Ok(Dataset { names, rows: DMatrix::from_row_slice(row, n, &values) })
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(&std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_is_empty() {
        let d = parse_dataset("x,y\n").unwrap();
        assert_eq!((d.m(), d.n()), (0, 2));
    }

    #[test]
    fn single_column() {
        let d = parse_dataset("x\n1.0\n2.0").unwrap();
        assert_eq!(d.rows, DMatrix::from_row_slice(2, 1, &[1.0, 2.0]));
    }

    #[test]
    fn missing_value_position() {
        assert_eq!(parse_dataset("x,y\n1.0,").unwrap_err(), Error::MissingValue { row: 1, column: 2 });
        assert_eq!(parse_dataset("x,y\n1.0").unwrap_err(), Error::MissingValue { row: 1, column: 2 });
    }

    #[test]
    fn comments_and_scientific_notation() {
        let d = parse_dataset("# generated\na,b\n# row\n1e-3,-2.5E2\n").unwrap();
        assert_eq!(d.rows, DMatrix::from_row_slice(1, 2, &[1e-3, -250.0]));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(parse_dataset("1x\n1"), Err(Error::Parse { line: 1, column: 1, .. })));
        assert!(matches!(parse_dataset("a,a\n1,2"), Err(Error::Parse { column: 3, .. })));
        assert!(matches!(parse_dataset("a,b\n1,zz"), Err(Error::Parse { line: 2, column: 3, .. })));
        assert_eq!(parse_dataset("a\nNaN").unwrap_err(), Error::NonFinite { row: 1, column: 1 });
        assert_eq!(parse_dataset("a\ninf").unwrap_err(), Error::NonFinite { row: 1, column: 1 });
        assert!(matches!(parse_dataset("a\n1,2"), Err(Error::Parse { .. })));
        assert!(matches!(parse_dataset(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, -2.0e-300, 12345.678901234567]);
        let d = Dataset { names: vec!["a".into(), "b".into()], rows };
        assert_eq!(parse_dataset(&d.to_csv()).unwrap(), d);
    }
}
