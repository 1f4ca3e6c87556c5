use std::collections::BTreeSet;
use std::path::Path;

use crate::data::{Column, Table};
use crate::error::{Error, Result};

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "?" | "NA")
}

/// Reads a comma-separated file with a header row. Columns whose cells all
/// parse as finite numbers are numeric; the rest are nominal with sorted levels.
pub fn read_csv_table(path: &Path) -> Result<Table> {
    let text = super::read_file(path)?;
    parse_csv_table(&text, &path.display().to_string())
}

pub(crate) fn parse_csv_table(text: &str, source_name: &str) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(source_name, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::parse(source_name, 1, "missing header row"));
    }
    if header.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(Error::parse(
            source_name,
            1,
            "missing header row (first line is numeric)",
        ));
    }
    if let Some(h) = header.iter().find(|h| h.is_empty()) {
        return Err(Error::parse(source_name, 1, format!("empty column name `{h}`")));
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(source_name, line, e.to_string()))?;
        for (j, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                return Err(Error::parse(
                    source_name,
                    line,
                    format!("missing value in column `{}`", header[j]),
                ));
            }
            cells[j].push(cell.to_string());
        }
    }
    if cells[0].is_empty() {
        return Err(Error::parse(source_name, 2, "no data rows"));
    }

    let mut table = Table::new();
    for (name, col) in header.into_iter().zip(cells) {
        let numbers: Option<Vec<f64>> = col
            .iter()
            .map(|c| c.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect();
        let column = match numbers {
            Some(v) => Column::Numeric(v),
            None => {
                let levels: Vec<String> = col.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
                Column::Nominal { values: col, levels }
            }
        };
        table
            .push(name, column)
            .map_err(|e| Error::parse(source_name, 1, e.to_string()))?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_and_nominal_columns() {
        let t = parse_csv_table("x1,c,y1\n1.5,b,0\n2,a,1\n", "t").unwrap();
        assert_eq!(t.names(), ["x1", "c", "y1"]);
        assert_eq!(t.column("x1"), Some(&Column::Numeric(vec![1.5, 2.0])));
        assert_eq!(
            t.column("c"),
            Some(&Column::Nominal {
                values: vec!["b".into(), "a".into()],
                levels: vec!["a".into(), "b".into()]
            })
        );
    }

    #[test]
    fn rejects_bad_files() {
        for (text, needle) in [
            ("", "missing header"),
            ("1,2\n3,4\n", "missing header"),
            ("a,a\n1,2\n", "duplicate column"),
            ("a,b\n1,\n", "missing value"),
            ("a,b\n1,NA\n", "missing value"),
            ("a,b\n1,2,3\n", "t:2"),
            ("a,b\n", "no data rows"),
        ] {
            let e = parse_csv_table(text, "t").unwrap_err().to_string();
            assert!(e.contains(needle), "`{text}`: {e}");
        }
    }
}
