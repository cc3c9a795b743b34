//! Bulk provisioning from CSV.

use std::path::Path;

use drs_core::auth::NewUser;
use drs_core::{Caller, Degree, Repository};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct Row {
    pub matrix_number: String,
    pub full_name: String,
    pub degree: String,
}

#[derive(Debug, Default)]
pub struct Report {
    pub ok: usize,
    /// One line per rejected row, naming its line in the file.
    pub failures: Vec<String>,
}

/// Read every row up front so a malformed file changes nothing.
/// Returns rows paired with their line numbers.
pub fn read_rows(path: &Path) -> Result<Vec<(u64, Row)>, csv::Error> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        let row: Row = record?;
        let line = rows.len() as u64 + 2;
        rows.push((line, row));
    }
    Ok(rows)
}

/// Provision each row in its own commit.
pub fn provision(repo: &Repository, rows: Vec<(u64, Row)>) -> Report {
    let mut report = Report::default();
    for (line, row) in rows {
        let result = row
            .degree
            .parse::<Degree>()
            .map_err(|e| e.to_string())
            .and_then(|degree| {
                repo.provision_user(
                    &Caller::Operator,
                    NewUser {
                        matrix_number: row.matrix_number.clone(),
                        full_name: row.full_name.clone(),
                        degree,
                    },
                )
                .map_err(|e| e.to_string())
            });
        match result {
            Ok(_) => report.ok += 1,
            Err(e) => report.failures.push(format!("line {line}: {}: {e}", row.matrix_number)),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> std::path::PathBuf {
        let path = dir.join("users.csv");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn reads_header_and_trims() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "matrix_number,full_name,degree\n WGA1 , Ali Hassan ,Master\nWGA2,\"Tan, Mei\",PhD\n");
        let rows = read_rows(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, 2);
        assert_eq!(rows[0].1.matrix_number, "WGA1");
        assert_eq!(rows[1].1.full_name, "Tan, Mei");
    }

    #[test]
    fn missing_column_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "matrix_number,full_name\nWGA1,Ali\n");
        assert!(read_rows(&path).is_err());
    }

    #[test]
    fn short_row_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "matrix_number,full_name,degree\nWGA1,Ali\n");
        assert!(read_rows(&path).is_err());
    }
}
