//! CSV emission for medians, rank counts and p-value matrices.

use std::cmp::Ordering;
use std::path::Path;

use super::summary::{RankCounts, SignificanceMatrix, Table};
use crate::error::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

/// One row per dataset, one column per method; blank where missing.
pub fn write_medians_csv(path: &Path, table: &Table) -> Result<()> {
    let mut methods: Vec<&String> = Vec::new();
    for row in table.values() {
        for m in row.keys() {
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
    }
    let mut w = writer(path)?;
    let mut header = vec!["dataset".to_string()];
    header.extend(methods.iter().map(|m| m.to_string()));
    w.write_record(&header)?;
    for (d, row) in table {
        let mut rec = vec![d.clone()];
        rec.extend(methods.iter().map(|m| row.get(*m).map_or(String::new(), |v| format!("{v:.4}"))));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_ranks_csv(path: &Path, counts: &RankCounts) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["method", "first", "second", "third"])?;
    for (m, c) in counts {
        w.write_record([m.clone(), c[0].to_string(), c[1].to_string(), c[2].to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn cell(m: &SignificanceMatrix, i: usize, j: usize) -> String {
    let mark = match (m.significant(i, j), m.orientation[i][j]) {
        (true, Ordering::Greater) => "+",
        (true, Ordering::Less) => "-",
        _ => "",
    };
    format!("{:.3e}{mark}", m.p[i][j])
}

/// Test-split p-values above the diagonal, train-split below. A trailing
/// `+` or `-` marks a significant difference where the row method is better
/// or worse than the column method.
pub fn write_pvalue_matrix_csv(path: &Path, test: &SignificanceMatrix, train: &SignificanceMatrix) -> Result<()> {
    if test.methods != train.methods {
        return Err(Error::InvalidArgument(
            "train and test matrices cover different methods".into(),
        ));
    }
    let mut w = writer(path)?;
    let mut header = vec![String::new()];
    header.extend(test.methods.iter().cloned());
    w.write_record(&header)?;
    for (i, m) in test.methods.iter().enumerate() {
        let mut rec = vec![m.clone()];
        for j in 0..test.methods.len() {
            rec.push(match i.cmp(&j) {
                Ordering::Less => cell(test, i, j),
                Ordering::Greater => cell(train, i, j),
                Ordering::Equal => String::new(),
            });
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::significance_matrix;
    use indexmap::IndexMap;

    #[test]
    fn matrix_layout() {
        let mut test = IndexMap::new();
        test.insert("A".to_string(), vec![1.0, 0.99, 1.0, 0.98, 1.0, 0.99, 1.0, 1.0]);
        test.insert("B".to_string(), vec![0.5, 0.51, 0.52, 0.49, 0.5, 0.48, 0.53, 0.5]);
        let mut train = test.clone();
        train.insert("B".to_string(), vec![1.0, 0.99, 1.0, 0.98, 1.0, 0.99, 1.0, 1.0]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_pvalue_matrix_csv(&p, &significance_matrix(&test).unwrap(), &significance_matrix(&train).unwrap()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], ",A,B");
        assert!(lines[1].starts_with("A,,") && lines[1].ends_with('+'));
        assert_eq!(lines[2], "B,1.000e0,");
    }
}
