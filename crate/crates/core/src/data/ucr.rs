use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::{Dataset, Provenance, Sample};
use crate::error::{Error, Result};
use crate::raster::TimeSeries;

struct Row {
    label: String,
    values: Vec<f64>,
}

fn parse_file(path: &Path) -> Result<Vec<Row>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let mut cells = line.split('\t');
        let label = cells.next().unwrap_or("").trim().to_string();
        if label.is_empty() {
            return Err(parse_err("missing label".into()));
        }
        let mut values = cells
            .map(|c| {
                let c = c.trim();
                c.parse::<f64>()
                    .map_err(|_| parse_err(format!("cannot parse {c:?} as a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        while values.last().is_some_and(|v| v.is_nan()) {
            values.pop();
        }
        if values.is_empty() {
            return Err(parse_err("no values".into()));
        }
        rows.push(Row { label, values });
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: empty file", path.display())));
    }
    Ok(rows)
}

/// Numeric labels sort numerically, anything else lexically after them.
fn label_order(a: &String, b: &String) -> std::cmp::Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Loads a UCR-format train/test pair. Labels are remapped to dense indices
/// in sorted order; trailing NaN padding is removed and values are otherwise
/// left exactly as parsed. Train samples get ids `0..n`, test samples follow.
pub fn load_ucr_tsv(train_path: &Path, test_path: &Path) -> Result<Dataset> {
    let train = parse_file(train_path)?;
    let test = parse_file(test_path)?;
    let mut names: Vec<String> = train
        .iter()
        .map(|r| r.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    names.sort_by(label_order);
    if let Some(r) = test.iter().find(|r| !names.contains(&r.label)) {
        return Err(Error::Data(format!(
            "{}: label {:?} does not occur in the training file",
            test_path.display(),
            r.label
        )));
    }
    let index = |l: &str| names.iter().position(|n| n == l).expect("label known");
    let mut id = 0u64;
    let mut convert = |rows: Vec<Row>| -> Vec<Sample> {
        rows.into_iter()
            .map(|r| {
                let s = Sample::univariate(id, index(&r.label), TimeSeries::new("value", r.values));
                id += 1;
                s
            })
            .collect()
    };
    let train = convert(train);
    let test = convert(test);
    let name = train_path
        .file_name()
        .and_then(|f| f.to_str())
        .map(|f| f.trim_end_matches(".tsv").trim_end_matches("_TRAIN").to_string())
        .unwrap_or_default();
    let ds = Dataset {
        name,
        class_names: names,
        train,
        test,
        provenance: Provenance::UcrOfficialSplit,
    };
    ds.validate()?;
    Ok(ds)
}

/// Loads `<dir>/<name>_TRAIN.tsv` and `<dir>/<name>_TEST.tsv`, with the
/// dataset name taken from the directory.
pub fn load_ucr_dir(dir: &Path) -> Result<Dataset> {
    let name = dir
        .file_name()
        .and_then(|f| f.to_str())
        .ok_or_else(|| Error::InvalidArgument(format!("bad dataset directory {}", dir.display())))?;
    load_ucr_tsv(
        &dir.join(format!("{name}_TRAIN.tsv")),
        &dir.join(format!("{name}_TEST.tsv")),
    )
}
