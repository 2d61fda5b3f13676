use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;

use crate::error::Result;
use crate::stats::{
    aggregate_medians, kruskal_wallis, median, rank_summary, write_medians_csv, write_pvalue_matrix_csv,
    write_ranks_csv, RunResult, SignificanceMatrix, Split,
};

/// Per-dataset accuracy lists keyed by method, for one split.
fn runs_by_method(results: &[RunResult], dataset: &str, split: Split) -> IndexMap<String, Vec<f64>> {
    let mut out: IndexMap<String, Vec<f64>> = IndexMap::new();
    for r in results.iter().filter(|r| r.dataset == dataset && r.split == split) {
        out.entry(r.method.clone()).or_default().push(r.accuracy);
    }
    out
}

/// Like `significance_matrix`, but over a fixed method list: pairs where
/// either side has fewer than two runs get a NaN p-value.
fn partial_matrix(methods: &[String], runs: &IndexMap<String, Vec<f64>>) -> Result<SignificanceMatrix> {
    let k = methods.len();
    let mut p = vec![vec![f64::NAN; k]; k];
    let mut orientation = vec![vec![Ordering::Equal; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let (Some(a), Some(b)) = (runs.get(&methods[i]), runs.get(&methods[j])) else {
                continue;
            };
            if a.len() < 2 || b.len() < 2 {
                continue;
            }
            p[i][j] = kruskal_wallis(&[a, b])?.p;
            orientation[i][j] = median(a)
                .expect("non-empty")
                .total_cmp(&median(b).expect("non-empty"));
        }
    }
    Ok(SignificanceMatrix {
        methods: methods.to_vec(),
        p,
        orientation,
    })
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Writes median tables for both splits, test-split rank counts, and one
/// p-value matrix per dataset where at least two methods have repeated runs.
/// Returns the files written.
pub fn write_report(results: &[RunResult], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for split in [Split::Test, Split::Train] {
        let table = aggregate_medians(results, split);
        if table.is_empty() {
            continue;
        }
        let path = out_dir.join(format!("medians_{}.csv", split.as_str()));
        write_medians_csv(&path, &table)?;
        written.push(path);
        if split == Split::Test {
            let path = out_dir.join("ranks_test.csv");
            write_ranks_csv(&path, &rank_summary(&table))?;
            written.push(path);
        }
    }
    let mut datasets: Vec<&str> = Vec::new();
    for r in results {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
    }
    for d in datasets {
        let test = runs_by_method(results, d, Split::Test);
        let methods: Vec<String> = test
            .iter()
            .filter(|(_, v)| v.len() >= 2)
            .map(|(m, _)| m.clone())
            .collect();
        if methods.len() < 2 {
            log::info!("{d}: fewer than two methods with repeated runs, no p-value matrix");
            continue;
        }
        let train = runs_by_method(results, d, Split::Train);
        let path = out_dir.join(format!("pvalues_{}.csv", file_safe(d)));
        write_pvalue_matrix_csv(&path, &partial_matrix(&methods, &test)?, &partial_matrix(&methods, &train)?)?;
        written.push(path);
    }
    Ok(written)
}
