use std::cmp::Ordering;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::kruskal::kruskal_wallis;
use crate::error::{Error, Result};

/// Significance level used throughout the comparison tables.
pub const ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidArgument(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub dataset: String,
    pub method: String,
    pub run: u32,
    pub split: Split,
    pub accuracy: f64,
}

/// Median; the mean of the two central values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

/// Dataset → method → accuracy, in first-seen order.
pub type Table = IndexMap<String, IndexMap<String, f64>>;

/// Median accuracy per `(dataset, method)` for one split.
pub fn aggregate_medians(results: &[RunResult], split: Split) -> Table {
    let mut groups: IndexMap<String, IndexMap<String, Vec<f64>>> = IndexMap::new();
    for r in results.iter().filter(|r| r.split == split) {
        groups
            .entry(r.dataset.clone())
            .or_default()
            .entry(r.method.clone())
            .or_default()
            .push(r.accuracy);
    }
    groups
        .into_iter()
        .map(|(d, methods)| {
            let row = methods
                .into_iter()
                .map(|(m, v)| (m, median(&v).expect("group has a run")))
                .collect();
            (d, row)
        })
        .collect()
}

/// Counts of first, second and third places per method.
pub type RankCounts = IndexMap<String, [usize; 3]>;

/// Competition ranking ("1224") of methods on each dataset, higher is
/// better. Datasets lacking any method seen elsewhere are skipped.
pub fn rank_summary(table: &Table) -> RankCounts {
    let mut methods: Vec<String> = Vec::new();
    for row in table.values() {
        for m in row.keys() {
            if !methods.contains(m) {
                methods.push(m.clone());
            }
        }
    }
    let mut counts: RankCounts = methods.iter().map(|m| (m.clone(), [0; 3])).collect();
    for (dataset, row) in table {
        if let Some(missing) = methods.iter().find(|m| !row.contains_key(*m)) {
            log::warn!("skipping {dataset} in rank summary: no value for {missing}");
            continue;
        }
        for (m, &v) in row {
            let rank = 1 + row.values().filter(|&&o| o > v).count();
            if rank <= 3 {
                counts[m][rank - 1] += 1;
            }
        }
    }
    counts
}

/// Pairwise two-group Kruskal-Wallis p-values between methods on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceMatrix {
    pub methods: Vec<String>,
    pub p: Vec<Vec<f64>>,
    /// Sign of `median(row) - median(column)`.
    pub orientation: Vec<Vec<Ordering>>,
}

impl SignificanceMatrix {
    pub fn significant(&self, i: usize, j: usize) -> bool {
        self.p[i][j] < ALPHA
    }
}

pub fn significance_matrix(runs: &IndexMap<String, Vec<f64>>) -> Result<SignificanceMatrix> {
    for (m, v) in runs {
        if v.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "method {m} has {} runs; at least 2 are needed",
                v.len()
            )));
        }
    }
    let methods: Vec<String> = runs.keys().cloned().collect();
    let groups: Vec<&Vec<f64>> = runs.values().collect();
    let medians: Vec<f64> = groups.iter().map(|g| median(g).expect("non-empty")).collect();
    let k = methods.len();
    let mut p = vec![vec![1.0; k]; k];
    let mut orientation = vec![vec![Ordering::Equal; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let o = kruskal_wallis(&[groups[i], groups[j]])?;
            p[i][j] = o.p;
            p[j][i] = o.p;
            orientation[i][j] = medians[i].total_cmp(&medians[j]);
            orientation[j][i] = orientation[i][j].reverse();
        }
    }
    Ok(SignificanceMatrix {
        methods,
        p,
        orientation,
    })
}
