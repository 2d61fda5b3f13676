use serde::{Deserialize, Serialize};

use super::chi2::chi2_sf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwOutcome {
    pub h: f64,
    pub df: u32,
    pub p: f64,
    /// `1 - Σ(t³ - t) / (N³ - N)`; reported as 1 when every observation is
    /// identical and the correction is undefined.
    pub tie_correction: f64,
}

/// Midranks (1-based, ties share their average rank) of `values`, plus the
/// tie term `Σ(t³ - t)` over tie groups.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Tie-corrected Kruskal-Wallis H test with a chi-square p-value.
pub fn kruskal_wallis<G: AsRef<[f64]>>(groups: &[G]) -> Result<KwOutcome> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "Kruskal-Wallis needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    if let Some(i) = groups.iter().position(|g| g.as_ref().is_empty()) {
        return Err(Error::InvalidArgument(format!("group {i} is empty")));
    }
    if groups.iter().flat_map(|g| g.as_ref()).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("observations contain NaN".into()));
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    let n = pooled.len() as f64;
    let df = groups.len() as u32 - 1;
    let (ranks, ties) = midranks(&pooled);
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(KwOutcome {
            h: 0.0,
            df,
            p: 1.0,
            tie_correction: 1.0,
        });
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let len = g.as_ref().len();
        let r: f64 = ranks[offset..offset + len].iter().sum();
        sum += r * r / len as f64;
        offset += len;
    }
    let h = ((12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction).max(0.0);
    Ok(KwOutcome {
        h,
        df,
        p: chi2_sf(h, df),
        tie_correction: correction,
    })
}
