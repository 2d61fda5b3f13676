//! Nonparametric comparison of per-run accuracies.

mod chi2;
mod kruskal;
mod report;
mod summary;

pub use chi2::{chi2_sf, gamma_q, ln_gamma};
pub use kruskal::{kruskal_wallis, midranks, KwOutcome};
pub use report::{write_medians_csv, write_pvalue_matrix_csv, write_ranks_csv};
pub use summary::{
    aggregate_medians, median, rank_summary, significance_matrix, RankCounts, RunResult,
    SignificanceMatrix, Split, Table, ALPHA,
};
