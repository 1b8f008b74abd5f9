//! Presentation of result tables: mean ± std summaries, relative accuracy and
//! rank tables, boxplot statistics and split-sensitivity comparisons. Output
//! is data (text, CSV, JSON); no plotting.

mod boxplot;
mod sensitivity;
mod summary;

pub use boxplot::{boxplot_stats, quantile, BoxplotFile, BoxplotSummary};
pub use sensitivity::{split_sensitivity_report, SensitivityReport, SensitivityRow};
pub use summary::{format_cell, read_summary_csv, summarize, write_report, RankRow, Summary, SummaryCell};
