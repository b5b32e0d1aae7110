//! Splitting, model selection and benchmarking.

mod benchmark;
mod grid;
mod report;
mod split;

pub use benchmark::{run_benchmark, time_inference, BenchmarkConfig, PreparedSpace};
pub use grid::{default_grid, final_fit_rng, grid_search, GridResult, Objective, Validation};
pub use report::{
    read_csv_str, read_report_csv, write_csv_string, write_report_csv, CellResult, CsvRow, EvaluationReport, ReportRow,
    CSV_HEADER, REPORT_FORMAT, REPORT_SCHEMA_VERSION,
};
pub use split::{
    allocate, stratified_kfold, stratified_split, FoldPlan, SplitPlan, DEFAULT_FOLDS, DEFAULT_FRACTIONS,
    MIN_CLASS_FOR_SPLIT,
};
