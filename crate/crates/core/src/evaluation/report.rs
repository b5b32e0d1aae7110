//! Benchmark reports: one row per (feature space, model) cell, written as a
//! CSV table and as a JSON document.
//!
//! Wall-clock timings appear only in the CSV so that the JSON document is a
//! pure function of the cohort, the configuration and the seed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::benchmark::BenchmarkConfig;
use crate::classifiers::{ClassifierSpec, ModelKind};
use crate::cohort::Source;
use crate::error::{Error, Result};
use crate::metrics::{compute_macro_metrics, compute_metrics, ConfusionCounts, MetricsRecord};
use crate::preprocess::FeatureSpace;

pub const REPORT_FORMAT: &str = "tpi-report";
pub const REPORT_SCHEMA_VERSION: u64 = 1;

pub const CSV_HEADER: [&str; 14] = [
    "model",
    "space",
    "accuracy",
    "precision",
    "recall",
    "specificity",
    "f1_binary",
    "f1_macro",
    "tp",
    "tn",
    "fp",
    "fn",
    "train_ms",
    "infer_us_per_sample",
];

/// Outcome of a successful cell. Metrics are on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub spec: ClassifierSpec,
    pub confusion: ConfusionCounts,
    pub metrics: MetricsRecord,
    pub macro_metrics: MetricsRecord,
    /// Objective value of every grid point (`None` = failed).
    pub grid_scores: Vec<Option<f64>>,
    pub n_features: usize,
    pub n_train: usize,
    pub n_test: usize,
    #[serde(skip)]
    pub train_ms: f64,
    #[serde(skip)]
    pub infer_us_per_sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: ModelKind,
    pub space: FeatureSpace,
    /// Seed of the cell's random streams.
    pub cell_seed: u64,
    pub outcome: std::result::Result<CellResult, String>,
}

impl ReportRow {
    pub fn result(&self) -> Option<&CellResult> {
        self.outcome.as_ref().ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format: String,
    pub version: u64,
    pub evaluated_on: String,
    pub config: BenchmarkConfig,
    pub cohort: Source,
    pub n_samples: usize,
    pub class_counts: [usize; 2],
    pub rows: Vec<ReportRow>,
}

impl EvaluationReport {
    pub fn failed_cells(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.outcome.is_err())
    }

    pub fn row(&self, space: FeatureSpace, model: ModelKind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.space == space && r.model == model)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: EvaluationReport = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        if r.format != REPORT_FORMAT {
            return Err(Error::Document(format!("unexpected format '{}'", r.format)));
        }
        if r.version != REPORT_SCHEMA_VERSION {
            return Err(Error::VersionMismatch {
                found: r.version,
                expected: REPORT_SCHEMA_VERSION,
            });
        }
        Ok(r)
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows.iter().map(CsvRow::from).collect()
    }
}

/// One line of the CSV table. Failed cells leave every numeric field empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub model: ModelKind,
    pub space: FeatureSpace,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub f1_binary: Option<f64>,
    pub f1_macro: Option<f64>,
    pub tp: Option<u64>,
    pub tn: Option<u64>,
    pub fp: Option<u64>,
    #[serde(rename = "fn")]
    pub fn_: Option<u64>,
    pub train_ms: Option<f64>,
    pub infer_us_per_sample: Option<f64>,
}

impl From<&ReportRow> for CsvRow {
    fn from(r: &ReportRow) -> Self {
        let c = r.result();
        CsvRow {
            model: r.model,
            space: r.space,
            accuracy: c.map(|c| c.metrics.accuracy),
            precision: c.map(|c| c.metrics.precision),
            recall: c.map(|c| c.metrics.recall),
            specificity: c.map(|c| c.metrics.specificity),
            f1_binary: c.map(|c| c.metrics.f1),
            f1_macro: c.map(|c| c.macro_metrics.f1),
            tp: c.map(|c| c.confusion.tp),
            tn: c.map(|c| c.confusion.tn),
            fp: c.map(|c| c.confusion.fp),
            fn_: c.map(|c| c.confusion.fn_),
            train_ms: c.map(|c| c.train_ms),
            infer_us_per_sample: c.map(|c| c.infer_us_per_sample),
        }
    }
}

impl CsvRow {
    /// Recomputes binary and macro metrics from the stored counts.
    pub fn recompute(&self) -> Result<Option<(MetricsRecord, MetricsRecord)>> {
        let (Some(tp), Some(tn), Some(fp), Some(fn_)) = (self.tp, self.tn, self.fp, self.fn_) else {
            return Ok(None);
        };
        let c = ConfusionCounts {
            tp,
            tn,
            fp,
            fn_,
            positive_class: crate::cohort::TBI,
        };
        Ok(Some((compute_metrics(&c)?, compute_macro_metrics(&c)?)))
    }
}

pub fn write_csv_string(rows: &[CsvRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(CSV_HEADER).map_err(|e| Error::Document(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::Document(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Document(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Document(e.to_string()))
}

pub fn read_csv_str(text: &str) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Document(e.to_string()))?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Document(format!(
            "unexpected report header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Document(e.to_string())))
        .collect()
}

pub fn write_report_csv(path: &Path, report: &EvaluationReport) -> Result<()> {
    let text = write_csv_string(&report.csv_rows())?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_csv_str(&text)
}
