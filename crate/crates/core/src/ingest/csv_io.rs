//! Cohort CSV: header `f01,...,f30,angle,label`, one row per sample, `.`
//! decimal separator, LF line endings. Values are written in Rust's shortest
//! round-trip form so a save/load cycle is bit-exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::cohort::{raw_feature_names, Cohort, Label, Source, N_RAW_FEATURES};
use crate::error::{Error, Result};

pub const COHORT_HEADER_LABEL: &str = "label";

fn expected_header() -> Vec<String> {
    let mut h = raw_feature_names();
    h.push(COHORT_HEADER_LABEL.to_string());
    h
}

fn schema(path: &Path, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn check_header(path: &Path, header: &csv::StringRecord) -> Result<()> {
    let expected = expected_header();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    let missing: Vec<&str> = expected
        .iter()
        .map(String::as_str)
        .filter(|name| !got.contains(name))
        .collect();
    if !missing.is_empty() {
        return Err(schema(path, format!("missing column(s): {}", missing.join(", "))));
    }
    let unexpected: Vec<&str> = got
        .iter()
        .copied()
        .filter(|name| !expected.iter().any(|e| e == name))
        .collect();
    if !unexpected.is_empty() {
        return Err(schema(path, format!("unexpected column(s): {}", unexpected.join(", "))));
    }
    if got.len() != expected.len() || got.iter().zip(&expected).any(|(g, e)| g != e) {
        return Err(schema(
            path,
            format!("columns out of order; expected header '{}'", expected.join(",")),
        ));
    }
    Ok(())
}

pub fn load_cohort(path: impl AsRef<Path>) -> Result<Cohort> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    check_header(path, &header)?;

    let width = N_RAW_FEATURES + 1;
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (column, cell) in record.iter().take(N_RAW_FEATURES).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("column '{}': not a number: '{cell}'", header.get(column).unwrap_or("?")),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!(
                        "column '{}': non-finite value '{cell}'",
                        header.get(column).unwrap_or("?")
                    ),
                });
            }
            values.push(v);
        }
        let label = match record.get(N_RAW_FEATURES).map(str::trim) {
            Some("0") => 0,
            Some("1") => 1,
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("label must be 0 or 1, found '{}'", other.unwrap_or("")),
                })
            }
        };
        labels.push(label);
    }

    let features =
        Array2::from_shape_vec((labels.len(), N_RAW_FEATURES), values).map_err(|e| schema(path, e.to_string()))?;
    Cohort::new(
        features,
        labels,
        raw_feature_names(),
        Source::File {
            path: path.display().to_string(),
        },
    )
}

pub fn save_cohort(c: &Cohort, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if c.n_features() != N_RAW_FEATURES {
        return Err(Error::DimensionMismatch {
            expected: N_RAW_FEATURES,
            got: c.n_features(),
        });
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", expected_header().join(",")).map_err(io)?;
    let mut line = String::new();
    for (row, label) in c.features.rows().into_iter().zip(&c.labels) {
        line.clear();
        for v in row.iter() {
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push_str(&label.to_string());
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_cohort, GeneratorConfig};
    use std::fs;

    fn header() -> String {
        expected_header().join(",")
    }

    fn row(values: &[f64], label: &str) -> String {
        let cells: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        format!("{},{label}", cells.join(","))
    }

    #[test]
    fn three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let body = format!(
            "{}\n{}\n{}\n{}\n",
            header(),
            row(&[0.5; 31], "0"),
            row(&[1.5; 31], "1"),
            row(&[-2.0; 31], "1")
        );
        fs::write(&path, body).unwrap();
        let c = load_cohort(&path).unwrap();
        assert_eq!(c.n_samples(), 3);
        assert_eq!(c.labels, vec![0, 1, 1]);
        assert_eq!(c.features[[2, 30]], -2.0);
    }

    #[test]
    fn missing_angle_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let names: Vec<String> = (1..=30).map(|i| format!("f{i:02}")).collect();
        fs::write(&path, format!("{},label\n{}\n", names.join(","), row(&[0.0; 30], "1"))).unwrap();
        match load_cohort(&path) {
            Err(Error::Schema { message, .. }) => assert!(message.contains("angle"), "{message}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let short = row(&[0.0; 30], "1");
        for body in [
            format!("{}\n{}\n", header(), short),
            format!("{}\n{}\n", header(), row(&[0.0; 31], "2")),
            format!("{}\n{}\n", header(), row(&[0.0; 31], "1").replacen("0", "abc", 1)),
            format!("{}\n{}\n", header(), row(&[0.0; 31], "1").replacen("0", "NaN", 1)),
            format!("{}\n{}\n", header(), row(&[0.0; 31], "1").replacen("0", "inf", 1)),
        ] {
            fs::write(&path, body).unwrap();
            assert!(matches!(load_cohort(&path), Err(Error::Parse { .. })));
        }
        assert!(matches!(
            load_cohort(dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let c = generate_cohort(&GeneratorConfig {
            n_samples: 500,
            ..Default::default()
        })
        .unwrap();
        save_cohort(&c, &path).unwrap();
        let back = load_cohort(&path).unwrap();
        assert_eq!(back.labels, c.labels);
        for (a, b) in back.features.iter().zip(c.features.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn empty_and_single_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let empty = Cohort::new(Array2::zeros((0, 31)), vec![], raw_feature_names(), Source::InMemory).unwrap();
        save_cohort(&empty, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n", header()));

        let one = Cohort::new(Array2::ones((1, 31)), vec![1], raw_feature_names(), Source::InMemory).unwrap();
        save_cohort(&one, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 2);
    }
}
