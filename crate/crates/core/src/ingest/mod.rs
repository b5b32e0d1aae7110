//! Cohort ingestion: the CSV file format and the synthetic generator.

mod csv_io;
mod synth;

pub use csv_io::{load_cohort, save_cohort, COHORT_HEADER_LABEL};
pub use synth::{generate_cohort, GeneratorConfig};
