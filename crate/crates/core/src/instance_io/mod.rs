//! TOML instance and solution files, and a seeded instance generator.
//!
//! An instance file carries `format_version = 1`, a `[meta]` table, a
//! `[network]` table with either `[network.atc]` lines or a
//! `[network.abstract]` basis/coefficient description (neither means
//! isolated locations), and arrays of `hourly_bids`, `block_bids` and
//! `mic_bids` that refer to locations and periods by name.

mod format;
mod generator;
mod solution_file;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::core_model::{ClearingSolution, Instance, ModelError};
use crate::verifier::VerificationReport;

pub use format::{
    AbstractSection, AtcEntry, AtcSection, BlockEntry, ExportEntry, HourlyEntry, InstanceFile,
    Meta, MicEntry, NetworkSection, RowCoeff, RowEntry, SuborderEntry, FORMAT_VERSION,
};
pub use generator::{generate, GeneratorConfig};
pub use solution_file::{prices_csv, BidAcceptance, PriceEntry, SolutionFile, Summary};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unsupported format_version {0}; expected {FORMAT_VERSION}")]
    UnsupportedVersion(u32),
    #[error("invalid instance: {0}")]
    Invalid(#[from] ModelError),
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn parse_str(text: &str) -> Result<Instance, IoError> {
    let file: InstanceFile = toml::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
    file.to_instance()
}

pub fn parse(path: impl AsRef<Path>) -> Result<Instance, IoError> {
    parse_str(&read(path.as_ref())?)
}

pub fn serialize(instance: &Instance) -> String {
    serialize_with_currency(instance, "EUR")
}

pub fn serialize_with_currency(instance: &Instance, currency: &str) -> String {
    toml::to_string(&InstanceFile::from_instance(instance, currency))
        .expect("instance files always serialize")
}

pub fn write_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &serialize(instance))
}

/// Path of the prices CSV written next to a solution file.
pub fn prices_path(solution_path: &Path) -> PathBuf {
    solution_path.with_extension("prices.csv")
}

/// Writes the solution TOML and its `.prices.csv` companion.
pub fn write_solution(
    instance: &Instance,
    solution: &ClearingSolution,
    verification: Option<&VerificationReport>,
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let file = SolutionFile::new(instance, solution, verification);
    let text = toml::to_string(&file).map_err(|e| IoError::Parse(e.to_string()))?;
    write(path, &text)?;
    write(&prices_path(path), &prices_csv(instance, solution))
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<SolutionFile, IoError> {
    let file: SolutionFile =
        toml::from_str(&read(path.as_ref())?).map_err(|e| IoError::Parse(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion(file.format_version));
    }
    Ok(file)
}

pub fn report_string(report: &VerificationReport) -> String {
    toml::to_string(report).expect("reports always serialize")
}

pub fn write_report(report: &VerificationReport, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &report_string(report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_model::{AtcLine, Network};
    use crate::fixtures::{mic_market, toy_market};

    #[test]
    fn toy_round_trip() {
        let inst = toy_market();
        let text = serialize(&inst);
        assert_eq!(parse_str(&text).unwrap(), inst);
        assert_eq!(serialize(&parse_str(&text).unwrap()), text);
    }

    #[test]
    fn mic_and_atc_round_trip() {
        let mut inst = mic_market(100.0);
        inst.network = Network::from_atc(
            vec!["L1".into(), "L2".into()],
            inst.network.periods.clone(),
            vec![AtcLine {
                from: 0,
                to: 1,
                capacity: vec![5.0, 6.0],
                reverse_capacity: vec![1.0, 0.0],
            }],
        );
        assert_eq!(parse_str(&serialize(&inst)).unwrap(), inst);
    }

    #[test]
    fn mixed_sign_block_is_named() {
        let text = serialize(&toy_market()).replace("powers = [-10.0]", "powers = [-10.0, 5.0]");
        let text = text.replace("periods = [\"T1\"]", "periods = [\"T1\", \"T2\"]")
            .replace("powers = [-20.0]", "powers = [-20.0, 0.0]");
        let err = parse_str(&text).unwrap_err().to_string();
        assert!(err.contains("C"), "{err}");
        assert!(err.contains("mixed"), "{err}");
    }

    #[test]
    fn unknown_field_is_a_schema_error() {
        let text = serialize(&toy_market()).replace("[meta]", "[meta]\nbogus = 1");
        assert!(matches!(parse_str(&text), Err(IoError::Parse(_))));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = serialize(&toy_market()).replace("format_version = 1", "format_version = 2");
        assert!(matches!(parse_str(&text), Err(IoError::UnsupportedVersion(2))));
    }

    #[test]
    fn unknown_location_is_named() {
        let text = serialize(&toy_market()).replacen("location = \"L1\"", "location = \"Nowhere\"", 1);
        let err = parse_str(&text).unwrap_err().to_string();
        assert!(err.contains("Nowhere") && err.contains("hourly bid A"), "{err}");
    }

    #[test]
    fn prices_csv_rows() {
        let inst = toy_market();
        let sol = ClearingSolution::zeros(&inst, 50.0000000000001);
        assert_eq!(prices_csv(&inst, &sol), "location,period,price\nL1,T1,50.0\n");
    }
}
