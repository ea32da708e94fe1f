//! CSV emission. Every file opens with one comment line carrying the schema
//! version, experiment, config hash and master seed, followed by a header
//! row and data rows.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, SCHEMA_VERSION};
use super::HarnessError;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConvergenceRow {
    pub algorithm: &'static str,
    pub seed: usize,
    pub iteration: usize,
    pub cost: f64,
    pub normalized_cost: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConvergenceMeanRow {
    pub algorithm: &'static str,
    pub iteration: usize,
    pub mean_normalized_cost: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RateRow {
    pub algorithm: &'static str,
    pub snr_db: f64,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DofRow {
    pub algorithm: &'static str,
    pub dof_slope: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AngleRow {
    pub algorithm: &'static str,
    pub seed: usize,
    pub iteration: usize,
    pub receiver: usize,
    pub max_angle_rad: f64,
}

pub(crate) fn header_line(cfg: &ExperimentConfig, experiment: &str) -> String {
    format!(
        "# ia-sim experiment={experiment} schema={SCHEMA_VERSION} config_hash={} master_seed={}\n",
        cfg.config_hash(),
        cfg.master_seed
    )
}

/// Writes `rows` to `dir/name` and returns the full path.
pub fn write_csv<R: Serialize>(
    dir: &Path,
    name: &str,
    header: &str,
    rows: &[R],
) -> Result<PathBuf, HarnessError> {
    let path = dir.join(name);
    let io = |source| HarnessError::Io {
        path: path.clone(),
        source,
    };
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(File::create(&path).map_err(io)?);
    out.write_all(header.as_bytes()).map_err(io)?;
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row).map_err(|source| HarnessError::Csv {
            path: path.clone(),
            source,
        })?;
    }
    writer.flush().map_err(io)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_comment_header_then_columns() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let rows = [DofRow {
            algorithm: "stiefel",
            dof_slope: None,
            status: "undefined".into(),
        }];
        let path = write_csv(dir.path(), "x.csv", &header_line(&cfg, "rate"), &rows).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# ia-sim experiment=rate schema=v1 config_hash="));
        assert!(lines[0].ends_with("master_seed=1"));
        assert_eq!(lines[1], "algorithm,dof_slope,status");
        assert_eq!(lines[2], "stiefel,,undefined");
    }

    #[test]
    fn unwritable_directory_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"").unwrap();
        let err = write_csv::<AngleRow>(&blocker.join("sub"), "a.csv", "", &[]).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
