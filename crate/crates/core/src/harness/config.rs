//! Experiment configuration: a flat `key = value` text format.
//!
//! ```text
//! # 3-user 2x2 convergence study
//! users = 3
//! tx_antennas = 2          # scalar, or one value per user: 2,2,3
//! rx_antennas = 2
//! streams = 1
//! snr_db = 0:50:5          # start:stop:step (inclusive) or a comma list
//! seeds = 100
//! master_seed = 1
//! algorithms = euclidean,stiefel,grassmann
//! max_iterations = 500
//! cost_tolerance = 0
//! relative_tolerance = 1e-12
//! beta_reset = false
//! reference_snr_db = 20
//! rate_mode = reoptimize   # or fixed
//! angle_seed = 0
//! output_dir = out
//! workers = 0              # 0 = one per core
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. Keys left out keep their defaults.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::manifolds::ManifoldKind;
use crate::network::{snr_db_to_power, ConfigError, NetworkConfig};
use crate::optimizer::{StepPolicy, StopRule};

/// Version tag written into every CSV header line.
pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigParseError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("{key}: cannot parse `{value}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("seeds must be at least 1")]
    NoSeeds,
    #[error("at least one algorithm is required")]
    NoAlgorithms,
    #[error("snr_db list is empty")]
    NoSnr,
    #[error("{key} needs 1 or {users} values, got {found}")]
    PerUserLength {
        key: &'static str,
        users: usize,
        found: usize,
    },
    #[error("invalid network: {0}")]
    Network(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Convergence,
    Rate,
    Angle,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Rate => "rate",
            ExperimentKind::Angle => "angle",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "convergence" => Ok(ExperimentKind::Convergence),
            "rate" => Ok(ExperimentKind::Rate),
            "angle" => Ok(ExperimentKind::Angle),
            other => Err(format!(
                "unknown experiment `{other}` (expected convergence, rate or angle)"
            )),
        }
    }
}

/// How precoders are obtained at each point of an SNR sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateMode {
    /// Optimize again with the powers of every SNR point.
    #[default]
    Reoptimize,
    /// Optimize once at the reference SNR, then only sweep the powers.
    Fixed,
}

impl RateMode {
    pub fn name(self) -> &'static str {
        match self {
            RateMode::Reoptimize => "reoptimize",
            RateMode::Fixed => "fixed",
        }
    }
}

impl FromStr for RateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reoptimize" => Ok(RateMode::Reoptimize),
            "fixed" => Ok(RateMode::Fixed),
            other => Err(format!("expected reoptimize or fixed, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub users: usize,
    /// One entry for all users, or one per user.
    pub tx_antennas: Vec<usize>,
    pub rx_antennas: Vec<usize>,
    pub streams: Vec<usize>,
    pub snr_db_list: Vec<f64>,
    pub seeds: usize,
    pub master_seed: u64,
    pub algorithms: Vec<ManifoldKind>,
    pub stop: StopRule,
    pub beta_reset: bool,
    pub reference_snr_db: f64,
    pub rate_mode: RateMode,
    /// Seed index used by the angle experiment.
    pub angle_seed: usize,
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            users: 3,
            tx_antennas: vec![2],
            rx_antennas: vec![2],
            streams: vec![1],
            snr_db_list: (0..=10).map(|i| 5.0 * i as f64).collect(),
            seeds: 100,
            master_seed: 1,
            algorithms: ManifoldKind::ALL.to_vec(),
            stop: StopRule {
                max_iterations: 500,
                cost_tolerance: 0.0,
                relative_tolerance: 1e-12,
            },
            beta_reset: false,
            reference_snr_db: 20.0,
            rate_mode: RateMode::Reoptimize,
            angle_seed: 0,
            output_dir: PathBuf::from("out"),
            workers: 0,
        }
    }
}

fn bad(key: &str, value: &str, reason: impl ToString) -> ConfigParseError {
    ConfigParseError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigParseError>
where
    T::Err: ToString,
{
    value.parse().map_err(|e: T::Err| bad(key, value, e))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigParseError>
where
    T::Err: ToString,
{
    value
        .split(',')
        .map(|item| parse_scalar(key, item.trim()))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigParseError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

/// Parses `start:stop:step` (inclusive of `stop`) or a comma list.
pub fn parse_snr_list(value: &str) -> Result<Vec<f64>, ConfigParseError> {
    const KEY: &str = "snr_db";
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    let list = match parts.as_slice() {
        [_] => parse_list(KEY, value)?,
        [start, stop, step] => {
            let start: f64 = parse_scalar(KEY, start)?;
            let stop: f64 = parse_scalar(KEY, stop)?;
            let step: f64 = parse_scalar(KEY, step)?;
            if !(step > 0.0) || !(stop >= start) {
                return Err(bad(KEY, value, "need step > 0 and stop >= start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=count).map(|i| start + step * i as f64).collect()
        }
        _ => return Err(bad(KEY, value, "expected start:stop:step or a comma list")),
    };
    if list.iter().any(|x| !x.is_finite()) {
        return Err(bad(KEY, value, "values must be finite"));
    }
    Ok(list)
}

pub fn parse_algorithms(value: &str) -> Result<Vec<ManifoldKind>, ConfigParseError> {
    parse_list("algorithms", value)
}

const KEYS: [&str; 17] = [
    "users",
    "tx_antennas",
    "rx_antennas",
    "streams",
    "snr_db",
    "seeds",
    "master_seed",
    "algorithms",
    "max_iterations",
    "cost_tolerance",
    "relative_tolerance",
    "beta_reset",
    "reference_snr_db",
    "rate_mode",
    "angle_seed",
    "output_dir",
    "workers",
];

impl ExperimentConfig {
    /// Parses the text format on top of the defaults, then validates.
    pub fn parse(text: &str) -> Result<Self, ConfigParseError> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigParseError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigParseError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if seen.contains(&key) {
                return Err(ConfigParseError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            seen.push(key);
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigParseError> {
        match key {
            "users" => self.users = parse_scalar(key, value)?,
            "tx_antennas" => self.tx_antennas = parse_list(key, value)?,
            "rx_antennas" => self.rx_antennas = parse_list(key, value)?,
            "streams" => self.streams = parse_list(key, value)?,
            "snr_db" => self.snr_db_list = parse_snr_list(value)?,
            "seeds" => self.seeds = parse_scalar(key, value)?,
            "master_seed" => self.master_seed = parse_scalar(key, value)?,
            "algorithms" => self.algorithms = parse_algorithms(value)?,
            "max_iterations" => self.stop.max_iterations = parse_scalar(key, value)?,
            "cost_tolerance" => self.stop.cost_tolerance = parse_scalar(key, value)?,
            "relative_tolerance" => self.stop.relative_tolerance = parse_scalar(key, value)?,
            "beta_reset" => self.beta_reset = parse_bool(key, value)?,
            "reference_snr_db" => self.reference_snr_db = parse_scalar(key, value)?,
            "rate_mode" => self.rate_mode = parse_scalar(key, value)?,
            "angle_seed" => self.angle_seed = parse_scalar(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "workers" => self.workers = parse_scalar(key, value)?,
            _ => {
                return Err(ConfigParseError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigParseError> {
        if self.seeds == 0 {
            return Err(ConfigParseError::NoSeeds);
        }
        if self.algorithms.is_empty() {
            return Err(ConfigParseError::NoAlgorithms);
        }
        if self.snr_db_list.is_empty() {
            return Err(ConfigParseError::NoSnr);
        }
        self.network()?;
        Ok(())
    }

    fn per_user(&self, key: &'static str, values: &[usize]) -> Result<Vec<usize>, ConfigParseError> {
        match values.len() {
            1 => Ok(vec![values[0]; self.users]),
            n if n == self.users => Ok(values.to_vec()),
            found => Err(ConfigParseError::PerUserLength {
                key,
                users: self.users,
                found,
            }),
        }
    }

    /// Network at the reference SNR.
    pub fn network(&self) -> Result<NetworkConfig, ConfigParseError> {
        Ok(NetworkConfig::new(
            self.per_user("tx_antennas", &self.tx_antennas)?,
            self.per_user("rx_antennas", &self.rx_antennas)?,
            self.per_user("streams", &self.streams)?,
            vec![snr_db_to_power(self.reference_snr_db); self.users],
        )?)
    }

    pub fn step_policy(&self) -> StepPolicy {
        if self.beta_reset {
            StepPolicy::ResetEachSweep
        } else {
            StepPolicy::WarmStart
        }
    }

    /// Canonical text of every setting that influences results. Output
    /// location and worker count are left out.
    pub fn canonical(&self) -> String {
        let join = |v: &[usize]| {
            v.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        let _ = writeln!(s, "users={}", self.users);
        let _ = writeln!(s, "tx_antennas={}", join(&self.tx_antennas));
        let _ = writeln!(s, "rx_antennas={}", join(&self.rx_antennas));
        let _ = writeln!(s, "streams={}", join(&self.streams));
        let snr: Vec<String> = self.snr_db_list.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(s, "snr_db={}", snr.join(","));
        let _ = writeln!(s, "seeds={}", self.seeds);
        let _ = writeln!(s, "master_seed={}", self.master_seed);
        let algos: Vec<&str> = self.algorithms.iter().map(|a| a.name()).collect();
        let _ = writeln!(s, "algorithms={}", algos.join(","));
        let _ = writeln!(s, "max_iterations={}", self.stop.max_iterations);
        let _ = writeln!(s, "cost_tolerance={:?}", self.stop.cost_tolerance);
        let _ = writeln!(s, "relative_tolerance={:?}", self.stop.relative_tolerance);
        let _ = writeln!(s, "beta_reset={}", self.beta_reset);
        let _ = writeln!(s, "reference_snr_db={:?}", self.reference_snr_db);
        let _ = writeln!(s, "rate_mode={}", self.rate_mode.name());
        let _ = writeln!(s, "angle_seed={}", self.angle_seed);
        s
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
        assert_eq!(
            ExperimentConfig::parse("# only a comment\n\n").unwrap(),
            ExperimentConfig::default()
        );
    }

    #[test]
    fn parses_every_key() {
        let text = "
            users = 4            # trailing comment
            tx_antennas = 5
            rx_antennas = 5,5,5,5
            streams = 2
            snr_db = 10, 20
            seeds = 7
            master_seed = 99
            algorithms = stiefel, grassmann
            max_iterations = 30
            cost_tolerance = 1e-9
            relative_tolerance = 1e-8
            beta_reset = true
            reference_snr_db = 30
            rate_mode = fixed
            angle_seed = 3
            output_dir = /tmp/x
            workers = 2
        ";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.users, 4);
        assert_eq!(cfg.rx_antennas, vec![5; 4]);
        assert_eq!(cfg.snr_db_list, vec![10.0, 20.0]);
        assert_eq!(cfg.algorithms, vec![ManifoldKind::Stiefel, ManifoldKind::Grassmann]);
        assert_eq!(cfg.stop.max_iterations, 30);
        assert_eq!(cfg.stop.relative_tolerance, 1e-8);
        assert!(cfg.beta_reset);
        assert_eq!(cfg.step_policy(), StepPolicy::ResetEachSweep);
        assert_eq!(cfg.rate_mode, RateMode::Fixed);
        assert_eq!(cfg.angle_seed, 3);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/x"));
        let net = cfg.network().unwrap();
        assert_eq!(net.streams(3), 2);
        assert!((net.power(0) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn snr_ranges_are_inclusive() {
        assert_eq!(
            parse_snr_list("0:50:10").unwrap(),
            vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]
        );
        assert_eq!(parse_snr_list("5:5:1").unwrap(), vec![5.0]);
        assert_eq!(parse_snr_list("0:1:0.25").unwrap().len(), 5);
        assert!(parse_snr_list("0:10:0").is_err());
        assert!(parse_snr_list("10:0:1").is_err());
        assert!(parse_snr_list("1:2").is_err());
        assert!(parse_snr_list("inf").is_err());
    }

    #[test]
    fn rejects_malformed_input() {
        assert_eq!(
            ExperimentConfig::parse("seeds 3"),
            Err(ConfigParseError::Syntax { line: 1 })
        );
        assert!(matches!(
            ExperimentConfig::parse("\nspeed = 3"),
            Err(ConfigParseError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("seeds = 1\nseeds = 2"),
            Err(ConfigParseError::DuplicateKey { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("seeds = -1"),
            Err(ConfigParseError::BadValue { .. })
        ));
        assert_eq!(ExperimentConfig::parse("seeds = 0"), Err(ConfigParseError::NoSeeds));
        assert!(ExperimentConfig::parse("algorithms = newton").is_err());
        assert!(ExperimentConfig::parse("beta_reset = maybe").is_err());
        assert!(matches!(
            ExperimentConfig::parse("tx_antennas = 2,2"),
            Err(ConfigParseError::PerUserLength { found: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("streams = 3"),
            Err(ConfigParseError::Network(_))
        ));
    }

    #[test]
    fn hash_ignores_output_location_and_workers() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("elsewhere");
        b.workers = 8;
        assert_eq!(a.config_hash(), b.config_hash());
        b.master_seed += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
    }
}
