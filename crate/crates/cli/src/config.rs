//! Shared settings: defaults, then the `--config` file, then flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use infostream::decompose::DEFAULT_COVERAGE_THRESHOLD;
use infostream::mfdfa::q_range;
use infostream::MfdfaConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Normalize {
    /// Divide by the daily totals of scanned documents.
    Rates,
    /// Raw daily document counts.
    Counts,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SharedArgs {
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for the random generator (simulate).
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "FLOAT", allow_negative_numbers = true)]
    pub q_min: Option<f64>,
    #[arg(long, global = true, value_name = "FLOAT", allow_negative_numbers = true)]
    pub q_max: Option<f64>,
    #[arg(long, global = true, value_name = "FLOAT")]
    pub q_step: Option<f64>,
    /// Comma-separated segment sizes; default picks octaves from the series length.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    pub scales: Option<Vec<usize>>,
    #[arg(long, global = true, value_name = "INT")]
    pub detrend_order: Option<usize>,
    /// Series shorter than this get an insufficient_data verdict.
    #[arg(long, global = true, value_name = "INT")]
    pub min_length: Option<usize>,
    /// Series with a larger share of zeros get an insufficient_data verdict.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub max_zero_fraction: Option<f64>,
    /// Coverage needed for the reduced stream to count as sufficient.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub threshold: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub normalize: Option<Normalize>,
    /// Number of largest subtopics in the reduced stream.
    #[arg(long, global = true, value_name = "INT")]
    pub k_prime: Option<usize>,
    /// Worker threads (default: all cores); results do not depend on it.
    #[arg(long, global = true, value_name = "INT")]
    pub threads: Option<usize>,
    /// TOML or JSON file with any of the settings above; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

/// Settings file: same keys as the flags, in snake_case.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    out: Option<PathBuf>,
    seed: Option<u64>,
    q_min: Option<f64>,
    q_max: Option<f64>,
    q_step: Option<f64>,
    scales: Option<Vec<usize>>,
    detrend_order: Option<usize>,
    min_length: Option<usize>,
    max_zero_fraction: Option<f64>,
    threshold: Option<f64>,
    normalize: Option<Normalize>,
    k_prime: Option<usize>,
    threads: Option<usize>,
}

fn load_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&src).map_err(|e| e.to_string())
    } else {
        toml::from_str(&src).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    pub mfdfa: MfdfaConfig,
    pub threshold: f64,
    pub normalize: Normalize,
    pub k_prime: Option<usize>,
    pub threads: Option<usize>,
}

/// Everything that shapes the numbers, echoed into output JSON.
/// Paths and thread counts are left out so artifacts compare byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    pub q_grid: Vec<f64>,
    pub scales: Option<Vec<usize>>,
    pub detrend_order: usize,
    pub min_length: usize,
    pub max_zero_fraction: f64,
    pub threshold: f64,
    pub normalize: Normalize,
    pub k_prime: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn resolve(args: &SharedArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => load_file_config(p)?,
            None => FileConfig::default(),
        };
        let defaults = MfdfaConfig::default();
        let q_min = args.q_min.or(file.q_min).unwrap_or(-5.0);
        let q_max = args.q_max.or(file.q_max).unwrap_or(5.0);
        let q_step = args.q_step.or(file.q_step).unwrap_or(0.5);
        let q_grid = q_range(q_min, q_max, q_step).map_err(|e| CliError::input(e.to_string()))?;
        let mfdfa = MfdfaConfig {
            q_grid,
            scales: args.scales.clone().or(file.scales),
            detrend_order: args.detrend_order.or(file.detrend_order).unwrap_or(defaults.detrend_order),
            min_length: args.min_length.or(file.min_length).unwrap_or(defaults.min_length),
            max_zero_fraction: args.max_zero_fraction.or(file.max_zero_fraction).unwrap_or(defaults.max_zero_fraction),
        };
        mfdfa.validate().map_err(|e| CliError::input(e.to_string()))?;
        if let Some(scales) = &mfdfa.scales {
            if scales.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::input("--scales must be strictly increasing"));
            }
        }
        let threshold = args.threshold.or(file.threshold).unwrap_or(DEFAULT_COVERAGE_THRESHOLD);
        if !(0.0..=1.0).contains(&threshold) {
            return Err(CliError::input(format!("--threshold must lie in [0, 1], got {threshold}")));
        }
        let k_prime = args.k_prime.or(file.k_prime);
        if k_prime == Some(0) {
            return Err(CliError::input("--k-prime must be at least 1"));
        }
        let threads = args.threads.or(file.threads);
        if threads == Some(0) {
            return Err(CliError::input("--threads must be at least 1"));
        }
        Ok(Self {
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            seed: args.seed.or(file.seed),
            q_min,
            q_max,
            q_step,
            mfdfa,
            threshold,
            normalize: args.normalize.or(file.normalize).unwrap_or(Normalize::Rates),
            k_prime,
            threads,
        })
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            q_min: self.q_min,
            q_max: self.q_max,
            q_step: self.q_step,
            q_grid: self.mfdfa.q_grid.clone(),
            scales: self.mfdfa.scales.clone(),
            detrend_order: self.mfdfa.detrend_order,
            min_length: self.mfdfa.min_length,
            max_zero_fraction: self.mfdfa.max_zero_fraction,
            threshold: self.threshold,
            normalize: self.normalize,
            k_prime: self.k_prime,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_library() {
        let cfg = RunConfig::resolve(&SharedArgs::default()).unwrap();
        assert_eq!(cfg.mfdfa, MfdfaConfig::default());
        assert_eq!(cfg.threshold, 0.8);
        assert_eq!(cfg.normalize, Normalize::Rates);
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "detrend_order = 2\nthreshold = 0.5\nq_max = 3.0\n").unwrap();
        let args = SharedArgs { config: Some(path), detrend_order: Some(3), ..Default::default() };
        let cfg = RunConfig::resolve(&args).unwrap();
        assert_eq!(cfg.mfdfa.detrend_order, 3);
        assert_eq!(cfg.threshold, 0.5);
        assert_eq!(*cfg.mfdfa.q_grid.last().unwrap(), 3.0);
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"detrend": 2}"#).unwrap();
        let err = RunConfig::resolve(&SharedArgs { config: Some(path), ..Default::default() }).unwrap_err();
        assert_eq!(err.code(), 2);
    }

    #[test]
    fn out_of_bounds_overrides_are_input_errors() {
        for args in [
            SharedArgs { detrend_order: Some(4), ..Default::default() },
            SharedArgs { threshold: Some(1.5), ..Default::default() },
            SharedArgs { q_step: Some(0.0), ..Default::default() },
            SharedArgs { scales: Some(vec![32, 16, 64, 128]), ..Default::default() },
        ] {
            assert_eq!(RunConfig::resolve(&args).unwrap_err().code(), 2);
        }
    }
}
