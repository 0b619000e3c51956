//! Run configuration: defaults, the TOML file, and the override order.
//!
//! Values resolve flag > environment > config file > default. Only the data
//! directory reads from the environment (`PS_DATA_DIR`); everything else must
//! come from the file or a flag so a run is reproducible from its manifest.
//! When a flag displaces a value the file had set, a warning is logged.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use prodspace::ThresholdRule;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("bad year range `{0}` (expected YEAR or START:END with START <= END)")]
    BadYears(String),
    #[error("{name} must be {requirement}, got {got}")]
    OutOfRange {
        name: &'static str,
        requirement: &'static str,
        got: f64,
    },
    #[error("reflections depth must be at least 1")]
    BadDepth,
}

/// Inclusive span of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn iter(self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }
}

impl FromStr for YearRange {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<YearRange, ConfigError> {
        let bad = || ConfigError::BadYears(s.to_string());
        let (start, end) = match s.split_once(':') {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let y = s.trim().parse().map_err(|_| bad())?;
                (y, y)
            }
        };
        if start > end {
            return Err(bad());
        }
        Ok(YearRange { start, end })
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}:{}", self.start, self.end)
        }
    }
}

impl Serialize for YearRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<YearRange, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How the downstream proximity matrix combines the configured years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProximityYears {
    /// Proximity per year, then the element-wise mean (the default).
    MeanOfYears,
    /// Sum the export matrices first, then one proximity pass.
    PooledYears,
}

/// Fully resolved configuration, echoed verbatim into every output manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub years: YearRange,
    /// RCA at or above this makes an M-matrix bit.
    pub rca_threshold: f64,
    /// Proximity at or above this makes a graph edge.
    pub proximity_threshold: f64,
    pub threshold_rule: ThresholdRule,
    /// RCA below this marks a product as an open opportunity.
    pub opportunity_cutoff: f64,
    /// RCA below this admits a product into scenario gain rankings.
    pub candidate_cutoff: f64,
    pub reflections_depth: usize,
    pub layout_seed: u64,
    pub proximity_years: ProximityYears,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            data_dir: PathBuf::from("data"),
            years: YearRange {
                start: 2000,
                end: 2005,
            },
            rca_threshold: 1.0,
            proximity_threshold: 0.45,
            threshold_rule: ThresholdRule::Inclusive,
            opportunity_cutoff: 0.1,
            candidate_cutoff: 0.5,
            reflections_depth: 18,
            layout_seed: 0,
            proximity_years: ProximityYears::MeanOfYears,
        }
    }
}

/// The config file's raw keys. Everything is optional; absent keys keep
/// their defaults, and present keys lose (with a warning) to flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub years: Option<YearRange>,
    pub rca_threshold: Option<f64>,
    pub proximity_threshold: Option<f64>,
    pub threshold_rule: Option<ThresholdRule>,
    pub opportunity_cutoff: Option<f64>,
    pub candidate_cutoff: Option<f64>,
    pub reflections_depth: Option<usize>,
    pub layout_seed: Option<u64>,
    pub proximity_years: Option<ProximityYears>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Resolve the effective configuration from the file (when given), the
/// `PS_DATA_DIR` environment variable, and the global `--data-dir` flag.
pub fn resolve(
    file: &FileConfig,
    env_data_dir: Option<PathBuf>,
    flag_data_dir: Option<PathBuf>,
) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(v) = &file.data_dir {
        cfg.data_dir = v.clone();
    }
    if let Some(v) = file.years {
        cfg.years = v;
    }
    if let Some(v) = file.rca_threshold {
        cfg.rca_threshold = v;
    }
    if let Some(v) = file.proximity_threshold {
        cfg.proximity_threshold = v;
    }
    if let Some(v) = file.threshold_rule {
        cfg.threshold_rule = v;
    }
    if let Some(v) = file.opportunity_cutoff {
        cfg.opportunity_cutoff = v;
    }
    if let Some(v) = file.candidate_cutoff {
        cfg.candidate_cutoff = v;
    }
    if let Some(v) = file.reflections_depth {
        cfg.reflections_depth = v;
    }
    if let Some(v) = file.layout_seed {
        cfg.layout_seed = v;
    }
    if let Some(v) = file.proximity_years {
        cfg.proximity_years = v;
    }

    let env_was_set = env_data_dir.is_some();
    if let Some(dir) = env_data_dir {
        if file.data_dir.is_some() && file.data_dir.as_deref() != Some(&dir) {
            log::warn!(
                "PS_DATA_DIR={} overrides config data_dir = {}",
                dir.display(),
                cfg.data_dir.display()
            );
        }
        cfg.data_dir = dir;
    }
    if let Some(dir) = flag_data_dir {
        if cfg.data_dir != dir && (file.data_dir.is_some() || env_was_set) {
            log::warn!(
                "--data-dir {} overrides data_dir = {}",
                dir.display(),
                cfg.data_dir.display()
            );
        }
        cfg.data_dir = dir;
    }

    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let positive = |name: &'static str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(ConfigError::OutOfRange {
                name,
                requirement: "a positive finite value",
                got: v,
            })
        }
    };
    positive("rca_threshold", cfg.rca_threshold)?;
    positive("opportunity_cutoff", cfg.opportunity_cutoff)?;
    positive("candidate_cutoff", cfg.candidate_cutoff)?;
    if !(cfg.proximity_threshold.is_finite() && (0.0..=1.0).contains(&cfg.proximity_threshold)) {
        return Err(ConfigError::OutOfRange {
            name: "proximity_threshold",
            requirement: "within [0, 1]",
            got: cfg.proximity_threshold,
        });
    }
    if cfg.reflections_depth < 1 {
        return Err(ConfigError::BadDepth);
    }
    Ok(())
}

/// Apply a per-command flag on top of the resolved value, warning when it
/// displaces a value the config file had set.
pub fn override_value<T: PartialEq + fmt::Debug>(
    name: &str,
    current: T,
    from_file: Option<T>,
    flag: Option<T>,
) -> T {
    match flag {
        Some(v) => {
            if let Some(f) = from_file {
                if f != v {
                    log::warn!("--{name} {v:?} overrides config {name} = {f:?}");
                }
            }
            v
        }
        None => current,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_ranges_parse_both_forms() {
        assert_eq!(
            "2003:2005".parse::<YearRange>().unwrap(),
            YearRange {
                start: 2003,
                end: 2005
            }
        );
        assert_eq!(
            "2005".parse::<YearRange>().unwrap(),
            YearRange {
                start: 2005,
                end: 2005
            }
        );
        assert!("2005:2003".parse::<YearRange>().is_err());
        assert!("20a5".parse::<YearRange>().is_err());
        assert_eq!(
            "2000:2005".parse::<YearRange>().unwrap().to_string(),
            "2000:2005"
        );
        assert_eq!("2005:2005".parse::<YearRange>().unwrap().to_string(), "2005");
    }

    #[test]
    fn defaults_pass_validation() {
        let cfg = resolve(&FileConfig::default(), None, None).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn file_values_replace_defaults() {
        let file: FileConfig = toml::from_str(
            r#"
            data_dir = "/tmp/elsewhere"
            years = "2003:2005"
            proximity_threshold = 0.55
            proximity_years = "pooled-years"
            "#,
        )
        .unwrap();
        let cfg = resolve(&file, None, None).unwrap();
        assert_eq!(cfg.data_dir, PathBuf::from("/tmp/elsewhere"));
        assert_eq!(cfg.years.start, 2003);
        assert_eq!(cfg.proximity_threshold, 0.55);
        assert_eq!(cfg.proximity_years, ProximityYears::PooledYears);
        assert_eq!(cfg.rca_threshold, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("proximity_treshold = 0.5").is_err());
    }

    #[test]
    fn flag_beats_environment_beats_file() {
        let file: FileConfig = toml::from_str(r#"data_dir = "from-file""#).unwrap();
        let cfg = resolve(&file, Some(PathBuf::from("from-env")), None).unwrap();
        assert_eq!(cfg.data_dir, PathBuf::from("from-env"));
        let cfg = resolve(
            &file,
            Some(PathBuf::from("from-env")),
            Some(PathBuf::from("from-flag")),
        )
        .unwrap();
        assert_eq!(cfg.data_dir, PathBuf::from("from-flag"));
    }

    #[test]
    fn out_of_range_values_are_refused() {
        let file: FileConfig = toml::from_str("proximity_threshold = 1.5").unwrap();
        assert!(resolve(&file, None, None).is_err());
        let file: FileConfig = toml::from_str("opportunity_cutoff = 0.0").unwrap();
        assert!(resolve(&file, None, None).is_err());
        let file: FileConfig = toml::from_str("reflections_depth = 0").unwrap();
        assert!(resolve(&file, None, None).is_err());
    }

    #[test]
    fn command_flag_override_wins() {
        assert_eq!(override_value("top", 30usize, None, Some(10)), 10);
        assert_eq!(override_value("top", 30usize, Some(25), None), 30);
        assert_eq!(override_value("top", 25usize, Some(25), Some(40)), 40);
    }
}
