//! Run configuration: command-line flags layered over an optional JSON
//! file whose keys are the long flag names.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use spatial_choice::params::parse_m_dist;
use spatial_choice::ModelParams;

use crate::CliError;

/// `m-dist` may be written as `"0.5,0.5"` or `[0.5, 0.5]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MDist {
    List(Vec<f64>),
    Text(String),
}

impl MDist {
    fn resolve(&self) -> Result<Vec<f64>, CliError> {
        match self {
            MDist::List(v) => Ok(v.clone()),
            MDist::Text(s) => parse_m_dist(s).map_err(|e| CliError::Usage(e.to_string())),
        }
    }
}

/// Every setting is optional here; unset values fall back to the file,
/// then to the defaults.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    /// JSON file supplying any of these flags (flags override it)
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub d: Option<u32>,
    /// Law of m as comma separated probabilities of 1, 2, ..., M
    #[arg(long, value_name = "P1,P2,..", value_parser = parse_m_dist_flag)]
    pub m_dist: Option<MDist>,
    #[arg(long)]
    pub n0: Option<usize>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub track_k: Option<usize>,
    #[arg(long)]
    pub checkpoint_stride: Option<u64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn parse_m_dist_flag(s: &str) -> Result<MDist, String> {
    parse_m_dist(s).map(MDist::List).map_err(|e| e.to_string())
}

/// Fully resolved settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub out: PathBuf,
    pub replicas: u64,
    pub jobs: usize,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: ConfigFile) -> ConfigFile {
        ConfigFile {
            config: self.config.or(base.config),
            a: self.a.or(base.a),
            b: self.b.or(base.b),
            alpha: self.alpha.or(base.alpha),
            beta: self.beta.or(base.beta),
            d: self.d.or(base.d),
            m_dist: self.m_dist.or(base.m_dist),
            n0: self.n0.or(base.n0),
            steps: self.steps.or(base.steps),
            seed: self.seed.or(base.seed),
            track_k: self.track_k.or(base.track_k),
            checkpoint_stride: self.checkpoint_stride.or(base.checkpoint_stride),
            replicas: self.replicas.or(base.replicas),
            jobs: self.jobs.or(base.jobs),
            out: self.out.or(base.out),
        }
    }

    /// Merges in the `--config` file, if any, and applies defaults.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let merged = match &self.config {
            Some(path) => {
                let file = ConfigFile::load(path)?;
                self.over(file)
            }
            None => self,
        };
        let m_dist = merged.m_dist.as_ref().map(MDist::resolve).transpose()?.unwrap_or_else(|| vec![1.0]);
        let params = ModelParams::new(
            merged.a.unwrap_or(0.5),
            merged.b.unwrap_or(1.0),
            merged.alpha.unwrap_or(0.3),
            merged.beta.unwrap_or(1.0),
            merged.d.unwrap_or(2),
            m_dist,
            merged.n0.unwrap_or(8),
        )
        .map_err(|e| CliError::Usage(e.to_string()))?
        .with_steps(merged.steps.unwrap_or(100_000))
        .with_seed(merged.seed.unwrap_or(1))
        .with_track_k(merged.track_k.unwrap_or(2))
        .with_checkpoint_stride(merged.checkpoint_stride.unwrap_or(100));
        params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let replicas = merged.replicas.unwrap_or(4);
        if replicas == 0 {
            return Err(CliError::Usage("--replicas must be at least 1".into()));
        }
        Ok(RunConfig {
            params,
            out: merged.out.unwrap_or_else(|| PathBuf::from(".")),
            replicas,
            jobs: merged.jobs.unwrap_or(1).max(1),
        })
    }
}

impl RunConfig {
    /// The config-file form of these settings.
    pub fn to_file(&self) -> ConfigFile {
        let p = &self.params;
        ConfigFile {
            config: None,
            a: Some(p.a),
            b: Some(p.b),
            alpha: Some(p.alpha),
            beta: Some(p.beta),
            d: Some(p.d),
            m_dist: Some(MDist::List(p.m_dist.clone())),
            n0: Some(p.n0),
            steps: Some(p.steps),
            seed: Some(p.seed),
            track_k: Some(p.track_k),
            checkpoint_stride: Some(p.checkpoint_stride),
            replicas: Some(self.replicas),
            jobs: Some(self.jobs),
            out: Some(self.out.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = ConfigFile::default().resolve().unwrap();
        assert_eq!(cfg.params.a, 0.5);
        assert_eq!(cfg.params.m_dist, vec![1.0]);
        assert_eq!(cfg.replicas, 4);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ConfigFile {
            a: Some(0.41),
            alpha: Some(0.17),
            m_dist: Some(MDist::Text("0.2, 0.8".into())),
            steps: Some(1234),
            out: Some("runs/x".into()),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        let json = serde_json::to_string(&cfg.to_file()).unwrap();
        let back: ConfigFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.resolve().unwrap(), cfg);
    }

    #[test]
    fn accepts_both_m_dist_spellings() {
        let a: ConfigFile = serde_json::from_str(r#"{"m-dist": "0.5,0.5", "n0": 5}"#).unwrap();
        let b: ConfigFile = serde_json::from_str(r#"{"m-dist": [0.5, 0.5], "n0": 5}"#).unwrap();
        assert_eq!(a.resolve().unwrap().params, b.resolve().unwrap().params);
        assert!(serde_json::from_str::<ConfigFile>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigFile {
            a: Some(0.2),
            d: Some(3),
            ..Default::default()
        };
        let flags = ConfigFile {
            a: Some(0.3),
            ..Default::default()
        };
        let cfg = flags.over(file).resolve().unwrap();
        assert_eq!((cfg.params.a, cfg.params.d), (0.3, 3));
    }

    #[test]
    fn invalid_parameters_are_usage_errors() {
        let err = ConfigFile {
            a: Some(0.7),
            ..Default::default()
        }
        .resolve()
        .unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }
}
