use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::causality::{Direction, NearestOptions};
use crate::channels::ZooChannel;
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Point, ScenarioOptions};
use crate::sampling::SamplerArm;

use super::Experiment;

fn default_check_tol() -> f64 {
    1e-8
}

fn default_left() -> Vec<usize> {
    vec![0]
}

/// `check-causal`: every decision procedure on one channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckCausalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    pub seed: u64,
    /// Required with `channel`; taken from the file with `channel_file`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ZooChannel>,
    /// A channel in the `{"dims": ..., "kraus": ...}` format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_file: Option<PathBuf>,
    #[serde(default = "default_check_tol")]
    pub tol: f64,
    /// Random Sorkin scenarios per bipartition and direction.
    #[serde(default = "default_scenarios")]
    pub n_scenarios: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

fn default_scenarios() -> u64 {
    20
}

/// `sample-haar`: the measure-zero experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleHaarConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub n_samples: u64,
    #[serde(default = "default_haar_tol")]
    pub tol: f64,
    #[serde(default)]
    pub arm: SamplerArm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn default_haar_tol() -> f64 {
    1e-6
}

/// `nearest-product`: best product approximations of Haar samples, or of
/// one fixed unitary when `unitary` is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearestProductConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    pub seed: u64,
    pub dims: Vec<usize>,
    #[serde(default = "default_left")]
    pub left: Vec<usize>,
    #[serde(default = "default_nearest_samples")]
    pub n_samples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<ZooChannel>,
    #[serde(default)]
    pub options: NearestOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn default_nearest_samples() -> u64 {
    20
}

/// `perturb-ball`: mixtures of a causal channel with an acausal one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbBallConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    pub seed: u64,
    pub dims: Vec<usize>,
    #[serde(default = "default_left")]
    pub left: Vec<usize>,
    #[serde(default = "default_causal")]
    pub causal: ZooChannel,
    #[serde(default = "default_acausal")]
    pub acausal: ZooChannel,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_defect_tol")]
    pub tol: f64,
    /// Allowed relative spread of `defect/ε` and `distance/ε`.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn default_causal() -> ZooChannel {
    ZooChannel::Identity
}

fn default_acausal() -> ZooChannel {
    ZooChannel::ClassicalOneWay
}

fn default_direction() -> Direction {
    Direction::LeftToRight
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

fn default_defect_tol() -> f64 {
    1e-10
}

fn default_rel_tol() -> f64 {
    1e-9
}

/// `lattice-sorkin`: the field-conjugation identity around a region `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSorkinConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    pub seed: u64,
    pub lattice: LatticeSpec,
    pub region: Vec<Point>,
    #[serde(default)]
    pub scenario: ScenarioOptions,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_identity_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

fn default_lambdas() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0]
}

fn default_identity_tol() -> f64 {
    1e-12
}

/// A parsed configuration for one experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentConfig {
    CheckCausal(CheckCausalConfig),
    SampleHaar(SampleHaarConfig),
    NearestProduct(NearestProductConfig),
    PerturbBall(PerturbBallConfig),
    LatticeSorkin(LatticeSorkinConfig),
}

fn parse_as<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("{origin}: {e}")))
}

impl ExperimentConfig {
    /// Parses `text` as the configuration of `kind`; `origin` names the
    /// source in diagnostics.
    pub fn parse(kind: Experiment, text: &str, origin: &str) -> Result<Self> {
        let cfg = match kind {
            Experiment::CheckCausal => Self::CheckCausal(parse_as(text, origin)?),
            Experiment::SampleHaar => Self::SampleHaar(parse_as(text, origin)?),
            Experiment::NearestProduct => Self::NearestProduct(parse_as(text, origin)?),
            Experiment::PerturbBall => Self::PerturbBall(parse_as(text, origin)?),
            Experiment::LatticeSorkin => Self::LatticeSorkin(parse_as(text, origin)?),
        };
        if let Some(name) = cfg.declared_experiment() {
            if name != kind.name() {
                return Err(Error::invalid(format!(
                    "{origin}: field `experiment` is \"{name}\" but the command is {}",
                    kind.name()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(kind: Experiment, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(kind, &text, &path.display().to_string())
    }

    fn declared_experiment(&self) -> Option<&str> {
        match self {
            Self::CheckCausal(c) => c.experiment.as_deref(),
            Self::SampleHaar(c) => c.experiment.as_deref(),
            Self::NearestProduct(c) => c.experiment.as_deref(),
            Self::PerturbBall(c) => c.experiment.as_deref(),
            Self::LatticeSorkin(c) => c.experiment.as_deref(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::CheckCausal(c) => c.seed,
            Self::SampleHaar(c) => c.seed,
            Self::NearestProduct(c) => c.seed,
            Self::PerturbBall(c) => c.seed,
            Self::LatticeSorkin(c) => c.seed,
        }
    }

    /// Explicit `(report, csv)` paths from the config, if any.
    pub fn output_paths(&self) -> (Option<&Path>, Option<&Path>) {
        match self {
            Self::CheckCausal(c) => (c.report.as_deref(), None),
            Self::SampleHaar(c) => (c.report.as_deref(), c.csv.as_deref()),
            Self::NearestProduct(c) => (c.report.as_deref(), c.csv.as_deref()),
            Self::PerturbBall(c) => (c.report.as_deref(), c.csv.as_deref()),
            Self::LatticeSorkin(c) => (c.report.as_deref(), c.csv.as_deref()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_configs_parse() {
        let c = ExperimentConfig::parse(
            Experiment::SampleHaar,
            r#"{"seed": 1, "dims": [2, 2], "n_samples": 10}"#,
            "inline",
        )
        .unwrap();
        let ExperimentConfig::SampleHaar(c) = c else {
            panic!()
        };
        assert_eq!(c.tol, 1e-6);
        assert_eq!(c.arm, SamplerArm::Global);

        let c = ExperimentConfig::parse(
            Experiment::LatticeSorkin,
            r#"{"seed": 0, "lattice": {"n_sites": 64, "n_steps": 32},
                "region": [{"t": 16, "x": 30}]}"#,
            "inline",
        )
        .unwrap();
        let ExperimentConfig::LatticeSorkin(c) = c else {
            panic!()
        };
        assert_eq!(c.lattice.mass, 1.0);
        assert_eq!(c.scenario, ScenarioOptions::default());
    }

    #[test]
    fn seed_is_required() {
        let err = ExperimentConfig::parse(
            Experiment::SampleHaar,
            r#"{"dims": [2, 2], "n_samples": 3}"#,
            "cfg.json",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("cfg.json") && err.contains("seed"), "{err}");
    }

    #[test]
    fn diagnostics_name_field_and_line() {
        let text = "{\n  \"seed\": 1,\n  \"dims\": [2, 2],\n  \"n_sample\": 3\n}";
        let err = ExperimentConfig::parse(Experiment::SampleHaar, text, "cfg.json")
            .unwrap_err()
            .to_string();
        assert!(err.contains("n_sample") && err.contains("line 4"), "{err}");
    }

    #[test]
    fn experiment_field_must_match() {
        let text = r#"{"experiment": "sample-haar", "seed": 1, "dims": [2, 2], "channel": {"name": "cnot"}}"#;
        assert!(ExperimentConfig::parse(Experiment::CheckCausal, text, "x").is_err());
        let text = r#"{"experiment": "check-causal", "seed": 1, "dims": [2, 2], "channel": {"name": "cnot"}}"#;
        assert!(ExperimentConfig::parse(Experiment::CheckCausal, text, "x").is_ok());
    }
}
