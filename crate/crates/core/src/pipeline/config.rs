use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{SplitMode, DEFAULT_MAX_STEP, DEFAULT_STEP_MS, DEFAULT_TRAIN_FRACTION};
use crate::metaheur::{GaParams, PsoParams};
use crate::predictors::{FcmParams, GmdhConfig, MlffnnConfig, SpecLimits, SubtractiveParams, TrainVariant};
use crate::sampling::{CoverageMode, SamplingPlan};
use crate::synth::SynthConfig;

/// Complete run description. Every table rejects unknown keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed, copied into every stage.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub input: Option<InputConfig>,
    pub synth: Option<SynthConfig>,
    pub ingest: IngestConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub flag: FlagConfig,
    pub limits: SpecLimits,
    pub sampling: SamplingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            input: None,
            synth: None,
            ingest: IngestConfig::default(),
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            flag: FlagConfig::default(),
            limits: SpecLimits::default(),
            sampling: SamplingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// `timestamp,indicator,value` change log.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub step_ms: i64,
    /// Target indicator; its first record anchors the grid.
    pub target: String,
    /// Cumulative per-shift output counter used for shift detection.
    pub counter: String,
    /// Largest plausible counter rise per grid step.
    pub max_step: f64,
    pub train_fraction: f64,
    pub split_mode: SplitMode,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            step_ms: DEFAULT_STEP_MS,
            target: crate::synth::TARGET.into(),
            counter: crate::synth::COUNTER.into(),
            max_step: DEFAULT_MAX_STEP,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            split_mode: SplitMode::Chronological,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub f_lin: f64,
    pub f_nonlin: f64,
    pub n_trees: usize,
    pub min_leaf: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            f_lin: crate::features::DEFAULT_F_LIN,
            f_nonlin: crate::features::DEFAULT_F_NONLIN,
            n_trees: 20,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    MlffnnGd,
    MlffnnLm,
    AnfisSc,
    AnfisFcm,
    AnfisGa,
    AnfisPso,
    Gmdh,
}

impl MethodKind {
    pub const ALL: [MethodKind; 7] = [
        MethodKind::MlffnnGd,
        MethodKind::MlffnnLm,
        MethodKind::AnfisSc,
        MethodKind::AnfisFcm,
        MethodKind::AnfisGa,
        MethodKind::AnfisPso,
        MethodKind::Gmdh,
    ];

    /// Config and file-name spelling.
    pub fn key(self) -> &'static str {
        match self {
            MethodKind::MlffnnGd => "mlffnn-gd",
            MethodKind::MlffnnLm => "mlffnn-lm",
            MethodKind::AnfisSc => "anfis-sc",
            MethodKind::AnfisFcm => "anfis-fcm",
            MethodKind::AnfisGa => "anfis-ga",
            MethodKind::AnfisPso => "anfis-pso",
            MethodKind::Gmdh => "gmdh",
        }
    }

    /// Table label.
    pub fn label(self) -> &'static str {
        match self {
            MethodKind::MlffnnGd => "MLFFNN-GD",
            MethodKind::MlffnnLm => "MLFFNN-LM",
            MethodKind::AnfisSc => "ANFIS(SC)",
            MethodKind::AnfisFcm => "ANFIS(FCM)",
            MethodKind::AnfisGa => "ANFIS-GA",
            MethodKind::AnfisPso => "ANFIS-PSO",
            MethodKind::Gmdh => "GMDH",
        }
    }

    pub fn mlffnn_variant(self) -> Option<TrainVariant> {
        match self {
            MethodKind::MlffnnGd => Some(TrainVariant::GradientDescent),
            MethodKind::MlffnnLm => Some(TrainVariant::LevenbergMarquardt),
            _ => None,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for MethodKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Which selected indicators a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSet {
    /// Direct and potential indicators.
    Combined,
    /// Direct (rank-correlated) indicators only.
    Linear,
    /// Potential (forest-importance) indicators only.
    Nonlinear,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Combined, FeatureSet::Linear, FeatureSet::Nonlinear];

    pub fn key(self) -> &'static str {
        match self {
            FeatureSet::Combined => "combined",
            FeatureSet::Linear => "linear",
            FeatureSet::Nonlinear => "nonlinear",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|m| m.key() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature set `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnfisConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Upper bound on rules produced by subtractive clustering.
    pub max_rules: usize,
}

impl Default for AnfisConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.01,
            max_rules: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub methods: Vec<MethodKind>,
    pub feature_sets: Vec<FeatureSet>,
    pub anfis: AnfisConfig,
    pub subtractive: SubtractiveParams,
    pub fcm: FcmParams,
    pub gmdh: GmdhConfig,
    pub mlffnn: MlffnnConfig,
    pub ga: GaParams,
    pub pso: PsoParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            methods: vec![MethodKind::AnfisFcm, MethodKind::AnfisGa, MethodKind::Gmdh],
            feature_sets: FeatureSet::ALL.to_vec(),
            anfis: AnfisConfig::default(),
            subtractive: SubtractiveParams::default(),
            fcm: FcmParams::default(),
            gmdh: GmdhConfig::default(),
            mlffnn: MlffnnConfig::default(),
            ga: GaParams::default(),
            pso: PsoParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlagConfig {
    /// Model that flags rejects.
    pub method: MethodKind,
    pub feature_set: FeatureSet,
}

impl Default for FlagConfig {
    fn default() -> Self {
        Self {
            method: MethodKind::AnfisGa,
            feature_set: FeatureSet::Combined,
        }
    }
}

/// Sampling plan plus optional direct inputs. When `m1` and `sigma` are both
/// set the report is computed from them instead of flagged predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub j1: usize,
    pub y_s: u64,
    pub z: u64,
    pub n: f64,
    pub mode: CoverageMode,
    pub m1: Option<f64>,
    pub sigma: Option<f64>,
    pub mu: Option<f64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        let p = SamplingPlan::default();
        Self {
            j1: p.j1,
            y_s: p.y_s,
            z: p.z,
            n: p.n,
            mode: p.mode,
            m1: None,
            sigma: None,
            mu: None,
        }
    }
}

impl SamplingConfig {
    pub fn plan(&self) -> SamplingPlan {
        SamplingPlan {
            j1: self.j1,
            y_s: self.y_s,
            z: self.z,
            n: self.n,
            mode: self.mode,
        }
    }
}

impl RunConfig {
    /// Parses TOML text; errors name the offending key path.
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. A relative `input.path` resolves against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let (Some(input), Some(dir)) = (cfg.input.as_mut(), path.parent()) {
            if input.path.is_relative() {
                input.path = dir.join(&input.path);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        match (&self.input, &self.synth) {
            (Some(_), Some(_)) => return bad("set exactly one of [input] and [synth], not both"),
            (None, None) => return bad("set exactly one of [input] and [synth]"),
            _ => {}
        }
        if let Some(s) = &self.synth {
            s.validate()?;
            if s.step_ms != self.ingest.step_ms {
                return bad("synth.step_ms must equal ingest.step_ms");
            }
        }
        let open01 = |v: f64| v > 0.0 && v < 1.0;
        if !open01(self.features.f_lin) || !open01(self.features.f_nonlin) {
            return bad("features.f_lin and features.f_nonlin must lie in (0, 1)");
        }
        if !open01(self.ingest.train_fraction) {
            return bad("ingest.train_fraction must lie in (0, 1)");
        }
        if self.ingest.step_ms <= 0 || !(self.ingest.max_step > 0.0) {
            return bad("ingest.step_ms and ingest.max_step must be positive");
        }
        if self.features.n_trees == 0 || self.features.min_leaf == 0 {
            return bad("features.n_trees and features.min_leaf must be positive");
        }
        if self.train.methods.is_empty() || self.train.feature_sets.is_empty() {
            return bad("train.methods and train.feature_sets must be non-empty");
        }
        if self.train.anfis.epochs == 0 || !(self.train.anfis.learning_rate > 0.0) || self.train.anfis.max_rules == 0 {
            return bad("train.anfis needs epochs >= 1, learning_rate > 0 and max_rules >= 1");
        }
        if !self.train.methods.contains(&self.flag.method) || !self.train.feature_sets.contains(&self.flag.feature_set) {
            return bad("flag.method and flag.feature_set must be among the trained models");
        }
        self.limits.validate()?;
        let s = &self.sampling;
        if s.j1 == 0 || s.y_s == 0 || s.z == 0 || !(s.n > 0.0) {
            return bad("sampling.j1, sampling.y_s, sampling.z and sampling.n must be positive");
        }
        if s.m1.is_some() != s.sigma.is_some() {
            return bad("sampling.m1 and sampling.sigma must be given together");
        }
        Ok(())
    }

    /// Canonical TOML of the effective configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn synth_config(&self) -> Option<SynthConfig> {
        self.synth.clone().map(|mut s| {
            s.seed = self.seed;
            s
        })
    }

    pub fn seeded_train(&self) -> TrainConfig {
        let mut t = self.train.clone();
        t.fcm.seed = self.seed;
        t.gmdh.seed = self.seed;
        t.mlffnn.seed = self.seed;
        t.ga.seed = self.seed;
        t.pso.seed = self.seed;
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "seed = 3\n[synth]\ndays = 1\n";

    #[test]
    fn minimal_synth_config() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.synth_config().unwrap().seed, 3);
        assert_eq!(c.features.f_lin, 0.30);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let err = RunConfig::parse("[synth]\n[train.gmdh]\npresure = 0.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("train.gmdh.presure"), "{msg}");
    }

    #[test]
    fn dotted_keys_accepted() {
        let c = RunConfig::parse("train.gmdh.pressure = 0.5\nsynth.days = 1\n").unwrap();
        assert_eq!(c.train.gmdh.pressure, 0.5);
    }

    #[test]
    fn exactly_one_source() {
        assert!(RunConfig::parse("seed = 1\n").is_err());
        assert!(RunConfig::parse("[input]\npath = \"x.csv\"\n[synth]\n").is_err());
    }

    #[test]
    fn fractions_must_be_open() {
        assert!(RunConfig::parse("[synth]\n[features]\nf_lin = 1.0\n").is_err());
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = RunConfig::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.sampling.z = 201;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.synth.as_mut().unwrap().noise_sd += 1e-9;
        assert_ne!(a.hash(), c.hash());
    }
}
