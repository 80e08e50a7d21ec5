use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diffcore::AdamWConfig;
use crate::encoder::VectorizerConfig;
use crate::moo::{PreferenceVector, DEFAULT_EPS_BALANCE};
use crate::paretolab::Solver;
use crate::trainer::GradSuiteConfig;
use crate::pipeline::TsvSchema;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Cross-entropy only.
    Ce,
    /// Cross-entropy plus contrastive losses combined by linear scalarization.
    CeLs,
    /// Cross-entropy plus contrastive losses combined by EPO weights.
    CeEpo,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Ce => "ce",
            Mode::CeLs => "ce_ls",
            Mode::CeEpo => "ce_epo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    FewShot,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Epoch budget for few-shot runs.
    pub epochs: usize,
    /// Epoch budget for full-data runs.
    pub full_epochs: usize,
    /// Validation accuracy is measured every this many steps and after the last.
    pub eval_interval: usize,
    pub dropout: f64,
    pub split: SplitKind,
    /// Training-set size `N` for few-shot splits.
    pub few_shot: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            epochs: 30,
            full_epochs: 3,
            eval_interval: 10,
            dropout: 0.1,
            split: SplitKind::FewShot,
            few_shot: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden: usize,
    pub embed_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: 256, embed_dim: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKindConfig {
    Single,
    Pair,
}

/// Input files and their column layout. Column names left unset take the
/// task's defaults (`sentence`/`label`, or `sentence1`/`sentence2`/`label`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<PathBuf>,
    pub task: TaskKindConfig,
    pub has_header: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text2_column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    pub labels: Vec<String>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            train: None,
            validation: None,
            task: TaskKindConfig::Single,
            has_header: true,
            text_column: None,
            text2_column: None,
            label_column: None,
            labels: vec![],
        }
    }
}

impl DataConfig {
    pub fn schema(&self) -> TsvSchema {
        let base = match self.task {
            TaskKindConfig::Single => TsvSchema::single(),
            TaskKindConfig::Pair => TsvSchema::pair(),
        };
        TsvSchema {
            has_header: self.has_header,
            text_column: self.text_column.clone().unwrap_or(base.text_column),
            text2_column: match self.task {
                TaskKindConfig::Single => None,
                TaskKindConfig::Pair => self.text2_column.clone().or(base.text2_column),
            },
            label_column: self.label_column.clone().unwrap_or(base.label_column),
            labels: self.labels.clone(),
        }
    }

    pub fn paths(&self) -> Result<(PathBuf, PathBuf)> {
        match (&self.train, &self.validation) {
            (Some(t), Some(v)) => Ok((t.clone(), v.clone())),
            (None, _) => Err(Error::validation("data.train", "a training file is required")),
            (_, None) => Err(Error::validation("data.validation", "a validation file is required")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepGrid {
    pub tau: Vec<f64>,
    pub lambda: Vec<f64>,
    pub r1: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        let grid = vec![0.1, 0.3, 0.5, 0.7, 0.9];
        Self {
            tau: grid.clone(),
            lambda: grid,
            r1: vec![0.1, 0.3, 0.5],
        }
    }
}

/// Toy-lab run settings; the preference and `eps_balance` come from the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyConfig {
    pub solver: Solver,
    pub dim: usize,
    pub steps: usize,
    pub step_size: f64,
    pub init_seed: u64,
    pub max_radius: f64,
    pub front_samples: usize,
    pub slack: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            solver: Solver::Epo,
            dim: 20,
            steps: 5000,
            step_size: 0.05,
            init_seed: 0,
            max_radius: 2.0,
            front_samples: 2001,
            slack: 1e-3,
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    pub tau: f64,
    pub lambda: f64,
    /// Preference vector; unused in `ce` mode.
    pub r: Vec<f64>,
    pub eps_balance: f64,
    pub seeds: Vec<u64>,
    pub optim: AdamWConfig,
    pub train: TrainConfig,
    pub features: VectorizerConfig,
    pub model: ModelConfig,
    pub data: DataConfig,
    pub sweep: SweepGrid,
    pub toy: ToyConfig,
    pub gradcheck: GradSuiteConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::CeEpo,
            tau: 0.3,
            lambda: 0.3,
            r: vec![0.1, 0.9],
            eps_balance: DEFAULT_EPS_BALANCE,
            seeds: (0..10).collect(),
            optim: AdamWConfig::default(),
            train: TrainConfig::default(),
            features: VectorizerConfig::default(),
            model: ModelConfig::default(),
            data: DataConfig::default(),
            sweep: SweepGrid::default(),
            toy: ToyConfig::default(),
            gradcheck: GradSuiteConfig::default(),
        }
    }
}

fn unit_interval(key: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::validation(key, format!("{v} is outside [0, 1]")))
    }
}

impl RunConfig {
    pub fn preference(&self) -> Result<PreferenceVector> {
        let r = PreferenceVector::new(self.r.clone())?;
        if r.len() != 2 {
            return Err(Error::validation("r", "exactly two components are needed"));
        }
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::validation("tau", "must be positive and finite"));
        }
        unit_interval("lambda", self.lambda)?;
        match self.mode {
            Mode::Ce => {}
            Mode::CeLs => {
                self.preference()?;
            }
            Mode::CeEpo => self.preference()?.require_positive()?,
        }
        if !(self.eps_balance > 0.0 && self.eps_balance.is_finite()) {
            return Err(Error::validation("eps_balance", "must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::validation("seeds", "at least one seed is needed"));
        }
        self.optim.validate()?;
        let t = &self.train;
        if t.batch_size < 4 {
            return Err(Error::validation("train.batch_size", "must be at least 4"));
        }
        for (key, v) in [
            ("train.epochs", t.epochs),
            ("train.full_epochs", t.full_epochs),
            ("train.eval_interval", t.eval_interval),
        ] {
            if v == 0 {
                return Err(Error::validation(key, "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&t.dropout) {
            return Err(Error::validation("train.dropout", "must lie in [0, 1)"));
        }
        if t.few_shot < 4 {
            return Err(Error::validation("train.few_shot", "must be at least 4"));
        }
        self.features.validate()?;
        if self.model.hidden == 0 {
            return Err(Error::validation("model.hidden", "must be positive"));
        }
        if self.model.embed_dim == 0 {
            return Err(Error::validation("model.embed_dim", "must be positive"));
        }
        let s = &self.sweep;
        for (key, grid) in [("sweep.tau", &s.tau), ("sweep.lambda", &s.lambda), ("sweep.r1", &s.r1)] {
            if grid.is_empty() {
                return Err(Error::validation(key, "grid must not be empty"));
            }
        }
        if let Some(v) = s.tau.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::validation("sweep.tau", format!("{v} is not positive")));
        }
        for v in &s.lambda {
            unit_interval("sweep.lambda", *v)?;
        }
        for v in &s.r1 {
            unit_interval("sweep.r1", *v)?;
        }
        let toy = &self.toy;
        if toy.dim == 0 {
            return Err(Error::validation("toy.dim", "must be positive"));
        }
        if toy.steps == 0 {
            return Err(Error::validation("toy.steps", "must be positive"));
        }
        if !(toy.step_size > 0.0 && toy.step_size.is_finite()) {
            return Err(Error::validation("toy.step_size", "must be positive"));
        }
        if !(toy.max_radius >= 0.0 && toy.max_radius.is_finite()) {
            return Err(Error::validation("toy.max_radius", "must be non-negative"));
        }
        if toy.front_samples < 2 {
            return Err(Error::validation("toy.front_samples", "must be at least 2"));
        }
        if !(toy.slack >= 0.0) {
            return Err(Error::validation("toy.slack", "must be non-negative"));
        }
        let g = &self.gradcheck;
        if g.batches == 0 || g.probes == 0 {
            return Err(Error::validation("gradcheck.probes", "batches and probes must be positive"));
        }
        if !(g.h > 0.0) {
            return Err(Error::validation("gradcheck.h", "must be positive"));
        }
        if !(g.tau > 0.0) {
            return Err(Error::validation("gradcheck.tau", "must be positive"));
        }
        unit_interval("gradcheck.lambda", g.lambda)?;
        if g.input_dim < 2 || g.hidden == 0 || g.embed_dim == 0 {
            return Err(Error::validation("gradcheck.input_dim", "sizes must be positive"));
        }
        if !(0.0..1.0).contains(&g.dropout) {
            return Err(Error::validation("gradcheck.dropout", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Epoch budget for the configured split.
    pub fn epoch_budget(&self) -> usize {
        match self.train.split {
            SplitKind::FewShot => self.train.epochs,
            SplitKind::Full => self.train.full_epochs,
        }
    }
}
