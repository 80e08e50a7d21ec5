use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::step::{train_step, GradientSet, StepRecord, StepSettings};
use super::{Mode, RunConfig, SplitKind};
use crate::diffcore::{init_params, OptimizerState, ParamVector};
use crate::encoder::{vectorize, Architecture, Encoder, FeatureVector, ForwardMode, VectorizerConfig};
use crate::pipeline::{
    load_tsv, make_fewshot_split, make_full_split, sample_class_batch, Dataset, IdSet, Source, Split,
};
use crate::{seeding, Error, Result};

/// Both input files with their features computed once.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub validation: Dataset,
    pub train_features: Vec<FeatureVector>,
    pub validation_features: Vec<FeatureVector>,
}

fn featurize(d: &Dataset, cfg: &VectorizerConfig) -> Vec<FeatureVector> {
    d.rows.iter().map(|r| vectorize(&r.text, r.text2.as_deref(), cfg)).collect()
}

impl PreparedData {
    /// `validation` must use the same label ids as `train`.
    pub fn new(train: Dataset, validation: Dataset, features: &VectorizerConfig) -> Result<Self> {
        if train.labels != validation.labels {
            return Err(Error::Data(format!(
                "validation labels {:?} do not match training labels {:?}",
                validation.labels, train.labels
            )));
        }
        if train.kind != validation.kind {
            return Err(Error::Data("training and validation files are different task kinds".into()));
        }
        Ok(Self {
            train_features: featurize(&train, features),
            validation_features: featurize(&validation, features),
            train,
            validation,
        })
    }

    /// Load both files; the validation file reuses the training label order.
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let (train_path, val_path) = cfg.data.paths()?;
        let schema = cfg.data.schema();
        let train = load_tsv(&train_path, &schema)?;
        let val_schema = crate::pipeline::TsvSchema { labels: train.labels.clone(), ..schema };
        let validation = load_tsv(&val_path, &val_schema)?;
        Self::new(train, validation, &cfg.features)
    }

    pub fn dataset(&self, source: Source) -> (&Dataset, &[FeatureVector]) {
        match source {
            Source::Train => (&self.train, &self.train_features),
            Source::Validation => (&self.validation, &self.validation_features),
        }
    }

    /// Combined digest of both files.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.train.digest());
        h.update(self.validation.digest());
        hex::encode(h.finalize())
    }

    pub fn split(&self, cfg: &RunConfig, seed: u64) -> Result<Split> {
        match cfg.train.split {
            SplitKind::FewShot => make_fewshot_split(&self.train, &self.validation, cfg.train.few_shot, seed),
            SplitKind::Full => make_full_split(&self.train, &self.validation, seed),
        }
    }
}

fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = k;
        }
    }
    best
}

/// Eval-mode top-1 accuracy over `ids`; ties go to the smaller class id.
pub fn evaluate(encoder: &Encoder, params: &ParamVector, data: &PreparedData, ids: &IdSet) -> Result<f64> {
    if ids.ids.is_empty() {
        return Err(Error::Contract("evaluation needs at least one example".into()));
    }
    let (dataset, features) = data.dataset(ids.source);
    let mut correct = 0usize;
    for &id in &ids.ids {
        let out = encoder.forward(&features[id], params, ForwardMode::Eval)?;
        if argmax(&out.logits) == dataset.rows[id].label {
            correct += 1;
        }
    }
    Ok(correct as f64 / ids.ids.len() as f64)
}

/// Eval-mode embeddings as `(id, label, embedding)` rows.
pub fn embed(
    encoder: &Encoder,
    params: &ParamVector,
    data: &PreparedData,
    ids: &IdSet,
) -> Result<Vec<(usize, usize, Vec<f64>)>> {
    let (dataset, features) = data.dataset(ids.source);
    ids.ids
        .iter()
        .map(|&id| {
            let out = encoder.forward(&features[id], params, ForwardMode::Eval)?;
            Ok((id, dataset.rows[id].label, out.embedding))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: usize,
    pub validation_accuracy: f64,
}

/// The outcome of one completed seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub split: Split,
    pub steps: Vec<StepRecord>,
    pub evals: Vec<EvalRecord>,
    /// Step after which the best validation accuracy was measured.
    pub best_step: usize,
    pub best_validation_accuracy: f64,
    pub test_accuracy: f64,
    pub best_params: ParamVector,
    pub architecture: Architecture,
}

impl SeedRun {
    pub fn checkpoint_meta(&self, cfg_digest: &str, features: &VectorizerConfig) -> BTreeMap<String, String> {
        let a = &self.architecture;
        BTreeMap::from([
            ("hash_seed".to_string(), features.hash_seed.to_string()),
            ("ngram_max".to_string(), features.ngram_max.to_string()),
            ("config_digest".to_string(), cfg_digest.to_string()),
            ("seed".to_string(), self.seed.to_string()),
            ("step".to_string(), self.best_step.to_string()),
            ("input_dim".to_string(), a.input_dim.to_string()),
            ("hidden".to_string(), a.hidden.to_string()),
            ("embed_dim".to_string(), a.embed_dim.to_string()),
            ("classes".to_string(), a.classes.to_string()),
            ("dropout".to_string(), a.dropout.to_string()),
        ])
    }
}

pub fn architecture(cfg: &RunConfig, classes: usize) -> Architecture {
    Architecture {
        input_dim: cfg.features.dim,
        hidden: cfg.model.hidden,
        embed_dim: cfg.model.embed_dim,
        classes,
        dropout: cfg.train.dropout,
    }
}

pub fn step_settings(cfg: &RunConfig) -> Result<StepSettings> {
    Ok(StepSettings {
        mode: cfg.mode,
        tau: cfg.tau,
        lambda: cfg.lambda,
        r: match cfg.mode {
            Mode::Ce => None,
            _ => Some(cfg.preference()?),
        },
        eps_balance: cfg.eps_balance,
    })
}

/// Train one seed for the epoch budget, keeping the parameters with the best
/// validation accuracy (ties keep the earlier step), and score them on test.
pub fn run_seed(cfg: &RunConfig, data: &PreparedData, seed: u64) -> Result<SeedRun> {
    cfg.validate()?;
    let split = data.split(cfg, seed)?;
    let arch = architecture(cfg, data.train.num_classes());
    let encoder = Encoder::new(arch)?;
    let mut params = init_params(encoder.layout(), seeding::derive(seed, &[seeding::STREAM_INIT]))?;
    let mut state = OptimizerState::new(params.len(), cfg.optim);
    let settings = step_settings(cfg)?;
    let groups = data
        .train
        .ids_by_class(split.train.ids.iter().copied());

    let steps_per_epoch = split.train.ids.len().div_ceil(cfg.train.batch_size);
    let total = steps_per_epoch * cfg.epoch_budget();
    let mut steps = Vec::with_capacity(total);
    let mut evals = Vec::new();
    let mut best: Option<(usize, f64, ParamVector)> = None;
    let mut grads = GradientSet::zeros(params.len());

    for step in 0..total {
        let step_seed = seeding::derive(seed, &[seeding::STREAM_BATCH, step as u64]);
        let plan = sample_class_batch(&groups, cfg.train.batch_size, step_seed)?;
        steps.push(train_step(
            &encoder,
            &mut params,
            &mut state,
            &plan,
            &data.train_features,
            &settings,
            step,
            step_seed,
            &mut grads,
        )?);
        let done = step + 1;
        if done % cfg.train.eval_interval == 0 || done == total {
            let acc = evaluate(&encoder, &params, data, &split.validation)?;
            evals.push(EvalRecord { step: done, validation_accuracy: acc });
            if best.as_ref().is_none_or(|(_, b, _)| acc > *b) {
                best = Some((done, acc, params.clone()));
            }
        }
    }
    let (best_step, best_validation_accuracy, best_params) =
        best.ok_or_else(|| Error::Data("training set produced no steps".into()))?;
    let test_accuracy = evaluate(&encoder, &best_params, data, &split.test)?;
    Ok(SeedRun {
        seed,
        split,
        steps,
        evals,
        best_step,
        best_validation_accuracy,
        test_accuracy,
        best_params,
        architecture: arch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_validation_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// Aggregate over the completed seeds of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_test_accuracy: Option<f64>,
    pub std_test_accuracy: Option<f64>,
    pub mean_validation_accuracy: Option<f64>,
    pub completed: usize,
    pub failed: usize,
    /// Only one seed completed, so the standard deviation is 0 by convention.
    pub single_seed: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub mode: Mode,
    pub config_digest: String,
    pub dataset_digest: String,
    pub seeds: Vec<SeedSummary>,
    pub aggregate: Aggregate,
    /// Completed runs in seed order; failed seeds are absent.
    pub runs: Vec<SeedRun>,
}

/// Run every configured seed (in parallel) and aggregate test accuracy.
pub fn run_experiment(cfg: &RunConfig, data: &PreparedData) -> Result<RunReport> {
    cfg.validate()?;
    let outcomes: Vec<Result<SeedRun>> = cfg.seeds.par_iter().map(|&s| run_seed(cfg, data, s)).collect();
    let mut seeds = Vec::with_capacity(outcomes.len());
    let mut runs = Vec::new();
    for (&seed, outcome) in cfg.seeds.iter().zip(outcomes) {
        match outcome {
            Ok(run) => {
                seeds.push(SeedSummary {
                    seed,
                    status: "ok".into(),
                    test_accuracy: Some(run.test_accuracy),
                    best_validation_accuracy: Some(run.best_validation_accuracy),
                    best_step: Some(run.best_step),
                    error: None,
                });
                runs.push(run);
            }
            Err(e) => seeds.push(SeedSummary {
                seed,
                status: "failed".into(),
                test_accuracy: None,
                best_validation_accuracy: None,
                best_step: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let tests: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
    let vals: Vec<f64> = runs.iter().map(|r| r.best_validation_accuracy).collect();
    let test_stats = mean_std(&tests);
    let aggregate = Aggregate {
        mean_test_accuracy: test_stats.map(|s| s.0),
        std_test_accuracy: test_stats.map(|s| s.1),
        mean_validation_accuracy: mean_std(&vals).map(|s| s.0),
        completed: runs.len(),
        failed: seeds.len() - runs.len(),
        single_seed: runs.len() == 1,
    };
    Ok(RunReport {
        mode: cfg.mode,
        config_digest: cfg.digest(),
        dataset_digest: data.digest(),
        seeds,
        aggregate,
        runs,
    })
}

/// A trained encoder with the featurizer it was trained with.
#[derive(Debug, Clone)]
pub struct Model {
    pub encoder: Encoder,
    pub params: ParamVector,
    pub features: VectorizerConfig,
    pub meta: BTreeMap<String, String>,
}

impl Model {
    /// Rebuild a model from a checkpoint written by a training run.
    pub fn load(path: &Path) -> Result<Self> {
        let ckpt = crate::diffcore::read_checkpoint(path)?;
        let field = |key: &str| -> Result<&str> {
            ckpt.meta
                .get(key)
                .map(String::as_str)
                .ok_or_else(|| Error::Format(format!("checkpoint metadata lacks `{key}`")))
        };
        fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Format(format!("checkpoint `{key}` has malformed value `{v}`")))
        }
        let get = |key: &str| -> Result<usize> { parse(key, field(key)?) };
        let arch = Architecture {
            input_dim: get("input_dim")?,
            hidden: get("hidden")?,
            embed_dim: get("embed_dim")?,
            classes: get("classes")?,
            dropout: parse("dropout", field("dropout")?)?,
        };
        let features = VectorizerConfig {
            dim: arch.input_dim,
            ngram_max: get("ngram_max")?,
            hash_seed: parse("hash_seed", field("hash_seed")?)?,
        };
        features.validate()?;
        let encoder = Encoder::new(arch)?;
        if ckpt.params.layout() != encoder.layout() {
            return Err(Error::Format("checkpoint layout does not match its recorded architecture".into()));
        }
        Ok(Self { encoder, params: ckpt.params, features, meta: ckpt.meta })
    }

    pub fn seed(&self) -> Option<u64> {
        self.meta.get("seed").and_then(|s| s.parse().ok())
    }

    /// Eval-mode embedding and logits of raw text.
    pub fn infer(&self, text: &str, text2: Option<&str>) -> Result<(Vec<f64>, Vec<f64>)> {
        let f = vectorize(text, text2, &self.features);
        let out = self.encoder.forward(&f, &self.params, ForwardMode::Eval)?;
        Ok((out.embedding, out.logits))
    }

    /// Predicted class id; ties go to the smaller id.
    pub fn predict(&self, text: &str, text2: Option<&str>) -> Result<usize> {
        Ok(argmax(&self.infer(text, text2)?.1))
    }
}
