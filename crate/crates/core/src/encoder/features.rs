use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use twox_hash::XxHash64;

use crate::{Error, Result};

/// Reserved token placed between the two texts of a sentence pair.
pub const PAIR_SEPARATOR: &str = "[SEP]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VectorizerConfig {
    /// Number of hash buckets `D`.
    pub dim: usize,
    pub ngram_max: usize,
    /// Seed of the XXH64 hash applied to each n-gram's UTF-8 bytes.
    pub hash_seed: u64,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        Self {
            dim: 16384,
            ngram_max: 2,
            hash_seed: 0x5_eed0_fa11_u64,
        }
    }
}

impl VectorizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::validation("features.dim", "must be at least 2"));
        }
        if self.ngram_max < 1 {
            return Err(Error::validation("features.ngram_max", "must be at least 1"));
        }
        Ok(())
    }

    pub fn bucket(&self, key: &str) -> usize {
        (XxHash64::oneshot(self.hash_seed, key.as_bytes()) % self.dim as u64) as usize
    }
}

/// Sparse, L2-normalized hashed feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub dim: usize,
    /// Strictly increasing bucket ids, all `< dim`.
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl FeatureVector {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// Lowercased alphanumeric word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn add_ngrams(tokens: &[String], cfg: &VectorizerConfig, counts: &mut BTreeMap<usize, f64>) {
    for n in 1..=cfg.ngram_max {
        for window in tokens.windows(n) {
            *counts.entry(cfg.bucket(&window.join(" "))).or_default() += 1.0;
        }
    }
}

/// Hash word 1..=`ngram_max`-grams of `text` (and `text2`, for pair tasks) into
/// `cfg.dim` buckets. Pair inputs contribute the separator as a unigram and no
/// n-gram spans the boundary.
pub fn vectorize(text: &str, text2: Option<&str>, cfg: &VectorizerConfig) -> FeatureVector {
    let mut counts = BTreeMap::new();
    add_ngrams(&tokenize(text), cfg, &mut counts);
    if let Some(second) = text2 {
        *counts.entry(cfg.bucket(PAIR_SEPARATOR)).or_default() += 1.0;
        add_ngrams(&tokenize(second), cfg, &mut counts);
    }
    let norm = counts.values().map(|c| c * c).sum::<f64>().sqrt();
    let (indices, weights) = counts.into_iter().map(|(i, c)| (i, c / norm)).unzip();
    FeatureVector {
        dim: cfg.dim,
        indices,
        weights,
    }
}
