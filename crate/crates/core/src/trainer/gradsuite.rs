use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contrastive::{blended_objectives, cross_entropy, loss_neg, loss_pos, ClassBlock, ClassBlockedBatch, LossVector};
use crate::diffcore::{finite_diff_check, init_params, ParamVector, ProbeSpec};
use crate::encoder::{vectorize, Architecture, Encoder, FeatureVector, ForwardMode, VectorizerConfig};
use crate::{seeding, Result};

/// Finite-difference check of every training objective through the encoder
/// on random class-blocked batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradSuiteConfig {
    pub batches: usize,
    pub probes: usize,
    pub h: f64,
    pub seed: u64,
    pub tau: f64,
    pub lambda: f64,
    pub input_dim: usize,
    pub hidden: usize,
    pub embed_dim: usize,
    pub dropout: f64,
}

impl Default for GradSuiteConfig {
    fn default() -> Self {
        Self {
            batches: 20,
            probes: 50,
            h: 1e-5,
            seed: 0,
            tau: 0.3,
            lambda: 0.3,
            input_dim: 64,
            hidden: 16,
            embed_dim: 8,
            dropout: 0.1,
        }
    }
}

pub const OBJECTIVES: [&str; 5] = ["pos", "neg", "ce", "blend_pos", "blend_neg"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradSuiteReport {
    /// Worst relative error per objective, in [`OBJECTIVES`] order.
    pub max_relative_error: Vec<(String, f64)>,
    pub batches: usize,
    pub probes_per_batch: usize,
}

impl GradSuiteReport {
    pub fn worst(&self) -> f64 {
        self.max_relative_error.iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }
}

struct Sample {
    features: FeatureVector,
    class: usize,
    dropout_seed: u64,
}

type Evaluation = (LossVector, Vec<crate::encoder::EncoderOutput>, Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>);

fn losses(encoder: &Encoder, params: &ParamVector, samples: &[Sample], classes: usize, tau: f64) -> Result<Evaluation> {
    let outputs = samples
        .iter()
        .map(|s| encoder.forward(&s.features, params, ForwardMode::Train { dropout_seed: s.dropout_seed }))
        .collect::<Result<Vec<_>>>()?;
    let blocks = (0..classes)
        .map(|k| {
            let rows = samples.iter().zip(&outputs).filter(|(s, _)| s.class == k).map(|(_, o)| o.embedding.clone()).collect();
            ClassBlock::new(k, rows)
        })
        .collect();
    let batch = ClassBlockedBatch::new(blocks, tau)?;
    let pos = loss_pos(&batch)?;
    let neg = loss_neg(&batch)?;
    let logits: Vec<Vec<f64>> = outputs.iter().map(|o| o.logits.clone()).collect();
    let labels: Vec<usize> = samples.iter().map(|s| s.class).collect();
    let (ce, d_logits) = cross_entropy(&logits, &labels)?;
    Ok((LossVector { pos: pos.value, neg: neg.value, ce }, outputs, pos.grad, neg.grad, d_logits))
}

fn objective_value(which: usize, l: &LossVector, lambda: f64) -> f64 {
    let (b1, b2) = blended_objectives(l, lambda);
    [l.pos, l.neg, l.ce, b1, b2][which]
}

pub fn gradient_suite(cfg: &GradSuiteConfig) -> Result<GradSuiteReport> {
    let vcfg = VectorizerConfig { dim: cfg.input_dim, ngram_max: 1, ..Default::default() };
    let mut worst = [0.0f64; 5];
    for b in 0..cfg.batches {
        let mut rng = seeding::rng(cfg.seed, &[0x6C, b as u64]);
        let classes = rng.random_range(2..=3);
        let arch = Architecture {
            input_dim: cfg.input_dim,
            hidden: cfg.hidden,
            embed_dim: cfg.embed_dim,
            classes,
            dropout: cfg.dropout,
        };
        let encoder = Encoder::new(arch)?;
        let params = init_params(encoder.layout(), seeding::derive(cfg.seed, &[0x6C, b as u64, 1]))?;

        let mut samples = Vec::new();
        for k in 0..classes {
            for _ in 0..rng.random_range(2..=5) {
                let words: Vec<String> = (0..rng.random_range(3..=8)).map(|_| format!("w{}", rng.random_range(0..40))).collect();
                samples.push(Sample {
                    features: vectorize(&words.join(" "), None, &vcfg),
                    class: k,
                    dropout_seed: rng.random(),
                });
            }
        }
        samples.retain(|s| !s.features.is_empty());

        let (_, outputs, g_pos, g_neg, d_logits) = losses(&encoder, &params, &samples, classes, cfg.tau)?;
        let caches: Vec<_> = outputs.iter().map(|o| &o.cache).collect();
        // Embedding-gradient rows follow the class-block order, not sample order.
        let reorder = |g: Vec<Vec<Vec<f64>>>| -> Vec<Vec<f64>> {
            let mut by_class: Vec<std::vec::IntoIter<Vec<f64>>> = g.into_iter().map(|v| v.into_iter()).collect();
            samples.iter().map(|s| by_class[s.class].next().unwrap()).collect()
        };
        let up_pos = reorder(g_pos);
        let up_neg = reorder(g_neg);
        let pos = encoder.backward(&caches, Some(&up_pos), None, &params)?;
        let neg = encoder.backward(&caches, Some(&up_neg), None, &params)?;
        let ce = encoder.backward(&caches, None, Some(&d_logits), &params)?;
        let lam = cfg.lambda;
        let blend = |g: &[f64]| -> Vec<f64> { g.iter().zip(&ce).map(|(a, c)| lam * a + (1.0 - lam) * c).collect() };
        let analytic = [pos.clone(), neg.clone(), ce.clone(), blend(&pos), blend(&neg)];

        // Probe only coordinates the batch can influence.
        let w1 = encoder.layout().segment("hidden.weight").unwrap();
        let mut active: Vec<usize> = samples.iter().flat_map(|s| s.features.indices.iter().copied()).collect();
        active.sort_unstable();
        active.dedup();
        let mut pool: Vec<usize> = active
            .iter()
            .flat_map(|&j| (0..cfg.hidden).map(move |k| w1.offset + j * cfg.hidden + k))
            .collect();
        pool.extend(w1.offset + w1.len()..params.len());

        for (which, grad) in analytic.iter().enumerate() {
            let objective = |p: &ParamVector| -> Result<f64> {
                let (l, ..) = losses(&encoder, p, &samples, classes, cfg.tau)?;
                Ok(objective_value(which, &l, lam))
            };
            let spec = ProbeSpec {
                pool: Some(pool.clone()),
                ..ProbeSpec::new(cfg.probes, cfg.h, seeding::derive(cfg.seed, &[0x6C, b as u64, 2, which as u64]))
            };
            let report = finite_diff_check(objective, &params, grad, &spec)?;
            worst[which] = worst[which].max(report.max_relative_error);
        }
    }
    Ok(GradSuiteReport {
        max_relative_error: OBJECTIVES.iter().map(|s| s.to_string()).zip(worst).collect(),
        batches: cfg.batches,
        probes_per_batch: cfg.probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let report = gradient_suite(&GradSuiteConfig { batches: 3, probes: 20, ..Default::default() }).unwrap();
        assert_eq!(report.max_relative_error.len(), 5);
        assert!(report.worst() < 1e-4, "{report:?}");
    }
}
