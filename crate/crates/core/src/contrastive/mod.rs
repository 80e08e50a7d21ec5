//! Class-blocked similarity matrices and the contrastive objectives.
//!
//! For a batch split into per-class blocks `H_k` of unit-norm rows, the
//! positive loss rewards intra-class similarity and the negative loss
//! penalizes inter-class similarity:
//!
//! ```text
//! pos = −(1/C) Σ_k (1/N_k) Σ_i log[ (1/(N_k−1)) Σ_{p≠i} exp(M⁽ᵏ⁾_ip / τ) ]
//! neg = +(1/C) Σ_k (1/N_k) Σ_i log[ (1/N̄_k)     Σ_n   exp(N⁽ᵏ⁾_in / τ) ]
//! ```
//!
//! with `M⁽ᵏ⁾ = H_k H_kᵀ`, `N⁽ᵏ⁾ = [H_k H_k'ᵀ]_{k'≠k}` and `C` the number of
//! classes present in the batch. Gradients are taken with respect to the unit
//! rows; chaining through the normalization belongs to the encoder.

mod losses;
mod reference;
mod similarity;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use losses::{cross_entropy, loss_neg, loss_pos, LossGrad};
pub use reference::naive_losses;
pub use similarity::{similarity_blocks, SimilarityBlocks};

/// Unit-norm embeddings of the samples of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassBlock {
    pub class: usize,
    pub rows: Vec<Vec<f64>>,
    pub ids: Vec<usize>,
}

impl ClassBlock {
    pub fn new(class: usize, rows: Vec<Vec<f64>>) -> Self {
        let ids = (0..rows.len()).collect();
        Self { class, rows, ids }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// A mini-batch organized by class, with its temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassBlockedBatch {
    blocks: Vec<ClassBlock>,
    tau: f64,
    dim: usize,
}

impl ClassBlockedBatch {
    /// Validates: τ > 0, ≥ 2 distinct classes, every block has ≥ 2 rows of a
    /// common dimension, every row unit-norm to 1e-9.
    pub fn new(blocks: Vec<ClassBlock>, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::validation("tau", format!("temperature must be positive, got {tau}")));
        }
        if blocks.len() < 2 {
            return Err(Error::BatchShape(format!(
                "negative loss needs at least 2 classes, batch has {}",
                blocks.len()
            )));
        }
        let dim = blocks[0].rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::BatchShape("embedding dimension is zero".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in &blocks {
            if !seen.insert(b.class) {
                return Err(Error::BatchShape(format!("class {} appears in two blocks", b.class)));
            }
            if b.rows.len() < 2 {
                return Err(Error::BatchShape(format!(
                    "class {} has {} sample(s); positive loss needs at least 2",
                    b.class,
                    b.rows.len()
                )));
            }
            if b.ids.len() != b.rows.len() {
                return Err(Error::BatchShape(format!("class {} ids/rows length mismatch", b.class)));
            }
            for row in &b.rows {
                if row.len() != dim {
                    return Err(Error::BatchShape(format!(
                        "class {} has a row of dimension {} (expected {dim})",
                        b.class,
                        row.len()
                    )));
                }
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !((norm - 1.0).abs() <= 1e-9) {
                    return Err(Error::BatchShape(format!(
                        "class {} has a row of norm {norm}, expected unit norm",
                        b.class
                    )));
                }
            }
        }
        Ok(Self { blocks, tau, dim })
    }

    pub fn blocks(&self) -> &[ClassBlock] {
        &self.blocks
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.blocks.len()
    }

    /// Total sample count outside block `k` (N̄_k).
    pub fn complement_size(&self, k: usize) -> usize {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, b)| b.len())
            .sum()
    }
}

/// The per-step objective values: positive and negative contrastive losses
/// and cross-entropy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossVector {
    pub pos: f64,
    pub neg: f64,
    pub ce: f64,
}

impl LossVector {
    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.neg.is_finite() && self.ce.is_finite()
    }
}

/// `(λ·pos + (1−λ)·ce, λ·neg + (1−λ)·ce)`.
pub fn blended_objectives(loss: &LossVector, lambda: f64) -> (f64, f64) {
    (
        lambda * loss.pos + (1.0 - lambda) * loss.ce,
        lambda * loss.neg + (1.0 - lambda) * loss.ce,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blends_collapse_at_the_ends() {
        let l = LossVector { pos: -1.0, neg: 0.5, ce: 0.7 };
        assert_eq!(blended_objectives(&l, 0.0), (0.7, 0.7));
        assert_eq!(blended_objectives(&l, 1.0), (-1.0, 0.5));
        let (a, b) = blended_objectives(&l, 0.3);
        assert!((a - 0.19).abs() < 1e-12);
        assert!((b - 0.64).abs() < 1e-12);
    }

    #[test]
    fn batch_validation() {
        let unit = |x: f64, y: f64| vec![x, y];
        let ok = vec![
            ClassBlock::new(0, vec![unit(1.0, 0.0), unit(0.0, 1.0)]),
            ClassBlock::new(1, vec![unit(1.0, 0.0), unit(1.0, 0.0)]),
        ];
        assert!(ClassBlockedBatch::new(ok.clone(), 0.5).is_ok());
        assert!(matches!(ClassBlockedBatch::new(ok.clone(), 0.0), Err(Error::Validation { .. })));
        assert!(matches!(
            ClassBlockedBatch::new(ok[..1].to_vec(), 0.5),
            Err(Error::BatchShape(_))
        ));
        let mut singleton = ok.clone();
        singleton[1].rows.pop();
        singleton[1].ids.pop();
        assert!(matches!(ClassBlockedBatch::new(singleton, 0.5), Err(Error::BatchShape(_))));
        let mut not_unit = ok.clone();
        not_unit[0].rows[0] = vec![1.0, 1e-4];
        assert!(matches!(ClassBlockedBatch::new(not_unit, 0.5), Err(Error::BatchShape(_))));
        let mut dup = ok;
        dup[1].class = 0;
        assert!(ClassBlockedBatch::new(dup, 0.5).is_err());
    }
}
