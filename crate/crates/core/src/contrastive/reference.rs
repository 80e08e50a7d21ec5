//! Literal nested-loop evaluation of the positive and negative losses, kept
//! deliberately naive (no Gram matrices, no max shift) as a test oracle.

use super::{ClassBlockedBatch, LossVector};
use crate::{Error, Result};

/// Returns a `LossVector` with `pos` and `neg` filled and `ce = 0`.
#[allow(clippy::needless_range_loop)]
pub fn naive_losses(batch: &ClassBlockedBatch) -> Result<LossVector> {
    let blocks = batch.blocks();
    let tau = batch.tau();
    let c = blocks.len() as f64;
    if blocks.len() < 2 {
        return Err(Error::BatchShape("need at least 2 classes".into()));
    }

    let mut pos = 0.0;
    for block in blocks {
        let n = block.rows.len();
        if n < 2 {
            return Err(Error::BatchShape("class with fewer than 2 samples".into()));
        }
        let mut per_class = 0.0;
        for i in 0..n {
            let mut inner = 0.0;
            for p in 0..n {
                if p != i {
                    let mut sim = 0.0;
                    for t in 0..batch.dim() {
                        sim += block.rows[i][t] * block.rows[p][t];
                    }
                    inner += (sim / tau).exp();
                }
            }
            per_class += (inner / (n - 1) as f64).ln();
        }
        pos += per_class / n as f64;
    }

    let mut neg = 0.0;
    for (k, block) in blocks.iter().enumerate() {
        let n = block.rows.len();
        let mut per_class = 0.0;
        for i in 0..n {
            let mut inner = 0.0;
            let mut count = 0usize;
            for (j, other) in blocks.iter().enumerate() {
                if j == k {
                    continue;
                }
                for hn in &other.rows {
                    let mut sim = 0.0;
                    for t in 0..batch.dim() {
                        sim += block.rows[i][t] * hn[t];
                    }
                    inner += (sim / tau).exp();
                    count += 1;
                }
            }
            per_class += (inner / count as f64).ln();
        }
        neg += per_class / n as f64;
    }

    Ok(LossVector {
        pos: -pos / c,
        neg: neg / c,
        ce: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrastive::ClassBlock;

    #[test]
    fn hand_fixtures() {
        let mk = |a: Vec<Vec<f64>>, b: Vec<Vec<f64>>| {
            ClassBlockedBatch::new(vec![ClassBlock::new(0, a), ClassBlock::new(1, b)], 0.5).unwrap()
        };
        let l = naive_losses(&mk(vec![vec![1.0, 0.0]; 2], vec![vec![0.0, 1.0]; 2])).unwrap();
        assert!((l.pos + 2.0).abs() < 1e-12);
        let l = naive_losses(&mk(vec![vec![1.0, 0.0]; 2], vec![vec![1.0, 0.0]; 2])).unwrap();
        assert!((l.neg - 2.0).abs() < 1e-12);
        let l = naive_losses(&mk(vec![vec![1.0, 0.0]; 2], vec![vec![-1.0, 0.0]; 2])).unwrap();
        assert!((l.neg + 2.0).abs() < 1e-12);
    }
}
