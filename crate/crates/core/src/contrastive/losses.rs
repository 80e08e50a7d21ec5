use super::{similarity_blocks, ClassBlockedBatch};
use crate::{Error, Result};

/// A loss value with its gradient with respect to every embedding row,
/// indexed `[block][row][dim]` like the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub value: f64,
    pub grad: Vec<Vec<Vec<f64>>>,
}

fn zero_grad(batch: &ClassBlockedBatch) -> Vec<Vec<Vec<f64>>> {
    batch
        .blocks()
        .iter()
        .map(|b| vec![vec![0.0; batch.dim()]; b.len()])
        .collect()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Max-shifted log-sum-exp of `scores` over the entries where `keep` holds,
/// returning the log-sum and the softmax weights (zero where excluded).
fn masked_logsumexp(scores: &[f64], keep: impl Fn(usize) -> bool) -> (f64, Vec<f64>) {
    let max = scores
        .iter()
        .enumerate()
        .filter(|(j, _)| keep(*j))
        .fold(f64::NEG_INFINITY, |m, (_, &s)| m.max(s));
    let mut weights: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(j, &s)| if keep(j) { (s - max).exp() } else { 0.0 })
        .collect();
    let z: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= z);
    (max + z.ln(), weights)
}

/// Positive (intra-class) loss; the self-similarity term is masked exactly.
pub fn loss_pos(batch: &ClassBlockedBatch) -> Result<LossGrad> {
    let tau = batch.tau();
    let c = batch.num_classes() as f64;
    let sims = similarity_blocks(batch);
    let mut grad = zero_grad(batch);
    let mut value = 0.0;

    for (k, block) in batch.blocks().iter().enumerate() {
        let n = block.len();
        if n < 2 {
            return Err(Error::BatchShape(format!("class {} has fewer than 2 samples", block.class)));
        }
        let coef = 1.0 / (c * n as f64);
        let mut class_sum = 0.0;
        for i in 0..n {
            let scores: Vec<f64> = sims.intra[k][i].iter().map(|m| m / tau).collect();
            let (lse, q) = masked_logsumexp(&scores, |p| p != i);
            class_sum += lse - ((n - 1) as f64).ln();
            // d(−coef·L_i)/dh_i = −coef Σ_p q_p h_p / τ, and symmetrically for h_p.
            for p in 0..n {
                if p == i {
                    continue;
                }
                let w = -coef * q[p] / tau;
                let (hi, hp) = (&block.rows[i], &block.rows[p]);
                axpy(w, hp, &mut grad[k][i]);
                axpy(w, hi, &mut grad[k][p]);
            }
        }
        value -= class_sum / n as f64;
    }
    Ok(LossGrad { value: value / c, grad })
}

/// Negative (inter-class) loss; decreases as cross-class similarity decreases.
pub fn loss_neg(batch: &ClassBlockedBatch) -> Result<LossGrad> {
    if batch.num_classes() < 2 {
        return Err(Error::BatchShape("negative loss needs at least 2 classes".into()));
    }
    let tau = batch.tau();
    let c = batch.num_classes() as f64;
    let sims = similarity_blocks(batch);
    let mut grad = zero_grad(batch);
    let mut value = 0.0;
    let blocks = batch.blocks();

    // Column n of N^(k) maps to (block, row) in block order, skipping k.
    let columns = |k: usize| -> Vec<(usize, usize)> {
        blocks
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .flat_map(|(j, b)| (0..b.len()).map(move |r| (j, r)))
            .collect()
    };

    for (k, block) in blocks.iter().enumerate() {
        let n = block.len();
        let cols = columns(k);
        let coef = 1.0 / (c * n as f64);
        let mut class_sum = 0.0;
        for i in 0..n {
            let scores: Vec<f64> = sims.inter[k][i].iter().map(|s| s / tau).collect();
            let (lse, q) = masked_logsumexp(&scores, |_| true);
            class_sum += lse - (cols.len() as f64).ln();
            for (col, &(j, r)) in cols.iter().enumerate() {
                let w = coef * q[col] / tau;
                let hi = block.rows[i].clone();
                axpy(w, &blocks[j].rows[r], &mut grad[k][i]);
                axpy(w, &hi, &mut grad[j][r]);
            }
        }
        value += class_sum / n as f64;
    }
    Ok(LossGrad { value: value / c, grad })
}

/// Mean cross-entropy over samples with the max-shift trick; the gradient is
/// `(softmax − one_hot) / batch_size`.
pub fn cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> Result<(f64, Vec<Vec<f64>>)> {
    if logits.is_empty() || logits.len() != labels.len() {
        return Err(Error::Contract(format!(
            "cross-entropy over {} logit rows and {} labels",
            logits.len(),
            labels.len()
        )));
    }
    let batch = logits.len() as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &label) in logits.iter().zip(labels) {
        if label >= row.len() {
            return Err(Error::Contract(format!(
                "label {label} out of range for {} classes",
                row.len()
            )));
        }
        let (lse, softmax) = masked_logsumexp(row, |_| true);
        total += lse - row[label];
        let mut g: Vec<f64> = softmax.iter().map(|p| p / batch).collect();
        g[label] -= 1.0 / batch;
        grad.push(g);
    }
    Ok((total / batch, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrastive::ClassBlock;

    fn batch(blocks: Vec<Vec<Vec<f64>>>, tau: f64) -> ClassBlockedBatch {
        let blocks = blocks.into_iter().enumerate().map(|(k, r)| ClassBlock::new(k, r)).collect();
        ClassBlockedBatch::new(blocks, tau).unwrap()
    }

    #[test]
    fn pos_identical_rows() {
        let b = batch(vec![vec![vec![1.0, 0.0]; 2], vec![vec![0.0, 1.0]; 2]], 0.5);
        assert!((loss_pos(&b).unwrap().value + 2.0).abs() < 1e-12);
    }

    #[test]
    fn pos_orthogonal_within_class_is_zero() {
        let b = batch(
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
            0.7,
        );
        assert!(loss_pos(&b).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn pos_mixed_fixture() {
        let s3 = 3f64.sqrt() / 2.0;
        let b = batch(
            vec![vec![vec![1.0, 0.0], vec![0.5, s3]], vec![vec![-1.0, 0.0]; 2]],
            0.5,
        );
        assert!((loss_pos(&b).unwrap().value + 1.5).abs() < 1e-12);
    }

    #[test]
    fn neg_fixtures() {
        let ortho = batch(vec![vec![vec![1.0, 0.0]; 2], vec![vec![0.0, 1.0]; 2]], 0.5);
        assert!(loss_neg(&ortho).unwrap().value.abs() < 1e-12);
        let same = batch(vec![vec![vec![1.0, 0.0]; 2], vec![vec![1.0, 0.0]; 2]], 0.5);
        assert!((loss_neg(&same).unwrap().value - 2.0).abs() < 1e-12);
        let opposite = batch(vec![vec![vec![1.0, 0.0]; 2], vec![vec![-1.0, 0.0]; 2]], 0.5);
        assert!((loss_neg(&opposite).unwrap().value + 2.0).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_values() {
        let (l, g) = cross_entropy(&[vec![0.0, 0.0]], &[0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((g[0][0] + 0.5).abs() < 1e-15 && (g[0][1] - 0.5).abs() < 1e-15);
        let (l, _) = cross_entropy(&[vec![1000.0, 0.0]], &[0]).unwrap();
        assert!(l.is_finite() && l.abs() < 1e-12);
        let (l, _) = cross_entropy(&[vec![0.0, 1000.0]], &[0]).unwrap();
        assert!((l - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn cross_entropy_matches_unshifted_formula() {
        let logits: Vec<Vec<f64>> = (0..6)
            .map(|s| (0..4).map(|c| ((s * 4 + c) as f64 * 0.37).sin() * 3.0).collect())
            .collect();
        let labels = [0, 3, 1, 2, 2, 0];
        let naive: f64 = logits
            .iter()
            .zip(&labels)
            .map(|(row, &y)| -(row[y].exp() / row.iter().map(|v| v.exp()).sum::<f64>()).ln())
            .sum::<f64>()
            / 6.0;
        let (l, _) = cross_entropy(&logits, &labels).unwrap();
        assert!((l - naive).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_rejects_bad_labels() {
        assert!(matches!(cross_entropy(&[vec![0.0, 0.0]], &[2]), Err(Error::Contract(_))));
        assert!(cross_entropy(&[], &[]).is_err());
    }
}
