use super::ClassBlockedBatch;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-class Gram blocks: `intra[k] = H_k H_kᵀ` and `inter[k]` the horizontal
/// concatenation of `H_k H_k'ᵀ` over the other classes, in block order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityBlocks {
    pub intra: Vec<Vec<Vec<f64>>>,
    pub inter: Vec<Vec<Vec<f64>>>,
}

pub fn similarity_blocks(batch: &ClassBlockedBatch) -> SimilarityBlocks {
    let blocks = batch.blocks();
    let intra = blocks
        .iter()
        .map(|b| {
            b.rows
                .iter()
                .map(|hi| b.rows.iter().map(|hp| dot(hi, hp)).collect())
                .collect()
        })
        .collect();
    let inter = blocks
        .iter()
        .enumerate()
        .map(|(k, b)| {
            b.rows
                .iter()
                .map(|hi| {
                    blocks
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != k)
                        .flat_map(|(_, other)| other.rows.iter().map(|hn| dot(hi, hn)))
                        .collect()
                })
                .collect()
        })
        .collect();
    SimilarityBlocks { intra, inter }
}
