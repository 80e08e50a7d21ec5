use rand::seq::index;
use rand::Rng;

use crate::{seeding, Error, Result};

/// Row ids per class for one mini-batch, in class order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub blocks: Vec<(usize, Vec<usize>)>,
}

impl BatchPlan {
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|(_, ids)| ids.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draw a mini-batch with one block per class.
///
/// Each class gets `total_batch / C` rows, the remainder going to a seeded
/// rotation of classes. Classes with at least their quota are sampled without
/// replacement; smaller classes contribute two distinct rows and fill the
/// rest with replacement.
pub fn sample_class_batch(groups: &[Vec<usize>], total_batch: usize, step_seed: u64) -> Result<BatchPlan> {
    let classes = groups.len();
    if classes == 0 {
        return Err(Error::Data("no classes to sample from".into()));
    }
    if total_batch < 2 * classes {
        return Err(Error::validation(
            "train.batch_size",
            format!("batch of {total_batch} cannot give 2 samples to each of {classes} classes"),
        ));
    }
    if let Some(k) = groups.iter().position(|g| g.len() < 2) {
        return Err(Error::Data(format!(
            "class {k} has {} training example(s); need at least 2",
            groups[k].len()
        )));
    }

    let mut rng = seeding::rng(step_seed, &[seeding::STREAM_BATCH]);
    let base = total_batch / classes;
    let start = rng.random_range(0..classes);
    let extra = total_batch % classes;

    let blocks = groups
        .iter()
        .enumerate()
        .map(|(k, group)| {
            let gets_extra = (k + classes - start) % classes < extra;
            let quota = base + usize::from(gets_extra);
            let ids = if group.len() >= quota {
                index::sample(&mut rng, group.len(), quota)
                    .into_iter()
                    .map(|i| group[i])
                    .collect()
            } else {
                let mut ids: Vec<usize> = index::sample(&mut rng, group.len(), 2)
                    .into_iter()
                    .map(|i| group[i])
                    .collect();
                ids.extend((2..quota).map(|_| group[rng.random_range(0..group.len())]));
                ids
            };
            (k, ids)
        })
        .collect();
    Ok(BatchPlan { blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_per_class_from_six_rows() {
        let groups = vec![vec![0, 1, 2], vec![3, 4, 5]];
        let plan = sample_class_batch(&groups, 4, 0).unwrap();
        assert_eq!(plan.blocks.len(), 2);
        for (k, ids) in &plan.blocks {
            assert_eq!(ids.len(), 2);
            assert!(ids.iter().all(|i| groups[*k].contains(i)));
            assert_ne!(ids[0], ids[1]);
        }
    }

    #[test]
    fn remainder_goes_to_one_class() {
        let groups = vec![(0..10).collect(), (10..20).collect(), (20..30).collect()];
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..30 {
            let plan = sample_class_batch(&groups, 16, seed).unwrap();
            let mut sizes: Vec<usize> = plan.blocks.iter().map(|(_, ids)| ids.len()).collect();
            seen.insert(sizes.iter().position(|&s| s == 6).unwrap());
            sizes.sort();
            assert_eq!(sizes, vec![5, 5, 6]);
        }
        assert_eq!(seen.len(), 3, "rotation should visit every class");
    }

    #[test]
    fn even_split_for_two_classes() {
        let groups = vec![(0..10).collect(), (10..20).collect()];
        let plan = sample_class_batch(&groups, 16, 1).unwrap();
        assert!(plan.blocks.iter().all(|(_, ids)| ids.len() == 8));
    }

    #[test]
    fn small_class_uses_replacement_with_two_distinct() {
        let groups = vec![vec![0, 1, 2], (3..30).collect()];
        for seed in 0..20 {
            let plan = sample_class_batch(&groups, 16, seed).unwrap();
            let small = &plan.blocks[0].1;
            assert_eq!(small.len(), 8);
            assert_ne!(small[0], small[1]);
            assert!(small.iter().all(|i| *i < 3));
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(sample_class_batch(&[vec![0], vec![1, 2]], 4, 0), Err(Error::Data(_))));
        assert!(sample_class_batch(&[vec![0, 1], vec![2, 3]], 3, 0).is_err());
        assert!(sample_class_batch(&[], 4, 0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let groups = vec![(0..50).collect(), (50..90).collect()];
        assert_eq!(sample_class_batch(&groups, 16, 9).unwrap(), sample_class_batch(&groups, 16, 9).unwrap());
    }
}
