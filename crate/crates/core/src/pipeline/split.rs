use std::path::Path;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{seeding, Error, Result};

/// Size of the validation sample drawn for few-shot runs.
pub const FEWSHOT_VALIDATION_SIZE: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Train,
    Validation,
}

/// Row ids into one of the two input files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdSet {
    pub source: Source,
    pub ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: IdSet,
    pub validation: IdSet,
    pub test: IdSet,
    pub seed: u64,
}

impl Split {
    pub fn is_disjoint(&self) -> bool {
        let sets = [&self.train, &self.validation, &self.test];
        for (a, sa) in sets.iter().enumerate() {
            for sb in &sets[a + 1..] {
                if sa.source == sb.source && sa.ids.iter().any(|i| sb.ids.binary_search(i).is_ok()) {
                    return false;
                }
            }
        }
        true
    }

    /// Write `train.ids`, `validation.ids` and `test.ids`: a `# source=<file>`
    /// line followed by one row id per line.
    pub fn write_manifest(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, set) in [("train", &self.train), ("validation", &self.validation), ("test", &self.test)] {
            let source = match set.source {
                Source::Train => "train",
                Source::Validation => "validation",
            };
            let mut body = format!("# source={source} seed={}\n", self.seed);
            for id in &set.ids {
                body.push_str(&id.to_string());
                body.push('\n');
            }
            let path = dir.join(format!("{name}.ids"));
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// Few-shot split: `n` class-balanced training rows (±1 per class), and a
/// sample of up to 500 validation-file rows divided into disjoint validation
/// and test halves.
pub fn make_fewshot_split(train: &Dataset, validation: &Dataset, n: usize, seed: u64) -> Result<Split> {
    let classes = train.num_classes();
    if classes < 2 {
        return Err(Error::Data(format!("training data has {classes} class(es); need at least 2")));
    }
    if n < 2 * classes {
        return Err(Error::validation(
            "train.few_shot",
            format!("N = {n} is below 2·C = {}", 2 * classes),
        ));
    }
    if validation.len() < 2 {
        return Err(Error::Data("validation file needs at least 2 rows to halve".into()));
    }
    let groups = train.ids_by_class(0..train.len());
    if let Some((k, g)) = groups.iter().enumerate().find(|(_, g)| g.len() < 2) {
        return Err(Error::Data(format!(
            "class `{}` has {} training example(s); need at least 2",
            train.labels[k],
            g.len()
        )));
    }

    let mut rng = seeding::rng(seed, &[seeding::STREAM_SPLIT, 0]);
    let mut order: Vec<usize> = (0..classes).collect();
    order.shuffle(&mut rng);
    let mut quota = vec![n / classes; classes];
    for &k in order.iter().take(n % classes) {
        quota[k] += 1;
    }
    // Classes too small for their quota give the remainder to others.
    let mut deficit = 0;
    for k in 0..classes {
        if quota[k] > groups[k].len() {
            deficit += quota[k] - groups[k].len();
            quota[k] = groups[k].len();
        }
    }
    for &k in order.iter().cycle().take(classes * n.max(1)) {
        if deficit == 0 {
            break;
        }
        if quota[k] < groups[k].len() {
            quota[k] += 1;
            deficit -= 1;
        }
    }
    if deficit > 0 {
        return Err(Error::Data(format!(
            "training data has only {} rows; cannot draw N = {n}",
            train.len()
        )));
    }

    let mut train_ids = Vec::with_capacity(n);
    for (k, group) in groups.iter().enumerate() {
        let mut class_rng = seeding::rng(seed, &[seeding::STREAM_SPLIT, 1, k as u64]);
        train_ids.extend(index::sample(&mut class_rng, group.len(), quota[k]).into_iter().map(|i| group[i]));
    }

    let take = FEWSHOT_VALIDATION_SIZE.min(validation.len());
    let mut val_rng = seeding::rng(seed, &[seeding::STREAM_SPLIT, 2]);
    let sampled: Vec<usize> = index::sample(&mut val_rng, validation.len(), take).into_vec();
    let (test, val) = sampled.split_at(take / 2);

    Ok(Split {
        train: IdSet { source: Source::Train, ids: sorted(train_ids) },
        validation: IdSet { source: Source::Validation, ids: sorted(val.to_vec()) },
        test: IdSet { source: Source::Validation, ids: sorted(test.to_vec()) },
        seed,
    })
}

/// Full-data split: test is the whole validation file, validation a seeded 10%
/// of the training file, training the remaining 90%.
pub fn make_full_split(train: &Dataset, validation: &Dataset, seed: u64) -> Result<Split> {
    if train.len() < 10 {
        return Err(Error::Data(format!(
            "full-data split needs at least 10 training rows, found {}",
            train.len()
        )));
    }
    let held = train.len() / 10;
    let mut rng = seeding::rng(seed, &[seeding::STREAM_SPLIT, 3]);
    let val_ids = sorted(index::sample(&mut rng, train.len(), held).into_vec());
    let train_ids: Vec<usize> = (0..train.len()).filter(|i| val_ids.binary_search(i).is_err()).collect();
    Ok(Split {
        train: IdSet { source: Source::Train, ids: train_ids },
        validation: IdSet { source: Source::Train, ids: val_ids },
        test: IdSet { source: Source::Validation, ids: (0..validation.len()).collect() },
        seed,
    })
}
