//! Synthetic two-cluster text task: each class draws its words from its own
//! vocabulary, so bag-of-words features separate the classes perfectly.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::pipeline::{Dataset, Example, TaskKind};
use crate::{seeding, Error, Result};

pub const VOCAB_SIZE: usize = 50;
pub const MIN_WORDS: usize = 5;
pub const MAX_WORDS: usize = 10;

/// Word `j` of class `k`'s vocabulary.
pub fn word(class: usize, j: usize) -> String {
    format!("{}{j}", ["amber", "cobalt"][class])
}

/// `rows` sentences alternating between the two classes, drawn from `seed`.
pub fn two_cluster(rows: usize, seed: u64) -> Dataset {
    let mut rng = seeding::rng(seed, &[0x5_1147]);
    let rows = (0..rows)
        .map(|i| {
            let label = i % 2;
            let len = rng.random_range(MIN_WORDS..=MAX_WORDS);
            let words: Vec<String> = (0..len)
                .map(|_| word(label, rng.random_range(0..VOCAB_SIZE)))
                .collect();
            Example { text: words.join(" "), text2: None, label }
        })
        .collect();
    Dataset {
        rows,
        labels: vec!["amber".into(), "cobalt".into()],
        kind: TaskKind::Single,
    }
}

/// Write a single-sentence dataset as a `sentence`/`label` TSV file.
pub fn write_tsv(dataset: &Dataset, path: &Path) -> Result<()> {
    if dataset.kind != TaskKind::Single {
        return Err(Error::Contract("only single-sentence datasets are written".into()));
    }
    let mut body = String::from("sentence\tlabel\n");
    for row in &dataset.rows {
        let _ = writeln!(body, "{}\t{}", row.text, dataset.labels[row.label]);
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}
