//! Data ingestion and the sampling protocol: GLUE-style TSV files, few-shot
//! and full-data splits, and the per-class mini-batch sampler.

mod dataset;
mod sampler;
mod split;

pub use dataset::{load_tsv, parse_tsv, Dataset, Example, TaskKind, TsvSchema};
pub use sampler::{sample_class_batch, BatchPlan};
pub use split::{make_fewshot_split, make_full_split, IdSet, Source, Split, FEWSHOT_VALIDATION_SIZE};
