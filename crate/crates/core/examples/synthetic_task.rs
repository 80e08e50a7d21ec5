//! Write the synthetic two-cluster task as `train.tsv` and `validation.tsv`.
//!
//! ```text
//! cargo run --example synthetic_task -- <dir>
//! paretocl train --config <cfg> --set data.train=<dir>/train.tsv --set data.validation=<dir>/validation.tsv --out run
//! ```

use std::path::PathBuf;

use paretocl::synth::{two_cluster, write_tsv};

fn main() -> paretocl::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synthetic".into()));
    std::fs::create_dir_all(&dir).map_err(|e| paretocl::Error::io(&dir, e))?;
    write_tsv(&two_cluster(200, 1), &dir.join("train.tsv"))?;
    write_tsv(&two_cluster(400, 2), &dir.join("validation.tsv"))?;
    println!("wrote {}", dir.display());
    Ok(())
}
