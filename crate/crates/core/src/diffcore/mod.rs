//! Flat parameter storage and the numeric machinery shared by every
//! differentiable component: seeded initialization, AdamW, a central-difference
//! gradient checker and a bit-exact checkpoint format.

mod adamw;
mod checkpoint;
mod gradcheck;
mod params;

pub use adamw::{adamw_step, AdamWConfig, OptimizerState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, Checkpoint,
    CHECKPOINT_MAGIC,
};
pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport, ProbeSpec};
pub use params::{init_params, Layout, ParamVector, Segment};
