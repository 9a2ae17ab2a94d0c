//! Binary dataset files, model checkpoints and small text exports.

mod bytes;
mod checkpoint;
mod dataset;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use dataset::{
    load_dataset, read_dataset, save_dataset, slice_to_csv, write_dataset, Dataset, DATASET_MAGIC,
    DATASET_VERSION,
};
