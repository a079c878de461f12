//! Datasets, removal splits, counterfactual tuples and batching.

mod batch;
mod dataset;
pub mod idx;
mod joint;
mod split;
mod synth;

pub use batch::{batches, BatchSchedule};
pub use dataset::Dataset;
pub use idx::load_idx;
pub use joint::{prepare_joint, JointDataset, TupleExample};
pub use split::{split, Split, SplitSpec, Task};
pub use synth::{synth_blobs, BlobSpec};
