//! Examples, spike encodings, task families and the dataset file format.

mod encode;
mod family;
mod format;

pub use encode::{encode_label, rate_encode, LabelEncoding};
pub use family::{split_indices, split_train_test, synthetic_task_family, FamilyConfig, Task, TaskFamily};
pub use format::{load_spike_dataset, read_dataset, read_dataset_bytes, save_spike_dataset, write_dataset, DatasetError, TaskDataset, MAGIC, VERSION};

use crate::spikes::SpikeTrain;

/// One supervised example: input spikes `x` and label spikes `y` over the
/// same horizon.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Example {
    pub x: SpikeTrain,
    pub y: SpikeTrain,
    pub label: usize,
}

impl Example {
    pub fn horizon(&self) -> usize {
        self.x.horizon()
    }
}
