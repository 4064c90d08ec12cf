//! Probabilistic GLM spiking networks trained by online-within-online
//! meta-learning.
//!
//! Within a task, [`within_task::update`] streams the task's examples once,
//! applying local three-factor updates. Across tasks, [`meta::meta_update`]
//! moves a shared initialization using the first-order difference between
//! the initialization and parameters adapted on tasks replayed from a
//! buffer. [`oracle`] provides exhaustive-enumeration references for tiny
//! networks.

pub mod basis;
pub mod checkpoint;
pub mod data;
pub mod error;
pub mod experiment;
pub mod meta;
pub mod model;
pub mod network;
pub mod oracle;
pub mod params;
pub mod seeding;
pub mod spikes;
pub mod within_task;

pub use basis::{build_raised_cosine_basis, BasisConfig, BasisSet};
pub use data::{Example, Task, TaskFamily};
pub use error::{Error, Result};
pub use meta::{MetaConfig, MetaDirection, Method, RunMetrics};
pub use model::{conditional_log_likelihood, membrane_potential, spike_probability, step, NetworkState};
pub use network::{NetworkSpec, NeuronId, Node, Synapse, Topology};
pub use params::ModelParams;
pub use spikes::SpikeTrain;
pub use within_task::{update, LearnConfig};
