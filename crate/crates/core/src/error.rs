use thiserror::Error;

use crate::network::NeuronId;

/// Errors raised by the simulation and learning engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("unknown neuron id {0}")]
    UnknownNeuron(NeuronId),
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("empty meta-data buffer")]
    EmptyBuffer,
    #[error("task {task} holds {available} examples, {requested} requested")]
    InsufficientExamples {
        task: u64,
        available: usize,
        requested: usize,
    },
    #[error("instance too large for exhaustive enumeration: 2^{bits} hidden sequences")]
    InstanceTooLarge { bits: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
