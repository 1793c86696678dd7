use thiserror::Error;

use crate::topology::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("topology has no processing elements")]
    NoProcessingElements,

    #[error("topology has no memory controllers")]
    NoMemoryControllers,

    #[error("memory controller id {id} out of range for a {width}x{height} mesh")]
    McOutOfRange { id: NodeId, width: usize, height: usize },

    #[error("layer `{0}` has a non-positive output dimension")]
    EmptyLayerOutput(String),

    #[error("allocation weight #{index} must be positive")]
    NonPositiveWeight { index: usize },

    #[error("mapping plan does not match the layer: {0}")]
    PlanMismatch(String),

    #[error("task assigned to memory-controller node {0}")]
    TaskOnMemoryController(NodeId),

    #[error("unevenness needs at least two positive per-PE values")]
    TooFewValues,

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("no forward progress for {cycles} cycles (last activity at cycle {last_progress})")]
    Livelock { cycles: u64, last_progress: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for this error: 2 for invariant violations, 3 for
    /// the livelock guard, 1 for everything else (configuration and I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 2,
            Error::Livelock { .. } => 3,
            _ => 1,
        }
    }
}
