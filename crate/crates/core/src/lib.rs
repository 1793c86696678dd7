//! Cycle-stepped simulator of a mesh NoC-based DNN accelerator and the task
//! mapping strategies evaluated on it.

pub mod accelerator;
pub mod config;
pub mod error;
pub mod experiments;
pub mod mapping;
pub mod metrics;
pub mod noc;
pub mod topology;
pub mod workload;

pub use config::SimConfig;
pub use error::{Error, Result};
