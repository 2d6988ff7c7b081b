//! Community detection by surprise maximization, with benchmark generators,
//! partition metrics, power-law utilities and a partition-landscape embedder.

pub mod benchmarks;
pub mod embedding;
pub mod error;
pub mod exhaustive;
pub mod fixtures;
pub mod graph;
pub mod metrics;
pub mod optimizer;
pub mod partition;
pub mod randoms;
pub mod surprise;

pub use error::{Error, Result};
pub use graph::Graph;
pub use optimizer::{detect, Move, MoveCounts, MoveKind, MoveOutcome, SurpriseState};
pub use partition::Partition;
pub use surprise::{ln_choose, ln_factorial, partition_stats, surprise};
