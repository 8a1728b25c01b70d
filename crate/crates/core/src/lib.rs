//! Ruin probabilities for risk processes whose claims arrive according to a
//! linear marked Hawkes process with exponential decay.

pub mod asymptotics;
pub mod config;
pub mod distributions;
pub mod error;
pub mod hawkes;
pub mod lundberg;
pub mod mc;
pub mod measure_change;
pub mod risk;
pub mod stationary;
pub mod stats;
pub mod verify;

pub use distributions::DistributionSpec;
pub use error::{Error, Result};
pub use hawkes::{Cluster, EventRecord, HawkesParams};
pub use lundberg::{adjustment_coefficient, LundbergSolution, LundbergSystem};
pub use mc::{Executor, MonteCarlo};
pub use risk::RiskModel;
pub use stats::{EstimateCI, Summary};
