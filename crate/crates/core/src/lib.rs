//! Multi-scale estimation of the jump activity index from high-frequency
//! log-price observations, with the single-scale jump-counting comparator,
//! an exact grid simulator for stable-driven test models and a seeded
//! Monte-Carlo harness.

pub mod aj;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod interval;
pub mod kernel;
pub mod path;
pub mod quadrature;
pub mod simulate;

pub use aj::{aj_count, aj_estimate, AjConfig, AjEstimate};
pub use error::{Error, Result};
pub use estimator::{estimate, jump_count, ActivityEstimate, EstimatorConfig};
pub use interval::ConfidenceInterval;
pub use kernel::{make_constants, KernelConstants};
pub use path::LogPricePath;
pub use simulate::{simulate_path, SimulatedPath, SimulationModel};
