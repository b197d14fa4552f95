//! Microwave-induced optical frequency conversion in a closed-loop
//! three-level Lambda medium.

pub mod bloch;
pub mod doppler;
pub mod error;
pub mod exec;
pub mod model;
pub mod ode;
pub mod propagate;
pub mod regimes;
pub mod scan;
pub mod units;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{AtomMedium, DriveFields, SteadyState};
pub use num_complex;
