//! Scenario runner, reference solvers, error norms and convergence studies
//! for the embedded fracture models of `fracflow-core`.

pub mod error;
pub mod netflux;
pub mod norm;
pub mod oned;
pub mod reference;
pub mod scenario;
pub mod study;
pub mod tracer;

pub use error::{HarnessError, Result};
pub use scenario::{MethodName, Scenario};
