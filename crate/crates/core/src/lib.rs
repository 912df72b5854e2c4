//! Preferential attachment graphs with additive random fitness.
//!
//! The crate grows graphs under the fixed-degree, updating-degree and
//! random-out-degree dynamics, evaluates the limiting degree laws and
//! point-process functionals numerically, and checks the structural
//! identities of the model (martingales, negative quadrant dependence)
//! by exact enumeration on small graphs.

pub mod error;
pub mod fitness;
pub mod graph;
pub mod harness;
pub mod measures;
pub mod numeric;
pub mod oracle;
pub mod ppp;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use fitness::{Envelope, FitnessSpec, Regime};
