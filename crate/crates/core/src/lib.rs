//! Stationary laws `mu_{c,q,r}` of Poisson-driven generalised Ornstein-Uhlenbeck
//! processes: infinite divisibility, characteristic functions, Levy measures,
//! continuity verdicts and simulation.

pub mod continuity;
pub mod divisibility;
pub mod error;
pub mod mu;
pub mod params;
pub mod rho;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
