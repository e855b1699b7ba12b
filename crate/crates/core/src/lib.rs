//! Simulation and exact computation for squared Bessel processes, Wright-Fisher
//! diffusions with negative mutation rates on the simplex, their exit laws, and
//! the Aldous chain on cladograms.

pub mod besq;
pub mod cladogram;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod exit_law;
pub mod parallel;
pub mod quadrature;
pub mod rng;
pub mod simplex;
pub mod special;
pub mod stats;
pub mod textio;

pub use error::{Error, Result};
pub use rng::RandomStream;
