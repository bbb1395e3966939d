//! Simulation and analytics for a spatial coalescent on an `|S|`-part
//! Cantor-like space, driven by a hierarchical Poisson reproduction process.
//!
//! * [`space`]: words, complexes, measures and embeddings.
//! * [`rates`]: rate families with declared tail behaviour.
//! * [`events`]: seeded, lazily realized Poisson events per complex.
//! * [`flow`]: lineage tracing, survivor trees and block decompositions.
//! * [`gwve`]: the branching process of survivor counts.
//! * [`phase`]: phase classification and dust dimension.

pub mod cli;
pub mod error;
pub mod events;
pub mod flow;
pub mod gwve;
pub mod phase;
pub mod rates;
pub mod scalar;
pub mod space;
pub mod stats;

pub use error::{Error, Result};
pub use events::{Event, EventStore};
pub use flow::{BlockDecomposition, Lineage, SurvivorCounts, SurvivorTree};
pub use gwve::{DegeneracyReport, GwveSpec};
pub use phase::{classify, Phase, PhaseLabel, PhaseReport};
pub use rates::{RateFamily, TailMeta};
pub use scalar::{Exact, Extended, Real};
pub use space::{Alphabet, Geometry, SpaceConfig, Word};

/// Rates in double precision, as used by event simulation.
pub type Rates = RateFamily<f64>;
/// Branching-process analytics in double precision.
pub type Gwve = GwveSpec<f64>;
/// Decomposition with exact rational masses.
pub type Decomposition = BlockDecomposition<num_rational::BigRational>;
