//! Diversity-aware ranking.
//!
//! Items are scored by a PSD similarity kernel; list diversity is the
//! log-determinant of kernel submatrices over ranking prefixes and list
//! quality is nDCG. NSGA-II searches for the trade-off front between the two.

pub mod analysis;
pub mod cholesky;
pub mod clustering;
pub mod corpus;
pub mod diversity;
pub mod error;
pub mod io;
pub mod kernel;
pub mod moo;
pub mod quality;
pub mod ranking;
pub mod synthetic;
pub mod worked;

pub use corpus::{Corpus, Item};
pub use diversity::{ClusterPartition, ItemSet};
pub use error::{Error, Result};
pub use kernel::SimilarityKernel;
pub use moo::{EvolveConfig, FrontPoint, TradeoffFront};
pub use quality::RelevanceVector;
pub use ranking::Ranking;
