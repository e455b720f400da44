//! Multiobjective multiple RNA structural alignment with a GRASP metaheuristic.
//!
//! Initial alignments come from a randomized progressive global/local aligner
//! ([`construct`]); each is refined by iterative realignment ([`grasp`]) under an
//! aggregate of weighted sum-of-pairs similarity and consensus minimum free energy
//! ([`objective`]). [`evaluate`] holds the quality metrics and the Friedman test,
//! and [`bench`] the dataset harness behind the command-line tool.

pub mod bench;
pub mod construct;
pub mod error;
pub mod evaluate;
pub mod folding;
pub mod grasp;
pub mod objective;
pub mod pairwise;
pub mod seqmodel;

pub use error::{Error, Result};
pub use folding::{EnergyModel, SecondaryStructure};
pub use grasp::{grasp_run, GraspConfig, GraspResult};
pub use objective::{ObjectiveParams, ObjectiveValue};
pub use pairwise::PairScoringParams;
pub use seqmodel::{Alignment, RnaSequence, SequenceSet};
