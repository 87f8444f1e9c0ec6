//! Random graphs with a prescribed degree sequence.
//!
//! The configuration model pairs half-edges uniformly at random and may
//! produce loops and multiple edges. The switched model repairs such a
//! multigraph by repeatedly switching a bad edge with another edge until the
//! graph is simple. [`exact`] holds exhaustive oracles for small sequences and
//! [`experiments`] the seeded Monte Carlo harness.

pub mod degseq;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod multigraph;
pub mod rng;
pub mod samplers;
pub mod switching;

pub use degseq::{DegreeSequence, MomentSummary, Validation};
pub use error::{Error, Result};
pub use multigraph::{
    expected_loops, expected_pairs, BadSummary, Configuration, HalfEdge, HalfEdgeLayout, Multigraph, MultigraphJson,
    Pattern,
};
pub use switching::{BadEdgeRule, RedPath, SwitchOutcome, SwitchTrace, SwitchVariant};
