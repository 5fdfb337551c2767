//! Random-matching load balancing on edge-Markovian evolving graphs.
//!
//! The crate simulates discrete token balancing where, at every step, a
//! random matching is drawn on the current graph, matched pairs average
//! their loads with random rounding, and the graph then evolves by
//! independent per-pair birth/death transitions. Alongside the simulator it
//! provides token-level instrumentation ([`ledger`]), closed-form bounds
//! ([`theory`]), exhaustive lemma oracles ([`verify`]) and an experiment
//! harness ([`harness`]).

pub mod balance;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod harness;
pub mod ledger;
pub mod matching;
pub mod rng;
pub mod stats;
pub mod theory;
pub mod verify;

pub use balance::{nearest_int, InitialLoad, RoundingCase, RoundingChoices, TokenConfig};
pub use error::{Error, Result};
pub use graph::{EdgeMarkovParams, Graph, InitialGraph, Vertex};
pub use ledger::TokenLedger;
pub use matching::{fairness_floor, Matching, MatcherKind};
