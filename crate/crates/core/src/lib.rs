//! Turán (n, s, r)-systems: r-graphs on `[n]` in which every s-subset contains
//! an edge. The crate builds them with a recursive blocker construction,
//! certifies them, and provides exact small-instance optima and the constants
//! that govern the achievable density.

pub mod bounds;
pub mod cli;
pub mod combinat;
pub mod constants;
pub mod constructor;
pub mod exact;
pub mod hypergraph;
pub mod verifier;

pub use combinat::{binom, iterate_subsets, rank_colex, unrank_colex, BinomialTable, Subset};
pub use hypergraph::{complement_within, EdgeSet, RGraph};
