//! Divisors on metric graphs: chip-firing, reduced divisors, ranks,
//! tropical Jacobians and a search for free divisors of prescribed Clifford
//! index on chains of loops with attached cycles.
//!
//! All arithmetic is exact over the rationals.

pub mod construction;
pub mod divisor;
pub mod error;
pub mod function;
pub mod graph;
pub mod jacobian;
mod model;
pub mod rank;
pub mod rational;
pub mod reduction;

pub use construction::{
    build_chain, build_theorem_graph, find_free_divisor, hyperelliptic_witness, sample_divisor, ChainSpec,
    NearMiss, Placement, SearchOptions, TheoremGraph, Theorem2Witness,
};
pub use divisor::Divisor;
pub use error::{Error, Result};
pub use function::{apply_script, compose_script, div, fire, ClosedSet, Firing, FiringScript, PLFunction};
pub use graph::{
    attach_loop, attach_loop_named, build_graph, canonical_divisor, subdivide, EdgeId, EdgeSpec, GraphSpec,
    LoopAttachment, MetricGraph, Orientation, Point, Refinement, TangentDirection, VertexId,
};
pub use jacobian::{abel_jacobi, aj_equivalent, cycle_basis, lattice_member, CycleBasis, JacVector};
pub use rank::{
    base_points, clifford_index, is_free, is_very_special, rank, rank_at_least, rank_with, riemann_roch_check,
    CandidateSet, DivisorReport, FreenessCertificate, RankResult,
};
pub use rational::{format_rational, parse_rational, Rational};
pub use reduction::{burn, equivalent_effective, linearly_equivalent, reduce, reduce_at_resolution, reduced_divisor, BurnReport, Equivalence, Reduction};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
