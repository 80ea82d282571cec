//! Exact enumeration of consistent subgraphs of directed acyclic graphs.
//!
//! A consistent subgraph is a vertex set closed under parents: whenever a
//! vertex is included, so are all of its parents. This crate counts them
//! exactly with arbitrary-precision integers by recursive pivot
//! decomposition, reducing every graph to forests that are counted in
//! linear time.
//!
//! The crate is `no_std` (it needs `alloc`). The default `std` feature only
//! adds wall-clock timing to [`counting::CountReport`].

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod bounds;
pub mod counting;
pub mod entropy;
pub mod generate;
pub mod graph;
pub mod oracle;
pub mod pivot;

pub use counting::{
    canonical_key, cdag, cdag_basic, cdag_interruptible, cdag_weighted, cforest, ctree,
    find_branching_vertices, prune_branch, Count, CountError, CountReport, CounterConfig, Interrupted,
    Modules, Phi, PhiMap,
};
pub use graph::{build_dag, Dag, GraphError, GraphStats, VertexSet};
pub use pivot::PivotStrategy;
