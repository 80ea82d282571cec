//! File formats, ontology pipelines and analyses built on
//! [`idealcount_core`].

pub mod analysis;
pub mod annotations;
pub mod cli;
pub mod edgelist;
pub mod obo;

pub use idealcount_core as core;
