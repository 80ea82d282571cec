//! Brute-force enumeration of consistent subgraphs for small graphs.
//!
//! Two independent routes are provided: a depth-first walk over vertices in
//! topological order that only extends ancestor-closed prefixes, and a scan
//! of all `2^n` subsets with a parent-mask check.

use alloc::vec::Vec;

use crate::counting::Count;
use crate::graph::{Dag, VertexSet};

/// Largest graph the oracle accepts.
pub const ORACLE_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("graph has {0} vertices; brute force is limited to {ORACLE_LIMIT}")]
    TooLarge(usize),
}

struct Layout {
    order: Vec<usize>,
    parents: Vec<u32>,
}

fn layout(d: &Dag) -> Result<Layout, OracleError> {
    if d.len() > ORACLE_LIMIT {
        return Err(OracleError::TooLarge(d.len()));
    }
    let parents = (0..d.len())
        .map(|v| d.parents(v).fold(0u32, |m, p| m | 1 << p))
        .collect();
    Ok(Layout {
        order: d.topological_order(),
        parents,
    })
}

fn walk(l: &Layout, i: usize, mask: u32, visit: &mut dyn FnMut(u32)) {
    if i == l.order.len() {
        visit(mask);
        return;
    }
    let v = l.order[i];
    walk(l, i + 1, mask, visit);
    if l.parents[v] & !mask == 0 {
        walk(l, i + 1, mask | 1 << v, visit);
    }
}

fn tally(l: &Layout, i: usize, mask: u32) -> u64 {
    if i == l.order.len() {
        return 1;
    }
    let v = l.order[i];
    let mut total = tally(l, i + 1, mask);
    if l.parents[v] & !mask == 0 {
        total += tally(l, i + 1, mask | 1 << v);
    }
    total
}

/// Every consistent vertex set of `d`, ordered by size and then
/// lexicographically.
pub fn brute_force_enumerate(d: &Dag) -> Result<Vec<VertexSet>, OracleError> {
    let l = layout(d)?;
    let mut masks = Vec::new();
    walk(&l, 0, 0, &mut |m| masks.push(m));
    let mut sets: Vec<Vec<usize>> = masks
        .into_iter()
        .map(|m| (0..d.len()).filter(|&v| m & (1 << v) != 0).collect())
        .collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(sets.into_iter().map(|s| s.into_iter().collect()).collect())
}

/// Number of consistent vertex sets, without materializing them.
pub fn brute_force_count(d: &Dag) -> Result<Count, OracleError> {
    let l = layout(d)?;
    Ok(Count::from(tally(&l, 0, 0)))
}

/// Number of consistent vertex sets by testing every subset.
pub fn brute_force_count_exhaustive(d: &Dag) -> Result<Count, OracleError> {
    let l = layout(d)?;
    let n = d.len();
    let mut count = 0u64;
    for mask in 0..(1u64 << n) {
        let mask = mask as u32;
        let mut rest = mask;
        let mut closed = true;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if l.parents[v] & !mask != 0 {
                closed = false;
                break;
            }
        }
        count += closed as u64;
    }
    Ok(Count::from(count))
}
