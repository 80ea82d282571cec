//! Cheap bounds on the number of consistent subgraphs.
//!
//! Every subset of leaves has a distinct ancestor closure, so `2^l` sets
//! exist; reversal gives `2^r`. Dropping edges only removes constraints, so
//! counting a spanning forest obtained by keeping one in-edge per
//! multi-parent vertex overestimates the count.

use alloc::vec::Vec;
use core::cmp::max;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counting::{cforest, Count, PhiMap};
use crate::graph::{Dag, Graph};

/// `max(2^l, 2^r)`; 1 for the empty graph.
pub fn lower_bound(d: &Dag) -> Count {
    if d.is_empty() {
        return Count::one();
    }
    let s = d.stats();
    Count::one() << max(s.leaves, s.roots)
}

/// Copy of `d` in which every multi-parent vertex keeps one uniformly chosen
/// in-edge.
pub fn random_spanning_forest<R: Rng + ?Sized>(d: &Dag, rng: &mut R) -> Dag {
    let mut edges = Vec::with_capacity(d.len());
    for v in 0..d.len() {
        let parents: Vec<usize> = d.parents(v).collect();
        let keep = match parents.len() {
            0 => continue,
            1 => parents[0],
            k => parents[rng.gen_range(0..k)],
        };
        edges.push((keep as u32, v as u32));
    }
    let g = Graph::from_edges((0..d.len() as u32).collect(), &edges);
    Dag::from_graph(g, d.names())
}

/// Count of one random spanning forest of `d`.
pub fn upper_bound_forest<R: Rng + ?Sized>(d: &Dag, rng: &mut R) -> Count {
    let forest = random_spanning_forest(d, rng);
    cforest(&forest, &PhiMap::new()).expect("spanning forest")
}

/// Minimum of `trials` (at least one) forest upper bounds drawn from a
/// generator seeded with `seed`.
pub fn upper_bound_forest_trials(d: &Dag, seed: u64, trials: usize) -> Count {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials.max(1))
        .map(|_| upper_bound_forest(d, &mut rng))
        .min()
        .expect("at least one trial")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::String;

    fn diamond() -> Dag {
        Dag::build(
            ["a", "b", "c", "d"],
            [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        )
        .unwrap()
    }

    #[test]
    fn lower_bounds() {
        assert_eq!(lower_bound(&diamond()), Count::from(2u32));
        assert_eq!(lower_bound(&Dag::empty()), Count::one());
        let names: Vec<String> = (0..7).map(|i| format!("v{i}")).collect();
        let anti = Dag::build(&names, Vec::<(String, String)>::new()).unwrap();
        assert_eq!(lower_bound(&anti), Count::from(128u32));
        let chain = Dag::build(["a", "b", "c"], [("a", "b"), ("b", "c")]).unwrap();
        assert_eq!(lower_bound(&chain), Count::from(2u32));
    }

    #[test]
    fn diamond_forest_bound_is_seven() {
        for seed in 0..8 {
            assert_eq!(upper_bound_forest_trials(&diamond(), seed, 1), Count::from(7u32));
        }
    }

    #[test]
    fn forests_are_exact() {
        let f = Dag::build(["a", "b", "c", "d"], [("a", "b"), ("a", "c"), ("c", "d")]).unwrap();
        assert_eq!(upper_bound_forest_trials(&f, 3, 4), Count::from(7u32));
        let names: Vec<String> = (0..5).map(|i| format!("v{i}")).collect();
        let anti = Dag::build(&names, Vec::<(String, String)>::new()).unwrap();
        assert_eq!(upper_bound_forest_trials(&anti, 3, 1), Count::from(32u32));
    }
}
