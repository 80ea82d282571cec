//! Random DAG generator and named fixture graphs.
//!
//! Graphs are grown one vertex at a time. A rate `lambda ~ Gamma(2, 1)` is
//! drawn once per graph; vertex `k` (1-based) draws a proposed in-degree from
//! `Poisson(lambda)` and attaches below `min(proposed, k - 1)` distinct
//! earlier vertices chosen uniformly. All randomness comes from ChaCha8
//! seeded with the caller's seed, and the samplers use only uniform draws and
//! `libm`, so output is identical across platforms.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Dag, Graph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("invalid size {0}: need at least one vertex")]
    InvalidSize(usize),
    #[error("unknown fixture `{0}` (expected chain, antichain, diamond, star or figure3)")]
    UnknownFixture(String),
}

/// The random draws behind one generated graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GenTrace {
    pub lambda: f64,
    /// Proposed (uncapped) in-degree of each vertex in creation order.
    pub proposed: Vec<u32>,
}

/// Labels `v0..v{n-1}` zero-padded so lexicographic and numeric order agree.
pub fn numbered_labels(n: usize) -> Vec<String> {
    let width = format!("{}", n.saturating_sub(1)).len();
    (0..n).map(|i| format!("v{i:0width$}")).collect()
}

/// Single letters for small graphs, numbered labels otherwise.
fn labels(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n).map(|i| String::from((b'a' + i as u8) as char)).collect()
    } else {
        numbered_labels(n)
    }
}

fn unit_open<R: Rng>(rng: &mut R) -> f64 {
    // (0, 1]
    1.0 - rng.gen::<f64>()
}

fn exponential<R: Rng>(rng: &mut R) -> f64 {
    -libm::log(unit_open(rng))
}

/// Gamma(2, 1) as the sum of two unit exponentials.
fn gamma2<R: Rng>(rng: &mut R) -> f64 {
    exponential(rng) + exponential(rng)
}

/// Poisson by sequential inversion of the CDF.
fn poisson<R: Rng>(rng: &mut R, lambda: f64) -> u32 {
    let u = rng.gen::<f64>();
    let mut p = libm::exp(-lambda);
    let mut cdf = p;
    let mut k = 0u32;
    while u >= cdf {
        k += 1;
        p *= lambda / k as f64;
        if p <= 0.0 {
            break;
        }
        cdf += p;
    }
    k
}

/// Generates a random DAG with `n` vertices.
pub fn generate_random_dag(n: usize, seed: u64) -> Result<Dag, GenError> {
    generate_random_dag_traced(n, seed).map(|(d, _)| d)
}

/// Like [`generate_random_dag`], also returning the underlying draws.
pub fn generate_random_dag_traced(n: usize, seed: u64) -> Result<(Dag, GenTrace), GenError> {
    if n == 0 {
        return Err(GenError::InvalidSize(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = gamma2(&mut rng);
    let mut proposed = Vec::with_capacity(n);
    let mut edges = Vec::new();
    let mut pool: Vec<u32> = Vec::with_capacity(n);
    for k in 0..n as u32 {
        let degree = poisson(&mut rng, lambda);
        proposed.push(degree);
        let take = (degree as usize).min(k as usize);
        pool.clear();
        pool.extend(0..k);
        let (chosen, _) = pool.partial_shuffle(&mut rng, take);
        edges.extend(chosen.iter().map(|&p| (p, k)));
    }
    let names = numbered_labels(n);
    let graph = Graph::from_edges((0..n as u32).collect(), &edges);
    Ok((Dag::from_graph(graph, &names), GenTrace { lambda, proposed }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    /// `n` vertices in a path.
    Chain,
    /// `n` isolated vertices.
    Antichain,
    /// `a -> {b, c} -> d`; ignores `n`.
    Diamond,
    /// A root with `n` children.
    Star,
    /// Twelve vertices `a..l` with three multi-parent vertices; pivoting on
    /// `e` leaves the path `h -> i -> j` in both subproblems. Ignores `n`.
    Figure3,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 5] = [
        FixtureKind::Chain,
        FixtureKind::Antichain,
        FixtureKind::Diamond,
        FixtureKind::Star,
        FixtureKind::Figure3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::Chain => "chain",
            FixtureKind::Antichain => "antichain",
            FixtureKind::Diamond => "diamond",
            FixtureKind::Star => "star",
            FixtureKind::Figure3 => "figure3",
        }
    }
}

impl fmt::Display for FixtureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureKind {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GenError::UnknownFixture(s.into()))
    }
}

pub const FIGURE3_EDGES: [(&str, &str); 14] = [
    ("a", "b"),
    ("a", "c"),
    ("b", "e"),
    ("c", "e"),
    ("c", "d"),
    ("e", "f"),
    ("e", "g"),
    ("d", "g"),
    ("d", "h"),
    ("h", "i"),
    ("i", "j"),
    ("b", "j"),
    ("d", "k"),
    ("k", "l"),
];

/// Deterministic named test graphs.
pub fn fixture(kind: FixtureKind, n: usize) -> Result<Dag, GenError> {
    let built = match kind {
        FixtureKind::Chain | FixtureKind::Antichain | FixtureKind::Star if n == 0 => {
            return Err(GenError::InvalidSize(n))
        }
        FixtureKind::Chain => {
            let names = labels(n);
            let edges: Vec<(String, String)> =
                names.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
            Dag::build(&names, edges)
        }
        FixtureKind::Antichain => Dag::build(labels(n), Vec::<(String, String)>::new()),
        FixtureKind::Diamond => Dag::build(
            ["a", "b", "c", "d"],
            [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        ),
        FixtureKind::Star => {
            let names = labels(n + 1);
            let edges: Vec<(String, String)> =
                names[1..].iter().map(|c| (names[0].clone(), c.clone())).collect();
            Dag::build(&names, edges)
        }
        FixtureKind::Figure3 => Dag::build(labels(12), FIGURE3_EDGES),
    };
    Ok(built.expect("fixtures are valid DAGs"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_graphs() {
        for seed in 0..20 {
            let one = generate_random_dag(1, seed).unwrap();
            assert_eq!((one.len(), one.edge_count()), (1, 0));
            let two = generate_random_dag(2, seed).unwrap();
            assert!(two.is_forest());
            assert!(two.edge_count() <= 1);
        }
        assert_eq!(generate_random_dag(0, 1), Err(GenError::InvalidSize(0)));
    }

    #[test]
    fn realized_in_degree_is_capped_proposal() {
        for seed in 0..50 {
            let (d, trace) = generate_random_dag_traced(40, seed).unwrap();
            for (k, &p) in trace.proposed.iter().enumerate() {
                assert_eq!(d.parents(k).count(), (p as usize).min(k));
            }
            assert!(trace.lambda > 0.0);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(
            generate_random_dag(60, 7).unwrap(),
            generate_random_dag(60, 7).unwrap()
        );
        assert_ne!(
            generate_random_dag(60, 7).unwrap(),
            generate_random_dag(60, 8).unwrap()
        );
    }

    #[test]
    fn labels_sort_numerically() {
        let l = numbered_labels(101);
        assert_eq!(l[0], "v000");
        assert!(l.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(numbered_labels(1), ["v0"]);
    }

    #[test]
    fn fixtures() {
        let c = fixture(FixtureKind::Chain, 4).unwrap();
        assert_eq!(c.names(), ["a", "b", "c", "d"]);
        assert_eq!(c.edge_count(), 3);
        assert_eq!(fixture(FixtureKind::Antichain, 3).unwrap().edge_count(), 0);
        let d = fixture(FixtureKind::Diamond, 0).unwrap();
        assert_eq!((d.len(), d.edge_count()), (4, 4));
        let s = fixture(FixtureKind::Star, 5).unwrap();
        assert_eq!(s.children(0).count(), 5);
        let f = fixture(FixtureKind::Figure3, 0).unwrap();
        assert_eq!((f.len(), f.stats().multi_parent), (12, 3));
        assert_eq!(fixture(FixtureKind::Chain, 0), Err(GenError::InvalidSize(0)));
        assert_eq!("star".parse::<FixtureKind>(), Ok(FixtureKind::Star));
        assert!(fixture(FixtureKind::Chain, 40).unwrap().is_forest());
    }
}
