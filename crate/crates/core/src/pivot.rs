//! Pivot-selection strategies for the decomposition step.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::graph::{Dag, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PivotStrategy {
    /// Uniform over all vertices.
    Random,
    /// Uniform over multi-parent vertices.
    RandomMultiParent,
    /// Largest in-degree plus out-degree.
    MaxDegree,
    /// Smallest summed `e - n + r` over the two subproblems.
    MinBound,
    /// Largest ratio of simulated leaf-to-root flow to descendant count.
    Bottleneck,
}

impl PivotStrategy {
    pub const ALL: [PivotStrategy; 5] = [
        PivotStrategy::Random,
        PivotStrategy::RandomMultiParent,
        PivotStrategy::MinBound,
        PivotStrategy::MaxDegree,
        PivotStrategy::Bottleneck,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            PivotStrategy::Random => "random",
            PivotStrategy::RandomMultiParent => "mpv",
            PivotStrategy::MaxDegree => "degree",
            PivotStrategy::MinBound => "bound",
            PivotStrategy::Bottleneck => "bottleneck",
        }
    }
}

impl fmt::Display for PivotStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown pivot strategy `{0}` (expected random, mpv, degree, bound or bottleneck)")]
pub struct UnknownStrategy(pub alloc::string::String);

impl FromStr for PivotStrategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PivotStrategy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownStrategy(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PivotError {
    #[error("cannot select a pivot in an empty graph")]
    EmptyGraph,
    #[error("graph has no multi-parent vertex")]
    NoMultiParentVertex,
    #[error("unknown vertex #{0}")]
    UnknownVertex(usize),
}

fn pick<R: Rng + ?Sized>(candidates: &[u32], rng: &mut R) -> u32 {
    if candidates.len() == 1 {
        candidates[0]
    } else {
        candidates[rng.gen_range(0..candidates.len())]
    }
}

/// Collects every index attaining the best key; `better(a, b)` is true when
/// `a` strictly beats `b`.
fn best_by<K, F>(keys: impl Iterator<Item = (u32, K)>, better: F) -> Vec<u32>
where
    F: Fn(&K, &K) -> bool,
    K: PartialEq,
{
    let mut best: Option<K> = None;
    let mut out = Vec::new();
    for (v, k) in keys {
        match &best {
            Some(b) if better(b, &k) => {}
            Some(b) if *b == k => out.push(v),
            _ => {
                best = Some(k);
                out.clear();
                out.push(v);
            }
        }
    }
    out
}

pub(crate) fn choose<R: Rng + ?Sized>(
    g: &Graph,
    strategy: PivotStrategy,
    rng: &mut R,
) -> Result<u32, PivotError> {
    let n = g.n() as u32;
    if n == 0 {
        return Err(PivotError::EmptyGraph);
    }
    let candidates = match strategy {
        PivotStrategy::Random => return Ok(rng.gen_range(0..n)),
        PivotStrategy::RandomMultiParent => {
            let mpv: Vec<u32> = (0..n).filter(|&v| g.in_degree(v) >= 2).collect();
            if mpv.is_empty() {
                return Err(PivotError::NoMultiParentVertex);
            }
            mpv
        }
        PivotStrategy::MaxDegree => best_by((0..n).map(|v| (v, g.in_degree(v) + g.out_degree(v))), |b, k| {
            b > k
        }),
        PivotStrategy::MinBound => best_by((0..n).map(|v| (v, bound_score_local(g, v))), |b, k| b < k),
        PivotStrategy::Bottleneck => {
            let scores = bottleneck_local(g).1;
            best_by(
                scores.into_iter().enumerate().map(|(v, s)| (v as u32, s)),
                |b, k| b > k,
            )
        }
    };
    Ok(pick(&candidates, rng))
}

/// `e - n + r` of the subgraph induced by the vertices not in `removed`.
fn residual_bound(g: &Graph, removed: &[bool]) -> usize {
    let (mut n, mut e, mut r) = (0usize, 0usize, 0usize);
    for v in 0..g.n() as u32 {
        if removed[v as usize] {
            continue;
        }
        n += 1;
        let p = g.parents(v).iter().filter(|&&p| !removed[p as usize]).count();
        e += p;
        if p == 0 {
            r += 1;
        }
    }
    e + r - n
}

pub(crate) fn bound_score_local(g: &Graph, u: u32) -> usize {
    residual_bound(g, &g.reach(u, true)) + residual_bound(g, &g.reach(u, false))
}

/// Flow per vertex and the bottleneck score per vertex.
///
/// Every vertex injects one unit; a vertex forwards its accumulated flow to
/// its parents in equal shares. The score is flow over descendant count,
/// zero for leaves.
pub(crate) fn bottleneck_local(g: &Graph) -> (Vec<BigRational>, Vec<BigRational>) {
    let n = g.n();
    let order = g.kahn();
    let words = n.div_ceil(64);
    let mut desc = vec![0u64; n * words];
    let mut flow: Vec<BigRational> = vec![BigRational::one(); n];
    for &v in order.iter().rev() {
        let v = v as usize;
        for &c in g.children(v as u32) {
            let c = c as usize;
            let share = &flow[c] / BigRational::from_integer(BigInt::from(g.in_degree(c as u32)));
            flow[v] += share;
            for w in 0..words {
                let bits = desc[c * words + w];
                desc[v * words + w] |= bits;
            }
            desc[v * words + c / 64] |= 1 << (c % 64);
        }
    }
    let scores = (0..n)
        .map(|v| {
            let d: u32 = desc[v * words..(v + 1) * words]
                .iter()
                .map(|w| w.count_ones())
                .sum();
            if d == 0 {
                BigRational::zero()
            } else {
                &flow[v] / BigRational::from_integer(BigInt::from(d))
            }
        })
        .collect();
    (flow, scores)
}

/// Selects a pivot vertex of `d`; ties are broken uniformly with `rng`.
pub fn select_pivot<R: Rng + ?Sized>(
    d: &Dag,
    strategy: PivotStrategy,
    rng: &mut R,
) -> Result<usize, PivotError> {
    choose(d.graph(), strategy, rng).map(|v| v as usize)
}

/// Summed `e - n + r` of `O[-D+(u)]` and `O[-A+(u)]`.
pub fn bound_score(d: &Dag, u: usize) -> Result<usize, PivotError> {
    if u >= d.len() {
        return Err(PivotError::UnknownVertex(u));
    }
    Ok(bound_score_local(d.graph(), u as u32))
}

/// Bottleneck score of every vertex, indexed like `d`.
pub fn bottleneck_scores(d: &Dag) -> Vec<BigRational> {
    bottleneck_local(d.graph()).1
}

/// Simulated leaf-to-root flow through every vertex, indexed like `d`.
pub fn bottleneck_flows(d: &Dag) -> Vec<BigRational> {
    bottleneck_local(d.graph()).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diamond() -> Dag {
        Dag::build(
            ["a", "b", "c", "d"],
            [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        )
        .unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in PivotStrategy::ALL {
            assert_eq!(s.name().parse::<PivotStrategy>().unwrap(), s);
        }
        assert!("nope".parse::<PivotStrategy>().is_err());
    }

    #[test]
    fn mpv_on_diamond_is_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(
                select_pivot(&diamond(), PivotStrategy::RandomMultiParent, &mut rng),
                Ok(3)
            );
        }
        let chain = Dag::build(["a", "b"], [("a", "b")]).unwrap();
        assert_eq!(
            select_pivot(&chain, PivotStrategy::RandomMultiParent, &mut rng),
            Err(PivotError::NoMultiParentVertex)
        );
        assert_eq!(
            select_pivot(&Dag::empty(), PivotStrategy::Random, &mut rng),
            Err(PivotError::EmptyGraph)
        );
    }

    #[test]
    fn max_degree_on_star_is_root() {
        let leaves = ["b", "c", "d", "e", "f"];
        let star = Dag::build(
            leaves.iter().copied().chain(["a"]),
            leaves.iter().map(|&l| ("a", l)),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(select_pivot(&star, PivotStrategy::MaxDegree, &mut rng), Ok(0));
    }

    #[test]
    fn bound_scores_on_diamond() {
        let d = diamond();
        let scores: Vec<usize> = (0..4).map(|u| bound_score(&d, u).unwrap()).collect();
        // O[-A+(a)] = {b, c, d} keeps two roots and two edges: 2 - 3 + 2 = 1
        assert_eq!(scores, [1, 0, 0, 0]);
        assert_eq!(bound_score(&d, 4), Err(PivotError::UnknownVertex(4)));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let p = select_pivot(&d, PivotStrategy::MinBound, &mut rng).unwrap();
            assert!((1..4).contains(&p));
        }
    }

    #[test]
    fn bottleneck_recurrence() {
        let chain = Dag::build(["a", "b", "c"], [("a", "b"), ("b", "c")]).unwrap();
        assert_eq!(bottleneck_flows(&chain), [q(3, 1), q(2, 1), q(1, 1)]);
        assert_eq!(bottleneck_scores(&chain), [q(3, 2), q(2, 1), q(0, 1)]);

        let d = diamond();
        assert_eq!(bottleneck_flows(&d), [q(4, 1), q(3, 2), q(3, 2), q(1, 1)]);
        assert_eq!(bottleneck_scores(&d), [q(4, 3), q(3, 2), q(3, 2), q(0, 1)]);

        let anti = Dag::build(["x", "y"], Vec::<(&str, &str)>::new()).unwrap();
        assert!(bottleneck_scores(&anti).iter().all(|s| s.is_zero()));
    }
}
