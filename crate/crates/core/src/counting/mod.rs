//! Exact counting of consistent subgraphs.
//!
//! Trees and forests are counted directly in linear time. General DAGs are
//! split on a pivot `u` into `O[-D+(u)]` (sets without `u`) and `O[-A+(u)]`
//! (sets with `u`), optionally accelerated by component splitting and
//! branch pruning, memoization on canonical keys, and graph reversal.

mod engine;

use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

use hashbrown::HashMap;
use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::graph::{Dag, GraphError};
use crate::pivot::PivotStrategy;
use engine::{Engine, Sub, Weight, TAG_VALUE};

pub(crate) use engine::branching_vertices;

/// Arbitrary-precision count.
pub type Count = BigUint;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CountError {
    #[error("graph is not a rooted tree")]
    NotATree,
    #[error("graph is not a forest")]
    NotAForest,
    #[error("`{0}` is not a branching vertex")]
    NotBranching(String),
    #[error("invalid subtotal on `{0}`: {1}")]
    InvalidPhi(String, &'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("counting interrupted after {calls} recursive calls")]
pub struct Interrupted {
    pub calls: u64,
}

/// Subtotals attached to one vertex.
///
/// `include` multiplies every consistent set containing the vertex (the
/// count of a pruned descendant branch; leaves only). `exclude` multiplies
/// every set omitting it (the count of a branch pruned in the reverse graph;
/// roots only).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phi {
    pub include: Count,
    pub exclude: Count,
}

impl Default for Phi {
    fn default() -> Self {
        Phi {
            include: Count::one(),
            exclude: Count::one(),
        }
    }
}

/// Per-vertex subtotals, 1 everywhere unless set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhiMap {
    entries: BTreeMap<usize, Phi>,
}

impl PhiMap {
    pub fn new() -> Self {
        PhiMap::default()
    }

    pub fn get(&self, v: usize) -> Phi {
        self.entries.get(&v).cloned().unwrap_or_default()
    }

    pub fn set_include(&mut self, v: usize, value: Count) {
        self.entries.entry(v).or_default().include = value;
    }

    pub fn set_exclude(&mut self, v: usize, value: Count) {
        self.entries.entry(v).or_default().exclude = value;
    }

    /// Vertices carrying a non-default subtotal.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Phi)> {
        self.entries
            .iter()
            .filter(|(_, p)| !p.include.is_one() || !p.exclude.is_one())
            .map(|(&v, p)| (v, p))
    }
}

/// Which acceleration modules are active, mirroring the benchmark rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modules {
    None,
    Prune,
    PruneHash,
    PruneHashReverse,
}

impl Modules {
    pub const ALL: [Modules; 4] = [
        Modules::None,
        Modules::Prune,
        Modules::PruneHash,
        Modules::PruneHashReverse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Modules::None => "none",
            Modules::Prune => "prune",
            Modules::PruneHash => "prune+hash",
            Modules::PruneHashReverse => "prune+hash+reverse",
        }
    }

    pub fn parse(s: &str) -> Option<Modules> {
        Modules::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn config(self, pivot: PivotStrategy, seed: u64) -> CounterConfig {
        let (prune, hash, reverse) = match self {
            Modules::None => (false, false, false),
            Modules::Prune => (true, false, false),
            Modules::PruneHash => (true, true, false),
            Modules::PruneHashReverse => (true, true, true),
        };
        CounterConfig {
            pivot,
            prune,
            hash,
            reverse,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterConfig {
    pub pivot: PivotStrategy,
    /// Component splitting and branch pruning.
    pub prune: bool,
    /// Memoization on canonical keys.
    pub hash: bool,
    /// Reverse whenever the reverse graph has fewer multi-parent vertices.
    pub reverse: bool,
    pub seed: u64,
}

impl Default for CounterConfig {
    fn default() -> Self {
        Modules::PruneHashReverse.config(PivotStrategy::MaxDegree, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountReport {
    pub count: Count,
    /// Number of invocations of the recursive counter, including the top one.
    pub recursive_calls: u64,
    pub memo_hits: u64,
    pub memo_entries: u64,
    /// Zero when built without the `std` feature.
    pub wall_time: Duration,
    pub reversals: u64,
    pub prunes: u64,
}

fn subtotals(d: &Dag, phi: &PhiMap, tag_values: bool) -> Result<Sub, CountError> {
    let g = d.graph();
    let mut sub = Sub::plain(g.clone());
    let mut values: HashMap<Count, u64> = HashMap::new();
    let mut slot = |value: &Count| -> Option<Rc<Weight>> {
        if value.is_one() {
            return None;
        }
        let tag = tag_values.then(|| {
            let next = values.len() as u64;
            TAG_VALUE | *values.entry(value.clone()).or_insert(next)
        });
        Some(Rc::new(Weight {
            value: value.clone(),
            tag,
        }))
    };
    for (v, p) in phi.entries.iter() {
        let v = *v;
        if v >= d.len() {
            return Err(GraphError::UnknownVertex(alloc::format!("#{v}")).into());
        }
        let name = || String::from(d.name(v));
        if p.include.is_zero() || p.exclude.is_zero() {
            return Err(CountError::InvalidPhi(name(), "subtotals must be at least 1"));
        }
        if !p.include.is_one() && g.out_degree(v as u32) > 0 {
            return Err(CountError::InvalidPhi(name(), "include subtotal on a non-leaf"));
        }
        if !p.exclude.is_one() && g.in_degree(v as u32) > 0 {
            return Err(CountError::InvalidPhi(name(), "exclude subtotal on a non-root"));
        }
        sub.include[v] = slot(&p.include);
        sub.exclude[v] = slot(&p.exclude);
    }
    Ok(sub)
}

/// Counts a rooted tree (or the empty graph) under subtotals `phi`:
/// `ctree(T_r) = exclude(r) + include(r) * prod ctree(T_c)`.
pub fn ctree(d: &Dag, phi: &PhiMap) -> Result<Count, CountError> {
    if !d.is_forest() || d.stats().roots > 1 {
        return Err(CountError::NotATree);
    }
    Ok(subtotals(d, phi, false)?.forest_count().0)
}

/// Counts a forest as the product of its tree counts.
pub fn cforest(d: &Dag, phi: &PhiMap) -> Result<Count, CountError> {
    if !d.is_forest() {
        return Err(CountError::NotAForest);
    }
    Ok(subtotals(d, phi, false)?.forest_count().0)
}

/// Counts with a caller-supplied interrupt hook, polled once per recursive
/// call with the number of calls so far; returning `true` aborts.
pub fn cdag_interruptible(
    d: &Dag,
    phi: &PhiMap,
    config: &CounterConfig,
    interrupt: &mut dyn FnMut(u64) -> bool,
) -> Result<Result<CountReport, Interrupted>, CountError> {
    let root = subtotals(d, phi, config.hash)?;
    #[cfg(feature = "std")]
    let started = std::time::Instant::now();
    let mut engine = Engine::new(*config, interrupt);
    let outcome = engine.run(root);
    #[cfg(feature = "std")]
    let wall_time = started.elapsed();
    #[cfg(not(feature = "std"))]
    let wall_time = Duration::ZERO;
    Ok(outcome.map(|(count, _)| CountReport {
        count,
        recursive_calls: engine.stats.calls,
        memo_hits: engine.stats.memo_hits,
        memo_entries: engine.memo_entries(),
        wall_time,
        reversals: engine.stats.reversals,
        prunes: engine.stats.prunes,
    }))
}

/// Counts `d` under subtotals `phi`.
pub fn cdag_weighted(d: &Dag, phi: &PhiMap, config: &CounterConfig) -> Result<CountReport, CountError> {
    cdag_interruptible(d, phi, config, &mut |_| false).map(|r| r.expect("never interrupted"))
}

/// Counts the consistent subgraphs of `d`.
pub fn cdag(d: &Dag, config: &CounterConfig) -> CountReport {
    cdag_weighted(d, &PhiMap::new(), config).expect("empty subtotals are valid")
}

/// Plain pivot decomposition with every module disabled.
pub fn cdag_basic(d: &Dag, pivot: PivotStrategy, seed: u64) -> CountReport {
    cdag(d, &Modules::None.config(pivot, seed))
}

/// Branching vertices of `d`, deepest first.
pub fn find_branching_vertices(d: &Dag) -> Vec<usize> {
    branching_vertices(d.graph())
        .into_iter()
        .map(|v| v as usize)
        .collect()
}

/// Counts the branch `D(u)` and removes it, folding its count into the
/// include subtotal of `u`. Returns the pruned graph and its subtotals,
/// indexed like the returned graph.
pub fn prune_branch(
    d: &Dag,
    phi: &PhiMap,
    u: usize,
    config: &CounterConfig,
) -> Result<(Dag, PhiMap), CountError> {
    if u >= d.len() {
        return Err(GraphError::UnknownVertex(alloc::format!("#{u}")).into());
    }
    if !find_branching_vertices(d).contains(&u) {
        return Err(CountError::NotBranching(d.name(u).into()));
    }
    let branch = d.descendants(u, false)?;
    let branch_dag = d.induced_subgraph(&branch)?;
    let mut branch_phi = PhiMap::new();
    for (v, p) in phi.iter() {
        if let Some(i) = branch_dag.index(d.name(v)) {
            branch_phi.entries.insert(i, p.clone());
        }
    }
    let count = cdag_weighted(&branch_dag, &branch_phi, config)?.count;
    let stem = d.induced_without(&branch)?;
    let mut stem_phi = PhiMap::new();
    for (v, p) in phi.iter() {
        if let Some(i) = stem.index(d.name(v)) {
            stem_phi.entries.insert(i, p.clone());
        }
    }
    let at = stem.index(d.name(u)).expect("branching vertex stays");
    let include = stem_phi.get(at).include * count;
    stem_phi.set_include(at, include);
    Ok((stem, stem_phi))
}

/// Human-readable canonical key: vertex names in ascending order joined by
/// `,`, where a vertex carrying a pruned branch is followed by that branch's
/// key in parentheses.
pub fn canonical_key(d: &Dag, provenance: &BTreeMap<usize, String>) -> String {
    let mut out = String::new();
    for (i, name) in d.names().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(name);
        if let Some(k) = provenance.get(&i) {
            out.push('(');
            out.push_str(k);
            out.push(')');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn diamond() -> Dag {
        Dag::build(
            ["a", "b", "c", "d"],
            [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        )
        .unwrap()
    }

    fn chain(n: usize) -> Dag {
        let names: Vec<String> = (0..n).map(|i| alloc::format!("v{i:03}")).collect();
        let edges: Vec<(String, String)> = names.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        Dag::build(&names, edges).unwrap()
    }

    fn antichain(n: usize) -> Dag {
        let names: Vec<String> = (0..n).map(|i| alloc::format!("v{i:03}")).collect();
        Dag::build(&names, Vec::<(String, String)>::new()).unwrap()
    }

    fn all_configs() -> Vec<CounterConfig> {
        let mut out = Vec::new();
        for m in Modules::ALL {
            for p in PivotStrategy::ALL {
                out.push(m.config(p, 11));
            }
        }
        out
    }

    #[test]
    fn ctree_examples() {
        let empty = PhiMap::new();
        assert_eq!(ctree(&Dag::empty(), &empty).unwrap(), Count::one());
        for n in 1..8 {
            assert_eq!(ctree(&chain(n), &empty).unwrap(), Count::from(n + 1));
        }
        let star = Dag::build(["r", "x", "y", "z"], [("r", "x"), ("r", "y"), ("r", "z")]).unwrap();
        assert_eq!(ctree(&star, &empty).unwrap(), Count::from(9u32));
        let mut phi = PhiMap::new();
        phi.set_include(0, Count::from(5u32));
        assert_eq!(ctree(&antichain(1), &phi).unwrap(), Count::from(6u32));
        assert_eq!(ctree(&diamond(), &empty), Err(CountError::NotATree));
        assert_eq!(ctree(&antichain(2), &empty), Err(CountError::NotATree));
    }

    #[test]
    fn cforest_examples() {
        let empty = PhiMap::new();
        assert_eq!(cforest(&antichain(2), &empty).unwrap(), Count::from(4u32));
        let f = Dag::build(["a", "b", "c"], [("a", "b")]).unwrap();
        assert_eq!(cforest(&f, &empty).unwrap(), Count::from(6u32));
        assert_eq!(cforest(&Dag::empty(), &empty).unwrap(), Count::one());
        assert_eq!(cforest(&diamond(), &empty), Err(CountError::NotAForest));
    }

    #[test]
    fn phi_placement_is_validated() {
        let mut phi = PhiMap::new();
        phi.set_include(0, Count::from(3u32));
        assert!(matches!(
            cdag_weighted(&diamond(), &phi, &CounterConfig::default()),
            Err(CountError::InvalidPhi(..))
        ));
        let mut phi = PhiMap::new();
        phi.set_exclude(3, Count::from(3u32));
        assert!(cdag_weighted(&diamond(), &phi, &CounterConfig::default()).is_err());
        let mut phi = PhiMap::new();
        phi.set_include(3, Count::zero());
        assert!(cdag_weighted(&diamond(), &phi, &CounterConfig::default()).is_err());
    }

    #[test]
    fn basic_examples() {
        for p in PivotStrategy::ALL {
            assert_eq!(cdag_basic(&diamond(), p, 1).count, Count::from(6u32));
            assert_eq!(cdag_basic(&antichain(9), p, 1).count, Count::from(512u32));
            assert_eq!(cdag_basic(&chain(9), p, 1).count, Count::from(10u32));
        }
    }

    #[test]
    fn full_examples() {
        for config in all_configs() {
            assert_eq!(cdag(&diamond(), &config).count, Count::from(6u32));
            let big = cdag(&antichain(64), &config).count;
            assert_eq!(big.to_string(), "18446744073709551616");
            let two = Dag::build(
                ["a", "b", "c", "d", "e", "f", "g", "h"],
                [
                    ("a", "b"),
                    ("a", "c"),
                    ("b", "d"),
                    ("c", "d"),
                    ("e", "f"),
                    ("e", "g"),
                    ("f", "h"),
                    ("g", "h"),
                ],
            )
            .unwrap();
            assert_eq!(cdag(&two, &config).count, Count::from(36u32));
        }
    }

    #[test]
    fn chain_takes_one_call() {
        for config in all_configs() {
            let r = cdag(&chain(30), &config);
            assert_eq!(r.count, Count::from(31u32));
            assert_eq!(r.recursive_calls, 1);
        }
    }

    #[test]
    fn weighted_root_and_leaf_subtotals() {
        // a -> {b, c} -> d with 4 pruned configurations hanging below d and
        // 3 above a: sets without a: 3; with a: diamond-below-a counts
        // {}, {b}, {c}, {b,c}, {b,c,d}x4 = 8.
        let mut phi = PhiMap::new();
        phi.set_include(3, Count::from(4u32));
        phi.set_exclude(0, Count::from(3u32));
        for config in all_configs() {
            let r = cdag_weighted(&diamond(), &phi, &config).unwrap();
            assert_eq!(r.count, Count::from(11u32), "{config:?}");
        }
    }

    #[test]
    fn branching_vertices_examples() {
        let c = Dag::build(["a", "b", "c"], [("a", "b"), ("b", "c")]).unwrap();
        assert_eq!(find_branching_vertices(&c), [1, 0]);
        assert_eq!(find_branching_vertices(&diamond()), [0]);
        assert!(find_branching_vertices(&antichain(4)).is_empty());
    }

    #[test]
    fn prune_branch_examples() {
        let config = CounterConfig::default();
        let c = Dag::build(["a", "b", "c"], [("a", "b"), ("b", "c")]).unwrap();
        let (stem, phi) = prune_branch(&c, &PhiMap::new(), 1, &config).unwrap();
        assert_eq!(stem.names(), ["a", "b"]);
        assert_eq!(phi.get(1).include, Count::from(2u32));
        assert_eq!(
            cdag_weighted(&stem, &phi, &config).unwrap().count,
            Count::from(4u32)
        );

        let (stem, phi) = prune_branch(&diamond(), &PhiMap::new(), 0, &config).unwrap();
        assert_eq!(stem.len(), 1);
        assert_eq!(phi.get(0).include, Count::from(5u32));
        assert_eq!(ctree(&stem, &phi).unwrap(), Count::from(6u32));

        assert_eq!(
            prune_branch(&c, &PhiMap::new(), 2, &config),
            Err(CountError::NotBranching("c".into()))
        );
    }

    #[test]
    fn canonical_key_examples() {
        let d = Dag::build(["b", "a", "c"], Vec::<(&str, &str)>::new()).unwrap();
        assert_eq!(canonical_key(&d, &BTreeMap::new()), "a,b,c");
        let ab = Dag::build(["a", "b"], [("a", "b")]).unwrap();
        let prov = BTreeMap::from([(1, "c,d".to_string())]);
        assert_eq!(canonical_key(&ab, &prov), "a,b(c,d)");
        assert_eq!(canonical_key(&Dag::empty(), &BTreeMap::new()), "");
    }

    #[test]
    fn interrupt_stops_the_engine() {
        let d = Dag::build(
            ["a", "b", "c", "d", "e"],
            [
                ("a", "c"),
                ("b", "c"),
                ("a", "d"),
                ("b", "d"),
                ("c", "e"),
                ("d", "e"),
            ],
        )
        .unwrap();
        let config = Modules::None.config(PivotStrategy::Random, 0);
        let r = cdag_interruptible(&d, &PhiMap::new(), &config, &mut |calls| calls > 1).unwrap();
        assert_eq!(r, Err(Interrupted { calls: 2 }));
    }
}
