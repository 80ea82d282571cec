//! Work-stack evaluator for the decomposition recursion.
//!
//! Each recursive invocation becomes a [`Frame`]; a frame that needs the
//! count of a subproblem hands it back to the driver loop, which pushes a new
//! frame and later delivers the result. Recursion depth is therefore bounded
//! only by heap memory.

use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;
use core::mem;

use hashbrown::HashMap;
use num_traits::One;
use rand_chacha::ChaCha8Rng;

use super::{Count, CounterConfig, Interrupted};
use crate::graph::Graph;
use crate::pivot;

const TAG_INCLUDE: u64 = 1 << 62;
const TAG_EXCLUDE: u64 = 1 << 61;
/// Marks weights that were supplied by the caller rather than produced by
/// pruning; their tag indexes the value table instead of the memo table.
pub(crate) const TAG_VALUE: u64 = 1 << 60;

/// A subtotal attached to a vertex, with the key of the pruned subgraph that
/// produced it (when keys are tracked).
#[derive(Debug)]
pub(crate) struct Weight {
    pub(crate) value: Count,
    pub(crate) tag: Option<u64>,
}

type Slot = Option<Rc<Weight>>;

/// A subproblem: a graph plus per-vertex subtotals in the current
/// orientation.
///
/// `include[v]` multiplies every consistent set that contains `v` and is only
/// ever set on leaves; `exclude[v]` multiplies every set that omits `v` and
/// is only ever set on roots. Reversal swaps the two.
#[derive(Debug, Clone)]
pub(crate) struct Sub {
    pub(crate) g: Graph,
    pub(crate) include: Vec<Slot>,
    pub(crate) exclude: Vec<Slot>,
    pub(crate) flipped: bool,
}

fn weight(slot: &Slot) -> Count {
    slot.as_ref().map_or_else(Count::one, |w| w.value.clone())
}

impl Sub {
    pub(crate) fn plain(g: Graph) -> Sub {
        let n = g.n();
        Sub {
            g,
            include: vec![None; n],
            exclude: vec![None; n],
            flipped: false,
        }
    }

    fn induced(&self, keep: &[bool]) -> Sub {
        let (g, _) = self.g.induced(keep);
        let pick = |slots: &[Slot]| -> Vec<Slot> {
            slots
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(s, _)| s.clone())
                .collect()
        };
        Sub {
            g,
            include: pick(&self.include),
            exclude: pick(&self.exclude),
            flipped: self.flipped,
        }
    }

    fn induced_members(&self, members: &[u32]) -> Sub {
        let mut keep = vec![false; self.g.n()];
        for &v in members {
            keep[v as usize] = true;
        }
        self.induced(&keep)
    }

    fn reverse(&mut self) {
        self.g.reverse();
        mem::swap(&mut self.include, &mut self.exclude);
        self.flipped = !self.flipped;
    }

    /// Canonical key: base vertex ids in ascending order, each followed by
    /// the keys of the subgraphs pruned into it. Sides are recorded in base
    /// orientation, so a graph and its reversal share a key.
    fn key(&self) -> Vec<u64> {
        let (inc, exc) = if self.flipped {
            (&self.exclude, &self.include)
        } else {
            (&self.include, &self.exclude)
        };
        let mut key = Vec::with_capacity(self.g.n());
        for v in 0..self.g.n() {
            key.push(self.g.ids[v] as u64);
            if let Some(w) = &inc[v] {
                key.push(TAG_INCLUDE | w.tag.expect("weights carry tags when hashing"));
            }
            if let Some(w) = &exc[v] {
                key.push(TAG_EXCLUDE | w.tag.expect("weights carry tags when hashing"));
            }
        }
        key
    }

    /// Evaluates a forest bottom-up; returns the count and the number of
    /// vertices visited.
    pub(crate) fn forest_count(&self) -> (Count, usize) {
        let g = &self.g;
        let order = g.kahn();
        let mut value: Vec<Count> = vec![Count::one(); g.n()];
        let mut total = Count::one();
        for &v in order.iter().rev() {
            let mut below = Count::one();
            for &c in g.children(v) {
                below *= mem::take(&mut value[c as usize]);
            }
            if let Some(w) = &self.include[v as usize] {
                below *= &w.value;
            }
            let here = weight(&self.exclude[v as usize]) + below;
            if g.in_degree(v) == 0 {
                total *= here;
            } else {
                value[v as usize] = here;
            }
        }
        (total, order.len())
    }
}

/// Branching vertices of `g`, deepest first.
///
/// `u` is branching iff it has children and no edge enters `D(u)` from
/// outside `D+(u)`; equivalently `u` dominates all of its descendants with
/// respect to a virtual source above every root. Dominators of a DAG follow
/// from one topological pass (the immediate dominator of `v` is the
/// dominator-tree LCA of its parents). An edge `w -> c` leaves the dominator
/// subtree of exactly the vertices on the dominator path from `w` up to but
/// excluding `idom(c)`, counted with a difference array.
pub(crate) fn branching_vertices(g: &Graph) -> Vec<u32> {
    let n = g.n();
    const SOURCE: u32 = u32::MAX;
    let order = g.kahn();
    let mut idom = vec![SOURCE; n];
    let mut depth = vec![0u32; n];
    let lca = |mut a: u32, mut b: u32, idom: &[u32], depth: &[u32]| -> u32 {
        while a != b {
            if a == SOURCE || b == SOURCE {
                return SOURCE;
            }
            if depth[a as usize] >= depth[b as usize] {
                a = idom[a as usize];
            } else {
                b = idom[b as usize];
            }
        }
        a
    };
    for &v in &order {
        let mut parents = g.parents(v).iter();
        let dom = match parents.next() {
            None => SOURCE,
            Some(&first) => parents.fold(first, |acc, &p| lca(acc, p, &idom, &depth)),
        };
        idom[v as usize] = dom;
        depth[v as usize] = if dom == SOURCE { 1 } else { depth[dom as usize] + 1 };
    }
    let mut escapes = vec![0i64; n];
    for w in 0..n as u32 {
        for &c in g.children(w) {
            escapes[w as usize] += 1;
            let d = idom[c as usize];
            if d != SOURCE {
                escapes[d as usize] -= 1;
            }
        }
    }
    for &v in order.iter().rev() {
        let d = idom[v as usize];
        if d != SOURCE {
            escapes[d as usize] += escapes[v as usize];
        }
    }
    order
        .iter()
        .rev()
        .copied()
        .filter(|&v| g.out_degree(v) > 0 && escapes[v as usize] == 0)
        .collect()
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Stats {
    pub(crate) calls: u64,
    pub(crate) memo_hits: u64,
    pub(crate) reversals: u64,
    pub(crate) prunes: u64,
}

enum Stage {
    Next,
    Prune {
        stem: Sub,
        order: Vec<u32>,
        next: usize,
        /// Base id of the vertex whose branch is being counted, with the
        /// local mask of that branch.
        waiting: Option<(u32, Vec<bool>)>,
    },
    Split {
        without_weight: Count,
        with_weight: Count,
        with_pivot: Option<Sub>,
        without: Option<Count>,
    },
}

struct Frame {
    key: Option<Vec<u64>>,
    comps: Vec<Sub>,
    acc: Count,
    stage: Stage,
}

enum Step {
    Call(Sub),
    Finished(Count),
}

/// Result of one invocation: the count and, when hashing, the memo id of
/// the subproblem's key.
type Outcome = (Count, Option<u64>);

pub(crate) struct Engine<'a> {
    config: CounterConfig,
    rng: ChaCha8Rng,
    memo: HashMap<Vec<u64>, (Count, u64)>,
    pub(crate) stats: Stats,
    interrupt: &'a mut dyn FnMut(u64) -> bool,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(config: CounterConfig, interrupt: &'a mut dyn FnMut(u64) -> bool) -> Self {
        use rand::SeedableRng;
        Engine {
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            memo: HashMap::new(),
            stats: Stats::default(),
            interrupt,
        }
    }

    pub(crate) fn memo_entries(&self) -> u64 {
        self.memo.len() as u64
    }

    pub(crate) fn run(&mut self, root: Sub) -> Result<Outcome, Interrupted> {
        let mut stack: Vec<Frame> = Vec::new();
        let mut pending = Some(root);
        let mut delivered: Option<Outcome> = None;
        loop {
            if let Some(sub) = pending.take() {
                match self.enter(sub)? {
                    Ok(frame) => stack.push(frame),
                    Err(outcome) => delivered = Some(outcome),
                }
            }
            let Some(frame) = stack.last_mut() else {
                return Ok(delivered.expect("root invocation produced a result"));
            };
            match self.resume(frame, delivered.take()) {
                Step::Call(sub) => pending = Some(sub),
                Step::Finished(count) => {
                    let frame = stack.pop().expect("frame");
                    let id = frame.key.map(|key| {
                        let id = self.memo.len() as u64;
                        self.memo.insert(key, (count.clone(), id));
                        id
                    });
                    delivered = Some((count, id));
                }
            }
        }
    }

    /// Starts an invocation: memo lookup, optional reversal, component
    /// split. A memo hit completes immediately (`Err`).
    fn enter(&mut self, mut sub: Sub) -> Result<Result<Frame, Outcome>, Interrupted> {
        self.stats.calls += 1;
        if (self.interrupt)(self.stats.calls) {
            return Err(Interrupted {
                calls: self.stats.calls,
            });
        }
        let key = if self.config.hash {
            let key = sub.key();
            if let Some((count, id)) = self.memo.get(&key) {
                self.stats.memo_hits += 1;
                return Ok(Err((count.clone(), Some(*id))));
            }
            Some(key)
        } else {
            None
        };
        if self.config.reverse && sub.g.multi_child_count() < sub.g.multi_parent_count() {
            sub.reverse();
            self.stats.reversals += 1;
        }
        let mut comps = if self.config.prune {
            let members = sub.g.components();
            if members.len() <= 1 {
                vec![sub]
            } else {
                members.iter().map(|m| sub.induced_members(m)).collect()
            }
        } else {
            vec![sub]
        };
        // popped from the back, so store in descending order
        comps.reverse();
        Ok(Ok(Frame {
            key,
            comps,
            acc: Count::one(),
            stage: Stage::Next,
        }))
    }

    fn split(&mut self, stem: Sub) -> (Stage, Sub) {
        let u = pivot::choose(&stem.g, self.config.pivot, &mut self.rng)
            .expect("stem of a non-forest component has a pivot");
        let below = stem.g.reach(u, true);
        let above = stem.g.reach(u, false);
        let without: Vec<bool> = below.iter().map(|&b| !b).collect();
        let with: Vec<bool> = above.iter().map(|&a| !a).collect();
        let stage = Stage::Split {
            without_weight: weight(&stem.exclude[u as usize]),
            with_weight: weight(&stem.include[u as usize]),
            with_pivot: Some(stem.induced(&with)),
            without: None,
        };
        (stage, stem.induced(&without))
    }

    fn resume(&mut self, frame: &mut Frame, mut delivered: Option<Outcome>) -> Step {
        loop {
            match &mut frame.stage {
                Stage::Next => {
                    let Some(comp) = frame.comps.pop() else {
                        return Step::Finished(mem::take(&mut frame.acc));
                    };
                    if comp.g.is_forest() {
                        frame.acc *= comp.forest_count().0;
                        continue;
                    }
                    if self.config.prune {
                        let order = branching_vertices(&comp.g)
                            .into_iter()
                            .map(|v| comp.g.ids[v as usize])
                            .collect();
                        frame.stage = Stage::Prune {
                            stem: comp,
                            order,
                            next: 0,
                            waiting: None,
                        };
                        continue;
                    }
                    let (stage, call) = self.split(comp);
                    frame.stage = stage;
                    return Step::Call(call);
                }
                Stage::Prune {
                    stem,
                    order,
                    next,
                    waiting,
                } => {
                    if let Some((base, branch)) = waiting.take() {
                        let (count, tag) = delivered.take().expect("branch count delivered");
                        let keep: Vec<bool> = branch.iter().map(|&b| !b).collect();
                        let mut pruned = stem.induced(&keep);
                        let u = pruned.g.ids.binary_search(&base).expect("branching vertex kept");
                        let value = match &pruned.include[u] {
                            Some(w) => &w.value * count,
                            None => count,
                        };
                        pruned.include[u] = Some(Rc::new(Weight { value, tag }));
                        *stem = pruned;
                        self.stats.prunes += 1;
                    }
                    if *next < order.len() {
                        let base = order[*next];
                        *next += 1;
                        let u = stem.g.ids.binary_search(&base).expect("branching vertex present") as u32;
                        let mut branch = stem.g.reach(u, true);
                        branch[u as usize] = false;
                        let call = stem.induced(&branch);
                        *waiting = Some((base, branch));
                        return Step::Call(call);
                    }
                    let stem = mem::replace(stem, Sub::plain(Graph::default()));
                    if stem.g.is_forest() {
                        frame.acc *= stem.forest_count().0;
                        frame.stage = Stage::Next;
                        continue;
                    }
                    let (stage, call) = self.split(stem);
                    frame.stage = stage;
                    return Step::Call(call);
                }
                Stage::Split {
                    without_weight,
                    with_weight,
                    with_pivot,
                    without,
                } => {
                    let (count, _) = delivered.take().expect("subproblem count delivered");
                    if without.is_none() {
                        *without = Some(count);
                        return Step::Call(with_pivot.take().expect("second subproblem"));
                    }
                    let first = without.take().expect("first subproblem");
                    let total = &*without_weight * first + &*with_weight * count;
                    frame.acc *= total;
                    frame.stage = Stage::Next;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Dag;

    #[test]
    fn forest_count_visits_each_vertex_once() {
        let edges = [("a", "b"), ("a", "c"), ("c", "d"), ("e", "f")];
        let d = Dag::build(["a", "b", "c", "d", "e", "f", "g"], edges).unwrap();
        let (count, visits) = Sub::plain(d.graph().clone()).forest_count();
        // tree a: 1 + 2 * (1 + 2) = 7; tree e: 3; isolated g: 2
        assert_eq!(count, Count::from(42u32));
        assert_eq!(visits, 7);
    }

    #[test]
    fn branching_matches_definition() {
        let chain = Dag::build(["a", "b", "c"], [("a", "b"), ("b", "c")]).unwrap();
        assert_eq!(branching_vertices(chain.graph()), [1, 0]);
        let diamond = Dag::build(
            ["a", "b", "c", "d"],
            [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        )
        .unwrap();
        assert_eq!(branching_vertices(diamond.graph()), [0]);
        let anti = Dag::build(["a", "b"], Vec::<(&str, &str)>::new()).unwrap();
        assert!(branching_vertices(anti.graph()).is_empty());
    }
}
