//! Immutable DAG representation and the structural primitives every other
//! module builds on.
//!
//! Vertices are named by strings at the API boundary and stored as dense
//! indices ordered by the lexicographic order of their names, so index order
//! doubles as the canonical total order used for tie-breaking and keys.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::mem;

/// A set of dense vertex indices belonging to one [`Dag`].
pub type VertexSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("edge endpoint `{0}` is not a declared vertex")]
    UnknownEndpoint(String),
    #[error("duplicate edge `{0}` -> `{1}`")]
    DuplicateEdge(String, String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
}

/// Compact adjacency structure over local indices `0..n`.
///
/// `ids[v]` is the index of local vertex `v` in the graph the structure was
/// originally derived from; `ids` is strictly increasing, so local order and
/// base order agree. Parent and child lists are stored in CSR form and are
/// sorted.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub(crate) struct Graph {
    pub(crate) ids: Vec<u32>,
    par_off: Vec<u32>,
    par: Vec<u32>,
    chi_off: Vec<u32>,
    chi: Vec<u32>,
}

fn csr(n: usize, pairs: &[(u32, u32)]) -> (Vec<u32>, Vec<u32>) {
    // `pairs` sorted by (key, value)
    let mut off = vec![0u32; n + 1];
    for &(k, _) in pairs {
        off[k as usize + 1] += 1;
    }
    for i in 0..n {
        off[i + 1] += off[i];
    }
    let adj = pairs.iter().map(|&(_, v)| v).collect();
    (off, adj)
}

impl Graph {
    /// Builds a graph from local edges `(parent, child)`; edges must be free
    /// of duplicates.
    pub(crate) fn from_edges(ids: Vec<u32>, edges: &[(u32, u32)]) -> Graph {
        let n = ids.len();
        let mut down: Vec<(u32, u32)> = edges.to_vec();
        down.sort_unstable();
        let mut up: Vec<(u32, u32)> = edges.iter().map(|&(p, c)| (c, p)).collect();
        up.sort_unstable();
        let (chi_off, chi) = csr(n, &down);
        let (par_off, par) = csr(n, &up);
        Graph {
            ids,
            par_off,
            par,
            chi_off,
            chi,
        }
    }

    #[inline]
    pub(crate) fn n(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    pub(crate) fn edge_count(&self) -> usize {
        self.par.len()
    }

    #[inline]
    pub(crate) fn parents(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.par[self.par_off[v] as usize..self.par_off[v + 1] as usize]
    }

    #[inline]
    pub(crate) fn children(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.chi[self.chi_off[v] as usize..self.chi_off[v + 1] as usize]
    }

    #[inline]
    pub(crate) fn in_degree(&self, v: u32) -> usize {
        let v = v as usize;
        (self.par_off[v + 1] - self.par_off[v]) as usize
    }

    #[inline]
    pub(crate) fn out_degree(&self, v: u32) -> usize {
        let v = v as usize;
        (self.chi_off[v + 1] - self.chi_off[v]) as usize
    }

    pub(crate) fn reverse(&mut self) {
        mem::swap(&mut self.par_off, &mut self.chi_off);
        mem::swap(&mut self.par, &mut self.chi);
    }

    pub(crate) fn is_forest(&self) -> bool {
        (0..self.n() as u32).all(|v| self.in_degree(v) <= 1)
    }

    /// Number of vertices with two or more parents.
    pub(crate) fn multi_parent_count(&self) -> usize {
        (0..self.n() as u32).filter(|&v| self.in_degree(v) >= 2).count()
    }

    /// Number of vertices with two or more children (multi-parent count of
    /// the reverse graph).
    pub(crate) fn multi_child_count(&self) -> usize {
        (0..self.n() as u32).filter(|&v| self.out_degree(v) >= 2).count()
    }

    pub(crate) fn root_count(&self) -> usize {
        (0..self.n() as u32).filter(|&v| self.in_degree(v) == 0).count()
    }

    /// Subgraph induced by the local vertices with `keep[v]` set. The second
    /// value maps old local indices to new ones (`u32::MAX` when dropped).
    pub(crate) fn induced(&self, keep: &[bool]) -> (Graph, Vec<u32>) {
        let n = self.n();
        let mut map = vec![u32::MAX; n];
        let mut ids = Vec::new();
        for v in 0..n {
            if keep[v] {
                map[v] = ids.len() as u32;
                ids.push(self.ids[v]);
            }
        }
        let m = ids.len();
        let mut par_off = Vec::with_capacity(m + 1);
        let mut chi_off = Vec::with_capacity(m + 1);
        let mut par = Vec::new();
        let mut chi = Vec::new();
        par_off.push(0);
        chi_off.push(0);
        for v in 0..n as u32 {
            if !keep[v as usize] {
                continue;
            }
            par.extend(
                self.parents(v)
                    .iter()
                    .filter(|&&p| keep[p as usize])
                    .map(|&p| map[p as usize]),
            );
            chi.extend(
                self.children(v)
                    .iter()
                    .filter(|&&c| keep[c as usize])
                    .map(|&c| map[c as usize]),
            );
            par_off.push(par.len() as u32);
            chi_off.push(chi.len() as u32);
        }
        (
            Graph {
                ids,
                par_off,
                par,
                chi_off,
                chi,
            },
            map,
        )
    }

    /// Kahn's algorithm; returns the processed prefix, which is shorter than
    /// `n` exactly when the graph has a cycle.
    pub(crate) fn kahn(&self) -> Vec<u32> {
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n as u32).map(|v| self.in_degree(v)).collect();
        let mut queue: VecDeque<u32> = (0..n as u32).filter(|&v| indeg[v as usize] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &c in self.children(v) {
                indeg[c as usize] -= 1;
                if indeg[c as usize] == 0 {
                    queue.push_back(c);
                }
            }
        }
        order
    }

    /// Marks `start` and everything reachable from it, following child edges
    /// when `down` is set and parent edges otherwise.
    pub(crate) fn reach(&self, start: u32, down: bool) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        self.reach_into(start, down, &mut seen);
        seen
    }

    pub(crate) fn reach_into(&self, start: u32, down: bool, seen: &mut [bool]) {
        let mut stack = vec![start];
        seen[start as usize] = true;
        while let Some(v) = stack.pop() {
            let next = if down { self.children(v) } else { self.parents(v) };
            for &w in next {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    stack.push(w);
                }
            }
        }
    }

    /// Weakly connected components as sorted local vertex lists, ordered by
    /// their smallest member.
    pub(crate) fn components(&self) -> Vec<Vec<u32>> {
        let n = self.n();
        let mut comp = vec![u32::MAX; n];
        let mut out: Vec<Vec<u32>> = Vec::new();
        let mut stack = Vec::new();
        for s in 0..n as u32 {
            if comp[s as usize] != u32::MAX {
                continue;
            }
            let c = out.len() as u32;
            let mut members = vec![s];
            comp[s as usize] = c;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in self.parents(v).iter().chain(self.children(v)) {
                    if comp[w as usize] == u32::MAX {
                        comp[w as usize] = c;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

/// Structural tallies of a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GraphStats {
    pub n: usize,
    pub e: usize,
    pub leaves: usize,
    pub roots: usize,
    pub multi_parent: usize,
    /// `e - n + r`; zero exactly on forests.
    pub bound: usize,
}

/// An immutable, validated directed acyclic graph.
///
/// Edges run from parent to child (general to specific).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Dag {
    names: Vec<String>,
    graph: Graph,
}

impl Dag {
    /// Validates and builds a DAG. Repeated vertex names denote the same
    /// vertex; repeated edges are an error.
    pub fn build<V, E, S>(vertices: V, edges: E) -> Result<Dag, GraphError>
    where
        V: IntoIterator,
        V::Item: AsRef<str>,
        E: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let names: BTreeSet<String> = vertices.into_iter().map(|v| v.as_ref().to_string()).collect();
        let names: Vec<String> = names.into_iter().collect();
        let lookup = |s: &str| {
            names
                .binary_search_by(|x| x.as_str().cmp(s))
                .map(|i| i as u32)
                .map_err(|_| GraphError::UnknownEndpoint(s.to_string()))
        };
        let mut pairs = Vec::new();
        for (u, v) in edges {
            let (u, v) = (u.as_ref(), v.as_ref());
            let (pu, pv) = (lookup(u)?, lookup(v)?);
            if pu == pv {
                return Err(GraphError::SelfLoop(u.to_string()));
            }
            pairs.push((pu, pv));
        }
        pairs.sort_unstable();
        if let Some(w) = pairs.windows(2).find(|w| w[0] == w[1]) {
            let (p, c) = w[0];
            return Err(GraphError::DuplicateEdge(
                names[p as usize].clone(),
                names[c as usize].clone(),
            ));
        }
        let ids = (0..names.len() as u32).collect();
        let graph = Graph::from_edges(ids, &pairs);
        let dag = Dag { names, graph };
        dag.check_acyclic()?;
        Ok(dag)
    }

    fn check_acyclic(&self) -> Result<(), GraphError> {
        let g = &self.graph;
        let order = g.kahn();
        if order.len() == g.n() {
            return Ok(());
        }
        // Every unprocessed vertex keeps at least one unprocessed parent, so
        // walking parents inside that set must revisit a vertex.
        let mut done = vec![false; g.n()];
        for &v in &order {
            done[v as usize] = true;
        }
        let start = (0..g.n() as u32).find(|&v| !done[v as usize]).expect("cycle");
        let mut pos = vec![usize::MAX; g.n()];
        let mut walk = Vec::new();
        let mut v = start;
        while pos[v as usize] == usize::MAX {
            pos[v as usize] = walk.len();
            walk.push(v);
            v = *g
                .parents(v)
                .iter()
                .find(|&&p| !done[p as usize])
                .expect("unprocessed vertex has an unprocessed parent");
        }
        let mut cycle: Vec<String> = walk[pos[v as usize]..]
            .iter()
            .rev()
            .map(|&w| self.names[w as usize].clone())
            .collect();
        cycle.push(cycle[0].clone());
        Err(GraphError::CycleDetected(cycle))
    }

    pub fn empty() -> Dag {
        Dag::default()
    }

    /// Wraps a local graph whose `ids` index into `names_of`.
    pub(crate) fn from_graph(mut graph: Graph, names_of: &[String]) -> Dag {
        let names = graph.ids.iter().map(|&i| names_of[i as usize].clone()).collect();
        graph.ids = (0..graph.n() as u32).collect();
        Dag { names, graph }
    }

    pub(crate) fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    /// Dense index of a named vertex.
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|x| x.as_str().cmp(name)).ok()
    }

    pub fn require(&self, name: &str) -> Result<usize, GraphError> {
        self.index(name)
            .ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
    }

    fn check(&self, v: usize) -> Result<u32, GraphError> {
        if v < self.len() {
            Ok(v as u32)
        } else {
            Err(GraphError::UnknownVertex(format!("#{v}")))
        }
    }

    fn check_set(&self, s: &VertexSet) -> Result<(), GraphError> {
        match s.iter().next_back() {
            Some(&v) => self.check(v).map(|_| ()),
            None => Ok(()),
        }
    }

    pub fn parents(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.graph.parents(v as u32).iter().map(|&p| p as usize)
    }

    pub fn children(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.graph.children(v as u32).iter().map(|&c| c as usize)
    }

    /// All edges as `(parent, child)` pairs, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |u| self.children(u).map(move |v| (u, v)))
    }

    fn closure(&self, v: usize, extended: bool, down: bool) -> Result<VertexSet, GraphError> {
        let v = self.check(v)?;
        let seen = self.graph.reach(v, down);
        Ok(seen
            .iter()
            .enumerate()
            .filter(|&(w, &s)| s && (extended || w != v as usize))
            .map(|(w, _)| w)
            .collect())
    }

    /// `A(v)`, or `A+(v)` including `v` itself when `extended`.
    pub fn ancestors(&self, v: usize, extended: bool) -> Result<VertexSet, GraphError> {
        self.closure(v, extended, false)
    }

    /// `D(v)`, or `D+(v)` including `v` itself when `extended`.
    pub fn descendants(&self, v: usize, extended: bool) -> Result<VertexSet, GraphError> {
        self.closure(v, extended, true)
    }

    fn mask(&self, s: &VertexSet, value: bool) -> Vec<bool> {
        let mut keep = vec![!value; self.len()];
        for &v in s {
            keep[v] = value;
        }
        keep
    }

    /// `O[keep]`: the subgraph induced by `keep`.
    pub fn induced_subgraph(&self, keep: &VertexSet) -> Result<Dag, GraphError> {
        self.check_set(keep)?;
        let (g, _) = self.graph.induced(&self.mask(keep, true));
        Ok(Dag::from_graph(g, &self.names))
    }

    /// `O[-drop]`: the subgraph induced by every vertex outside `drop`.
    pub fn induced_without(&self, drop: &VertexSet) -> Result<Dag, GraphError> {
        self.check_set(drop)?;
        let (g, _) = self.graph.induced(&self.mask(drop, false));
        Ok(Dag::from_graph(g, &self.names))
    }

    /// The reverse graph: same vertices, every edge flipped.
    pub fn reverse(&self) -> Dag {
        let mut graph = self.graph.clone();
        graph.reverse();
        Dag {
            names: self.names.clone(),
            graph,
        }
    }

    /// Weakly connected components ordered by their smallest vertex.
    pub fn connected_components(&self) -> Vec<Dag> {
        self.graph
            .components()
            .into_iter()
            .map(|members| {
                let mut keep = vec![false; self.len()];
                for v in members {
                    keep[v as usize] = true;
                }
                Dag::from_graph(self.graph.induced(&keep).0, &self.names)
            })
            .collect()
    }

    /// Whether `s` is closed under parents (a consistent subgraph).
    pub fn is_consistent(&self, s: &VertexSet) -> Result<bool, GraphError> {
        self.check_set(s)?;
        Ok(s.iter().all(|&v| self.parents(v).all(|p| s.contains(&p))))
    }

    /// A topological order, roots first.
    pub fn topological_order(&self) -> Vec<usize> {
        self.graph.kahn().into_iter().map(|v| v as usize).collect()
    }

    /// Length of the longest path from a root to each vertex.
    pub fn levels(&self) -> Vec<usize> {
        let mut level = vec![0usize; self.len()];
        for v in self.graph.kahn() {
            level[v as usize] = self
                .graph
                .parents(v)
                .iter()
                .map(|&p| level[p as usize] + 1)
                .max()
                .unwrap_or(0);
        }
        level
    }

    pub fn stats(&self) -> GraphStats {
        let g = &self.graph;
        let n = g.n();
        let e = g.edge_count();
        let roots = g.root_count();
        GraphStats {
            n,
            e,
            leaves: (0..n as u32).filter(|&v| g.out_degree(v) == 0).count(),
            roots,
            multi_parent: g.multi_parent_count(),
            bound: e + roots - n,
        }
    }

    /// True when every vertex has at most one parent.
    pub fn is_forest(&self) -> bool {
        self.graph.is_forest()
    }
}

/// Free-function form of [`Dag::build`].
pub fn build_dag<V, E, S>(vertices: V, edges: E) -> Result<Dag, GraphError>
where
    V: IntoIterator,
    V::Item: AsRef<str>,
    E: IntoIterator<Item = (S, S)>,
    S: AsRef<str>,
{
    Dag::build(vertices, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> Dag {
        Dag::build(
            ["a", "b", "c", "d"],
            [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        )
        .unwrap()
    }

    fn chain(n: usize) -> Dag {
        let names: Vec<String> = (0..n).map(|i| format!("v{i:02}")).collect();
        let edges: Vec<(String, String)> = names.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        Dag::build(&names, edges).unwrap()
    }

    fn set(d: &Dag, names: &[&str]) -> VertexSet {
        names.iter().map(|n| d.index(n).unwrap()).collect()
    }

    #[test]
    fn build_validates() {
        let single = Dag::build(["a"], Vec::<(&str, &str)>::new()).unwrap();
        assert_eq!((single.len(), single.edge_count()), (1, 0));

        let d = diamond();
        assert_eq!(d.stats().multi_parent, 1);
        assert_eq!(d.parents(3).count(), 2);

        assert!(matches!(
            Dag::build(["a", "b"], [("a", "b"), ("b", "a")]),
            Err(GraphError::CycleDetected(_))
        ));
        assert_eq!(
            Dag::build(["a"], [("a", "x")]),
            Err(GraphError::UnknownEndpoint("x".into()))
        );
        assert_eq!(
            Dag::build(["a"], [("a", "a")]),
            Err(GraphError::SelfLoop("a".into()))
        );
        assert_eq!(
            Dag::build(["a", "b"], [("a", "b"), ("a", "b")]),
            Err(GraphError::DuplicateEdge("a".into(), "b".into()))
        );
    }

    #[test]
    fn cycle_witness_is_a_real_cycle() {
        let err = Dag::build(
            ["a", "b", "c", "d"],
            [("a", "b"), ("b", "c"), ("c", "d"), ("d", "b")],
        )
        .unwrap_err();
        let GraphError::CycleDetected(cycle) = err else {
            panic!()
        };
        assert_eq!(cycle.first(), cycle.last());
        assert_eq!(cycle.len(), 4);
        let edges = [("b", "c"), ("c", "d"), ("d", "b")];
        for w in cycle.windows(2) {
            assert!(edges.contains(&(w[0].as_str(), w[1].as_str())), "{cycle:?}");
        }
    }

    #[test]
    fn vertex_order_is_lexicographic() {
        let d = Dag::build(["c", "a", "b"], [("c", "a")]).unwrap();
        assert_eq!(d.names(), ["a", "b", "c"]);
        assert_eq!(d.edges().collect::<Vec<_>>(), [(2, 0)]);
    }

    #[test]
    fn closures() {
        let d = diamond();
        assert_eq!(d.ancestors(3, false).unwrap(), set(&d, &["a", "b", "c"]));
        assert!(d.ancestors(0, false).unwrap().is_empty());
        assert_eq!(d.descendants(1, true).unwrap(), set(&d, &["b", "d"]));
        assert_eq!(d.ancestors(9, false), Err(GraphError::UnknownVertex("#9".into())));
    }

    #[test]
    fn induction() {
        let d = diamond();
        let sub = d.induced_subgraph(&set(&d, &["a", "b", "c"])).unwrap();
        assert_eq!(sub.names(), ["a", "b", "c"]);
        assert_eq!(sub.edges().collect::<Vec<_>>(), [(0, 1), (0, 2)]);
        assert_eq!(d.induced_subgraph(&(0..4).collect()).unwrap(), d);
        assert!(d.induced_subgraph(&VertexSet::new()).unwrap().is_empty());
        let without = d.induced_without(&set(&d, &["a"])).unwrap();
        assert_eq!(without.names(), ["b", "c", "d"]);
        assert_eq!(without.edge_count(), 2);
    }

    #[test]
    fn reversal() {
        let d = diamond();
        let r = d.reverse();
        assert_eq!(r.edges().collect::<Vec<_>>(), [(1, 0), (2, 0), (3, 1), (3, 2)]);
        assert_eq!(r.stats().multi_parent, 1);
        assert_eq!(r.reverse(), d);
        let c = chain(3).reverse();
        assert_eq!(c.edges().collect::<Vec<_>>(), [(1, 0), (2, 1)]);
    }

    #[test]
    fn components() {
        assert_eq!(diamond().connected_components().len(), 1);
        let two = Dag::build(["a", "b", "c", "d"], [("a", "b"), ("c", "d")]).unwrap();
        let comps = two.connected_components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].names(), ["a", "b"]);
        assert_eq!(comps[1].names(), ["c", "d"]);
        assert!(Dag::empty().connected_components().is_empty());
    }

    #[test]
    fn consistency() {
        let d = diamond();
        assert!(d.is_consistent(&VertexSet::new()).unwrap());
        assert!(d.is_consistent(&(0..4).collect()).unwrap());
        assert!(!d.is_consistent(&set(&d, &["d"])).unwrap());
        let c = chain(3);
        assert!(c.is_consistent(&[0, 1].into()).unwrap());
        assert!(!c.is_consistent(&[1].into()).unwrap());
    }

    #[test]
    fn levels_and_stats() {
        assert_eq!(diamond().levels(), [0, 1, 1, 2]);
        let anti = Dag::build(["x", "y", "z"], Vec::<(&str, &str)>::new()).unwrap();
        assert_eq!(anti.levels(), [0, 0, 0]);
        assert_eq!(chain(6).levels(), [0, 1, 2, 3, 4, 5]);

        let s = diamond().stats();
        assert_eq!(
            (s.n, s.e, s.leaves, s.roots, s.multi_parent, s.bound),
            (4, 4, 1, 1, 1, 1)
        );
        let s = chain(5).stats();
        assert_eq!(
            (s.n, s.e, s.leaves, s.roots, s.multi_parent, s.bound),
            (5, 4, 1, 1, 0, 0)
        );
        let f = Dag::build(["a", "b", "c", "d"], [("a", "b"), ("c", "d")]).unwrap();
        assert_eq!(f.stats().bound, 0);
    }

    #[test]
    fn forests() {
        assert!(!diamond().is_forest());
        assert!(chain(7).is_forest());
        assert!(Dag::empty().is_forest());
    }
}
