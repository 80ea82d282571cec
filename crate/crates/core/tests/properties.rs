use std::collections::BTreeSet;

use idealcount_core::bounds::{lower_bound, upper_bound_forest_trials};
use idealcount_core::generate::{fixture, generate_random_dag, FixtureKind};
use idealcount_core::oracle::{brute_force_count, brute_force_count_exhaustive, brute_force_enumerate};
use idealcount_core::pivot::bottleneck_flows;
use idealcount_core::{cdag, Count, Dag, Modules, PivotStrategy, VertexSet};
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

fn small_dag() -> impl Strategy<Value = Dag> {
    (1usize..=14, any::<u64>()).prop_map(|(n, seed)| generate_random_dag(n, seed).unwrap())
}

fn every_cell(d: &Dag, seed: u64) -> Vec<Count> {
    let mut out = Vec::new();
    for pivot in PivotStrategy::ALL {
        for m in Modules::ALL {
            out.push(cdag(d, &m.config(pivot, seed)).count);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_cell_agrees_with_oracle(d in small_dag(), seed in any::<u64>()) {
        let truth = brute_force_count(&d).unwrap();
        prop_assert_eq!(&truth, &brute_force_count_exhaustive(&d).unwrap());
        for c in every_cell(&d, seed) {
            prop_assert_eq!(&c, &truth);
        }
    }

    #[test]
    fn reversal_preserves_count(n in 1usize..60, seed in any::<u64>()) {
        let d = generate_random_dag(n, seed).unwrap();
        let cfg = Modules::PruneHash.config(PivotStrategy::MaxDegree, seed);
        prop_assert_eq!(cdag(&d, &cfg).count, cdag(&d.reverse(), &cfg).count);
    }

    #[test]
    fn split_on_any_vertex(d in small_dag()) {
        let all = brute_force_enumerate(&d).unwrap();
        for u in 0..d.len() {
            let without = all.iter().filter(|s| !s.contains(&u)).count();
            let with = all.len() - without;
            let minus_d = d.induced_without(&d.descendants(u, true).unwrap()).unwrap();
            let minus_a = d.induced_without(&d.ancestors(u, true).unwrap()).unwrap();
            prop_assert_eq!(Count::from(without), brute_force_count(&minus_d).unwrap());
            prop_assert_eq!(Count::from(with), brute_force_count(&minus_a).unwrap());
        }
    }

    #[test]
    fn reverse_enumeration_is_complement(n in 1usize..=12, seed in any::<u64>()) {
        let d = generate_random_dag(n, seed).unwrap();
        let full: VertexSet = (0..d.len()).collect();
        let forward: BTreeSet<VertexSet> = brute_force_enumerate(&d).unwrap().into_iter().collect();
        let backward: BTreeSet<VertexSet> = brute_force_enumerate(&d.reverse())
            .unwrap()
            .into_iter()
            .map(|s| full.difference(&s).copied().collect())
            .collect();
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn bounds_bracket_count(d in small_dag(), seed in any::<u64>()) {
        let exact = brute_force_count(&d).unwrap();
        prop_assert!(lower_bound(&d) <= exact);
        prop_assert!(exact <= upper_bound_forest_trials(&d, seed, 3));
    }

    #[test]
    fn mpv_count_is_at_most_bound(n in 1usize..120, seed in any::<u64>()) {
        let s = generate_random_dag(n, seed).unwrap().stats();
        prop_assert!(s.multi_parent <= s.bound);
        prop_assert_eq!(s.bound == 0, s.multi_parent == 0);
    }

    #[test]
    fn removing_an_edge_never_lowers_count(d in small_dag(), pick in any::<prop::sample::Index>()) {
        let edges: Vec<(usize, usize)> = d.edges().collect();
        prop_assume!(!edges.is_empty());
        let drop = pick.index(edges.len());
        let names = d.names();
        let fewer = Dag::build(
            names,
            edges
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != drop)
                .map(|(_, &(u, v))| (names[u].as_str(), names[v].as_str())),
        )
        .unwrap();
        prop_assert!(brute_force_count(&fewer).unwrap() >= brute_force_count(&d).unwrap());
    }

    #[test]
    fn root_flows_sum_to_vertex_count(n in 1usize..80, seed in any::<u64>()) {
        let d = generate_random_dag(n, seed).unwrap();
        let flows = bottleneck_flows(&d);
        let total = (0..d.len())
            .filter(|&v| d.parents(v).next().is_none())
            .fold(BigRational::zero(), |acc, v| acc + &flows[v]);
        prop_assert_eq!(total, BigRational::from_integer(n.into()));
    }
}

#[test]
fn fixtures_in_every_cell() {
    let mut graphs: Vec<Dag> = [FixtureKind::Diamond, FixtureKind::Figure3]
        .into_iter()
        .map(|k| fixture(k, 1).unwrap())
        .collect();
    for n in [1, 5, 12] {
        graphs.push(fixture(FixtureKind::Chain, n).unwrap());
        graphs.push(fixture(FixtureKind::Antichain, n).unwrap());
        graphs.push(fixture(FixtureKind::Star, n).unwrap());
    }
    for d in graphs {
        let truth = brute_force_count(&d).unwrap();
        for c in every_cell(&d, 11) {
            assert_eq!(c, truth);
        }
    }
}

#[test]
fn memo_hits_on_shared_tail() {
    let d = fixture(FixtureKind::Figure3, 1).unwrap();
    let cfg = Modules::PruneHashReverse.config(PivotStrategy::MaxDegree, 0);
    let with_memo = cdag(&d, &cfg);
    assert_eq!(with_memo.count, brute_force_count(&d).unwrap());
    let plain = cdag(&d, &Modules::None.config(PivotStrategy::RandomMultiParent, 0));
    assert_eq!(plain.count, with_memo.count);
    assert!(with_memo.recursive_calls <= plain.recursive_calls);
}

#[test]
fn memo_is_consulted() {
    let mut hits = 0;
    for seed in 0..40 {
        let d = generate_random_dag(60, seed).unwrap();
        let r = cdag(&d, &Modules::PruneHash.config(PivotStrategy::MaxDegree, seed));
        assert_eq!(
            r.count,
            cdag(&d, &Modules::None.config(PivotStrategy::MaxDegree, seed)).count
        );
        hits += r.memo_hits;
    }
    assert!(hits > 0);
}

#[test]
fn closed_forms() {
    for n in 1..=64usize {
        let cfg = Modules::PruneHashReverse.config(PivotStrategy::MaxDegree, 0);
        assert_eq!(
            cdag(&fixture(FixtureKind::Chain, n).unwrap(), &cfg).count,
            Count::from(n + 1)
        );
        assert_eq!(
            cdag(&fixture(FixtureKind::Antichain, n).unwrap(), &cfg).count,
            Count::from(1u8) << n
        );
    }
}
