mod common;

use common::{all_dags, sid_bruteforce};
use proptest::prelude::*;
use sartre::graph::{edge_prf, gen_erdos_renyi, shd, sid, Dag};

#[test]
fn sid_matches_path_enumeration_up_to_three_nodes() {
    for d in 1..=3 {
        let dags = all_dags(d);
        for t in &dags {
            for e in &dags {
                assert_eq!(
                    sid(t, e).unwrap(),
                    sid_bruteforce(t, e),
                    "truth {:?} est {:?}",
                    t.edges(),
                    e.edges()
                );
            }
        }
    }
}

#[test]
fn dag_counts_are_known() {
    let counts: Vec<usize> = (1..=4).map(|d| all_dags(d).len()).collect();
    assert_eq!(counts, vec![1, 3, 25, 543]);
}

#[test]
fn sid_matches_path_enumeration_on_random_six_node_graphs() {
    for seed in 0..150u64 {
        let t = gen_erdos_renyi(6, 6, seed).unwrap();
        let e = gen_erdos_renyi(6, 5, seed + 10_000).unwrap();
        assert_eq!(sid(&t, &e).unwrap(), sid_bruteforce(&t, &e), "seed {seed}");
    }
}

#[test]
fn textbook_values() {
    let chain = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let empty = Dag::empty(3);
    // Every ordered pair with a causal effect is wrong under the empty graph.
    assert_eq!(sid(&chain, &empty).unwrap(), 3);
    assert_eq!(shd(&chain, &empty).unwrap(), 2);
    let reversed = Dag::from_edges(3, &[(1, 0), (2, 1)]).unwrap();
    assert_eq!(shd(&chain, &reversed).unwrap(), 2);
    let pr = edge_prf(&chain, &empty).unwrap();
    assert_eq!((pr.precision, pr.recall, pr.f1), (1.0, 0.0, 0.0));
}

fn arb_dag(max_d: usize) -> impl Strategy<Value = Dag> {
    (1..=max_d, any::<u64>()).prop_map(|(d, seed)| {
        let pairs = d * (d - 1) / 2;
        gen_erdos_renyi(d, pairs / 2, seed).unwrap()
    })
}

fn arb_pair(max_d: usize) -> impl Strategy<Value = (Dag, Dag, Dag)> {
    (1..=max_d, any::<u64>(), any::<u64>(), any::<u64>()).prop_map(|(d, a, b, c)| {
        let m = d * (d - 1) / 4;
        (
            gen_erdos_renyi(d, m, a).unwrap(),
            gen_erdos_renyi(d, m, b).unwrap(),
            gen_erdos_renyi(d, m, c).unwrap(),
        )
    })
}

proptest! {
    #[test]
    fn shd_is_a_metric((a, b, c) in arb_pair(7)) {
        prop_assert_eq!(shd(&a, &a).unwrap(), 0);
        prop_assert_eq!(shd(&a, &b).unwrap(), shd(&b, &a).unwrap());
        prop_assert!(shd(&a, &c).unwrap() <= shd(&a, &b).unwrap() + shd(&b, &c).unwrap());
        let d = a.num_vars();
        prop_assert!(shd(&a, &b).unwrap() <= d * (d.saturating_sub(1)) / 2);
        if a != b {
            prop_assert!(shd(&a, &b).unwrap() > 0);
        }
    }

    #[test]
    fn sid_vanishes_on_identity_and_consistent_supergraphs(g in arb_dag(7)) {
        prop_assert_eq!(sid(&g, &g).unwrap(), 0);
        let full = Dag::full_from_order(&g.topological_sort().unwrap());
        prop_assert_eq!(sid(&g, &full).unwrap(), 0);
        let d = g.num_vars();
        prop_assert!(sid(&g, &Dag::empty(d)).unwrap() <= d * d.saturating_sub(1));
    }

    #[test]
    fn precision_recall_bounds((a, b, _) in arb_pair(7)) {
        let pr = edge_prf(&a, &b).unwrap();
        for v in [pr.precision, pr.recall, pr.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let swapped = edge_prf(&b, &a).unwrap();
        if a.num_edges() > 0 && b.num_edges() > 0 {
            prop_assert!((pr.precision - swapped.recall).abs() < 1e-12);
        }
    }
}
