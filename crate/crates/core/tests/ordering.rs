use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use sartre::graph::{gen_erdos_renyi, Dag, TopologicalOrder};
use sartre::ordering::{estimate_order, leaf_statistics, stein_score, SteinConfig};
use sartre::seed::rng_from_seed;
use sartre::synthgen::{sample_anm, AnmSpec};
use sartre::Dataset;

#[test]
fn chain_sink_has_smallest_statistic() {
    let dag = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let mut ok = 0;
    for seed in 0..5u64 {
        let data = sample_anm(&AnmSpec::nonlinear(dag.clone(), seed), 600).unwrap();
        let stats = leaf_statistics(&data, &SteinConfig::default()).unwrap();
        let argmin = (0..3)
            .min_by(|&a, &b| stats[a].total_cmp(&stats[b]))
            .unwrap();
        if argmin == 2 {
            ok += 1;
        }
    }
    assert!(ok >= 4, "{ok}/5");
}

#[test]
fn independent_gaussians_score() {
    let mut rng = rng_from_seed(1);
    let rows: Vec<Vec<f64>> = (0..1000)
        .map(|_| (0..2).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let data = Dataset::from_rows(&rows).unwrap();
    let s = stein_score(&data, &SteinConfig::default()).unwrap();
    let mut cos = 0.0;
    for m in 0..1000 {
        let (a, b) = (s[(m, 0)], s[(m, 1)]);
        let (x, y) = (-rows[m][0], -rows[m][1]);
        cos += (a * x + b * y) / ((a * a + b * b).sqrt() * (x * x + y * y).sqrt());
    }
    assert!(cos / 1000.0 >= 0.9, "{}", cos / 1000.0);
}

fn permute_columns(data: &Dataset, perm: &[usize]) -> Dataset {
    Dataset::new(data.select_columns(perm)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn order_is_equivariant_under_relabelling(seed in 0u64..1000, rot in 1usize..4) {
        let dag = gen_erdos_renyi(4, 3, seed).unwrap();
        let data = sample_anm(&AnmSpec::nonlinear(dag, seed), 150).unwrap();
        let cfg = SteinConfig::default();
        let order = estimate_order(&data, &cfg).unwrap();
        prop_assert_eq!(order.len(), 4);

        // new column k holds old column (k + rot) % 4
        let perm: Vec<usize> = (0..4).map(|k| (k + rot) % 4).collect();
        let stats = leaf_statistics(&data, &cfg).unwrap();
        let stats_p = leaf_statistics(&permute_columns(&data, &perm), &cfg).unwrap();
        for k in 0..4 {
            prop_assert!((stats_p[k] - stats[perm[k]]).abs() <= 1e-9 * (1.0 + stats[perm[k]].abs()));
        }
        let order_p = estimate_order(&permute_columns(&data, &perm), &cfg).unwrap();
        let mapped: Vec<usize> = order_p.as_slice().iter().map(|&k| perm[k]).collect();
        prop_assert_eq!(TopologicalOrder::new(mapped).unwrap(), order);
    }
}
