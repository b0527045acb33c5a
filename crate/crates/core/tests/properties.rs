use phases_core::graphon::{
    canonicalize, cut_distance_upper, graphon_entropy, subgraph_density, StepGraphon,
    SubgraphPattern, DEFAULT_MERGE_TOL,
};
use phases_core::permuton::{
    perm_pattern_density, perm_to_permuton, permuton_entropy, permuton_pattern_density,
    DensityMethod, GridPermuton, Permutation, StarPattern,
};
use proptest::prelude::*;

fn graphon(max_m: usize) -> impl Strategy<Value = StepGraphon> {
    (1..=max_m).prop_flat_map(|m| {
        (
            prop::collection::vec(0.05f64..1.0, m),
            prop::collection::vec(0.0f64..=1.0, m * m),
        )
            .prop_map(move |(raw, vals)| {
                let total: f64 = raw.iter().sum();
                let mut c: Vec<f64> = raw.iter().map(|x| x / total).collect();
                c[m - 1] = 1.0 - c[..m - 1].iter().sum::<f64>();
                let mut v = vals;
                for i in 0..m {
                    for j in 0..i {
                        v[i * m + j] = v[j * m + i];
                    }
                }
                StepGraphon::from_flat(c, v).unwrap()
            })
    })
}

fn grid_permuton(max_k: usize) -> impl Strategy<Value = GridPermuton> {
    (1..=max_k).prop_flat_map(|k| {
        prop::collection::vec(0.01f64..1.0, k * k)
            .prop_map(move |g| GridPermuton::unvalidated(k, g).unwrap().project().unwrap())
    })
}

fn permutation(max_n: usize) -> impl Strategy<Value = Permutation> {
    (1..=max_n).prop_flat_map(|n| {
        Just((1..=n).collect::<Vec<usize>>())
            .prop_shuffle()
            .prop_map(|v| Permutation::new(v).unwrap())
    })
}

fn patterns() -> Vec<SubgraphPattern> {
    vec![
        SubgraphPattern::edge(),
        SubgraphPattern::triangle(),
        SubgraphPattern::star(3).unwrap(),
        SubgraphPattern::cycle(4).unwrap(),
        SubgraphPattern::signed_two_star(),
        SubgraphPattern::signed_square(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn densities_lie_in_unit_interval(q in graphon(4)) {
        for p in patterns() {
            let t = subgraph_density(&q, &p).unwrap();
            prop_assert!((-1e-15..=1.0 + 1e-15).contains(&t));
        }
        let s = graphon_entropy(&q);
        prop_assert!(s >= 0.0 && s <= 0.5 * 2f64.ln() + 1e-15);
    }

    #[test]
    fn block_relabelling_changes_nothing(q in graphon(4), seed in any::<u64>()) {
        let m = q.podality();
        let mut order: Vec<usize> = (0..m).collect();
        let mut s = seed;
        for i in (1..m).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let r = q.permuted(&order);
        prop_assert!((graphon_entropy(&q) - graphon_entropy(&r)).abs() < 1e-14);
        for p in patterns() {
            let a = subgraph_density(&q, &p).unwrap();
            let b = subgraph_density(&r, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-14);
        }
        prop_assert!(cut_distance_upper(&q, &r).unwrap() < 1e-12);
    }

    #[test]
    fn refinement_changes_nothing(q in graphon(3), f in 0.1f64..0.9) {
        let r = q.split_block(0, f);
        prop_assert!((graphon_entropy(&q) - graphon_entropy(&r)).abs() < 1e-14);
        for p in patterns() {
            let a = subgraph_density(&q, &p).unwrap();
            let b = subgraph_density(&r, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-13);
        }
        prop_assert_eq!(canonicalize(&r, DEFAULT_MERGE_TOL).podality(), canonicalize(&q, DEFAULT_MERGE_TOL).podality());
    }

    #[test]
    fn canonicalize_is_idempotent(q in graphon(4)) {
        let once = canonicalize(&q, DEFAULT_MERGE_TOL);
        let twice = canonicalize(&once, DEFAULT_MERGE_TOL);
        prop_assert_eq!(&once, &twice);
    }

    #[test]
    fn cut_distance_to_self_is_zero(q in graphon(5)) {
        prop_assert!(cut_distance_upper(&q, &q).unwrap().abs() < 1e-15);
    }

    #[test]
    fn graphon_json_round_trips(q in graphon(4)) {
        let text = serde_json::to_string(&q).unwrap();
        let back: StepGraphon = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &q);
        let pretty = phases_core::io::to_json_string(&q).unwrap();
        let back: StepGraphon = serde_json::from_str(&pretty).unwrap();
        prop_assert_eq!(back, q);
    }

    #[test]
    fn s3_densities_sum_to_one(p in grid_permuton(8)) {
        let total: f64 = ["123", "132", "213", "231", "312", "321"]
            .iter()
            .map(|t| permuton_pattern_density(&p, &t.parse().unwrap(), DensityMethod::Exact).unwrap().value)
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        let pair: f64 = ["12", "21"]
            .iter()
            .map(|t| permuton_pattern_density(&p, &t.parse().unwrap(), DensityMethod::Exact).unwrap().value)
            .sum();
        prop_assert!((pair - 1.0).abs() < 1e-9);
    }

    #[test]
    fn permuton_entropy_is_nonpositive(p in grid_permuton(10)) {
        prop_assert!(permuton_entropy(&p) <= 0.0);
    }

    #[test]
    fn projection_is_idempotent(p in grid_permuton(8)) {
        prop_assert!(p.marginal_deviation() < 1e-9);
        let again = p.project().unwrap();
        for (a, b) in again.cells().iter().zip(p.cells()) {
            prop_assert!((a - b).abs() < 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn permuton_json_round_trips(p in grid_permuton(5)) {
        let text = serde_json::to_string(&p).unwrap();
        let back: GridPermuton = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn perm_densities_sum_to_one(pi in permutation(7)) {
        prop_assume!(pi.len() >= 3);
        let total: f64 = ["123", "132", "213", "231", "312", "321"]
            .iter()
            .map(|t| {
                let r = perm_pattern_density(&pi, &t.parse::<StarPattern>().unwrap()).unwrap();
                *r.numer() as f64 / *r.denom() as f64
            })
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn permutation_permuton_entropy_is_minus_log_n(pi in permutation(9)) {
        let h = permuton_entropy(&perm_to_permuton(&pi));
        prop_assert!((h + (pi.len() as f64).ln()).abs() < 1e-12);
    }
}
