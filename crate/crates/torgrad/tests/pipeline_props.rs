use proptest::prelude::*;
use serde_json::json;
use torgrad::pipeline::{run_gradient, ExperimentConfig};

/// A config over a cyclic chain with the given group, embedding and prime.
fn config(group: serde_json::Value, moduli: &[usize], embedding: serde_json::Value, p: u64) -> ExperimentConfig {
    let chain: Vec<_> = moduli.iter().map(|m| json!({ "kind": "abelian", "moduli": [m] })).collect();
    let v = json!({
        "group": group,
        "coefficients": format!("F{p}"),
        "degrees": [0, 1, 2, 3, 4],
        "chain": chain,
        "embedding": embedding,
    });
    ExperimentConfig::from_json(&v.to_string()).unwrap()
}

fn group_and_length() -> impl Strategy<Value = (serde_json::Value, usize)> {
    prop_oneof![
        (1usize..=3).prop_map(|d| (json!({ "kind": "free", "rank": d }), 1)),
        Just((json!({ "kind": "integers" }), 1)),
        (1usize..=2).prop_map(|g| (json!({ "kind": "surface", "genus": g }), 2)),
        Just((json!({ "kind": "free_abelian", "rank": 2 }), 2)),
        Just((json!({ "kind": "one_relator", "generators": 2, "relator": "a b a^-1 b^-1" }), 2)),
    ]
}

fn chain() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::btree_set(2usize..=9, 1..=3).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn induced_rows_satisfy_the_bounds((group, len) in group_and_length(), moduli in chain(), p in prop::sample::select(vec![2u64, 3, 5])) {
        let cfg = config(group, &moduli, json!({ "kind": "induced" }), p);
        let t = run_gradient(&cfg).unwrap();
        prop_assert!(t.all_pass());
        for row in &t.rows {
            let b = row.bounds.as_ref().unwrap();
            prop_assert!(row.betti_p.unwrap() <= b.rank_bound);
            prop_assert!(row.betti_q <= row.betti_p.unwrap());
            if row.degree > len {
                prop_assert_eq!(row.betti_q, 0);
                prop_assert_eq!(row.betti_p, Some(0));
                prop_assert_eq!(b.dim_upper.as_str(), "0");
                prop_assert_eq!(b.rank_bound, 0);
            }
        }
        // identical config, identical bytes
        let again = run_gradient(&cfg).unwrap();
        prop_assert_eq!(t.to_csv(), again.to_csv());
        prop_assert_eq!(t.to_json().to_string(), again.to_json().to_string());
    }

    #[test]
    fn dynamical_rows_for_the_integers(moduli in chain(), tile in 2usize..=4, inv in 1usize..=2, p in prop::sample::select(vec![2u64, 3])) {
        let moduli: Vec<usize> = moduli.into_iter().map(|m| m + 8).collect();
        for emb in [json!({ "kind": "rokhlin", "tile": tile }), json!({ "kind": "cheap", "eps": format!("1/{inv}") })] {
            let t = run_gradient(&config(json!({ "kind": "integers" }), &moduli, emb, p)).unwrap();
            prop_assert!(t.all_pass());
            for row in &t.rows {
                prop_assert_eq!(row.betti_q, usize::from(row.degree <= 1));
                prop_assert!(row.torsion.is_empty());
            }
        }
    }
}
