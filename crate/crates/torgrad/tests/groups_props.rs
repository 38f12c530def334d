use proptest::prelude::*;
use torgrad::groups::{fox_derivative, FinitePresentation, FiniteQuotient, GroupRingElt, Word};

fn quotients() -> Vec<FiniteQuotient> {
    let free2 = FinitePresentation::free(2);
    vec![
        FiniteQuotient::abelian(2, &[3, 3]).unwrap(),
        FiniteQuotient::abelian(2, &[2, 4]).unwrap(),
        FiniteQuotient::permutation(&free2, 3, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap(),
        FiniteQuotient::permutation(&free2, 4, &[vec![1, 0, 2, 3], vec![1, 2, 3, 0]]).unwrap(),
        FiniteQuotient::cyclic(7, &[1, 3]).unwrap(),
    ]
}

fn word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((0usize..2, any::<bool>()), 0..max_len)
        .prop_map(|v| Word::from_signed(&v.into_iter().map(|(g, s)| (g, if s { 1 } else { -1 })).collect::<Vec<_>>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn evaluation_is_a_homomorphism(u in word(12), v in word(12)) {
        for q in quotients() {
            prop_assert_eq!(q.evaluate(&u.concat(&v)), q.mul(q.evaluate(&u), q.evaluate(&v)));
            prop_assert_eq!(q.evaluate(&u.inverse()), q.inv(q.evaluate(&u)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fox_product_rule(u in word(10), v in word(10)) {
        for g in 0..2 {
            let lhs = fox_derivative(&u.concat(&v), g);
            let rhs = &fox_derivative(&u, g) + &(&GroupRingElt::word(u.clone()) * &fox_derivative(&v, g));
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn fundamental_identity(w in word(16)) {
        let one = GroupRingElt::one();
        let mut sum = GroupRingElt::zero();
        for g in 0..2 {
            sum = &sum + &(&fox_derivative(&w, g) * &(&GroupRingElt::gen(g) - &one));
        }
        prop_assert_eq!(sum, &GroupRingElt::word(w) - &one);
    }
}

#[test]
fn group_axioms_exhaustively() {
    for q in quotients() {
        let n = q.order();
        let e = q.identity();
        for a in 0..n {
            assert_eq!(q.mul(a, e), a);
            assert_eq!(q.mul(e, a), a);
            assert_eq!(q.mul(a, q.inv(a)), e);
            for b in 0..n {
                for c in 0..n {
                    assert_eq!(q.mul(q.mul(a, b), c), q.mul(a, q.mul(b, c)));
                }
            }
        }
    }
}

#[test]
fn relators_of_standard_groups_die_in_abelian_quotients() {
    let q = FiniteQuotient::abelian(4, &[5]).unwrap();
    q.check_relators(&FinitePresentation::surface(2)).unwrap();
    FiniteQuotient::abelian(3, &[2, 2, 2]).unwrap().check_relators(&FinitePresentation::free_abelian(3)).unwrap();
}
