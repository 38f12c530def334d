use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torgrad::complexes::{gh_compose, gh_verify, induce_resolution, mapping_cone, tensor_complex, GHWitness, MarkedComplex};
use torgrad::constructions::resolutions::ResolutionData;
use torgrad::crossring::{LevelSpace, MarkedMorphism};
use torgrad::groups::{FiniteQuotient, GroupRingElt};
use torgrad::pipeline::{perturb_top, random_strict_complex};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn integers_on(generator: usize, generators: usize) -> ResolutionData {
    let d1 = &GroupRingElt::one() - &GroupRingElt::gen(generator);
    ResolutionData::new(generators, vec![1, 1], vec![vec![vec![d1]]], vec![BigInt::one()]).unwrap()
}

fn rat(n: i64, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Witness parameters strictly above what gh_verify measures for D against D′.
fn measured(d: &MarkedComplex, dp: &MarkedComplex) -> (BigRational, BigInt) {
    let probe = GHWitness::identity(d, rat(1_000_000, 1), BigInt::from(1_000_000));
    let chk = gh_verify(&probe, d, dp).unwrap();
    let worst = chk.delta_f.iter().chain(&chk.symmetric_difference).max().cloned().unwrap_or_default();
    let k = chk.norm_f.iter().max().cloned().unwrap_or_default();
    (worst + rat(1, d.level().order()), k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn induced_resolutions_are_strict(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (c, _, _) = random_strict_complex(&mut r, 8);
        prop_assert!(c.is_strict());
        let z = c.canonical_witness();
        let rep = c.defect_report(&z);
        prop_assert!(rep.is_strict());
        prop_assert!(rep.eta.is_zero());
    }

    #[test]
    fn cone_of_a_chain_map(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (c, _, _) = random_strict_complex(&mut r, 6);
        let scale = BigInt::from(r.gen_range(-3i64..=3));
        let phi: Vec<MarkedMorphism> = c.modules().iter().map(|m| MarkedMorphism::identity(m).scale(&scale)).collect();
        let cone = mapping_cone(&phi, &c, &c).unwrap();
        prop_assert!(cone.is_strict());
        let dims = c.dims();
        for n in 0..=cone.top() {
            let prev = if n == 0 { BigRational::zero() } else { dims[n - 1].clone() };
            prop_assert_eq!(cone.module(n).dim(), prev + &dims[n]);
        }
    }

    #[test]
    fn gh_close_sequences_are_almost_complexes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (d, _, _) = random_strict_complex(&mut r, 8);
        let dp = perturb_top(&mut r, &d);
        let (eps, k) = measured(&d, &dp);
        let w = GHWitness::identity(&d, eps.clone(), k);
        prop_assert!(gh_verify(&w, &d, &dp).unwrap().ok);
        let z = d.canonical_witness();
        let nu = BigRational::from(d.stats(&z).nu);
        let bound = std::cmp::max((BigRational::one() + nu) * &eps, BigRational::from(BigInt::from(z.n1())) * &eps);
        // the same generators of D₀ serve as ẑ
        prop_assert!(dp.defect_report(&z).overall <= bound);
    }

    #[test]
    fn gh_witnesses_compose(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (d, _, _) = random_strict_complex(&mut r, 8);
        let d1 = perturb_top(&mut r, &d);
        let d2 = perturb_top(&mut r, &d1);
        let (e1, k1) = measured(&d, &d1);
        let (e2, k2) = measured(&d1, &d2);
        let w1 = GHWitness::identity(&d, e1.clone(), k1.clone());
        let w2 = GHWitness::identity(&d1, e2.clone(), k2.clone());
        let w = gh_compose(&w1, &w2).unwrap();
        prop_assert_eq!(&w.delta, &(e1 + e2));
        prop_assert_eq!(&w.k, &(k1 + k2));
        prop_assert!(gh_verify(&w, &d, &d2).unwrap().ok);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn tensor_of_strict_complexes(a in 2usize..7, b in 1usize..7, img in 0i64..7) {
        let q = FiniteQuotient::abelian(2, &[a, b.max(2)]).unwrap();
        let q = if b == 1 { FiniteQuotient::cyclic(a, &[1, img % a as i64]).unwrap() } else { q };
        let level = LevelSpace::new(q);
        let x = induce_resolution(&integers_on(0, 2), &level).unwrap();
        let y = induce_resolution(&integers_on(1, 2), &level).unwrap();
        let t = tensor_complex(&x, &y).unwrap();
        prop_assert!(t.is_strict());
        // second route: tensor at the level of ℤΓ, then induce
        let koszul = induce_resolution(&ResolutionData::free_abelian(2), &level).unwrap();
        prop_assert_eq!(&t, &koszul);

        let f2 = induce_resolution(&ResolutionData::free(2), &level).unwrap();
        prop_assert!(tensor_complex(&f2, &x).unwrap().is_strict());
    }
}
