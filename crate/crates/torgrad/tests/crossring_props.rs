use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torgrad::crossring::{
    marked_inclusion, marked_projection, Augmentation, Carrier, CrossedElt, Level, MarkedModule, MarkedMorphism,
    ModuleVector,
};
use torgrad::pipeline::{random_level, random_module, random_morphism};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_elt<R: Rng>(rng: &mut R, level: &Level) -> CrossedElt {
    let n = level.order();
    let mut z = CrossedElt::zero(level);
    for _ in 0..rng.gen_range(0..=6) {
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        z.add_at(x, y, BigInt::from(rng.gen_range(-4..=4)));
    }
    z
}

fn random_vector<R: Rng>(rng: &mut R, m: &MarkedModule) -> ModuleVector {
    let comps = (0..m.rank()).map(|_| random_elt(rng, m.level())).collect();
    ModuleVector::new(m, comps).unwrap()
}

fn setup(seed: u64) -> (ChaCha8Rng, Level, MarkedMorphism) {
    let mut r = rng(seed);
    let order = r.gen_range(1..=8);
    let level = random_level(&mut r, order);
    let dom = random_module(&mut r, &level, 3);
    let cod = random_module(&mut r, &level, 3);
    let f = random_morphism(&mut r, &dom, &cod, 4, 5);
    (r, level, f)
}

fn int(k: usize) -> BigRational {
    BigRational::from(BigInt::from(k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn l1_product_bound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let order = r.gen_range(1..=8);
        let level = random_level(&mut r, order);
        let x = random_elt(&mut r, &level);
        let y = random_elt(&mut r, &level);
        let bound = int(y.n2()) * BigRational::from(y.linf()) * x.l1();
        prop_assert!((&x * &y).l1() <= bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn operator_norm_is_sound_and_attained(seed in any::<u64>()) {
        let (mut r, level, f) = setup(seed);
        let norm = BigRational::from(f.op_norm());
        for _ in 0..1000 {
            let v = random_vector(&mut r, f.domain());
            if v.is_zero() {
                continue;
            }
            prop_assert!(f.apply(&v).unwrap().l1() <= &norm * v.l1());
        }
        let mut best = BigRational::zero();
        for (i, a) in f.domain().carriers().iter().enumerate() {
            for u in a.iter() {
                let mut comps = vec![CrossedElt::zero(&level); f.domain().rank()];
                comps[i] = CrossedElt::chi(&level, &Carrier::from_indices(level.order(), [u]));
                let e = ModuleVector::new(f.domain(), comps).unwrap();
                best = best.max(f.apply(&e).unwrap().l1() / e.l1());
            }
        }
        prop_assert_eq!(best, norm);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn norm_estimate(seed in any::<u64>()) {
        let (_, _, f) = setup(seed);
        let st = f.stats();
        prop_assert!(st.op_norm <= BigInt::from(st.n2_underline) * st.infty_norm);
    }

    #[test]
    fn support_estimates(seed in any::<u64>()) {
        let (mut r, level, f) = setup(seed);
        let z = random_vector(&mut r, f.domain());
        let fz = f.apply(&z).unwrap();
        prop_assert!(fz.supp1().is_subset(&z.supp1()));
        prop_assert!(fz.size1() <= int(z.n1()) * f.size1());

        // f∘g for g into the domain of f
        let src = random_module(&mut r, &level, 3);
        let g = random_morphism(&mut r, &src, f.domain(), 3, 3);
        let fg = g.then(&f).unwrap();
        prop_assert!(fg.size1() <= int(g.stats().n1) * f.size1());

        // marked g: inclusion of a sub-summand and projection onto one
        let parts: Vec<Carrier> = f.domain().carriers().iter().map(|a| {
            Carrier::from_indices(level.order(), a.iter().filter(|_| r.gen_bool(0.5)))
        }).collect();
        let sub = MarkedModule::new(&level, parts).unwrap();
        let sigma: Vec<usize> = (0..sub.rank()).collect();
        let inc = marked_inclusion(&sub, f.domain(), &sigma).unwrap();
        prop_assert!(inc.then(&f).unwrap().size1() <= f.size1());
        let proj = marked_projection(f.domain(), &sub, &sigma).unwrap();
        let h = random_morphism(&mut r, &sub, f.codomain(), 3, 3);
        prop_assert!(proj.then(&h).unwrap().size1() <= h.size1());
    }

    #[test]
    fn marked_rank_is_minimal(seed in any::<u64>()) {
        let (_, level, f) = setup(seed);
        let image = f.image_carriers();
        // oracle: union of the columns of every atom image
        let mut seen = vec![level.empty(); f.codomain().rank()];
        for (i, a) in f.domain().carriers().iter().enumerate() {
            for u in a.iter() {
                let mut comps = vec![CrossedElt::zero(&level); f.domain().rank()];
                comps[i] = CrossedElt::chi(&level, &Carrier::from_indices(level.order(), [u]));
                let img = f.apply(&ModuleVector::new(f.domain(), comps).unwrap()).unwrap();
                for (j, c) in img.comps().iter().enumerate() {
                    seen[j] = seen[j].union(&c.cols());
                }
            }
        }
        prop_assert_eq!(&image, &seen);
        let mr: BigRational = image.iter().map(|c| level.measure(c)).sum();
        prop_assert_eq!(f.marked_rank(), mr);
    }

    #[test]
    fn almost_equality_calculus(seed in any::<u64>()) {
        let (mut r, level, f) = setup(seed);
        let g = random_morphism(&mut r, f.domain(), f.codomain(), 2, 2).try_add(&f).unwrap();
        let h = random_morphism(&mut r, f.domain(), f.codomain(), 2, 2).try_add(&g).unwrap();
        let fg = f.almost_eq(&g).unwrap();
        let gh = g.almost_eq(&h).unwrap();
        let fh = f.almost_eq(&h).unwrap();
        prop_assert!(fh.delta_min <= &fg.delta_min + &gh.delta_min);
        prop_assert!(fh.norm_on_difference <= &fg.norm_on_difference + &gh.norm_on_difference);

        // precomposition with u: D′ → D and postcomposition with w: C → C″
        let src = random_module(&mut r, &level, 2);
        let u = random_morphism(&mut r, &src, f.domain(), 2, 2);
        let dst = random_module(&mut r, &level, 2);
        let w = random_morphism(&mut r, f.codomain(), &dst, 2, 2);
        let pre = u.then(&f).unwrap().almost_eq(&u.then(&g).unwrap()).unwrap();
        prop_assert!(pre.delta_min <= int(u.stats().n1) * &fg.delta_min);
        prop_assert!(pre.norm_on_difference <= u.op_norm() * &fg.norm_on_difference);
        let post = f.then(&w).unwrap().almost_eq(&g.then(&w).unwrap()).unwrap();
        prop_assert!(post.delta_min <= fg.delta_min);
        prop_assert!(post.norm_on_difference <= w.op_norm() * &fg.norm_on_difference);
    }

    #[test]
    fn augmentation_bound(seed in any::<u64>()) {
        let (mut r, level, f) = setup(seed);
        let m = f.domain();
        let values: Vec<Vec<BigInt>> = m.carriers().iter().map(|a| {
            (0..level.order()).map(|x| if a.contains(x) { BigInt::from(r.gen_range(-3..=3)) } else { BigInt::zero() }).collect()
        }).collect();
        let eta = Augmentation::new(m, values).unwrap();
        let z = random_vector(&mut r, m);
        let sup = eta.apply(&z).iter().map(|x| x.magnitude().clone()).max().map(BigInt::from).unwrap_or_default();
        prop_assert!(sup <= BigInt::from(z.n2()) * z.linf() * eta.k_eta());
    }
}
