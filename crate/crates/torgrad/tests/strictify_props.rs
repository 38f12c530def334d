use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torgrad::complexes::{check_chain_map, gh_verify, MarkedComplex};
use torgrad::crossring::MarkedMorphism;
use torgrad::pipeline::{perturb_top, random_strict_complex};
use torgrad::strictify::{strictify_complex, strictify_map, verify_cert};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One unit change at a single pair of a single entry of f.
fn bump<R: Rng>(rng: &mut R, f: &MarkedMorphism) -> MarkedMorphism {
    let i = rng.gen_range(0..f.domain().rank());
    let j = rng.gen_range(0..f.codomain().rank());
    let rows: Vec<usize> = f.domain().carrier(i).iter().collect();
    let cols: Vec<usize> = f.codomain().carrier(j).iter().collect();
    let mut out = f.clone();
    if let (Some(&x), Some(&y)) = (rows.choose(rng), cols.choose(rng)) {
        let mut e = out.entry(i, j).clone();
        e.add_at(x, y, BigInt::from(*[-1i64, 1].choose(rng).unwrap()));
        out.set_entry(i, j, e);
    }
    out
}

/// Perturbs the boundary of a random degree, not only the top one.
fn perturb_any<R: Rng>(rng: &mut R, d: &MarkedComplex) -> MarkedComplex {
    let r = rng.gen_range(1..=d.top());
    let mut bs = d.boundaries().to_vec();
    bs[r - 1] = bump(rng, &bs[r - 1]);
    MarkedComplex::new(d.modules().to_vec(), bs, d.augmentation().cloned()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn strictification_of_perturbations(seed in any::<u64>(), anywhere in any::<bool>()) {
        let mut r = rng(seed);
        let (c, _, _) = random_strict_complex(&mut r, 8);
        let d = if anywhere { perturb_any(&mut r, &c) } else { perturb_top(&mut r, &c) };
        let z = d.canonical_witness();
        let (dh, cert) = strictify_complex(&d, &z).unwrap();
        prop_assert!(dh.is_strict());
        prop_assert!(dh.defect_report(&cert.z_hat).is_strict());
        prop_assert!(cert.recursive_bounds_hold());
        prop_assert!(cert.degree_bounds_hold());
        prop_assert_eq!(cert.dim_growth.clone(), cert.error_dims.iter().fold(Zero::zero(), |a: num_rational::BigRational, b| a + b));
        prop_assert!(cert.z_hat.n1() <= z.n1() + 1);
        let gh = verify_cert(&cert, &d, &dh).unwrap();
        prop_assert!(gh.ok, "{:?}", gh.failures);
        // D ↪ D̂ followed by the projection back is the identity
        prop_assert!(gh.roundtrip.iter().all(|x| x.is_zero()));
    }

    #[test]
    fn strictification_is_idempotent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (c, _, _) = random_strict_complex(&mut r, 8);
        let (same, cert) = strictify_complex(&c, &c.canonical_witness()).unwrap();
        prop_assert_eq!(&same, &c);
        prop_assert!(cert.dim_growth.is_zero());

        let d = perturb_top(&mut r, &c);
        let (once, cert) = strictify_complex(&d, &d.canonical_witness()).unwrap();
        let (twice, _) = strictify_complex(&once, &cert.z_hat).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn strictification_of_almost_chain_maps(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (c, _, _) = random_strict_complex(&mut r, 8);
        let mut f: Vec<MarkedMorphism> = c.modules().iter().map(MarkedMorphism::identity).collect();
        let k = r.gen_range(1..f.len());
        f[k] = bump(&mut r, &f[k]);
        let (dh, fh, cert) = strictify_map(&f, &c, &c).unwrap();
        prop_assert!(dh.is_strict());
        prop_assert!(check_chain_map(&fh, &c, &dh).unwrap().iter().all(|x| x.is_zero()));
        prop_assert!(cert.norm_growth_ok());
        prop_assert!(gh_verify(&cert.witness, &c, &dh).unwrap().ok);
    }
}
