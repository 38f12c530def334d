//! Rokhlin towers for ℤ acting on ℤ/M, the small resolution they induce,
//! its chain contraction, and the comparison maps with the standard
//! resolution.
//!
//! The contraction c₀ is only Z^G-linear and depends on the exponent m of
//! t^m, not just on t^m mod M. It is therefore checked in the ring
//! Z^{ℤ/M}∗ℤ, where exponents are integers. The ring-linear identities are
//! checked in the level ring itself.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::complexes::{check_chain_map, induce_resolution, MarkedComplex};
use crate::constructions::resolutions::ResolutionData;
use crate::crossring::{ratio, Augmentation, Carrier, CrossedElt, Level, LevelSpace, MarkedModule, MarkedMorphism};
use crate::error::{Error, Result};

/// X = A ⊔ tA ⊔ … ⊔ t^{N−1}A ⊔ B inside ℤ/M.
#[derive(Clone, Debug, PartialEq)]
pub struct RokhlinTower {
    pub modulus: usize,
    pub tile: usize,
    pub base: Carrier,
    pub remainder: Carrier,
}

pub fn rokhlin_partition(m: usize, n: usize) -> Result<RokhlinTower> {
    if n == 0 || m < n {
        return Err(Error::Config(format!("need M ≥ N ≥ 1, got M = {}, N = {}", m, n)));
    }
    let q = m / n;
    Ok(RokhlinTower {
        modulus: m,
        tile: n,
        base: Carrier::from_indices(m, (0..q).map(|k| k * n)),
        remainder: Carrier::from_indices(m, q * n..m),
    })
}

impl RokhlinTower {
    fn shift(&self, c: &Carrier, k: i64) -> Carrier {
        let m = self.modulus as i64;
        Carrier::from_indices(self.modulus, c.iter().map(|x| (x as i64 + k).rem_euclid(m) as usize))
    }

    /// t^k·A.
    pub fn base_shift(&self, k: i64) -> Carrier {
        self.shift(&self.base, k)
    }

    pub fn remainder_shift(&self, k: i64) -> Carrier {
        self.shift(&self.remainder, k)
    }

    /// The translates tʲA and B are pairwise disjoint and cover ℤ/M.
    pub fn is_partition(&self) -> bool {
        let mut seen = Carrier::empty(self.modulus);
        let pieces = (0..self.tile as i64).map(|j| self.base_shift(j)).chain([self.remainder.clone()]);
        for p in pieces {
            if !p.is_disjoint(&seen) {
                return false;
            }
            seen = seen.union(&p);
        }
        seen.count() == self.modulus
    }

    /// A ∩ t^N A ∩ tʲB = ∅ and B ∩ t^N A ∩ tʲB = ∅ for j = 1..N−1.
    pub fn disjointness_facts(&self) -> bool {
        let tn = self.base_shift(self.tile as i64);
        (1..self.tile as i64).all(|j| {
            let tb = self.remainder_shift(j);
            self.base.intersection(&tn).intersection(&tb).is_empty()
                && self.remainder.intersection(&tn).intersection(&tb).is_empty()
        })
    }

    /// A ⊔ B = t^N A ⊔ tB.
    pub fn shift_identity(&self) -> bool {
        let lhs = self.base.union(&self.remainder);
        let tn = self.base_shift(self.tile as i64);
        let tb = self.remainder_shift(1);
        tn.is_disjoint(&tb) && lhs == tn.union(&tb)
    }

    pub fn measure_base(&self) -> BigRational {
        ratio(self.base.count(), self.modulus)
    }

    pub fn measure_remainder(&self) -> BigRational {
        ratio(self.remainder.count(), self.modulus)
    }
}

/// Element of Z^{ℤ/M}∗ℤ: the key (m, x) stands for (χ_{x}, t^m).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TowerElt {
    terms: BTreeMap<(i64, usize), i64>,
}

impl TowerElt {
    pub fn add_term(&mut self, m: i64, x: usize, c: i64) {
        let e = self.terms.entry((m, x)).or_insert(0);
        *e += c;
        if *e == 0 {
            self.terms.remove(&(m, x));
        }
    }

    /// (c·χ_S, t^m).
    pub fn chi(s: &Carrier, m: i64, c: i64) -> Self {
        let mut out = TowerElt::default();
        for x in s.iter() {
            out.add_term(m, x, c);
        }
        out
    }

    pub fn add(&self, o: &TowerElt) -> TowerElt {
        let mut out = self.clone();
        for (&(m, x), &c) in &o.terms {
            out.add_term(m, x, c);
        }
        out
    }

    pub fn scale(&self, c: i64) -> TowerElt {
        let mut out = TowerElt::default();
        for (&(m, x), &a) in &self.terms {
            out.add_term(m, x, a * c);
        }
        out
    }

    pub fn sub(&self, o: &TowerElt) -> TowerElt {
        self.add(&o.scale(-1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i64, usize), &i64)> {
        self.terms.iter()
    }

    /// (f, t^m)(h, t^k) = (f·(t^m·h), t^{m+k}) with (t^m·h)(x) = h(x − m).
    pub fn mul(&self, o: &TowerElt, modulus: usize) -> TowerElt {
        let mut by_point: BTreeMap<usize, Vec<(i64, i64)>> = BTreeMap::new();
        for (&(k, y), &c) in &o.terms {
            by_point.entry(y).or_default().push((k, c));
        }
        let mut out = TowerElt::default();
        for (&(m, x), &a) in &self.terms {
            let y = (x as i64 - m).rem_euclid(modulus as i64) as usize;
            if let Some(v) = by_point.get(&y) {
                for &(k, b) in v {
                    out.add_term(m + k, x, a * b);
                }
            }
        }
        out
    }

    /// (f, t^m) acting on a function v: x ↦ f(x)·v(x − m).
    pub fn act_on(&self, v: &[i64]) -> Vec<i64> {
        let n = v.len() as i64;
        let mut out = vec![0i64; v.len()];
        for (&(m, x), &c) in &self.terms {
            out[x] += c * v[(x as i64 - m).rem_euclid(n) as usize];
        }
        out
    }

    /// Image in the level ring Z^{ℤ/M}∗ℤ/M.
    pub fn reduce_to_level(&self, level: &Level) -> CrossedElt {
        let m = level.order() as i64;
        let mut z = CrossedElt::zero(level);
        for (&(k, x), &c) in &self.terms {
            let y = (x as i64 - k).rem_euclid(m) as usize;
            z.add_at(x, y, BigInt::from(c));
        }
        z
    }
}

/// Vectors of ⟨A⟩ ⊕ ⟨B⟩ over the unreduced ring.
pub type TowerVector = [TowerElt; 2];

fn vadd(a: &TowerVector, b: &TowerVector) -> TowerVector {
    [a[0].add(&b[0]), a[1].add(&b[1])]
}

fn vsub(a: &TowerVector, b: &TowerVector) -> TowerVector {
    [a[0].sub(&b[0]), a[1].sub(&b[1])]
}

/// Outcome of every identity check, with the norm table.
#[derive(Clone, Debug, PartialEq)]
pub struct RokhlinReport {
    pub modulus: usize,
    pub tile: usize,
    pub checks: Vec<(String, bool)>,
    pub dim_d0: BigRational,
    pub dim_d1: BigRational,
    pub dim_bound: BigRational,
    pub norm_d1: BigInt,
    pub norm_f0: BigInt,
    pub norm_f1: BigInt,
    pub norm_r0: BigInt,
    pub norm_r1: BigInt,
    pub norm_h0: BigInt,
}

impl RokhlinReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }
}

/// The small resolution 0 → ⟨A⟩⊕⟨B⟩ → ⟨A⟩⊕⟨B⟩ → Z^G with the comparison
/// maps to and from the standard resolution C.
pub struct IntegersResolution {
    pub tower: RokhlinTower,
    pub level: Level,
    pub d: MarkedComplex,
    pub c: MarkedComplex,
    pub f: Vec<MarkedMorphism>,
    pub r: Vec<MarkedMorphism>,
    pub h0: MarkedMorphism,
}

impl IntegersResolution {
    /// x as a vector of the unreduced ring.
    fn x(&self) -> TowerVector {
        let t = &self.tower;
        let mut xa = TowerElt::default();
        for j in 0..t.tile as i64 {
            xa = xa.add(&TowerElt::chi(&t.base_shift(j), j, 1));
        }
        [xa, TowerElt::chi(&t.remainder, 0, 1)]
    }

    fn carrier(&self, s: usize) -> &Carrier {
        if s == 0 {
            &self.tower.base
        } else {
            &self.tower.remainder
        }
    }

    /// ∂₁(χ_S) = χ_S(t⁰ − t¹)x.
    fn boundary_row(&self, s: usize) -> TowerVector {
        let m = self.tower.modulus;
        let x = self.x();
        let cs = TowerElt::chi(self.carrier(s), 0, 1);
        let one_minus_t = {
            let full = Carrier::full(m);
            TowerElt::chi(&full, 0, 1).sub(&TowerElt::chi(&full, 1, 1))
        };
        let pre = cs.mul(&one_minus_t, m);
        [pre.mul(&x[0], m), pre.mul(&x[1], m)]
    }

    fn d1(&self, v: &TowerVector) -> TowerVector {
        let m = self.tower.modulus;
        let rows = [self.boundary_row(0), self.boundary_row(1)];
        let mut out: TowerVector = Default::default();
        for (s, comp) in v.iter().enumerate() {
            out = vadd(&out, &[comp.mul(&rows[s][0], m), comp.mul(&rows[s][1], m)]);
        }
        out
    }

    fn eta(&self, v: &TowerVector) -> Vec<i64> {
        let m = self.tower.modulus;
        let mut out = vec![0i64; m];
        for (s, comp) in v.iter().enumerate() {
            let ind: Vec<i64> = (0..m).map(|y| i64::from(self.carrier(s).contains(y))).collect();
            for (o, c) in out.iter_mut().zip(comp.act_on(&ind)) {
                *o += c;
            }
        }
        out
    }

    /// c₋₁(φ) = φ·x.
    fn c_minus(&self, phi: &[i64]) -> TowerVector {
        let m = self.tower.modulus;
        let mut f = TowerElt::default();
        for (x, &c) in phi.iter().enumerate() {
            if c != 0 {
                f.add_term(0, x, c);
            }
        }
        let x = self.x();
        [f.mul(&x[0], m), f.mul(&x[1], m)]
    }

    /// c₀ on the atom (χ_{p}, t^m) of summand s, extended Z^G-linearly.
    fn c0_atom(&self, s: usize, m: i64, p: usize, c: i64) -> TowerVector {
        let t = &self.tower;
        let range: Vec<i64> = if m >= 0 { (0..m).collect() } else { (m..0).collect() };
        let sign = if m >= 0 { -c } else { c };
        let mut out: TowerVector = Default::default();
        for j in range {
            if t.base_shift(j).contains(p) {
                out[0].add_term(j, p, sign);
            }
            if t.remainder_shift(j).contains(p) {
                out[1].add_term(j, p, sign);
            }
        }
        debug_assert!(self.carrier(s).contains((p as i64 - m).rem_euclid(t.modulus as i64) as usize));
        out
    }

    fn c0(&self, v: &TowerVector) -> TowerVector {
        let mut out: TowerVector = Default::default();
        for (s, comp) in v.iter().enumerate() {
            for (&(m, p), &c) in comp.terms() {
                out = vadd(&out, &self.c0_atom(s, m, p, c));
            }
        }
        out
    }

    /// t^m χ_S as a vector.
    fn basis(&self, s: usize, m: i64) -> TowerVector {
        let mut v: TowerVector = Default::default();
        v[s] = TowerElt::chi(&self.tower.shift(self.carrier(s), m), m, 1);
        v
    }

    /// Contraction identities on t^m χ_A, t^m χ_B for m in the window.
    pub fn check_contraction(&self, window: i64) -> Vec<(String, bool)> {
        let m_len = self.tower.modulus;
        let ones = vec![1i64; m_len];
        let mut eta_c = true;
        let mut d1_c0 = true;
        let mut c0_d1 = true;
        let eta_cm = self.eta(&self.c_minus(&ones)) == ones;
        for s in 0..2 {
            if self.carrier(s).is_empty() {
                continue;
            }
            for m in -window..=window {
                let b = self.basis(s, m);
                let lhs = self.d1(&self.c0(&b));
                let rhs = vsub(&b, &self.c_minus(&self.eta(&b)));
                d1_c0 &= lhs == rhs;
                c0_d1 &= self.c0(&self.d1(&b)) == b;
                eta_c &= self.eta(&self.d1(&b)).iter().all(|&c| c == 0);
            }
        }
        vec![
            ("η∘c₋₁ = id".to_string(), eta_cm),
            ("η∘∂₁ = 0 (unreduced)".to_string(), eta_c),
            ("∂₁∘c₀ = id − c₋₁∘η".to_string(), d1_c0),
            ("c₀∘∂₁ = id".to_string(), c0_d1),
        ]
    }
}

/// Builds D, C and the maps f, r, h₀ at level ℤ/M.
pub fn integers_dyn_resolution(m: usize, n: usize) -> Result<IntegersResolution> {
    let tower = rokhlin_partition(m, n)?;
    let level = LevelSpace::cyclic(m);
    let (a, b) = (tower.base.clone(), tower.remainder.clone());
    let d0 = MarkedModule::new(&level, vec![a.clone(), b.clone()])?;
    let d1m = d0.clone();
    let mut ir = IntegersResolution {
        tower: tower.clone(),
        level: level.clone(),
        d: MarkedComplex::new(vec![d0.clone()], vec![], None)?,
        c: induce_resolution(&ResolutionData::integers(), &level)?,
        f: Vec::new(),
        r: Vec::new(),
        h0: MarkedMorphism::zero(&MarkedModule::zero(&level), &MarkedModule::zero(&level)),
    };
    let rows = [ir.boundary_row(0), ir.boundary_row(1)];
    let entries = rows.iter().map(|r| r.iter().map(|e| e.reduce_to_level(&level)).collect()).collect();
    let d1 = MarkedMorphism::new(&d1m, &d0, entries)?;
    let aug = Augmentation::ones(&d0);
    ir.d = MarkedComplex::new(vec![d0.clone(), d1m.clone()], vec![d1], Some(aug))?;

    let c0m = ir.c.module(0).clone();
    let c1m = ir.c.module(1).clone();
    let x = ir.x();
    let f0 = MarkedMorphism::new(&c0m, &d0, vec![x.iter().map(|e| e.reduce_to_level(&level)).collect()])?;
    let f1 = MarkedMorphism::new(&c1m, &d1m, vec![vec![CrossedElt::chi(&level, &a), CrossedElt::chi(&level, &b)]])?;
    let r0 = MarkedMorphism::new(&d0, &c0m, vec![vec![CrossedElt::chi(&level, &a)], vec![CrossedElt::chi(&level, &b)]])?;
    // x̃ = Σ_{j<N} (χ_{t^N A}, tʲ) + (χ_{tB}, e)
    let mut xt = TowerElt::chi(&tower.remainder_shift(1), 0, 1);
    for j in 0..n as i64 {
        xt = xt.add(&TowerElt::chi(&tower.base_shift(n as i64), j, 1));
    }
    let r1_rows: Vec<Vec<CrossedElt>> = [&a, &b]
        .iter()
        .map(|s| vec![TowerElt::chi(s, 0, 1).mul(&xt, m).reduce_to_level(&level)])
        .collect();
    let r1 = MarkedMorphism::new(&d1m, &c1m, r1_rows)?;
    let mut h = TowerElt::default();
    for j in 0..n as i64 {
        for k in 0..j {
            h = h.add(&TowerElt::chi(&tower.base_shift(j), k, -1));
        }
    }
    ir.h0 = MarkedMorphism::new(&c0m, &c1m, vec![vec![h.reduce_to_level(&level)]])?;
    ir.f = vec![f0, f1];
    ir.r = vec![r0, r1];
    Ok(ir)
}

/// Runs every identity and norm check for the tower (M, N).
pub fn integers_embedding(m: usize, n: usize) -> Result<(IntegersResolution, RokhlinReport)> {
    let ir = integers_dyn_resolution(m, n)?;
    let t = &ir.tower;
    let mut checks = vec![
        ("partition A ⊔ … ⊔ t^{N−1}A ⊔ B".to_string(), t.is_partition()),
        ("A ⊔ B = t^N A ⊔ tB".to_string(), t.shift_identity()),
        ("A ∩ t^N A ∩ tʲB = ∅, B ∩ t^N A ∩ tʲB = ∅".to_string(), t.disjointness_facts()),
    ];
    let d = &ir.d;
    checks.push(("D is strict".to_string(), d.is_strict()));
    let x = d.eta(&ir.f[0].row(0));
    checks.push(("η(x) = 1".to_string(), x.iter().all(|c| c == &BigInt::from(1))));
    checks.extend(ir.check_contraction(2 * m as i64));
    let ef = check_chain_map(&ir.f, &ir.c, d)?;
    checks.push(("f is a chain map".to_string(), ef.iter().all(|e| e.is_zero())));
    let er = check_chain_map(&ir.r, d, &ir.c)?;
    checks.push(("r is a chain map".to_string(), er.iter().all(|e| e.is_zero())));
    let c1 = ir.c.boundary(1);
    let id0 = MarkedMorphism::identity(ir.c.module(0));
    let id1 = MarkedMorphism::identity(ir.c.module(1));
    let lhs0 = ir.h0.then(c1)?;
    let rhs0 = ir.f[0].then(&ir.r[0])?.try_sub(&id0)?;
    checks.push(("∂ᶜh₀ = r₀f₀ − id".to_string(), lhs0 == rhs0));
    let lhs1 = c1.then(&ir.h0)?;
    let rhs1 = ir.f[1].then(&ir.r[1])?.try_sub(&id1)?;
    checks.push(("h₀∂ᶜ = r₁f₁ − id".to_string(), lhs1 == rhs1));

    let norms: Vec<BigInt> = [&d.boundary(1).clone(), &ir.f[0], &ir.f[1], &ir.r[0], &ir.r[1], &ir.h0]
        .iter()
        .map(|f| f.op_norm())
        .collect();
    let big_n = BigInt::from(n);
    let one = BigInt::from(1);
    checks.push(("‖f₀‖, ‖f₁‖, ‖r₀‖ ≤ 1".to_string(), norms[1] <= one && norms[2] <= one && norms[3] <= one));
    checks.push(("‖r₁‖ ≤ N".to_string(), norms[4] <= big_n));
    checks.push(("‖h₀‖ ≤ N²".to_string(), norms[5] <= &big_n * &big_n));
    let dims = d.dims();
    let union = ratio(t.base.union(&t.remainder).count(), m);
    let bound = ratio(1, n) + ratio(m % n, m);
    checks.push(("dim D₀ = dim D₁ = μ(A ∪ B) ≤ 1/N + (M mod N)/M".to_string(), dims[0] == union && dims[1] == union && union <= bound));
    let report = RokhlinReport {
        modulus: m,
        tile: n,
        checks,
        dim_d0: dims[0].clone(),
        dim_d1: dims[1].clone(),
        dim_bound: bound,
        norm_d1: norms[0].clone(),
        norm_f0: norms[1].clone(),
        norm_f1: norms[2].clone(),
        norm_r0: norms[3].clone(),
        norm_r1: norms[4].clone(),
        norm_h0: norms[5].clone(),
    };
    Ok((ir, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions() {
        let t = rokhlin_partition(7, 2).unwrap();
        assert_eq!(t.base.iter().collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(t.remainder.iter().collect::<Vec<_>>(), vec![6]);
        assert_eq!(t.measure_remainder(), ratio(1, 7));
        assert!(t.is_partition() && t.shift_identity() && t.disjointness_facts());
        assert!(rokhlin_partition(6, 2).unwrap().remainder.is_empty());
        assert_eq!(rokhlin_partition(12, 4).unwrap().measure_base(), ratio(1, 4));
    }

    #[test]
    fn seven_two_tower() {
        let (_, rep) = integers_embedding(7, 2).unwrap();
        for (name, ok) in &rep.checks {
            assert!(ok, "{}", name);
        }
        assert_eq!(rep.dim_d0, ratio(4, 7));
        assert_eq!(rep.norm_d1, BigInt::from(2));
        assert!(rep.norm_r1 <= BigInt::from(2) && rep.norm_h0 <= BigInt::from(4));
    }

    #[test]
    fn single_tile_tower() {
        let (_, rep) = integers_embedding(3, 3).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.checks);
    }
}
