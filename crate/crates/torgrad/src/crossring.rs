//! The crossed product ring Z^G∗G of a finite level G, marked projective
//! modules over it, and morphisms between them.
//!
//! An element is stored as a pair function on G×G: the entry at `(x, y)`
//! is the coefficient of the orbit pair (x, y). The generator (λ, g) sits at
//! the pairs (x, g⁻¹x) with value λ(x), so products are matrix products and
//! g = x·y⁻¹ can always be recovered from a pair.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use bitvec::prelude::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{Coeffs, FiniteQuotient, GroupRingElt, Word};
use crate::jsonint::Int;

/// μ(A) as an exact rational.
pub fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den.max(1)))
}

pub fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}

pub fn big_to_f64(x: &BigInt) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::INFINITY)
}

pub fn rat_to_f64(x: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN)
}

/// The finite space G = Γ/Γᵢ with uniform probability measure.
#[derive(Debug)]
pub struct LevelSpace {
    quotient: FiniteQuotient,
    coeffs: Coeffs,
    words: OnceLock<Vec<Word>>,
}

pub type Level = Arc<LevelSpace>;

impl LevelSpace {
    pub fn new(quotient: FiniteQuotient) -> Level {
        LevelSpace::with_coeffs(quotient, Coeffs::Integers)
    }

    pub fn with_coeffs(quotient: FiniteQuotient, coeffs: Coeffs) -> Level {
        Arc::new(LevelSpace { quotient, coeffs, words: OnceLock::new() })
    }

    /// ℤ/m with t = 1 as the single generator.
    pub fn cyclic(m: usize) -> Level {
        LevelSpace::new(FiniteQuotient::abelian(1, &[m]).expect("cyclic level"))
    }

    pub fn quotient(&self) -> &FiniteQuotient {
        &self.quotient
    }

    pub fn coeffs(&self) -> Coeffs {
        self.coeffs
    }

    pub fn order(&self) -> usize {
        self.quotient.order()
    }

    pub fn measure(&self, a: &Carrier) -> BigRational {
        ratio(a.count(), self.order())
    }

    pub fn full(&self) -> Carrier {
        Carrier::full(self.order())
    }

    pub fn empty(&self) -> Carrier {
        Carrier::empty(self.order())
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.quotient.mul(a, b)
    }

    pub fn inv(&self, a: usize) -> usize {
        self.quotient.inv(a)
    }

    /// Group element g = x·y⁻¹ of the pair (x, y).
    pub fn pair_element(&self, x: usize, y: usize) -> usize {
        self.mul(x, self.inv(y))
    }

    /// A word representing each element, shortest first.
    pub fn words(&self) -> &[Word] {
        self.words.get_or_init(|| self.quotient.representative_words())
    }

    pub fn same(a: &Level, b: &Level) -> bool {
        Arc::ptr_eq(a, b) || (a.coeffs == b.coeffs && a.quotient == b.quotient)
    }
}

fn check_level(a: &Level, b: &Level) -> Result<()> {
    if LevelSpace::same(a, b) {
        Ok(())
    } else {
        Err(Error::LevelMismatch)
    }
}

/// A subset of G.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Carrier {
    bits: BitVec<u64, Lsb0>,
}

impl fmt::Debug for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.iter().collect::<Vec<_>>())
    }
}

impl Carrier {
    pub fn empty(n: usize) -> Self {
        Carrier { bits: bitvec![u64, Lsb0; 0; n] }
    }

    pub fn full(n: usize) -> Self {
        Carrier { bits: bitvec![u64, Lsb0; 1; n] }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(n: usize, it: I) -> Self {
        let mut c = Carrier::empty(n);
        for i in it {
            c.insert(i);
        }
        c
    }

    pub fn universe(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.bits.get(x).map(|b| *b).unwrap_or(false)
    }

    pub fn insert(&mut self, x: usize) {
        self.bits.set(x, true);
    }

    pub fn remove(&mut self, x: usize) {
        self.bits.set(x, false);
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter_ones()
    }

    pub fn union(&self, o: &Carrier) -> Carrier {
        Carrier { bits: self.bits.clone() | o.bits.clone() }
    }

    pub fn intersection(&self, o: &Carrier) -> Carrier {
        Carrier { bits: self.bits.clone() & o.bits.clone() }
    }

    pub fn difference(&self, o: &Carrier) -> Carrier {
        Carrier { bits: self.bits.clone() & !o.bits.clone() }
    }

    pub fn symmetric_difference(&self, o: &Carrier) -> Carrier {
        Carrier { bits: self.bits.clone() ^ o.bits.clone() }
    }

    pub fn complement(&self) -> Carrier {
        Carrier { bits: !self.bits.clone() }
    }

    pub fn is_subset(&self, o: &Carrier) -> bool {
        self.difference(o).is_empty()
    }

    pub fn is_disjoint(&self, o: &Carrier) -> bool {
        self.intersection(o).is_empty()
    }

    /// g·A = {g·a}.
    pub fn translate(&self, level: &LevelSpace, g: usize) -> Carrier {
        Carrier::from_indices(self.universe(), self.iter().map(|a| level.mul(g, a)))
    }
}

/// Finitely supported element of Z^G∗G as a pair function.
#[derive(Clone)]
pub struct CrossedElt {
    level: Level,
    terms: BTreeMap<(usize, usize), BigInt>,
}

impl PartialEq for CrossedElt {
    fn eq(&self, other: &Self) -> bool {
        LevelSpace::same(&self.level, &other.level) && self.terms == other.terms
    }
}

impl Eq for CrossedElt {}

impl fmt::Debug for CrossedElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for CrossedElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .columns()
            .iter()
            .map(|(g, col)| {
                let f_str: Vec<String> = col.iter().map(|(x, c)| format!("{}:{}", x, c)).collect();
                format!("({{{}}}, g{})", f_str.join(","), g)
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Norm and support statistics of one element.
#[derive(Clone, Debug, PartialEq)]
pub struct CeltStats {
    pub l1: BigRational,
    pub linf: BigInt,
    pub n1: usize,
    pub n2: usize,
    pub supp1: Carrier,
    pub size1: BigRational,
}

impl CrossedElt {
    pub fn zero(level: &Level) -> Self {
        CrossedElt { level: level.clone(), terms: BTreeMap::new() }
    }

    /// (λ, g) for λ given pointwise.
    pub fn term(level: &Level, lambda: &[(usize, BigInt)], g: usize) -> Self {
        let mut z = CrossedElt::zero(level);
        let gi = level.inv(g);
        for (x, c) in lambda {
            z.add_at(*x, level.mul(gi, *x), c.clone());
        }
        z
    }

    /// (c·χ_A, g).
    pub fn chi_g(level: &Level, a: &Carrier, g: usize, c: i64) -> Self {
        let lam: Vec<(usize, BigInt)> = a.iter().map(|x| (x, BigInt::from(c))).collect();
        CrossedElt::term(level, &lam, g)
    }

    /// (χ_A, e).
    pub fn chi(level: &Level, a: &Carrier) -> Self {
        CrossedElt::chi_g(level, a, 0, 1)
    }

    /// (χ_G, g).
    pub fn group(level: &Level, g: usize) -> Self {
        CrossedElt::chi_g(level, &level.full(), g, 1)
    }

    pub fn one(level: &Level) -> Self {
        CrossedElt::group(level, 0)
    }

    /// Σ a_w (χ_G, π(w)).
    pub fn from_group_ring(level: &Level, x: &GroupRingElt) -> Self {
        let mut z = CrossedElt::zero(level);
        for (w, c) in x.terms() {
            let g = level.quotient().evaluate(w);
            let gi = level.inv(g);
            for p in 0..level.order() {
                z.add_at(p, level.mul(gi, p), c.clone());
            }
        }
        z
    }

    pub fn from_pairs<I: IntoIterator<Item = ((usize, usize), BigInt)>>(level: &Level, it: I) -> Self {
        let mut z = CrossedElt::zero(level);
        for ((x, y), c) in it {
            z.add_at(x, y, c);
        }
        z
    }

    pub fn level(&self) -> &Level {
        &self.level
    }

    pub fn add_at(&mut self, x: usize, y: usize, c: BigInt) {
        let coeffs = self.level.coeffs();
        let entry = self.terms.entry((x, y)).or_insert_with(BigInt::zero);
        let v = coeffs.normalize(&*entry + c);
        if v.is_zero() {
            self.terms.remove(&(x, y));
        } else {
            *entry = v;
        }
    }

    pub fn get(&self, x: usize, y: usize) -> BigInt {
        self.terms.get(&(x, y)).cloned().unwrap_or_default()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&(usize, usize), &BigInt)> {
        self.terms.iter()
    }

    pub fn nnz(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Column view g ↦ f_g, listing (x, f_g(x)).
    pub fn columns(&self) -> BTreeMap<usize, Vec<(usize, BigInt)>> {
        let mut out: BTreeMap<usize, Vec<(usize, BigInt)>> = BTreeMap::new();
        for (&(x, y), c) in &self.terms {
            out.entry(self.level.pair_element(x, y)).or_default().push((x, c.clone()));
        }
        out
    }

    pub fn rows(&self) -> Carrier {
        Carrier::from_indices(self.level.order(), self.terms.keys().map(|k| k.0))
    }

    pub fn cols(&self) -> Carrier {
        Carrier::from_indices(self.level.order(), self.terms.keys().map(|k| k.1))
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        CrossedElt::from_pairs(&self.level, self.terms.iter().map(|(k, v)| (*k, v * c)))
    }

    /// χ_A·z.
    pub fn left_restrict(&self, a: &Carrier) -> Self {
        CrossedElt {
            level: self.level.clone(),
            terms: self.terms.iter().filter(|(k, _)| a.contains(k.0)).map(|(k, v)| (*k, v.clone())).collect(),
        }
    }

    /// z·χ_B.
    pub fn right_restrict(&self, b: &Carrier) -> Self {
        CrossedElt {
            level: self.level.clone(),
            terms: self.terms.iter().filter(|(k, _)| b.contains(k.1)).map(|(k, v)| (*k, v.clone())).collect(),
        }
    }

    pub fn try_add(&self, o: &CrossedElt) -> Result<CrossedElt> {
        check_level(&self.level, &o.level)?;
        let mut out = self.clone();
        for (&(x, y), c) in &o.terms {
            out.add_at(x, y, c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, o: &CrossedElt) -> Result<CrossedElt> {
        check_level(&self.level, &o.level)?;
        let mut by_row: BTreeMap<usize, Vec<(usize, &BigInt)>> = BTreeMap::new();
        for (&(y, w), c) in &o.terms {
            by_row.entry(y).or_default().push((w, c));
        }
        let mut out = CrossedElt::zero(&self.level);
        for (&(x, y), a) in &self.terms {
            if let Some(row) = by_row.get(&y) {
                for (w, b) in row {
                    out.add_at(x, *w, a * *b);
                }
            }
        }
        Ok(out)
    }

    /// Action on functions: (z·v)(x) = Σ_y z(x, y)·v(y).
    pub fn act_on(&self, v: &[BigInt]) -> Vec<BigInt> {
        let coeffs = self.level.coeffs();
        let mut out = vec![BigInt::zero(); self.level.order()];
        for (&(x, y), c) in &self.terms {
            out[x] += c * &v[y];
        }
        out.into_iter().map(|c| coeffs.normalize(c)).collect()
    }

    pub fn l1(&self) -> BigRational {
        let coeffs = self.level.coeffs();
        let s: BigInt = self.terms.values().map(|c| coeffs.norm(c)).sum();
        BigRational::new(s, BigInt::from(self.level.order()))
    }

    pub fn linf(&self) -> BigInt {
        let coeffs = self.level.coeffs();
        self.terms.values().map(|c| coeffs.norm(c)).max().unwrap_or_default()
    }

    /// Maximal number of group elements meeting one column point.
    pub fn n1(&self) -> usize {
        let mut counts = vec![0usize; self.level.order()];
        for &(_, y) in self.terms.keys() {
            counts[y] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }

    /// Maximal number of group elements meeting one row point.
    pub fn n2(&self) -> usize {
        let mut counts = vec![0usize; self.level.order()];
        for &(x, _) in self.terms.keys() {
            counts[x] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }

    pub fn supp1(&self) -> Carrier {
        self.rows()
    }

    pub fn size1(&self) -> BigRational {
        self.level.measure(&self.supp1())
    }

    pub fn stats(&self) -> CeltStats {
        CeltStats {
            l1: self.l1(),
            linf: self.linf(),
            n1: self.n1(),
            n2: self.n2(),
            supp1: self.supp1(),
            size1: self.size1(),
        }
    }

    /// ℓ¹ norm of row x.
    pub fn row_norm(&self, x: usize) -> BigInt {
        let coeffs = self.level.coeffs();
        self.terms.range((x, 0)..(x + 1, 0)).map(|(_, c)| coeffs.norm(c)).sum()
    }
}

impl Add for &CrossedElt {
    type Output = CrossedElt;
    fn add(self, rhs: &CrossedElt) -> CrossedElt {
        self.try_add(rhs).expect("same level")
    }
}

impl Sub for &CrossedElt {
    type Output = CrossedElt;
    fn sub(self, rhs: &CrossedElt) -> CrossedElt {
        self.try_add(&-rhs).expect("same level")
    }
}

impl Neg for &CrossedElt {
    type Output = CrossedElt;
    fn neg(self) -> CrossedElt {
        self.scale(&BigInt::from(-1))
    }
}

impl Mul for &CrossedElt {
    type Output = CrossedElt;
    fn mul(self, rhs: &CrossedElt) -> CrossedElt {
        self.try_mul(rhs).expect("same level")
    }
}

/// ⟨A₁⟩ ⊕ … ⊕ ⟨A_k⟩.
#[derive(Clone, Debug)]
pub struct MarkedModule {
    level: Level,
    carriers: Vec<Carrier>,
}

impl PartialEq for MarkedModule {
    fn eq(&self, other: &Self) -> bool {
        LevelSpace::same(&self.level, &other.level) && self.carriers == other.carriers
    }
}

impl Eq for MarkedModule {}

impl MarkedModule {
    pub fn new(level: &Level, carriers: Vec<Carrier>) -> Result<Self> {
        if carriers.iter().any(|c| c.universe() != level.order()) {
            return Err(Error::Shape("carrier over the wrong level".into()));
        }
        Ok(MarkedModule { level: level.clone(), carriers })
    }

    /// ⟨G⟩^k.
    pub fn free(level: &Level, k: usize) -> Self {
        MarkedModule { level: level.clone(), carriers: vec![level.full(); k] }
    }

    pub fn zero(level: &Level) -> Self {
        MarkedModule { level: level.clone(), carriers: Vec::new() }
    }

    pub fn level(&self) -> &Level {
        &self.level
    }

    pub fn carriers(&self) -> &[Carrier] {
        &self.carriers
    }

    pub fn carrier(&self, i: usize) -> &Carrier {
        &self.carriers[i]
    }

    pub fn rank(&self) -> usize {
        self.carriers.len()
    }

    pub fn dim(&self) -> BigRational {
        self.carriers.iter().map(|c| self.level.measure(c)).fold(BigRational::zero(), |a, b| a + b)
    }

    /// Total atom count Σ|Aᵢ| = |G|·dim.
    pub fn atoms(&self) -> usize {
        self.carriers.iter().map(|c| c.count()).sum()
    }

    pub fn direct_sum(&self, other: &MarkedModule) -> Result<MarkedModule> {
        check_level(&self.level, &other.level)?;
        let mut carriers = self.carriers.clone();
        carriers.extend(other.carriers.iter().cloned());
        Ok(MarkedModule { level: self.level.clone(), carriers })
    }

    /// χ_{Aᵢ}eᵢ.
    pub fn generator(&self, i: usize) -> ModuleVector {
        let mut v = ModuleVector::zero(self);
        v.comps[i] = CrossedElt::chi(&self.level, &self.carriers[i]);
        v
    }

    pub fn to_json(&self) -> serde_json::Value {
        let carriers: Vec<Vec<usize>> = self.carriers.iter().map(|c| c.iter().collect()).collect();
        serde_json::json!({ "carriers": carriers })
    }

    pub fn from_json(level: &Level, v: &serde_json::Value) -> Result<Self> {
        let raw: ModuleJson = serde_json::from_value(v.clone())?;
        let n = level.order();
        let mut carriers = Vec::new();
        for c in raw.carriers {
            if c.iter().any(|&x| x >= n) {
                return Err(Error::Shape("carrier point outside G".into()));
            }
            carriers.push(Carrier::from_indices(n, c));
        }
        MarkedModule::new(level, carriers)
    }
}

#[derive(Serialize, Deserialize)]
struct ModuleJson {
    carriers: Vec<Vec<usize>>,
}

/// An element Σ zᵢ eᵢ with zᵢ = zᵢ·χ_{Aᵢ}.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleVector {
    module: MarkedModule,
    comps: Vec<CrossedElt>,
}

impl ModuleVector {
    pub fn zero(m: &MarkedModule) -> Self {
        ModuleVector { module: m.clone(), comps: vec![CrossedElt::zero(&m.level); m.rank()] }
    }

    /// Components are right-restricted to their carriers.
    pub fn new(m: &MarkedModule, comps: Vec<CrossedElt>) -> Result<Self> {
        if comps.len() != m.rank() {
            return Err(Error::Shape(format!("{} components for rank {}", comps.len(), m.rank())));
        }
        for c in &comps {
            check_level(c.level(), &m.level)?;
        }
        let comps = comps.iter().zip(&m.carriers).map(|(c, a)| c.right_restrict(a)).collect();
        Ok(ModuleVector { module: m.clone(), comps })
    }

    pub fn module(&self) -> &MarkedModule {
        &self.module
    }

    pub fn comps(&self) -> &[CrossedElt] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &CrossedElt {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    pub fn try_add(&self, o: &ModuleVector) -> Result<ModuleVector> {
        if self.module != o.module {
            return Err(Error::Shape("vectors in different modules".into()));
        }
        let comps = self.comps.iter().zip(&o.comps).map(|(a, b)| a + b).collect();
        Ok(ModuleVector { module: self.module.clone(), comps })
    }

    pub fn neg(&self) -> ModuleVector {
        ModuleVector { module: self.module.clone(), comps: self.comps.iter().map(|c| -c).collect() }
    }

    pub fn try_sub(&self, o: &ModuleVector) -> Result<ModuleVector> {
        self.try_add(&o.neg())
    }

    /// λ·z for λ in the ring, acting on the left.
    pub fn left_mul(&self, lambda: &CrossedElt) -> ModuleVector {
        ModuleVector { module: self.module.clone(), comps: self.comps.iter().map(|c| lambda * c).collect() }
    }

    pub fn supp1(&self) -> Carrier {
        self.comps.iter().fold(self.module.level.empty(), |a, c| a.union(&c.rows()))
    }

    pub fn size1(&self) -> BigRational {
        self.module.level.measure(&self.supp1())
    }

    pub fn l1(&self) -> BigRational {
        self.comps.iter().map(|c| c.l1()).fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn linf(&self) -> BigInt {
        self.comps.iter().map(|c| c.linf()).sum()
    }

    pub fn n1(&self) -> usize {
        self.comps.iter().map(|c| c.n1()).sum()
    }

    pub fn n2(&self) -> usize {
        self.comps.iter().map(|c| c.n2()).sum()
    }
}

/// Matrix of ring elements between marked modules; entry (i, j) has rows in
/// Aᵢ and columns in B_j.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedMorphism {
    domain: MarkedModule,
    codomain: MarkedModule,
    entries: Vec<Vec<CrossedElt>>,
}

/// Statistics of a morphism over its canonical generators.
#[derive(Clone, Debug, PartialEq)]
pub struct MorphismStats {
    pub infty_norm: BigInt,
    pub n1: usize,
    pub n1_underline: usize,
    pub n2: usize,
    pub n2_underline: usize,
    pub size1: BigRational,
    pub k_f: BigInt,
    pub op_norm: BigInt,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlmostEq {
    pub delta_min: BigRational,
    pub norm_on_difference: BigInt,
}

impl AlmostEq {
    /// f =_{δ,K} f′.
    pub fn holds(&self, delta: &BigRational, k: &BigInt) -> bool {
        &self.delta_min < delta && &self.norm_on_difference <= k
    }
}

impl MarkedMorphism {
    /// Entries are normalized to the support constraint.
    pub fn new(domain: &MarkedModule, codomain: &MarkedModule, entries: Vec<Vec<CrossedElt>>) -> Result<Self> {
        check_level(&domain.level, &codomain.level)?;
        if entries.len() != domain.rank() || entries.iter().any(|r| r.len() != codomain.rank()) {
            return Err(Error::Shape(format!(
                "entry matrix does not match ranks {}×{}",
                domain.rank(),
                codomain.rank()
            )));
        }
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(j, z)| z.left_restrict(&domain.carriers[i]).right_restrict(&codomain.carriers[j]))
                    .collect()
            })
            .collect();
        Ok(MarkedMorphism { domain: domain.clone(), codomain: codomain.clone(), entries })
    }

    pub fn zero(domain: &MarkedModule, codomain: &MarkedModule) -> Self {
        let entries = vec![vec![CrossedElt::zero(&domain.level); codomain.rank()]; domain.rank()];
        MarkedMorphism { domain: domain.clone(), codomain: codomain.clone(), entries }
    }

    pub fn identity(m: &MarkedModule) -> Self {
        let mut f = MarkedMorphism::zero(m, m);
        for i in 0..m.rank() {
            f.entries[i][i] = CrossedElt::chi(&m.level, &m.carriers[i]);
        }
        f
    }

    pub fn domain(&self) -> &MarkedModule {
        &self.domain
    }

    pub fn codomain(&self) -> &MarkedModule {
        &self.codomain
    }

    pub fn level(&self) -> &Level {
        &self.domain.level
    }

    pub fn entries(&self) -> &[Vec<CrossedElt>] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &CrossedElt {
        &self.entries[i][j]
    }

    /// Replaces one entry, restricting it to the support constraint.
    pub fn set_entry(&mut self, i: usize, j: usize, z: CrossedElt) {
        self.entries[i][j] = z.left_restrict(&self.domain.carriers[i]).right_restrict(&self.codomain.carriers[j]);
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|z| z.is_zero())
    }

    /// f(z)_j = Σᵢ zᵢ·z_{ij}.
    pub fn apply(&self, z: &ModuleVector) -> Result<ModuleVector> {
        if z.module != self.domain {
            return Err(Error::Shape("vector not in the domain".into()));
        }
        let mut comps = vec![CrossedElt::zero(self.level()); self.codomain.rank()];
        for (i, zi) in z.comps.iter().enumerate() {
            if zi.is_zero() {
                continue;
            }
            for (j, zij) in self.entries[i].iter().enumerate() {
                if !zij.is_zero() {
                    comps[j] = &comps[j] + &(zi * zij);
                }
            }
        }
        Ok(ModuleVector { module: self.codomain.clone(), comps })
    }

    /// f(χ_{Aᵢ}eᵢ), the i-th row.
    pub fn row(&self, i: usize) -> ModuleVector {
        ModuleVector { module: self.codomain.clone(), comps: self.entries[i].clone() }
    }

    /// g ∘ f, i.e. first self, then `g`.
    pub fn then(&self, g: &MarkedMorphism) -> Result<MarkedMorphism> {
        if self.codomain != g.domain {
            return Err(Error::Shape("composition of incompatible morphisms".into()));
        }
        let mut out = MarkedMorphism::zero(&self.domain, &g.codomain);
        for i in 0..self.domain.rank() {
            for k in 0..g.codomain.rank() {
                let mut acc = CrossedElt::zero(self.level());
                for j in 0..self.codomain.rank() {
                    if !self.entries[i][j].is_zero() && !g.entries[j][k].is_zero() {
                        acc = &acc + &(&self.entries[i][j] * &g.entries[j][k]);
                    }
                }
                out.entries[i][k] = acc;
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, o: &MarkedMorphism) -> Result<MarkedMorphism> {
        if self.domain != o.domain || self.codomain != o.codomain {
            return Err(Error::Shape("sum of morphisms with different shapes".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&o.entries)
            .map(|(r, s)| r.iter().zip(s).map(|(a, b)| a + b).collect())
            .collect();
        Ok(MarkedMorphism { domain: self.domain.clone(), codomain: self.codomain.clone(), entries })
    }

    pub fn neg(&self) -> MarkedMorphism {
        self.scale(&BigInt::from(-1))
    }

    pub fn scale(&self, c: &BigInt) -> MarkedMorphism {
        let entries = self.entries.iter().map(|r| r.iter().map(|z| z.scale(c)).collect()).collect();
        MarkedMorphism { domain: self.domain.clone(), codomain: self.codomain.clone(), entries }
    }

    pub fn try_sub(&self, o: &MarkedMorphism) -> Result<MarkedMorphism> {
        self.try_add(&o.neg())
    }

    /// Σⱼ Σ_y |z_{ij}(u, y)|, the norm of f on the atom (χ_{u}, e)eᵢ.
    pub fn atom_norm(&self, i: usize, u: usize) -> BigInt {
        self.entries[i].iter().map(|z| z.row_norm(u)).sum()
    }

    /// Exact operator norm: the maximal atom norm.
    pub fn op_norm(&self) -> BigInt {
        let mut best = BigInt::zero();
        for (i, a) in self.domain.carriers.iter().enumerate() {
            for u in a.iter() {
                let v = self.atom_norm(i, u);
                if v > best {
                    best = v;
                }
            }
        }
        best
    }

    pub fn infty_norm(&self) -> BigInt {
        self.entries.iter().flatten().map(|z| z.linf()).max().unwrap_or_default()
    }

    pub fn size1(&self) -> BigRational {
        (0..self.domain.rank()).map(|i| self.row(i).size1()).fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn stats(&self) -> MorphismStats {
        let rows: Vec<ModuleVector> = (0..self.domain.rank()).map(|i| self.row(i)).collect();
        let n1s: Vec<usize> = rows.iter().map(|r| r.n1()).collect();
        let n2s: Vec<usize> = rows.iter().map(|r| r.n2()).collect();
        let infty_norm = self.infty_norm();
        let n2_underline = n2s.iter().copied().max().unwrap_or(0);
        MorphismStats {
            k_f: BigInt::from(n2_underline) * &infty_norm,
            infty_norm,
            n1: n1s.iter().sum(),
            n1_underline: n1s.iter().copied().max().unwrap_or(0),
            n2: n2s.iter().sum(),
            n2_underline,
            size1: self.size1(),
            op_norm: self.op_norm(),
        }
    }

    pub fn almost_eq(&self, o: &MarkedMorphism) -> Result<AlmostEq> {
        let d = self.try_sub(o)?;
        Ok(AlmostEq { delta_min: d.size1(), norm_on_difference: d.op_norm() })
    }

    /// Carriers B′ⱼ of the smallest marked summand containing the image.
    pub fn image_carriers(&self) -> Vec<Carrier> {
        (0..self.codomain.rank())
            .map(|j| self.entries.iter().fold(self.level().empty(), |acc, row| acc.union(&row[j].cols())))
            .collect()
    }

    pub fn marked_rank(&self) -> BigRational {
        self.image_carriers().iter().map(|c| self.level().measure(c)).fold(BigRational::zero(), |a, b| a + b)
    }

    /// Restriction to a sub-summand of the domain: `parts[i]` ⊆ Aᵢ; the
    /// result has domain ⟨parts⟩.
    pub fn restrict_domain(&self, parts: &[Carrier]) -> Result<MarkedMorphism> {
        if parts.len() != self.domain.rank() {
            return Err(Error::Shape("restriction needs one part per summand".into()));
        }
        for (p, a) in parts.iter().zip(&self.domain.carriers) {
            if !p.is_subset(a) {
                return Err(Error::Containment("restriction part outside its carrier".into()));
            }
        }
        let dom = MarkedModule::new(self.level(), parts.to_vec())?;
        MarkedMorphism::new(&dom, &self.codomain, self.entries.clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let level = self.level();
        let words = level.words();
        let entries: Vec<Vec<Vec<EntryTermJson>>> = self
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|z| {
                        z.columns()
                            .into_iter()
                            .map(|(g, col)| EntryTermJson {
                                word: words[g].to_string(),
                                coeffs: col.into_iter().map(|(x, c)| (x, Int(c))).collect(),
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        serde_json::json!({
            "domain": self.domain.to_json(),
            "codomain": self.codomain.to_json(),
            "entries": entries,
        })
    }

    /// Loads a morphism; words are evaluated in the level's quotient.
    pub fn from_json(level: &Level, v: &serde_json::Value) -> Result<Self> {
        let domain = MarkedModule::from_json(level, &v["domain"])?;
        let codomain = MarkedModule::from_json(level, &v["codomain"])?;
        let raw: Vec<Vec<Vec<EntryTermJson>>> = serde_json::from_value(v["entries"].clone())?;
        let n = level.order();
        let mut entries = Vec::new();
        for row in raw {
            let mut out_row = Vec::new();
            for terms in row {
                let mut z = CrossedElt::zero(level);
                for t in terms {
                    let coeffs: Vec<(usize, BigInt)> = t.coeffs.into_iter().map(|(x, c)| (x, c.0)).collect();
                    let w = Word::parse(&t.word)?;
                    if let Some(m) = w.max_generator() {
                        if m >= level.quotient().generators() {
                            return Err(Error::Generator { index: m, generators: level.quotient().generators() });
                        }
                    }
                    if coeffs.iter().any(|(x, _)| *x >= n) {
                        return Err(Error::Shape("coefficient point outside G".into()));
                    }
                    let g = level.quotient().evaluate(&w);
                    z = &z + &CrossedElt::term(level, &coeffs, g);
                }
                out_row.push(z);
            }
            entries.push(out_row);
        }
        MarkedMorphism::new(&domain, &codomain, entries)
    }
}

#[derive(Serialize, Deserialize)]
struct EntryTermJson {
    word: String,
    coeffs: Vec<(usize, Int)>,
}

/// Which side a marked map is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarkedKind {
    /// eᵢ ↦ χ_{Aᵢ}e_{σ(i)}, needs Aᵢ ⊆ B_{σ(i)}.
    Inclusion,
    /// e_{τ(j)} ↦ χ_{B_j}e_j, needs B_j ⊆ A_{τ(j)}.
    Projection,
}

/// Marked inclusion (σ: domain index → codomain index) or marked
/// projection (τ: codomain index → domain index).
pub fn marked_map(src: &MarkedModule, dst: &MarkedModule, kind: MarkedKind, assignment: &[usize]) -> Result<MarkedMorphism> {
    let mut f = MarkedMorphism::zero(src, dst);
    let (len, target) = match kind {
        MarkedKind::Inclusion => (src.rank(), dst.rank()),
        MarkedKind::Projection => (dst.rank(), src.rank()),
    };
    if assignment.len() != len || assignment.iter().any(|&k| k >= target) {
        return Err(Error::Shape("assignment has the wrong shape".into()));
    }
    let mut seen = vec![false; target];
    for &k in assignment {
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::Shape("assignment is not injective".into()));
        }
    }
    for (a, &b) in assignment.iter().enumerate() {
        let (i, j, small, big) = match kind {
            MarkedKind::Inclusion => (a, b, &src.carriers[a], &dst.carriers[b]),
            MarkedKind::Projection => (b, a, &dst.carriers[a], &src.carriers[b]),
        };
        if !small.is_subset(big) {
            return Err(Error::Containment(format!("{:?} ⊄ {:?}", small, big)));
        }
        f.entries[i][j] = CrossedElt::chi(src.level(), small);
    }
    Ok(f)
}

pub fn marked_inclusion(src: &MarkedModule, dst: &MarkedModule, sigma: &[usize]) -> Result<MarkedMorphism> {
    marked_map(src, dst, MarkedKind::Inclusion, sigma)
}

pub fn marked_projection(src: &MarkedModule, dst: &MarkedModule, tau: &[usize]) -> Result<MarkedMorphism> {
    marked_map(src, dst, MarkedKind::Projection, tau)
}

/// Augmentation η: D₀ → Z^G given by vᵢ = η(χ_{Aᵢ}eᵢ).
#[derive(Clone, Debug, PartialEq)]
pub struct Augmentation {
    pub values: Vec<Vec<BigInt>>,
}

impl Augmentation {
    pub fn new(module: &MarkedModule, values: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = module.level().order();
        if values.len() != module.rank() || values.iter().any(|v| v.len() != n) {
            return Err(Error::Shape("augmentation has the wrong shape".into()));
        }
        for (v, a) in values.iter().zip(module.carriers()) {
            if v.iter().enumerate().any(|(x, c)| !c.is_zero() && !a.contains(x)) {
                return Err(Error::Containment("augmentation value outside its carrier".into()));
            }
        }
        Ok(Augmentation { values })
    }

    /// vᵢ = χ_{Aᵢ} for every summand.
    pub fn ones(module: &MarkedModule) -> Self {
        let values = module
            .carriers()
            .iter()
            .map(|a| (0..a.universe()).map(|x| BigInt::from(i32::from(a.contains(x)))).collect())
            .collect();
        Augmentation { values }
    }

    pub fn apply(&self, z: &ModuleVector) -> Vec<BigInt> {
        let level = z.module().level();
        let mut out = vec![BigInt::zero(); level.order()];
        for (zi, v) in z.comps().iter().zip(&self.values) {
            for (o, c) in out.iter_mut().zip(zi.act_on(v)) {
                *o += c;
            }
        }
        out.into_iter().map(|c| level.coeffs().normalize(c)).collect()
    }

    /// max |vᵢ|_∞, which is the exact operator norm of η.
    pub fn k_eta(&self) -> BigInt {
        self.values.iter().flatten().map(|c| c.abs()).max().unwrap_or_default()
    }
}

/// supp(v − 1) for v ∈ Z^G.
pub fn defect_support(level: &Level, v: &[BigInt]) -> Carrier {
    let one = BigInt::one();
    let coeffs = level.coeffs();
    Carrier::from_indices(level.order(), v.iter().enumerate().filter(|(_, c)| coeffs.normalize(*c - &one) != BigInt::zero()).map(|(x, _)| x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn c(n: usize, it: &[usize]) -> Carrier {
        Carrier::from_indices(n, it.iter().copied())
    }

    #[test]
    fn twisted_product_on_z4() {
        let l = LevelSpace::cyclic(4);
        let x = CrossedElt::chi_g(&l, &c(4, &[0]), 1, 1);
        let y = CrossedElt::chi_g(&l, &c(4, &[3]), 1, 1);
        assert_eq!(&x * &y, CrossedElt::chi_g(&l, &c(4, &[0]), 2, 1));
        let one = CrossedElt::one(&l);
        assert_eq!(&one * &x, x);
        let a = CrossedElt::chi(&l, &c(4, &[0, 1]));
        let b = CrossedElt::chi(&l, &c(4, &[1, 2]));
        assert_eq!(&a * &b, CrossedElt::chi(&l, &c(4, &[1])));
    }

    #[test]
    fn element_statistics() {
        let l = LevelSpace::cyclic(4);
        let z = CrossedElt::chi_g(&l, &c(4, &[0, 2]), 1, 1);
        let s = z.stats();
        assert_eq!(s.l1, ratio(1, 2));
        assert_eq!((s.linf, s.n1, s.n2), (big(1), 1, 1));
        assert_eq!(s.supp1, c(4, &[0, 2]));
        let w = &CrossedElt::chi(&l, &c(4, &[0])) + &CrossedElt::chi_g(&l, &c(4, &[0]), 1, 1);
        assert_eq!((w.n2(), w.n1(), w.l1()), (2, 1, ratio(1, 2)));
        assert_eq!(CrossedElt::zero(&l).stats().size1, BigRational::zero());
    }

    #[test]
    fn boundary_norms_at_z4() {
        let l = LevelSpace::cyclic(4);
        let m = MarkedModule::free(&l, 1);
        let d = &CrossedElt::one(&l) - &CrossedElt::group(&l, 1);
        let f = MarkedMorphism::new(&m, &m, vec![vec![d]]).unwrap();
        let s = f.stats();
        assert_eq!(s.op_norm, big(2));
        assert_eq!((s.n2_underline, s.infty_norm.clone(), s.k_f), (2, big(1), big(2)));
        let g = MarkedMorphism::new(&m, &m, vec![vec![&CrossedElt::one(&l) + &CrossedElt::group(&l, 1)]]).unwrap();
        assert_eq!(g.marked_rank(), ratio(1, 1));
    }

    #[test]
    fn disjoint_summands_have_norm_one() {
        let l = LevelSpace::cyclic(4);
        let m = MarkedModule::free(&l, 1);
        let z = &CrossedElt::chi(&l, &c(4, &[0, 1])) + &CrossedElt::chi(&l, &c(4, &[2, 3]));
        let f = MarkedMorphism::new(&m, &m, vec![vec![z]]).unwrap();
        assert_eq!(f.op_norm(), big(1));
        assert_eq!(MarkedMorphism::zero(&m, &m).op_norm(), big(0));
    }

    #[test]
    fn apply_matches_product() {
        let l = LevelSpace::cyclic(4);
        let m = MarkedModule::new(&l, vec![c(4, &[0, 2])]).unwrap();
        let n = MarkedModule::new(&l, vec![c(4, &[1, 3])]).unwrap();
        let f = MarkedMorphism::new(&m, &n, vec![vec![CrossedElt::chi_g(&l, &c(4, &[0, 2]), 1, 1)]]).unwrap();
        let z = ModuleVector::new(&m, vec![CrossedElt::chi(&l, &c(4, &[0]))]).unwrap();
        let out = f.apply(&z).unwrap();
        assert_eq!(out.comp(0), &CrossedElt::chi_g(&l, &c(4, &[0]), 1, 1));
        assert!(f.apply(&ModuleVector::zero(&m)).unwrap().is_zero());
    }

    #[test]
    fn almost_equality_sizes() {
        let l = LevelSpace::cyclic(4);
        let m = MarkedModule::free(&l, 1);
        let f = MarkedMorphism::identity(&m);
        let mut g = f.clone();
        g.set_entry(0, 0, CrossedElt::chi(&l, &c(4, &[1, 2, 3])));
        assert_eq!(f.almost_eq(&f).unwrap().delta_min, BigRational::zero());
        assert_eq!(f.almost_eq(&g).unwrap().delta_min, ratio(1, 4));
        let h = MarkedMorphism::new(&m, &m, vec![vec![CrossedElt::chi(&l, &c(4, &[0, 1]))]]).unwrap();
        assert_eq!(h.almost_eq(&MarkedMorphism::zero(&m, &m)).unwrap().delta_min, ratio(1, 2));
    }

    #[test]
    fn marked_maps_check_containment() {
        let l = LevelSpace::cyclic(4);
        let a = MarkedModule::new(&l, vec![c(4, &[0])]).unwrap();
        let b = MarkedModule::new(&l, vec![c(4, &[0, 2])]).unwrap();
        let inc = marked_inclusion(&a, &b, &[0]).unwrap();
        assert_eq!(inc.entry(0, 0), &CrossedElt::chi(&l, &c(4, &[0])));
        assert_eq!(inc.op_norm(), big(1));
        let pr = marked_projection(&b, &a, &[0]).unwrap();
        assert_eq!(pr.entry(0, 0), &CrossedElt::chi(&l, &c(4, &[0])));
        let bad = MarkedModule::new(&l, vec![c(4, &[1, 2])]).unwrap();
        assert!(matches!(marked_inclusion(&a, &bad, &[0]), Err(Error::Containment(_))));
    }

    #[test]
    fn marked_rank_of_atom() {
        let l = LevelSpace::cyclic(4);
        let a = MarkedModule::new(&l, vec![c(4, &[0])]).unwrap();
        let g = MarkedModule::free(&l, 1);
        let f = MarkedMorphism::new(&a, &g, vec![vec![CrossedElt::chi(&l, &c(4, &[0]))]]).unwrap();
        assert_eq!(f.marked_rank(), ratio(1, 4));
        assert_eq!(MarkedMorphism::zero(&g, &g).marked_rank(), BigRational::zero());
    }

    #[test]
    fn morphism_json_roundtrip() {
        let l = LevelSpace::cyclic(4);
        let m = MarkedModule::new(&l, vec![c(4, &[0, 2]), c(4, &[1, 2, 3])]).unwrap();
        let z = CrossedElt::from_pairs(&l, [((0, 1), big(3)), ((2, 3), big(-2)), ((0, 2), big(1))]);
        let f = MarkedMorphism::new(&m, &m, vec![vec![z.clone(), z.clone()], vec![z.clone(), CrossedElt::one(&l)]]).unwrap();
        let back = MarkedMorphism::from_json(&l, &f.to_json()).unwrap();
        assert_eq!(back, f);
        // hand-written input: small coefficients as numbers, big ones as strings
        let huge: BigInt = "1000000000000000000000000000000".parse().unwrap();
        let v = serde_json::json!({
            "domain": { "carriers": [[0, 1, 2, 3]] },
            "codomain": { "carriers": [[0, 1, 2, 3]] },
            "entries": [[[{ "word": "a^-1", "coeffs": [[0, 1], [2, "1000000000000000000000000000000"]] }]]],
        });
        let g = MarkedMorphism::from_json(&l, &v).unwrap();
        assert_eq!(g.entry(0, 0).get(2, 3), huge);
        assert_eq!(g.entry(0, 0).get(0, 1), big(1));
        assert_eq!(MarkedMorphism::from_json(&l, &g.to_json()).unwrap(), g);
    }

    #[test]
    fn prime_coefficients_use_trivial_norm() {
        let q = FiniteQuotient::abelian(1, &[3]).unwrap();
        let l = LevelSpace::with_coeffs(q, Coeffs::Prime(5));
        let z = CrossedElt::chi_g(&l, &c(3, &[0, 1]), 0, 7);
        assert_eq!(z.get(0, 0), big(2));
        assert_eq!(z.linf(), big(1));
        assert!(z.scale(&big(5)).is_zero());
    }
}
