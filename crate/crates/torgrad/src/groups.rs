//! Words over a free alphabet, integral group rings, finite presentations
//! and the finite quotients every level computation factors through.
//!
//! Group elements are never compared as words. Equality is decided only
//! after evaluation in a [`FiniteQuotient`].

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ORDER_CAP: usize = 10_000;
pub const ORDER_CAP_ENV: &str = "TORGRAD_ORDER_CAP";

/// Order cap from the environment, falling back to [`DEFAULT_ORDER_CAP`].
pub fn order_cap() -> usize {
    std::env::var(ORDER_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_ORDER_CAP)
}

/// Coefficient ring: the integers with the usual absolute value, or a
/// prime field with the trivial norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Coeffs {
    #[default]
    Integers,
    Prime(u64),
}

impl Coeffs {
    pub fn normalize(&self, c: BigInt) -> BigInt {
        match self {
            Coeffs::Integers => c,
            Coeffs::Prime(p) => c.mod_floor(&BigInt::from(*p)),
        }
    }

    pub fn norm(&self, c: &BigInt) -> BigInt {
        match self {
            Coeffs::Integers => c.abs(),
            Coeffs::Prime(_) if c.is_zero() => BigInt::zero(),
            Coeffs::Prime(_) => BigInt::one(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub gen: usize,
    pub inv: bool,
}

impl Letter {
    pub fn new(gen: usize, inv: bool) -> Self {
        Letter { gen, inv }
    }

    pub fn inverse(self) -> Self {
        Letter { gen: self.gen, inv: !self.inv }
    }

    pub fn sign(self) -> i8 {
        if self.inv {
            -1
        } else {
            1
        }
    }
}

/// A freely reduced word.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(Vec<Letter>);

/// Free reduction of a raw letter sequence.
pub fn reduce_word(raw: &[Letter]) -> Word {
    let mut out: Vec<Letter> = Vec::with_capacity(raw.len());
    for &l in raw {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    Word(out)
}

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn gen(g: usize) -> Self {
        Word(vec![Letter::new(g, false)])
    }

    pub fn gen_inv(g: usize) -> Self {
        Word(vec![Letter::new(g, true)])
    }

    /// Word from (generator, ±1) pairs; reduces.
    pub fn from_signed(letters: &[(usize, i8)]) -> Self {
        let raw: Vec<Letter> = letters.iter().map(|&(g, s)| Letter::new(g, s < 0)).collect();
        reduce_word(&raw)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut raw = self.0.clone();
        raw.extend_from_slice(&other.0);
        reduce_word(&raw)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut raw = Vec::new();
        for _ in 0..k.unsigned_abs() {
            raw.extend_from_slice(&base.0);
        }
        reduce_word(&raw)
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.0.iter().map(|l| l.gen).max()
    }

    /// Parses `a`, `ab-1`, `a b a^-1 b^-1`; the empty string, `1` and `e`
    /// denote the identity.
    pub fn parse(s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == "1" || s == "e" {
            return Ok(Word::empty());
        }
        let compact: Vec<u8> = s.bytes().filter(|c| !c.is_ascii_whitespace()).collect();
        let err = || Error::Parse(s.to_string());
        let mut raw = Vec::new();
        let mut i = 0;
        while i < compact.len() {
            let c = compact[i];
            if !c.is_ascii_lowercase() {
                return Err(err());
            }
            i += 1;
            let rest = &compact[i..];
            let inv = if rest.starts_with(b"^-1") {
                i += 3;
                true
            } else if rest.starts_with(b"-1") {
                i += 2;
                true
            } else if rest.first().is_some_and(|&b| b == b'^' || b == b'-') {
                return Err(err());
            } else {
                false
            };
            raw.push(Letter::new((c - b'a') as usize, inv));
        }
        Ok(reduce_word(&raw))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            let c = if l.gen < 26 { (b'a' + l.gen as u8) as char } else { '?' };
            write!(f, "{}", c)?;
            if l.inv {
                write!(f, "-1")?;
            }
        }
        Ok(())
    }
}

/// Finitely supported element of the group ring, keyed by reduced words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupRingElt {
    terms: BTreeMap<Word, BigInt>,
    coeffs: Coeffs,
}

impl Default for GroupRingElt {
    fn default() -> Self {
        GroupRingElt::zero()
    }
}

impl GroupRingElt {
    pub fn zero() -> Self {
        GroupRingElt { terms: BTreeMap::new(), coeffs: Coeffs::Integers }
    }

    pub fn zero_over(coeffs: Coeffs) -> Self {
        GroupRingElt { terms: BTreeMap::new(), coeffs }
    }

    pub fn one() -> Self {
        GroupRingElt::word(Word::empty())
    }

    pub fn word(w: Word) -> Self {
        GroupRingElt::term(w, BigInt::one())
    }

    pub fn gen(g: usize) -> Self {
        GroupRingElt::word(Word::gen(g))
    }

    pub fn term(w: Word, c: BigInt) -> Self {
        let mut out = GroupRingElt::zero();
        out.add_term(w, c);
        out
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, BigInt)>>(coeffs: Coeffs, it: I) -> Self {
        let mut out = GroupRingElt::zero_over(coeffs);
        for (w, c) in it {
            out.add_term(w, c);
        }
        out
    }

    /// Same element with coefficients read in another ring.
    pub fn over(&self, coeffs: Coeffs) -> Self {
        GroupRingElt::from_terms(coeffs, self.terms.clone())
    }

    pub fn coeffs(&self) -> Coeffs {
        self.coeffs
    }

    pub fn add_term(&mut self, w: Word, c: BigInt) {
        let entry = self.terms.entry(w.clone()).or_insert_with(BigInt::zero);
        let v = self.coeffs.normalize(&*entry + c);
        if v.is_zero() {
            self.terms.remove(&w);
        } else {
            *entry = v;
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &BigInt)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &Word) -> BigInt {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        GroupRingElt::from_terms(self.coeffs, self.terms.iter().map(|(w, a)| (w.clone(), a * c)))
    }

    /// ℓ¹ norm over stored words; an upper bound for the norm in Γ.
    pub fn l1(&self) -> BigInt {
        self.terms.values().map(|c| self.coeffs.norm(c)).sum()
    }

    pub fn support_size(&self) -> usize {
        self.terms.len()
    }

    pub fn ring_mul(&self, other: &GroupRingElt) -> GroupRingElt {
        let mut out = GroupRingElt::zero_over(self.coeffs);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                out.add_term(u.concat(v), a * b);
            }
        }
        out
    }

    /// Augmentation Σ a_w.
    pub fn augmentation(&self) -> BigInt {
        self.coeffs.normalize(self.terms.values().sum())
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.terms.keys().filter_map(|w| w.max_generator()).max()
    }
}

impl Add for &GroupRingElt {
    type Output = GroupRingElt;
    fn add(self, rhs: &GroupRingElt) -> GroupRingElt {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }
}

impl Sub for &GroupRingElt {
    type Output = GroupRingElt;
    fn sub(self, rhs: &GroupRingElt) -> GroupRingElt {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.add_term(w.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &GroupRingElt {
    type Output = GroupRingElt;
    fn neg(self) -> GroupRingElt {
        self.scale(&BigInt::from(-1))
    }
}

impl Mul for &GroupRingElt {
    type Output = GroupRingElt;
    fn mul(self, rhs: &GroupRingElt) -> GroupRingElt {
        self.ring_mul(rhs)
    }
}

impl fmt::Display for GroupRingElt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            if mag.is_one() {
                write!(f, "{}", w)?;
            } else if w.is_empty() {
                write!(f, "{}", mag)?;
            } else {
                write!(f, "{}·{}", mag, w)?;
            }
        }
        Ok(())
    }
}

/// Fox derivative ∂w/∂g, by the product rule along the letters of `w`.
pub fn fox_derivative(w: &Word, g: usize) -> GroupRingElt {
    let mut out = GroupRingElt::zero();
    let mut prefix: Vec<Letter> = Vec::new();
    for &l in w.letters() {
        if l.gen == g {
            if l.inv {
                let mut p = prefix.clone();
                p.push(l);
                out.add_term(reduce_word(&p), BigInt::from(-1));
            } else {
                out.add_term(reduce_word(&prefix), BigInt::one());
            }
        }
        prefix.push(l);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinitePresentation {
    pub generators: usize,
    pub relators: Vec<Word>,
}

#[derive(Serialize, Deserialize)]
struct PresentationJson {
    generators: usize,
    #[serde(default)]
    relators: Vec<String>,
}

impl FinitePresentation {
    pub fn new(generators: usize, relators: Vec<Word>) -> Result<Self> {
        for r in &relators {
            if let Some(m) = r.max_generator() {
                if m >= generators {
                    return Err(Error::Generator { index: m, generators });
                }
            }
        }
        Ok(FinitePresentation { generators, relators: relators.into_iter().filter(|r| !r.is_empty()).collect() })
    }

    pub fn free(d: usize) -> Self {
        FinitePresentation { generators: d, relators: Vec::new() }
    }

    pub fn integers() -> Self {
        FinitePresentation::free(1)
    }

    /// ⟨a₁,b₁,…,a_g,b_g | Π [aᵢ,bᵢ]⟩ with aᵢ = 2i, bᵢ = 2i+1.
    pub fn surface(genus: usize) -> Self {
        let mut rel = Vec::new();
        for i in 0..genus {
            let (a, b) = (2 * i, 2 * i + 1);
            rel.extend_from_slice(&[(a, 1), (b, 1), (a, -1), (b, -1)]);
        }
        FinitePresentation { generators: 2 * genus, relators: vec![Word::from_signed(&rel)] }
    }

    /// Free abelian group of rank d: all commutators.
    pub fn free_abelian(d: usize) -> Self {
        let mut relators = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                relators.push(Word::from_signed(&[(i, 1), (j, 1), (i, -1), (j, -1)]));
            }
        }
        FinitePresentation { generators: d, relators }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: PresentationJson = serde_json::from_str(s)?;
        let relators = raw.relators.iter().map(|r| Word::parse(r)).collect::<Result<Vec<_>>>()?;
        FinitePresentation::new(raw.generators, relators)
    }

    pub fn to_json(&self) -> String {
        let raw = PresentationJson {
            generators: self.generators,
            relators: self.relators.iter().map(|r| r.to_string()).collect(),
        };
        serde_json::to_string(&raw).expect("presentation serializes")
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Abelian { moduli: Vec<usize> },
    Perm { degree: usize, perms: Vec<Vec<u32>>, index: HashMap<Vec<u32>, usize> },
}

/// A finite group G together with images of the free generators.
///
/// Element 0 is the identity. Permutations act on the left and compose as
/// "apply the right factor first".
#[derive(Clone, Debug)]
pub struct FiniteQuotient {
    generators: usize,
    order: usize,
    images: Vec<usize>,
    inverse: Vec<usize>,
    repr: Repr,
    table: Option<Vec<u32>>,
}

const TABLE_LIMIT: usize = 1024;

impl PartialEq for FiniteQuotient {
    fn eq(&self, other: &Self) -> bool {
        if self.order != other.order || self.images != other.images || self.generators != other.generators {
            return false;
        }
        match (&self.repr, &other.repr) {
            (Repr::Abelian { moduli: a }, Repr::Abelian { moduli: b }) => a == b,
            (Repr::Perm { perms: a, .. }, Repr::Perm { perms: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl Eq for FiniteQuotient {}

fn compose(a: &[u32], b: &[u32]) -> Vec<u32> {
    b.iter().map(|&k| a[k as usize]).collect()
}

fn invert_perm(a: &[u32]) -> Vec<u32> {
    let mut out = vec![0u32; a.len()];
    for (i, &k) in a.iter().enumerate() {
        out[k as usize] = i as u32;
    }
    out
}

fn check_perm(p: &[usize], degree: usize) -> Result<Vec<u32>> {
    if p.len() != degree {
        return Err(Error::Config(format!("permutation of length {} but degree {}", p.len(), degree)));
    }
    let mut seen = vec![false; degree];
    for &k in p {
        if k >= degree || seen[k] {
            return Err(Error::Config(format!("{:?} is not a permutation", p)));
        }
        seen[k] = true;
    }
    Ok(p.iter().map(|&k| k as u32).collect())
}

impl FiniteQuotient {
    /// F_d → ⊕ ℤ/mₖ sending generator k to the k-th unit vector.
    pub fn abelian(d: usize, moduli: &[usize]) -> Result<Self> {
        let images: Vec<Vec<i64>> = (0..d)
            .map(|k| (0..moduli.len()).map(|l| i64::from(k == l)).collect())
            .collect();
        FiniteQuotient::abelian_with_images(moduli, &images)
    }

    /// Abelian quotient with explicit generator images in ⊕ ℤ/mₖ; the images
    /// must generate the whole product.
    pub fn abelian_with_images(moduli: &[usize], images: &[Vec<i64>]) -> Result<Self> {
        if moduli.iter().any(|&m| m < 2) {
            return Err(Error::Config("abelian moduli must be at least 2".into()));
        }
        let cap = order_cap();
        let mut order: usize = 1;
        for &m in moduli {
            order = order.checked_mul(m).filter(|&o| o <= cap).ok_or(Error::OrderCap { cap })?;
        }
        let encode = |v: &[i64]| -> usize {
            let mut idx = 0usize;
            let mut stride = 1usize;
            for (k, &m) in moduli.iter().enumerate() {
                let c = v.get(k).copied().unwrap_or(0).rem_euclid(m as i64) as usize;
                idx += c * stride;
                stride *= m;
            }
            idx
        };
        let gen_images: Vec<usize> = images.iter().map(|v| encode(v)).collect();
        let mut q = FiniteQuotient {
            generators: images.len(),
            order,
            images: gen_images,
            inverse: Vec::new(),
            repr: Repr::Abelian { moduli: moduli.to_vec() },
            table: None,
        };
        q.inverse = (0..order).map(|x| q.raw_inv(x)).collect();
        if q.closure_size() != order {
            return Err(Error::Config("generator images do not generate the abelian group".into()));
        }
        q.build_table();
        Ok(q)
    }

    /// Subgroup of Sym(degree) generated by the images; relators checked.
    pub fn permutation(pres: &FinitePresentation, degree: usize, images: &[Vec<usize>]) -> Result<Self> {
        if images.len() != pres.generators {
            return Err(Error::Config(format!(
                "{} images for {} generators",
                images.len(),
                pres.generators
            )));
        }
        let gens: Vec<Vec<u32>> = images.iter().map(|p| check_perm(p, degree)).collect::<Result<_>>()?;
        let cap = order_cap();
        let id: Vec<u32> = (0..degree as u32).collect();
        let mut perms = vec![id.clone()];
        let mut index = HashMap::new();
        index.insert(id, 0usize);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in &gens {
                let p = compose(g, &perms[i]);
                if !index.contains_key(&p) {
                    if perms.len() >= cap {
                        return Err(Error::OrderCap { cap });
                    }
                    index.insert(p.clone(), perms.len());
                    queue.push_back(perms.len());
                    perms.push(p);
                }
            }
        }
        let gen_images = gens.iter().map(|g| index[g]).collect();
        let order = perms.len();
        let inverse = perms.iter().map(|p| index[&invert_perm(p)]).collect();
        let mut q = FiniteQuotient {
            generators: pres.generators,
            order,
            images: gen_images,
            inverse,
            repr: Repr::Perm { degree, perms, index },
            table: None,
        };
        q.build_table();
        q.check_relators(pres)?;
        Ok(q)
    }

    /// The trivial quotient of a group with `generators` generators.
    pub fn trivial(generators: usize) -> Self {
        FiniteQuotient {
            generators,
            order: 1,
            images: vec![0; generators],
            inverse: vec![0],
            repr: Repr::Abelian { moduli: Vec::new() },
            table: Some(vec![0]),
        }
    }

    /// Cyclic quotient ℤ/m of a group whose generators map to the given
    /// residues.
    pub fn cyclic(m: usize, images: &[i64]) -> Result<Self> {
        let imgs: Vec<Vec<i64>> = images.iter().map(|&c| vec![c]).collect();
        FiniteQuotient::abelian_with_images(&[m], &imgs)
    }

    /// Fails with a relator-violation error naming the first bad relator.
    pub fn check_relators(&self, pres: &FinitePresentation) -> Result<()> {
        for r in &pres.relators {
            if self.evaluate(r) != 0 {
                return Err(Error::RelatorViolation { relator: r.to_string() });
            }
        }
        Ok(())
    }

    fn build_table(&mut self) {
        if self.order <= TABLE_LIMIT {
            let n = self.order;
            let mut t = vec![0u32; n * n];
            for a in 0..n {
                for b in 0..n {
                    t[a * n + b] = self.raw_mul(a, b) as u32;
                }
            }
            self.table = Some(t);
        }
    }

    fn raw_mul(&self, a: usize, b: usize) -> usize {
        match &self.repr {
            Repr::Abelian { moduli } => {
                let (mut x, mut y, mut idx, mut stride) = (a, b, 0, 1);
                for &m in moduli {
                    idx += ((x % m + y % m) % m) * stride;
                    x /= m;
                    y /= m;
                    stride *= m;
                }
                idx
            }
            Repr::Perm { perms, index, .. } => index[&compose(&perms[a], &perms[b])],
        }
    }

    fn raw_inv(&self, a: usize) -> usize {
        match &self.repr {
            Repr::Abelian { moduli } => {
                let (mut x, mut idx, mut stride) = (a, 0, 1);
                for &m in moduli {
                    idx += ((m - x % m) % m) * stride;
                    x /= m;
                    stride *= m;
                }
                idx
            }
            Repr::Perm { perms, index, .. } => index[&invert_perm(&perms[a])],
        }
    }

    fn closure_size(&self) -> usize {
        let mut seen = vec![false; self.order];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &g in &self.images {
                let y = self.raw_mul(g, x);
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        match &self.table {
            Some(t) => t[a * self.order + b] as usize,
            None => self.raw_mul(a, b),
        }
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// Image of a word under the quotient map.
    pub fn evaluate(&self, w: &Word) -> usize {
        w.letters().iter().fold(0, |acc, l| {
            let g = self.images[l.gen];
            self.mul(acc, if l.inv { self.inverse[g] } else { g })
        })
    }

    /// Moduli for abelian quotients.
    pub fn moduli(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::Abelian { moduli } => Some(moduli),
            Repr::Perm { .. } => None,
        }
    }

    /// One-line notation of element `a` for permutation quotients.
    pub fn permutation_of(&self, a: usize) -> Option<Vec<usize>> {
        match &self.repr {
            Repr::Perm { perms, .. } => Some(perms[a].iter().map(|&k| k as usize).collect()),
            Repr::Abelian { .. } => None,
        }
    }

    pub fn degree(&self) -> Option<usize> {
        match &self.repr {
            Repr::Perm { degree, .. } => Some(*degree),
            Repr::Abelian { .. } => None,
        }
    }

    /// Shortest words for every element, by breadth-first search.
    pub fn representative_words(&self) -> Vec<Word> {
        let mut words: Vec<Option<Word>> = vec![None; self.order];
        words[0] = Some(Word::empty());
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            let wx = words[x].clone().expect("visited");
            for (k, &g) in self.images.iter().enumerate() {
                for (h, inv) in [(g, false), (self.inverse[g], true)] {
                    let y = self.mul(x, h);
                    if words[y].is_none() {
                        let letter = if inv { Word::gen_inv(k) } else { Word::gen(k) };
                        words[y] = Some(wx.concat(&letter));
                        queue.push_back(y);
                    }
                }
            }
        }
        words.into_iter().map(|w| w.expect("images generate G")).collect()
    }
}

/// Quotients with strictly increasing orders, optionally with connecting
/// surjections `maps[k]` from level k+1 to level k.
#[derive(Clone, Debug)]
pub struct QuotientChain {
    quotients: Vec<FiniteQuotient>,
    maps: Option<Vec<Vec<usize>>>,
}

impl QuotientChain {
    pub fn new(quotients: Vec<FiniteQuotient>, maps: Option<Vec<Vec<usize>>>) -> Result<Self> {
        for w in quotients.windows(2) {
            if w[0].order() >= w[1].order() {
                return Err(Error::Config("quotient orders must increase strictly".into()));
            }
            if w[0].generators() != w[1].generators() {
                return Err(Error::Config("quotients use different alphabets".into()));
            }
        }
        if let Some(maps) = &maps {
            if maps.len() + 1 != quotients.len() {
                return Err(Error::Config("one connecting map per consecutive pair".into()));
            }
            for (k, m) in maps.iter().enumerate() {
                let (lo, hi) = (&quotients[k], &quotients[k + 1]);
                if m.len() != hi.order() || m.iter().any(|&x| x >= lo.order()) {
                    return Err(Error::Config(format!("connecting map {} has the wrong shape", k)));
                }
                for (a, b) in hi.images().iter().zip(lo.images()) {
                    if m[*a] != *b {
                        return Err(Error::Config(format!("connecting map {} does not commute with generators", k)));
                    }
                }
            }
        }
        Ok(QuotientChain { quotients, maps })
    }

    pub fn quotients(&self) -> &[FiniteQuotient] {
        &self.quotients
    }

    pub fn maps(&self) -> Option<&[Vec<usize>]> {
        self.maps.as_deref()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QuotientSpec {
    Abelian {
        moduli: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        images: Option<Vec<Vec<i64>>>,
    },
    Permutation {
        degree: usize,
        images: Vec<Vec<usize>>,
    },
}

impl QuotientSpec {
    /// Builds the quotient of `pres` and checks every relator. Permutation
    /// images may be written 0-based or 1-based.
    pub fn build(&self, pres: &FinitePresentation) -> Result<FiniteQuotient> {
        match self {
            QuotientSpec::Abelian { moduli, images } => {
                let imgs = match images {
                    Some(v) => v.clone(),
                    None => (0..pres.generators)
                        .map(|k| (0..moduli.len()).map(|l| i64::from(k == l)).collect())
                        .collect(),
                };
                if imgs.len() != pres.generators {
                    return Err(Error::Config(format!("{} images for {} generators", imgs.len(), pres.generators)));
                }
                let q = FiniteQuotient::abelian_with_images(moduli, &imgs)?;
                q.check_relators(pres)?;
                Ok(q)
            }
            QuotientSpec::Permutation { degree, images } => {
                let one_based = images.iter().flatten().all(|&k| k >= 1) && !images.is_empty();
                let fixed: Vec<Vec<usize>> = if one_based {
                    images.iter().map(|p| p.iter().map(|k| k - 1).collect()).collect()
                } else {
                    images.clone()
                };
                FiniteQuotient::permutation(pres, *degree, &fixed)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(w("abb-1a"), w("aa"));
        assert!(w("a-1a").is_empty());
        assert_eq!(w("aba-1").len(), 3);
        assert_eq!(w("aba-1b-1").to_string(), "aba-1b-1");
        assert_eq!(w("a b a^-1 b^-1"), w("aba-1b-1"));
        for bad in ["a^2", "a-", "ab-2", "A"] {
            assert!(Word::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn telescoping_products() {
        let one = GroupRingElt::one();
        let a = GroupRingElt::gen(0);
        let lhs = &(&one - &a) * &(&one + &a);
        assert_eq!(lhs, &one - &GroupRingElt::word(w("aa")));
        assert!((&(&one - &a) * &GroupRingElt::zero()).is_zero());
        let geo = &(&one + &a) + &GroupRingElt::word(w("aa"));
        assert_eq!(&(&one - &a) * &geo, &one - &GroupRingElt::word(w("aaa")));
    }

    #[test]
    fn s3_evaluation() {
        let pres = FinitePresentation::free(2);
        // (1 2) and (1 2 3) on {0,1,2}
        let q = FiniteQuotient::permutation(&pres, 3, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap();
        assert_eq!(q.order(), 6);
        let g = q.evaluate(&w("aba-1"));
        // (1 3 2): 1↦3, 3↦2, 2↦1, i.e. 0↦2, 2↦1, 1↦0
        assert_eq!(q.permutation_of(g).unwrap(), vec![2, 0, 1]);
        assert_eq!(q.evaluate(&Word::empty()), 0);
    }

    #[test]
    fn abelian_orders() {
        assert_eq!(FiniteQuotient::abelian(2, &[2, 2]).unwrap().order(), 4);
        assert_eq!(FiniteQuotient::abelian(1, &[8]).unwrap().order(), 8);
        assert_eq!(FiniteQuotient::abelian(2, &[3, 3]).unwrap().order(), 9);
        let q = FiniteQuotient::abelian(2, &[2, 2]).unwrap();
        assert_eq!(q.evaluate(&w("abab")), 0);
    }

    #[test]
    fn fox_examples() {
        assert_eq!(fox_derivative(&w("a"), 0), GroupRingElt::one());
        assert!(fox_derivative(&w("b"), 0).is_zero());
        let d = fox_derivative(&w("aba-1b-1"), 0);
        assert_eq!(d, &GroupRingElt::one() - &GroupRingElt::word(w("aba-1")));
    }

    #[test]
    fn relator_violation_is_named() {
        let pres = FinitePresentation::surface(2);
        let t = vec![1, 0, 2];
        let c = vec![1, 2, 0];
        let id = vec![0, 1, 2];
        let err = FiniteQuotient::permutation(&pres, 3, &[t, c, id.clone(), id]).unwrap_err();
        assert!(matches!(err, Error::RelatorViolation { .. }));
        let triv = FiniteQuotient::permutation(&FinitePresentation::free(2), 2, &[vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(triv.order(), 1);
    }

    #[test]
    fn order_cap_enforced() {
        assert!(matches!(FiniteQuotient::abelian(2, &[200, 200]), Err(Error::OrderCap { .. })));
    }

    #[test]
    fn presentation_json_roundtrip() {
        let p = FinitePresentation::from_json(r#"{"generators": 2, "relators": ["aba-1b-1"]}"#).unwrap();
        assert_eq!(p, FinitePresentation::free_abelian(2));
        assert_eq!(FinitePresentation::from_json(&p.to_json()).unwrap(), p);
    }
}
