//! The logarithmic norm of a marked morphism and Gabber-type bounds for
//! the torsion of integer cokernels.
//!
//! At a finite level a marked decomposition of the domain is a partition
//! of its atoms (i, u) into blocks. A block T contributes
//! min{|T|, |cols(T)|}/|G| · log₊ max_{a∈T} ‖f(a)‖, where cols(T) is the
//! set of codomain atoms hit by rows in T.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::crossring::{big_to_f64, log_plus, Carrier, MarkedMorphism};
use crate::error::{Error, Result};

pub const DEFAULT_EXACT_CAP: usize = 12;

/// Atom (summand, point) of the domain.
pub type Atom = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub blocks: Vec<Vec<Atom>>,
}

impl Decomposition {
    pub fn atoms(f: &MarkedMorphism) -> Self {
        Decomposition { blocks: domain_atoms(f).into_iter().map(|a| vec![a]).collect() }
    }

    pub fn single(f: &MarkedMorphism) -> Self {
        Decomposition { blocks: vec![domain_atoms(f)] }
    }

    /// Checks that the blocks partition the atoms of the domain.
    pub fn validate(&self, f: &MarkedMorphism) -> Result<()> {
        let expected: BTreeSet<Atom> = domain_atoms(f).into_iter().collect();
        let mut seen = BTreeSet::new();
        for a in self.blocks.iter().flatten() {
            if !expected.contains(a) || !seen.insert(*a) {
                return Err(Error::Shape(format!("atom {:?} is not covered exactly once", a)));
            }
        }
        if seen.len() != expected.len() {
            return Err(Error::Shape("decomposition misses atoms".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Dim,
    Rank,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCert {
    pub atoms: Vec<Atom>,
    pub dim: String,
    pub rank: String,
    pub norm: String,
    pub branch: Branch,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LognormCert {
    pub strategy: String,
    pub blocks: Vec<BlockCert>,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Atoms,
    Greedy,
    Block,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "atoms" => Ok(Strategy::Atoms),
            "greedy" => Ok(Strategy::Greedy),
            "block" => Ok(Strategy::Block),
            _ => Err(Error::Config(format!("unknown lognorm strategy {:?}", s))),
        }
    }
}

fn domain_atoms(f: &MarkedMorphism) -> Vec<Atom> {
    f.domain().carriers().iter().enumerate().flat_map(|(i, a)| a.iter().map(move |u| (i, u))).collect()
}

/// Per-atom data: log₊ of the norm and the codomain atoms hit.
struct AtomTable {
    order: usize,
    atoms: Vec<Atom>,
    norms: Vec<BigInt>,
    cols: Vec<Carrier>,
}

impl AtomTable {
    fn new(f: &MarkedMorphism) -> Self {
        let order = f.level().order();
        let universe = order * f.codomain().rank().max(1);
        let atoms = domain_atoms(f);
        let norms = atoms.iter().map(|&(i, u)| f.atom_norm(i, u)).collect();
        let cols = atoms
            .iter()
            .map(|&(i, u)| {
                let mut c = Carrier::empty(universe);
                for (j, z) in f.entries()[i].iter().enumerate() {
                    for (&(x, y), _) in z.pairs() {
                        if x == u {
                            c.insert(j * order + y);
                        }
                    }
                }
                c
            })
            .collect();
        AtomTable { order, atoms, norms, cols }
    }

    fn index(&self, a: &Atom) -> usize {
        self.atoms.binary_search(a).expect("atom of the domain")
    }

    fn cost(&self, block: &[usize]) -> (f64, BlockCert) {
        let universe = self.cols.first().map_or(0, |c| c.universe());
        let cols = block.iter().fold(Carrier::empty(universe), |acc, &k| acc.union(&self.cols[k]));
        let norm = block.iter().map(|&k| self.norms[k].clone()).max().unwrap_or_default();
        let (dim, rank) = (block.len(), cols.count());
        let branch = if rank < dim { Branch::Rank } else { Branch::Dim };
        let value = dim.min(rank) as f64 / self.order as f64 * log_plus(big_to_f64(&norm));
        let g = self.order;
        (
            value,
            BlockCert {
                atoms: block.iter().map(|&k| self.atoms[k]).collect(),
                dim: BigRational::new(BigInt::from(dim), BigInt::from(g)).to_string(),
                rank: BigRational::new(BigInt::from(rank), BigInt::from(g)).to_string(),
                norm: norm.to_string(),
                branch,
                value,
            },
        )
    }

    fn evaluate(&self, blocks: &[Vec<usize>], strategy: &str) -> LognormCert {
        let certs: Vec<BlockCert> = blocks.iter().filter(|b| !b.is_empty()).map(|b| self.cost(b).1).collect();
        let value = certs.iter().map(|c| c.value).sum();
        LognormCert { strategy: strategy.to_string(), blocks: certs, value }
    }
}

/// lognorm′(f, D) with its certificate.
pub fn lognorm_of_decomposition(f: &MarkedMorphism, d: &Decomposition) -> Result<(f64, LognormCert)> {
    d.validate(f)?;
    let t = AtomTable::new(f);
    let blocks: Vec<Vec<usize>> = d.blocks.iter().map(|b| b.iter().map(|a| t.index(a)).collect()).collect();
    let cert = t.evaluate(&blocks, "decomposition");
    Ok((cert.value, cert))
}

/// Upper bound for lognorm(f). `atoms` and `block` evaluate a single
/// decomposition; `greedy` tries norm classes and pairwise merges as well
/// and keeps the best.
pub fn lognorm_upper(f: &MarkedMorphism, strategy: Strategy) -> (f64, LognormCert) {
    let t = AtomTable::new(f);
    let n = t.atoms.len();
    let singletons: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
    let whole = vec![(0..n).collect::<Vec<_>>()];
    let cert = match strategy {
        Strategy::Atoms => t.evaluate(&singletons, "atoms"),
        Strategy::Block => t.evaluate(&whole, "block"),
        Strategy::Greedy => {
            let mut classes: Vec<Vec<usize>> = Vec::new();
            let mut keys: Vec<BigInt> = Vec::new();
            for k in 0..n {
                match keys.iter().position(|x| x == &t.norms[k]) {
                    Some(p) => classes[p].push(k),
                    None => {
                        keys.push(t.norms[k].clone());
                        classes.push(vec![k]);
                    }
                }
            }
            let candidates = [
                t.evaluate(&singletons, "greedy"),
                t.evaluate(&whole, "greedy"),
                t.evaluate(&classes, "greedy"),
                t.evaluate(&merge_greedily(&t, singletons.clone()), "greedy"),
                t.evaluate(&merge_greedily(&t, classes), "greedy"),
            ];
            candidates.into_iter().min_by(|a, b| a.value.total_cmp(&b.value)).expect("candidates")
        }
    };
    (cert.value, cert)
}

/// Repeatedly merges the pair of blocks with the largest saving.
fn merge_greedily(t: &AtomTable, mut blocks: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut costs: Vec<f64> = blocks.iter().map(|b| t.cost(b).0).collect();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..blocks.len() {
            for b in a + 1..blocks.len() {
                let merged: Vec<usize> = blocks[a].iter().chain(&blocks[b]).copied().collect();
                let saving = costs[a] + costs[b] - t.cost(&merged).0;
                if saving > 1e-12 && best.map_or(true, |(_, _, s)| saving > s) {
                    best = Some((a, b, saving));
                }
            }
        }
        let Some((a, b, _)) = best else { return blocks };
        let tail = blocks.remove(b);
        costs.remove(b);
        blocks[a].extend(tail);
        costs[a] = t.cost(&blocks[a]).0;
    }
}

/// Minimum over all partitions of the atoms, by dynamic programming over
/// subsets. Fails when the domain has more than `cap` atoms.
pub fn lognorm_exact(f: &MarkedMorphism, cap: usize) -> Result<(f64, LognormCert)> {
    let t = AtomTable::new(f);
    let n = t.atoms.len();
    if n > cap || n >= usize::BITS as usize {
        return Err(Error::CapExceeded { atoms: n, cap });
    }
    let full = (1usize << n) - 1;
    let universe = t.cols.first().map_or(0, |c| c.universe());
    let mut cols = vec![Carrier::empty(universe); full + 1];
    let mut norm = vec![BigInt::zero(); full + 1];
    let mut cost = vec![0f64; full + 1];
    for s in 1..=full {
        let low = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        cols[s] = cols[rest].union(&t.cols[low]);
        norm[s] = norm[rest].clone().max(t.norms[low].clone());
        let dim = s.count_ones() as usize;
        cost[s] = dim.min(cols[s].count()) as f64 / t.order as f64 * log_plus(big_to_f64(&norm[s]));
    }
    drop(cols);
    let mut best = vec![0f64; full + 1];
    let mut choice = vec![0usize; full + 1];
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        // subsets T of s containing the lowest atom
        let mut sub = rest;
        let mut b = f64::INFINITY;
        let mut c = s;
        loop {
            let tset = sub | low;
            let v = cost[tset] + best[s ^ tset];
            if v < b {
                b = v;
                c = tset;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        best[s] = b;
        choice[s] = c;
    }
    let mut blocks = Vec::new();
    let mut s = full;
    while s != 0 {
        let tset = choice[s];
        blocks.push((0..n).filter(|k| tset >> k & 1 == 1).collect::<Vec<_>>());
        s ^= tset;
    }
    let cert = t.evaluate(&blocks, "exact");
    Ok((best[full], cert))
}

/// Both sides of the almost-equality estimate for f against g. M₁ is the
/// smallest part of the domain where f and g differ.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityCheck {
    pub delta: BigRational,
    /// ‖(f − g)|M₁‖.
    pub k_difference: BigInt,
    /// ‖f|M₁‖.
    pub k_restricted: BigInt,
    pub lognorm_f: f64,
    pub lognorm_g: f64,
}

impl StabilityCheck {
    /// lognorm(f) ≤ lognorm(g) + δ·log₊‖f|M₁‖, which follows from
    /// subadditivity and the dimension estimate.
    pub fn restricted_holds(&self, slack: f64) -> bool {
        self.lognorm_f <= self.lognorm_g + crate::crossring::rat_to_f64(&self.delta) * log_plus(big_to_f64(&self.k_restricted)) + slack
    }

    /// The same estimate with ‖(f − g)|M₁‖ in place of ‖f|M₁‖.
    pub fn difference_holds(&self, slack: f64) -> bool {
        self.lognorm_f <= self.lognorm_g + crate::crossring::rat_to_f64(&self.delta) * log_plus(big_to_f64(&self.k_difference)) + slack
    }
}

pub fn stability_check(f: &MarkedMorphism, g: &MarkedMorphism, cap: usize) -> Result<StabilityCheck> {
    let ae = f.almost_eq(g)?;
    let diff = f.try_sub(g)?;
    let mut k_restricted = BigInt::zero();
    for (i, a) in f.domain().carriers().iter().enumerate() {
        for u in a.iter() {
            if !diff.atom_norm(i, u).is_zero() {
                k_restricted = k_restricted.max(f.atom_norm(i, u));
            }
        }
    }
    Ok(StabilityCheck {
        delta: ae.delta_min,
        k_difference: ae.norm_on_difference,
        k_restricted,
        lognorm_f: lognorm_exact(f, cap)?.0,
        lognorm_g: lognorm_exact(g, cap)?.0,
    })
}

/// Σ |a_ij| over a column.
fn col_l1(a: &[Vec<BigInt>], j: usize) -> BigInt {
    a.iter().map(|row| row[j].abs()).sum()
}

fn ncols(a: &[Vec<BigInt>]) -> usize {
    a.first().map_or(0, |r| r.len())
}

/// Incremental row-echelon basis over ℚ for the rank-extension test.
struct Echelon {
    rows: Vec<(usize, Vec<BigRational>)>,
}

impl Echelon {
    fn reduce(&self, v: &[BigInt]) -> Vec<BigRational> {
        let mut w: Vec<BigRational> = v.iter().map(|x| BigRational::from(x.clone())).collect();
        for (p, r) in &self.rows {
            if !w[*p].is_zero() {
                let c = &w[*p] / &r[*p];
                for (wi, ri) in w.iter_mut().zip(r) {
                    *wi -= &c * ri;
                }
            }
        }
        w
    }

    /// Adds v if it is independent of the current span.
    fn extend(&mut self, v: &[BigInt]) -> bool {
        let w = self.reduce(v);
        match w.iter().position(|x| !x.is_zero()) {
            Some(p) => {
                self.rows.push((p, w));
                true
            }
            None => false,
        }
    }
}

/// Σ log₊ ‖a_j‖₁ over a rationally spanning set of columns, chosen in
/// ascending ℓ¹ order. Bounds log #tors of ℤ^m / im(A).
pub fn gabber_column_bound(a: &[Vec<BigInt>]) -> f64 {
    let mut order: Vec<usize> = (0..ncols(a)).collect();
    order.sort_by_key(|&j| (col_l1(a, j), j));
    let mut ech = Echelon { rows: Vec::new() };
    let mut total = 0.0;
    for j in order {
        let col: Vec<BigInt> = a.iter().map(|r| r[j].clone()).collect();
        if ech.extend(&col) {
            total += log_plus(big_to_f64(&col_l1(a, j)));
        }
    }
    total
}

/// Part of a split of the domain basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SplitBlock {
    /// Columns whose images lie in the coordinate summand spanned by `rows`.
    Image { cols: Vec<usize>, rows: Vec<usize> },
    /// Columns charged by their own count.
    Domain { cols: Vec<usize> },
}

/// Σ rk(Nᵢ)·log₊‖f|Mᵢ‖ + Σ rk(M′ᵢ)·log₊‖f|M′ᵢ‖ with ‖·‖ the ℓ¹ operator norm.
pub fn gabber_split_bound(a: &[Vec<BigInt>], blocks: &[SplitBlock]) -> Result<f64> {
    let n = ncols(a);
    let mut seen = vec![false; n];
    let mut total = 0.0;
    for b in blocks {
        let (cols, weight) = match b {
            SplitBlock::Image { cols, rows } => {
                let inside: BTreeSet<usize> = rows.iter().copied().collect();
                for &j in cols {
                    if j < n && a.iter().enumerate().any(|(i, r)| !inside.contains(&i) && !r[j].is_zero()) {
                        return Err(Error::Containment(format!("column {} leaves its image block", j)));
                    }
                }
                (cols, rows.len())
            }
            SplitBlock::Domain { cols } => (cols, cols.len()),
        };
        for &j in cols {
            if j >= n || std::mem::replace(&mut seen[j], true) {
                return Err(Error::Shape(format!("column {} is not split exactly once", j)));
            }
        }
        let norm = cols.iter().map(|&j| col_l1(a, j)).max().unwrap_or_default();
        total += weight as f64 * log_plus(big_to_f64(&norm));
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Shape("split misses columns".into()));
    }
    Ok(total)
}

/// The single block with all rows and columns.
pub fn trivial_split(a: &[Vec<BigInt>]) -> Vec<SplitBlock> {
    vec![SplitBlock::Image { cols: (0..ncols(a)).collect(), rows: (0..a.len()).collect() }]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossring::{CrossedElt, LevelSpace, MarkedModule};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    fn m(v: &[&[i64]]) -> Vec<Vec<BigInt>> {
        v.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn two_on_one_atom() {
        let level = LevelSpace::cyclic(4);
        let g = MarkedModule::free(&level, 1);
        let f = MarkedMorphism::new(&g, &g, vec![vec![CrossedElt::chi_g(&level, &Carrier::from_indices(4, [0]), 0, 2)]]).unwrap();
        let q = 0.25 * 2f64.ln();
        assert!(close(lognorm_of_decomposition(&f, &Decomposition::atoms(&f)).unwrap().0, q));
        assert!(close(lognorm_of_decomposition(&f, &Decomposition::single(&f)).unwrap().0, q));
        assert!(close(lognorm_exact(&f, 12).unwrap().0, q));
    }

    #[test]
    fn boundary_strategies_agree() {
        let level = LevelSpace::cyclic(4);
        let g = MarkedModule::free(&level, 1);
        let d = &CrossedElt::one(&level) - &CrossedElt::group(&level, 1);
        let f = MarkedMorphism::new(&g, &g, vec![vec![d]]).unwrap();
        for s in [Strategy::Atoms, Strategy::Greedy, Strategy::Block] {
            assert!(close(lognorm_upper(&f, s).0, 2f64.ln()));
        }
        assert!(close(lognorm_exact(&f, 12).unwrap().0, 2f64.ln()));
        let id = MarkedMorphism::identity(&g);
        assert_eq!(lognorm_upper(&id, Strategy::Greedy).0, 0.0);
    }

    #[test]
    fn gabber_examples() {
        assert!(close(gabber_column_bound(&m(&[&[2, 0], &[0, 3]])), 6f64.ln()));
        assert!(close(gabber_column_bound(&m(&[&[2, 1], &[0, 2]])), 2f64.ln() + 3f64.ln()));
        assert_eq!(gabber_column_bound(&m(&[&[1, 0], &[0, 1]])), 0.0);
        let d = m(&[&[2, 0], &[0, 3]]);
        let split = [SplitBlock::Image { cols: vec![0], rows: vec![0] }, SplitBlock::Image { cols: vec![1], rows: vec![1] }];
        assert!(close(gabber_split_bound(&d, &split).unwrap(), 6f64.ln()));
        assert!(close(gabber_split_bound(&d, &trivial_split(&d)).unwrap(), 2.0 * 3f64.ln()));
        let bad = [SplitBlock::Image { cols: vec![0, 1], rows: vec![0] }];
        assert!(matches!(gabber_split_bound(&d, &bad), Err(Error::Containment(_))));
    }

    #[test]
    fn stability_needs_the_norm_of_f() {
        // g sends every atom to column 0 with weight 100; f adds a unit on
        // atom 1. They differ on one atom by norm 1, yet f has twice the rank.
        let level = LevelSpace::cyclic(4);
        let g0 = MarkedModule::free(&level, 1);
        let mut g = CrossedElt::zero(&level);
        for x in 0..4 {
            g.add_at(x, 0, BigInt::from(100));
        }
        let mut f = g.clone();
        f.add_at(1, 1, BigInt::from(1));
        let gm = MarkedMorphism::new(&g0, &g0, vec![vec![g]]).unwrap();
        let fm = MarkedMorphism::new(&g0, &g0, vec![vec![f]]).unwrap();
        let c = stability_check(&fm, &gm, 12).unwrap();
        assert_eq!(c.k_difference, BigInt::from(1));
        assert_eq!(c.k_restricted, BigInt::from(101));
        assert!(c.restricted_holds(1e-9));
        assert!(!c.difference_holds(1e-9));
    }

    #[test]
    fn cap_is_enforced() {
        let level = LevelSpace::cyclic(13);
        let f = MarkedMorphism::identity(&MarkedModule::free(&level, 1));
        assert!(matches!(lognorm_exact(&f, 12), Err(Error::CapExceeded { atoms: 13, cap: 12 })));
    }
}

