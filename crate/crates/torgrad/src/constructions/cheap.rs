//! Cheap complexes: small-dimensional marked complexes that still receive a
//! chain map from the induced standard resolution.
//!
//! Degree 0 comes from a small set A whose F-translates cover the level,
//! higher degrees from the supp₁ extension of a resolution's matrices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use crate::complexes::{check_chain_map, induce_resolution, MarkedComplex};
use crate::constructions::resolutions::{GrMatrix, ResolutionData};
use crate::crossring::{ratio, Augmentation, Carrier, CrossedElt, Level, LevelSpace, MarkedModule, MarkedMorphism, ModuleVector};
use crate::error::{Error, Result};
use crate::groups::{GroupRingElt, Word};

/// D₀ = ⟨A⟩ ⊕ ⟨B⟩ with the witness z = x and η(z) = 1.
#[derive(Clone, Debug)]
pub struct Degree0Cheap {
    pub base: Carrier,
    pub remainder: Carrier,
    /// Disjointified translates A_j ⊆ γ_j A.
    pub pieces: Vec<(usize, Carrier)>,
    pub d0: MarkedModule,
    pub z: ModuleVector,
    pub eta: Augmentation,
    /// 0 ← D₀ ← ⊕_s ⟨G⟩ with ∂₁(e_s) = (1 − s)x.
    pub complex: MarkedComplex,
    pub achieved: BigRational,
}

fn eval_words(level: &Level, f: &[Word]) -> Result<Vec<usize>> {
    let q = level.quotient();
    f.iter()
        .map(|w| match w.max_generator() {
            Some(g) if g >= q.generators() => Err(Error::Generator { index: g, generators: q.generators() }),
            _ => Ok(q.evaluate(w)),
        })
        .collect()
}

/// Uses the given base A; B is whatever F·A misses.
pub fn degree0_cheap_with_base(level: &Level, f: &[Word], base: &Carrier) -> Result<Degree0Cheap> {
    let gammas = eval_words(level, f)?;
    let mut covered = level.empty();
    let mut pieces = Vec::new();
    for &g in &gammas {
        let piece = base.translate(level, g).difference(&covered);
        covered = covered.union(&piece);
        if !piece.is_empty() {
            pieces.push((g, piece));
        }
    }
    let remainder = covered.complement();
    let d0 = MarkedModule::new(level, vec![base.clone(), remainder.clone()])?;
    // (χ_{A_j}, γ_j)·χ_A = (χ_{A_j}, γ_j) because γ_j⁻¹A_j ⊆ A
    let xa = pieces
        .iter()
        .fold(CrossedElt::zero(level), |acc, (g, p)| &acc + &CrossedElt::chi_g(level, p, *g, 1));
    let z = ModuleVector::new(&d0, vec![xa, CrossedElt::chi(level, &remainder)])?;
    let eta = Augmentation::ones(&d0);
    let gens = level.quotient().generators();
    let d1m = MarkedModule::free(level, gens);
    let entries = (0..gens)
        .map(|s| {
            let ms = CrossedElt::from_group_ring(level, &(&GroupRingElt::one() - &GroupRingElt::gen(s)));
            z.comps().iter().map(|c| &ms * c).collect()
        })
        .collect();
    let d1 = MarkedMorphism::new(&d1m, &d0, entries)?;
    let achieved = d0.dim();
    let complex = MarkedComplex::new(vec![d0.clone(), d1m], vec![d1], Some(eta.clone()))?;
    Ok(Degree0Cheap { base: base.clone(), remainder, pieces, d0, z, eta, complex, achieved })
}

/// Greedy small cover: A grows by the point that covers the most new
/// points while μ(A) < ε/2, and succeeds once μ(G ∖ F·A) < ε/2.
pub fn degree0_cheap(level: &Level, f: &[Word], eps: &BigRational) -> Result<Degree0Cheap> {
    let gammas = eval_words(level, f)?;
    let n = level.order();
    let half = eps / BigInt::from(2);
    let mut base = level.empty();
    let mut covered = level.empty();
    loop {
        let uncovered = ratio(n - covered.count(), n);
        if uncovered < half {
            return degree0_cheap_with_base(level, f, &base);
        }
        if ratio(base.count() + 1, n) >= half {
            return Err(Error::CoverFailure(uncovered));
        }
        let gain = |a: usize| {
            gammas.iter().map(|&g| level.mul(g, a)).filter(|&y| !covered.contains(y)).count()
        };
        let best = (0..n).filter(|a| !base.contains(*a)).max_by_key(|&a| (gain(a), std::cmp::Reverse(a)));
        match best {
            Some(a) if gain(a) > 0 => {
                covered = covered.union(&Carrier::from_indices(n, gammas.iter().map(|&g| level.mul(g, a))));
                base.insert(a);
            }
            _ => return Err(Error::CoverFailure(uncovered)),
        }
    }
}

/// max ℓ¹ norm of an entry, computed in the free group ring.
pub fn kappa(lambda: &GrMatrix) -> BigInt {
    lambda
        .iter()
        .flatten()
        .map(|x| x.terms().map(|(_, c)| c.abs()).sum::<BigInt>())
        .max()
        .unwrap_or_default()
}

/// Result of extending target carriers B_j back along Λ.
#[derive(Clone, Debug)]
pub struct Supp1Extension {
    pub sources: Vec<Carrier>,
    pub morphism: MarkedMorphism,
    pub kappa: BigInt,
}

impl Supp1Extension {
    /// μ(Aᵢ) ≤ κ·Σμ(B_j) and ‖f‖ ≤ κ²·#J.
    pub fn bounds_hold(&self) -> bool {
        let level = self.morphism.level();
        let k = BigRational::from(self.kappa.clone());
        let total: BigRational = self.morphism.codomain().dim();
        let measure_ok = self.sources.iter().all(|a| level.measure(a) <= &k * &total);
        let j = BigInt::from(self.morphism.codomain().rank());
        measure_ok && self.morphism.op_norm() <= &self.kappa * &self.kappa * j
    }
}

/// yᵢ = Σⱼ λᵢⱼ χ_{B_j} eⱼ and Aᵢ = supp₁(yᵢ).
pub fn supp1_extend(level: &Level, lambda: &GrMatrix, targets: &[Carrier]) -> Result<Supp1Extension> {
    if lambda.iter().any(|row| row.len() != targets.len()) {
        return Err(Error::Shape("Λ columns do not match the targets".into()));
    }
    let codomain = MarkedModule::new(level, targets.to_vec())?;
    let rows: Vec<Vec<CrossedElt>> = lambda
        .iter()
        .map(|row| {
            row.iter()
                .zip(targets)
                .map(|(l, b)| CrossedElt::from_group_ring(level, l).right_restrict(b))
                .collect()
        })
        .collect();
    let sources: Vec<Carrier> = rows
        .iter()
        .map(|r| r.iter().fold(level.empty(), |acc, y| acc.union(&y.supp1())))
        .collect();
    let domain = MarkedModule::new(level, sources.clone())?;
    let morphism = MarkedMorphism::new(&domain, &codomain, rows)?;
    Ok(Supp1Extension { sources, morphism, kappa: kappa(lambda) })
}

/// Degrees 2..=n are supp₁-extended from D₁, degree n+1 (if the resolution
/// reaches it) keeps full carriers. Returns the modules D₂.. and the
/// boundaries ∂₂.. in order.
pub fn supp1_chain_extend(level: &Level, res: &ResolutionData, d1: &[Carrier], n: usize) -> Result<(Vec<MarkedModule>, Vec<MarkedMorphism>)> {
    let mut modules = Vec::new();
    let mut boundaries = Vec::new();
    let mut prev = d1.to_vec();
    for k in 2..=res.top().min(n + 1) {
        let ext = supp1_extend(level, &res.boundaries[k - 1], &prev)?;
        if k <= n {
            prev = ext.sources.clone();
            modules.push(ext.morphism.domain().clone());
            boundaries.push(ext.morphism);
        } else {
            let full = MarkedModule::free(level, ext.sources.len());
            boundaries.push(MarkedMorphism::new(&full, ext.morphism.codomain(), ext.morphism.entries().to_vec())?);
            modules.push(full);
        }
    }
    Ok((modules, boundaries))
}

/// A tower with base A_j and shape T_j; the translates tA_j over all
/// towers should partition the level.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerData {
    pub base: Carrier,
    pub tile: Vec<usize>,
}

pub fn towers_partition(level: &Level, towers: &[TowerData]) -> bool {
    let mut seen = level.empty();
    for t in towers {
        for &g in &t.tile {
            let p = t.base.translate(level, g);
            if !p.is_disjoint(&seen) {
                return false;
            }
            seen = seen.union(&p);
        }
    }
    seen.count() == level.order()
}

/// Cheap complex D with the chain map f: C → D from the induced
/// resolution C.
#[derive(Clone, Debug)]
pub struct CheapEmbedding {
    pub c: MarkedComplex,
    pub d: MarkedComplex,
    pub f: Vec<MarkedMorphism>,
    pub x: ModuleVector,
}

impl CheapEmbedding {
    /// Chain-map defects; all zero for a genuine embedding.
    pub fn chain_defects(&self) -> Result<Vec<BigRational>> {
        check_chain_map(&self.f, &self.c, &self.d)
    }
}

/// Tower assembly: D₀ = ⟨∪A_j⟩, x = Σ_j Σ_{t∈T_j} (χ_{tA_j}, t),
/// D₁ summands carried by supp₁(∂₁(e_s)·x), then the supp₁ tail.
pub fn tower_assembly(level: &Level, res: &ResolutionData, towers: &[TowerData], n: usize) -> Result<CheapEmbedding> {
    if res.ranks[0] != 1 {
        return Err(Error::Shape("tower assembly needs a rank-one degree 0".into()));
    }
    if !towers_partition(level, towers) {
        return Err(Error::Config("tower translates do not partition the level".into()));
    }
    let c = induce_resolution(&res.truncate(n + 1), level)?;
    let b0 = towers.iter().fold(level.empty(), |acc, t| acc.union(&t.base));
    let d0 = MarkedModule::new(level, vec![b0.clone()])?;
    let mut x = CrossedElt::zero(level);
    for t in towers {
        for &g in &t.tile {
            x = &x + &CrossedElt::chi_g(level, &t.base.translate(level, g), g, 1);
        }
    }
    let xv = ModuleVector::new(&d0, vec![x.clone()])?;
    let mut modules = vec![d0.clone()];
    let mut boundaries = Vec::new();
    let mut f = vec![MarkedMorphism::new(c.module(0), &d0, vec![vec![x.clone()]])?];
    if res.top() >= 1 && n >= 1 {
        let rows: Vec<CrossedElt> = res.boundaries[0]
            .iter()
            .map(|row| &CrossedElt::from_group_ring(level, &row[0]) * &x)
            .collect();
        let b1: Vec<Carrier> = rows.iter().map(|y| y.supp1()).collect();
        let d1 = MarkedModule::new(level, b1.clone())?;
        boundaries.push(MarkedMorphism::new(&d1, &d0, rows.into_iter().map(|y| vec![y]).collect())?);
        modules.push(d1.clone());
        let (tail_m, tail_b) = supp1_chain_extend(level, res, &b1, n)?;
        modules.extend(tail_m);
        boundaries.extend(tail_b);
        for (k, m) in modules.iter().enumerate().skip(1) {
            let mut fk = MarkedMorphism::zero(c.module(k), m);
            for (i, a) in m.carriers().iter().enumerate() {
                fk.set_entry(i, i, CrossedElt::chi(level, a));
            }
            f.push(fk);
        }
    }
    let eta = Augmentation::ones(&d0);
    let d = MarkedComplex::new(modules, boundaries, Some(eta))?;
    Ok(CheapEmbedding { c, d, f, x: xv })
}

/// ℤ acting on ℤ/M by one main tower of height N and a remainder tower.
///
/// M = N is refused: the tower then wraps around the level, t^N = e there,
/// and ∂₁x cancels in the level ring although it does not in Z^G∗ℤ.
pub fn integer_towers(m: usize, n: usize) -> Result<Vec<TowerData>> {
    if n == 0 || m <= n {
        return Err(Error::Config(format!("need M > N ≥ 1, got M = {}, N = {}", m, n)));
    }
    let q = m / n;
    let r = m % n;
    let mut towers = vec![TowerData { base: Carrier::from_indices(m, (0..q).map(|k| k * n)), tile: (0..n).collect() }];
    if r > 0 {
        towers.push(TowerData { base: Carrier::from_indices(m, [q * n]), tile: (0..r).collect() });
    }
    Ok(towers)
}

/// N = ⌈2/ε⌉ so that every dim(D_r) is at most 1/N ≤ ε/2.
pub fn integers_tile_for(eps: &BigRational) -> usize {
    let two = BigRational::from(BigInt::from(2));
    let t = (two / eps).ceil().to_integer();
    t.try_into().unwrap_or(usize::MAX).max(1)
}

/// Cheap embedding for ℤ at level ℤ/(kN) with N from ε.
pub fn integers_cheap(eps: &BigRational, k: usize) -> Result<CheapEmbedding> {
    let n = integers_tile_for(eps);
    let m = k * n;
    let level = LevelSpace::cyclic(m);
    tower_assembly(&level, &ResolutionData::integers(), &integer_towers(m, n)?, 1)
}

/// Every degree has dim < ε and every boundary has norm ≤ K.
pub fn is_cheap(d: &MarkedComplex, eps: &BigRational, k: &BigInt) -> bool {
    d.dims().iter().all(|x| x < eps) && d.boundaries().iter().all(|b| &b.op_norm() <= k)
}
