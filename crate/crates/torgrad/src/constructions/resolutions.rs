//! Free ZΓ-resolutions of ℤ as group-ring matrices.
//!
//! Row convention: ∂_r(eᵢ) = Σⱼ λᵢⱼ eⱼ, so `boundaries[r-1]` has one row per
//! degree-r generator and ∂∂ = 0 reads Λ_{r+1}·Λ_r = 0.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::groups::{fox_derivative, FinitePresentation, FiniteQuotient, GroupRingElt, Word};

pub type GrMatrix = Vec<Vec<GroupRingElt>>;

#[derive(Clone, Debug, PartialEq)]
pub struct ResolutionData {
    pub generators: usize,
    pub ranks: Vec<usize>,
    pub boundaries: Vec<GrMatrix>,
    /// ε(eᵢ) for the degree-0 generators.
    pub augmentation: Vec<BigInt>,
}

fn one_minus(w: Word) -> GroupRingElt {
    &GroupRingElt::one() - &GroupRingElt::word(w)
}

impl ResolutionData {
    pub fn new(generators: usize, ranks: Vec<usize>, boundaries: Vec<GrMatrix>, augmentation: Vec<BigInt>) -> Result<Self> {
        if ranks.is_empty() || boundaries.len() + 1 != ranks.len() {
            return Err(Error::Shape("one boundary per positive degree".into()));
        }
        for (r, m) in boundaries.iter().enumerate() {
            if m.len() != ranks[r + 1] || m.iter().any(|row| row.len() != ranks[r]) {
                return Err(Error::Shape(format!("boundary ∂_{} has the wrong shape", r + 1)));
            }
        }
        if augmentation.len() != ranks[0] {
            return Err(Error::Shape("augmentation length".into()));
        }
        Ok(ResolutionData { generators, ranks, boundaries, augmentation })
    }

    /// 0 → ZF_d^d → ZF_d → ℤ with ∂₁(e_s) = 1 − s.
    pub fn free(d: usize) -> Self {
        let col: GrMatrix = (0..d).map(|s| vec![one_minus(Word::gen(s))]).collect();
        ResolutionData { generators: d, ranks: vec![1, d], boundaries: vec![col], augmentation: vec![BigInt::from(1)] }
    }

    pub fn integers() -> Self {
        ResolutionData::free(1)
    }

    /// Length-two resolution of a one-relator group via Fox derivatives.
    pub fn one_relator(generators: usize, relator: &Word) -> Self {
        let mut r = ResolutionData::free(generators);
        let row: Vec<GroupRingElt> = (0..generators).map(|g| fox_derivative(relator, g)).collect();
        r.ranks.push(1);
        r.boundaries.push(vec![row]);
        r
    }

    /// Closed orientable surface of genus g.
    pub fn surface(genus: usize) -> Self {
        let pres = FinitePresentation::surface(genus);
        ResolutionData::one_relator(pres.generators, &pres.relators[0])
    }

    /// Koszul resolution of ℤᵈ, the tensor power of ℤ-resolutions in the
    /// generators 0..d.
    pub fn free_abelian(d: usize) -> Self {
        let mut acc = ResolutionData::trivial(d);
        for k in 0..d {
            let mut zk = ResolutionData::trivial(d);
            zk.ranks.push(1);
            zk.boundaries.push(vec![vec![one_minus(Word::gen(k))]]);
            acc = acc.tensor(&zk);
        }
        acc
    }

    /// ℤ concentrated in degree 0.
    pub fn trivial(generators: usize) -> Self {
        ResolutionData { generators, ranks: vec![1], boundaries: Vec::new(), augmentation: vec![BigInt::from(1)] }
    }

    pub fn top(&self) -> usize {
        self.ranks.len() - 1
    }

    /// Same resolution truncated to degrees ≤ top.
    pub fn truncate(&self, top: usize) -> Self {
        let top = top.min(self.top());
        ResolutionData {
            generators: self.generators,
            ranks: self.ranks[..=top].to_vec(),
            boundaries: self.boundaries[..top].to_vec(),
            augmentation: self.augmentation.clone(),
        }
    }

    /// Tensor product over ℤ with the diagonal action; the sign rule is
    /// ∂(x⊗y) = ∂x⊗y + (−1)^p x⊗∂y. Summands of degree r are the pairs
    /// (p, q) with p+q = r in increasing p, generators row-major.
    pub fn tensor(&self, other: &ResolutionData) -> Self {
        let top = self.top() + other.top();
        let index = tensor_index(&self.ranks, &other.ranks, top);
        let ranks: Vec<usize> = index.iter().map(|v| v.len()).collect();
        let mut boundaries = Vec::new();
        for r in 1..=top {
            let mut m: GrMatrix = vec![vec![GroupRingElt::zero(); ranks[r - 1]]; ranks[r]];
            let pos = |p: usize, q: usize, i: usize, j: usize| {
                index[r - 1].iter().position(|&k| k == (p, q, i, j)).expect("tensor index")
            };
            for (row, &(p, q, i, j)) in index[r].iter().enumerate() {
                if p > 0 {
                    for (k, lam) in self.boundaries[p - 1][i].iter().enumerate() {
                        if !lam.is_zero() {
                            let c = pos(p - 1, q, k, j);
                            m[row][c] = &m[row][c] + lam;
                        }
                    }
                }
                if q > 0 {
                    for (k, lam) in other.boundaries[q - 1][j].iter().enumerate() {
                        if !lam.is_zero() {
                            let c = pos(p, q - 1, i, k);
                            let signed = if p % 2 == 0 { lam.clone() } else { -lam };
                            m[row][c] = &m[row][c] + &signed;
                        }
                    }
                }
            }
            boundaries.push(m);
        }
        let augmentation = self
            .augmentation
            .iter()
            .flat_map(|a| other.augmentation.iter().map(move |b| a * b))
            .collect();
        ResolutionData {
            generators: self.generators.max(other.generators),
            ranks,
            boundaries,
            augmentation,
        }
    }

    /// Λ_{r+1}·Λ_r, evaluated in ZF.
    pub fn square(&self, r: usize) -> GrMatrix {
        let upper = &self.boundaries[r];
        let lower = &self.boundaries[r - 1];
        upper
            .iter()
            .map(|row| {
                (0..self.ranks[r - 1])
                    .map(|k| {
                        row.iter().enumerate().fold(GroupRingElt::zero(), |acc, (j, a)| &acc + &(a * &lower[j][k]))
                    })
                    .collect()
            })
            .collect()
    }

    /// Checks ∂∂ = 0 and ε∂₁ = 0 after mapping to the quotient.
    pub fn check_at(&self, q: &FiniteQuotient) -> Result<()> {
        let vanishes = |x: &GroupRingElt| {
            let mut acc = vec![BigInt::zero(); q.order()];
            for (w, c) in x.terms() {
                acc[q.evaluate(w)] += c;
            }
            acc.iter().all(|c| c.is_zero())
        };
        for r in 1..self.boundaries.len() {
            for row in self.square(r) {
                if !row.iter().all(vanishes) {
                    return Err(Error::NotComplex(format!("∂_{}∂_{} ≠ 0 at the quotient", r, r + 1)));
                }
            }
        }
        if let Some(d1) = self.boundaries.first() {
            for row in d1 {
                let s: BigInt = row.iter().zip(&self.augmentation).map(|(x, e)| x.augmentation() * e).sum();
                if !s.is_zero() {
                    return Err(Error::NotComplex("ε∂₁ ≠ 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Largest generator index used anywhere plus one.
    pub fn alphabet(&self) -> usize {
        self.boundaries
            .iter()
            .flatten()
            .flatten()
            .filter_map(|x| x.max_generator())
            .max()
            .map_or(0, |m| m + 1)
    }
}

/// Degree-r summands (p, q, i, j) of a tensor product.
pub fn tensor_index(left: &[usize], right: &[usize], top: usize) -> Vec<Vec<(usize, usize, usize, usize)>> {
    (0..=top)
        .map(|r| {
            let mut v = Vec::new();
            for p in 0..=r {
                let q = r - p;
                if p < left.len() && q < right.len() {
                    for i in 0..left[p] {
                        for j in 0..right[q] {
                            v.push((p, q, i, j));
                        }
                    }
                }
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_of_standard_resolutions() {
        assert_eq!(ResolutionData::free(2).ranks, vec![1, 2]);
        assert_eq!(ResolutionData::integers().ranks, vec![1, 1]);
        assert_eq!(ResolutionData::surface(2).ranks, vec![1, 4, 1]);
        assert_eq!(ResolutionData::free_abelian(3).ranks, vec![1, 3, 3, 1]);
    }

    #[test]
    fn free_boundary_is_one_minus_generator() {
        let r = ResolutionData::free(2);
        assert_eq!(r.boundaries[0][0][0], one_minus(Word::gen(0)));
        assert_eq!(r.boundaries[0][1][0], one_minus(Word::gen(1)));
    }

    #[test]
    fn surface_first_fox_entry() {
        let r = ResolutionData::surface(2);
        let expected = one_minus(Word::parse("aba-1").unwrap());
        assert_eq!(r.boundaries[1][0][0], expected);
    }

    #[test]
    fn surface_squares_vanish_in_free_group() {
        // Σ_g (∂w/∂g)(1 − g) = 1 − w, and ε-images agree once w is a relator.
        let q = FiniteQuotient::abelian(4, &[3, 3, 3, 3]).unwrap();
        ResolutionData::surface(2).check_at(&q).unwrap();
    }

    #[test]
    fn koszul_is_a_complex_in_abelian_quotients() {
        let q = FiniteQuotient::abelian(2, &[2, 2]).unwrap();
        ResolutionData::free_abelian(2).check_at(&q).unwrap();
        let s3 = FiniteQuotient::permutation(&FinitePresentation::free(2), 3, &[vec![1, 0, 2], vec![1, 2, 0]]).unwrap();
        assert!(ResolutionData::free_abelian(2).check_at(&s3).is_err());
    }
}
