//! Augmented chain complexes of marked projective modules, their defects,
//! Gromov–Hausdorff witnesses, cones and tensor products.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constructions::resolutions::{tensor_index, ResolutionData};
use crate::crossring::{
    defect_support, marked_inclusion, marked_projection, Augmentation, Carrier, CrossedElt, Level, LevelSpace,
    MarkedModule, MarkedMorphism, ModuleVector,
};
use crate::error::{Error, Result};
use crate::jsonint::Int;

/// D₀ ← D₁ ← … ← D_{n+1} with an optional augmentation η on D₀.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedComplex {
    modules: Vec<MarkedModule>,
    boundaries: Vec<MarkedMorphism>,
    augmentation: Option<Augmentation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefectReport {
    /// δ_r = size₁(∂_r∘∂_{r+1}) for r = 1..n.
    pub degrees: Vec<BigRational>,
    /// Σᵢ μ(supp η∂₁(χ_{Aᵢ}eᵢ)).
    pub eta_boundary: BigRational,
    /// μ(supp(η(z) − 1)).
    pub eta: BigRational,
    pub overall: BigRational,
}

impl DefectReport {
    pub fn is_strict(&self) -> bool {
        self.overall.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexStats {
    pub kappa: BigInt,
    pub nu: BigInt,
    pub nu_underline: BigInt,
    pub ranks: Vec<usize>,
    pub dims: Vec<BigRational>,
    pub k_eta: BigInt,
    pub witness_n1: usize,
    pub witness_n2: usize,
    pub witness_linf: BigInt,
}

fn sum(it: impl IntoIterator<Item = BigRational>) -> BigRational {
    it.into_iter().fold(BigRational::zero(), |a, b| a + b)
}

impl MarkedComplex {
    /// `boundaries[r-1]` is ∂_r: D_r → D_{r−1}.
    pub fn new(modules: Vec<MarkedModule>, boundaries: Vec<MarkedMorphism>, augmentation: Option<Augmentation>) -> Result<Self> {
        if modules.is_empty() || boundaries.len() + 1 != modules.len() {
            return Err(Error::Shape("one boundary per positive degree".into()));
        }
        for (r, d) in boundaries.iter().enumerate() {
            if d.domain() != &modules[r + 1] || d.codomain() != &modules[r] {
                return Err(Error::Shape(format!("∂_{} has the wrong domain or codomain", r + 1)));
            }
        }
        if let Some(eta) = &augmentation {
            Augmentation::new(&modules[0], eta.values.clone())?;
        }
        Ok(MarkedComplex { modules, boundaries, augmentation })
    }

    pub fn level(&self) -> &Level {
        self.modules[0].level()
    }

    /// n+1.
    pub fn top(&self) -> usize {
        self.modules.len() - 1
    }

    pub fn modules(&self) -> &[MarkedModule] {
        &self.modules
    }

    pub fn module(&self, r: usize) -> &MarkedModule {
        &self.modules[r]
    }

    pub fn boundaries(&self) -> &[MarkedMorphism] {
        &self.boundaries
    }

    /// ∂_r for r ≥ 1.
    pub fn boundary(&self, r: usize) -> &MarkedMorphism {
        &self.boundaries[r - 1]
    }

    pub fn augmentation(&self) -> Option<&Augmentation> {
        self.augmentation.as_ref()
    }

    pub fn dims(&self) -> Vec<BigRational> {
        self.modules.iter().map(|m| m.dim()).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.modules.iter().map(|m| m.rank()).collect()
    }

    /// η(z) ∈ Z^G; zero without an augmentation.
    pub fn eta(&self, z: &ModuleVector) -> Vec<BigInt> {
        match &self.augmentation {
            Some(a) => a.apply(z),
            None => vec![BigInt::zero(); self.level().order()],
        }
    }

    /// Σᵢ χ_{Aᵢ}eᵢ, the canonical surjectivity witness of induced complexes.
    pub fn canonical_witness(&self) -> ModuleVector {
        let m = &self.modules[0];
        let comps = m.carriers().iter().map(|a| CrossedElt::chi(m.level(), a)).collect();
        ModuleVector::new(m, comps).expect("shape")
    }

    pub fn square(&self, r: usize) -> MarkedMorphism {
        self.boundary(r + 1).then(self.boundary(r)).expect("consecutive boundaries compose")
    }

    pub fn defect_report(&self, z: &ModuleVector) -> DefectReport {
        let degrees: Vec<BigRational> = (1..self.top()).map(|r| self.square(r).size1()).collect();
        let level = self.level();
        let (eta_boundary, eta) = match &self.augmentation {
            Some(aug) => {
                let eb = if self.top() >= 1 {
                    let d1 = self.boundary(1);
                    sum((0..d1.domain().rank()).map(|i| {
                        let v = aug.apply(&d1.row(i));
                        BigRational::new(BigInt::from(v.iter().filter(|c| !c.is_zero()).count()), BigInt::from(level.order()))
                    }))
                } else {
                    BigRational::zero()
                };
                (eb, level.measure(&defect_support(level, &aug.apply(z))))
            }
            None => (BigRational::zero(), BigRational::zero()),
        };
        let overall = degrees.iter().chain([&eta_boundary, &eta]).max().cloned().unwrap_or_default();
        DefectReport { degrees, eta_boundary, eta, overall }
    }

    pub fn is_strict(&self) -> bool {
        (1..self.top()).all(|r| self.square(r).is_zero())
            && match &self.augmentation {
                Some(aug) if self.top() >= 1 => {
                    let d1 = self.boundary(1);
                    (0..d1.domain().rank()).all(|i| aug.apply(&d1.row(i)).iter().all(|c| c.is_zero()))
                }
                _ => true,
            }
    }

    pub fn stats(&self, z: &ModuleVector) -> ComplexStats {
        let st: Vec<_> = self.boundaries.iter().map(|d| d.stats()).collect();
        let k_eta = self.augmentation.as_ref().map(|a| a.k_eta()).unwrap_or_default();
        let kappa = st.iter().map(|s| s.op_norm.clone()).max().unwrap_or_default();
        let nu = st.iter().map(|s| BigInt::from(s.n1)).chain([k_eta.clone()]).max().unwrap_or_default();
        let nu_underline = st.iter().map(|s| BigInt::from(s.n1_underline)).chain([k_eta.clone()]).max().unwrap_or_default();
        ComplexStats {
            kappa,
            nu,
            nu_underline,
            ranks: self.ranks(),
            dims: self.dims(),
            k_eta,
            witness_n1: z.n1(),
            witness_n2: z.n2(),
            witness_linf: z.linf(),
        }
    }

    /// Covers each atom x by a single term (±χ_{x}, g)eᵢ with vᵢ(g⁻¹x) = ±1.
    /// Returns the witness and the uncovered measure.
    pub fn search_witness(&self) -> (ModuleVector, BigRational) {
        let level = self.level().clone();
        let m = &self.modules[0];
        let mut comps = vec![CrossedElt::zero(&level); m.rank()];
        let mut uncovered = 0usize;
        let Some(aug) = &self.augmentation else {
            return (ModuleVector::zero(m), BigRational::one());
        };
        'atoms: for x in 0..level.order() {
            for (i, v) in aug.values.iter().enumerate() {
                for y in m.carrier(i).iter() {
                    if v[y].abs().is_one() {
                        comps[i].add_at(x, y, v[y].clone());
                        continue 'atoms;
                    }
                }
            }
            uncovered += 1;
        }
        (
            ModuleVector::new(m, comps).expect("shape"),
            BigRational::new(BigInt::from(uncovered), BigInt::from(level.order())),
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "modules": self.modules.iter().map(|m| m.to_json()).collect::<Vec<_>>(),
            "boundaries": self.boundaries.iter().map(|d| d.to_json()).collect::<Vec<_>>(),
            "augmentation": self.augmentation.as_ref().map(|a| a.values.iter().map(|r| r.iter().cloned().map(Int).collect::<Vec<_>>()).collect::<Vec<_>>()),
        })
    }

    pub fn from_json(level: &Level, v: &serde_json::Value) -> Result<Self> {
        let raw: ComplexJson = serde_json::from_value(v.clone())?;
        let modules = raw.modules.iter().map(|m| MarkedModule::from_json(level, m)).collect::<Result<Vec<_>>>()?;
        let boundaries = raw.boundaries.iter().map(|d| MarkedMorphism::from_json(level, d)).collect::<Result<Vec<_>>>()?;
        let augmentation = match raw.augmentation {
            Some(vals) => Some(Augmentation::new(&modules[0], vals)?),
            None => None,
        };
        MarkedComplex::new(modules, boundaries, augmentation)
    }
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    modules: Vec<serde_json::Value>,
    boundaries: Vec<serde_json::Value>,
    #[serde(with = "crate::jsonint::opt_rows", default)]
    augmentation: Option<Vec<Vec<BigInt>>>,
}

/// ε_r for a degreewise family f_r: C_r → D_r. Entry 0 compares η_D f₀ with
/// ζ = η_C (zero when either side lacks an augmentation); entry r ≥ 1 is
/// size₁(∂ᴰ_r f_r − f_{r−1}∂ᶜ_r).
pub fn check_chain_map(f: &[MarkedMorphism], c: &MarkedComplex, d: &MarkedComplex) -> Result<Vec<BigRational>> {
    if f.is_empty() || f.len() > c.modules.len() || f.len() > d.modules.len() {
        return Err(Error::Shape("chain map degrees exceed the complexes".into()));
    }
    for (r, fr) in f.iter().enumerate() {
        if fr.domain() != c.module(r) || fr.codomain() != d.module(r) {
            return Err(Error::Shape(format!("f_{} has the wrong shape", r)));
        }
    }
    let level = c.level();
    let mut eps = Vec::with_capacity(f.len());
    eps.push(match (&c.augmentation, &d.augmentation) {
        (Some(zeta), Some(eta)) => sum((0..c.module(0).rank()).map(|i| {
            let lhs = eta.apply(&f[0].row(i));
            let diff: Vec<BigInt> = lhs.iter().zip(&zeta.values[i]).map(|(a, b)| a - b).collect();
            let supp = diff.iter().filter(|x| !level.coeffs().normalize((*x).clone()).is_zero()).count();
            BigRational::new(BigInt::from(supp), BigInt::from(level.order()))
        })),
        _ => BigRational::zero(),
    });
    for r in 1..f.len() {
        let lhs = f[r].then(d.boundary(r))?;
        let rhs = c.boundary(r).then(&f[r - 1])?;
        eps.push(lhs.try_sub(&rhs)?.size1());
    }
    Ok(eps)
}

/// Level image of a resolution: full carriers, entries Σ a_γ(χ_G, γ̄), and
/// augmentation vᵢ = ε(eᵢ)·1.
pub fn induce_resolution(res: &ResolutionData, level: &Level) -> Result<MarkedComplex> {
    if res.alphabet() > level.quotient().generators() {
        return Err(Error::Generator { index: res.alphabet() - 1, generators: level.quotient().generators() });
    }
    let modules: Vec<MarkedModule> = res.ranks.iter().map(|&k| MarkedModule::free(level, k)).collect();
    let mut boundaries = Vec::new();
    for (r, m) in res.boundaries.iter().enumerate() {
        let entries = m.iter().map(|row| row.iter().map(|x| CrossedElt::from_group_ring(level, x)).collect()).collect();
        boundaries.push(MarkedMorphism::new(&modules[r + 1], &modules[r], entries)?);
    }
    let values = res.augmentation.iter().map(|e| vec![level.coeffs().normalize(e.clone()); level.order()]).collect();
    let aug = Augmentation::new(&modules[0], values)?;
    MarkedComplex::new(modules, boundaries, Some(aug))
}

/// Block matrix assembled from (row block, column block) pieces.
fn block_morphism(dom: &MarkedModule, cod: &MarkedModule, dom_off: &[usize], cod_off: &[usize], blocks: &[(usize, usize, &MarkedMorphism, i64)]) -> Result<MarkedMorphism> {
    let mut out = MarkedMorphism::zero(dom, cod);
    for &(bi, bj, f, sign) in blocks {
        let s = BigInt::from(sign);
        for i in 0..f.domain().rank() {
            for j in 0..f.codomain().rank() {
                let z = f.entry(i, j);
                if !z.is_zero() {
                    out.set_entry(dom_off[bi] + i, cod_off[bj] + j, z.scale(&s));
                }
            }
        }
    }
    Ok(out)
}

/// Cone(φ)_n = D_{n−1} ⊕ E_n with ∂(d, e) = (−∂d, φ(d) + ∂e).
pub fn mapping_cone(phi: &[MarkedMorphism], d: &MarkedComplex, e: &MarkedComplex) -> Result<MarkedComplex> {
    let eps = check_chain_map(phi, d, e)?;
    if let Some((r, _)) = eps.iter().enumerate().skip(1).find(|(_, x)| !x.is_zero()) {
        return Err(Error::NotStrict(format!("φ fails to commute in degree {}", r)));
    }
    let top = e.top().min(d.top() + 1).min(phi.len());
    let level = e.level();
    let empty = MarkedModule::zero(level);
    let shifted = |n: usize| if n == 0 { &empty } else { d.module(n - 1) };
    let modules: Vec<MarkedModule> = (0..=top).map(|n| shifted(n).direct_sum(e.module(n))).collect::<Result<_>>()?;
    let mut boundaries = Vec::new();
    for n in 1..=top {
        let dom_off = [0, shifted(n).rank()];
        let cod_off = [0, shifted(n - 1).rank()];
        let mut blocks: Vec<(usize, usize, &MarkedMorphism, i64)> = vec![(1, 1, e.boundary(n), 1)];
        blocks.push((0, 1, &phi[n - 1], 1));
        if n >= 2 {
            blocks.push((0, 0, d.boundary(n - 1), -1));
        }
        boundaries.push(block_morphism(&modules[n], &modules[n - 1], &dom_off, &cod_off, &blocks)?);
    }
    MarkedComplex::new(modules, boundaries, None)
}

/// Tensor product at a common level with summands (p, q, i, j) carried by
/// A^p_i ∩ A′^q_j and ∂ = ∂⊗1 + (−1)^p 1⊗∂′. Strict inputs with
/// G-invariant carriers give strict outputs.
pub fn tensor_complex(d: &MarkedComplex, e: &MarkedComplex) -> Result<MarkedComplex> {
    if !LevelSpace::same(d.level(), e.level()) {
        return Err(Error::LevelMismatch);
    }
    let level = d.level();
    let top = d.top() + e.top();
    let index = tensor_index(&d.ranks(), &e.ranks(), top);
    let modules: Vec<MarkedModule> = index
        .iter()
        .map(|v| {
            let carriers = v.iter().map(|&(p, q, i, j)| d.module(p).carrier(i).intersection(e.module(q).carrier(j))).collect();
            MarkedModule::new(level, carriers)
        })
        .collect::<Result<_>>()?;
    let mut boundaries = Vec::new();
    for r in 1..=top {
        let mut out = MarkedMorphism::zero(&modules[r], &modules[r - 1]);
        let pos = |p: usize, q: usize, i: usize, j: usize| index[r - 1].iter().position(|&k| k == (p, q, i, j));
        for (row, &(p, q, i, j)) in index[r].iter().enumerate() {
            let mut acc: Vec<CrossedElt> = vec![CrossedElt::zero(level); modules[r - 1].rank()];
            if p > 0 {
                for k in 0..d.module(p - 1).rank() {
                    let z = d.boundary(p).entry(i, k);
                    if let (false, Some(c)) = (z.is_zero(), pos(p - 1, q, k, j)) {
                        acc[c] = &acc[c] + z;
                    }
                }
            }
            if q > 0 {
                for k in 0..e.module(q - 1).rank() {
                    let z = e.boundary(q).entry(j, k);
                    if let (false, Some(c)) = (z.is_zero(), pos(p, q - 1, i, k)) {
                        acc[c] = if p % 2 == 0 { &acc[c] + z } else { &acc[c] - z };
                    }
                }
            }
            for (c, z) in acc.into_iter().enumerate() {
                out.set_entry(row, c, z);
            }
        }
        boundaries.push(out);
    }
    let augmentation = match (&d.augmentation, &e.augmentation) {
        (Some(a), Some(b)) => {
            let vals = index[0]
                .iter()
                .map(|&(_, _, i, j)| a.values[i].iter().zip(&b.values[j]).map(|(x, y)| level.coeffs().normalize(x * y)).collect())
                .collect();
            Some(Augmentation::new(&modules[0], vals)?)
        }
        _ => None,
    };
    MarkedComplex::new(modules, boundaries, augmentation)
}

/// Joint ambient modules P_r with marked inclusions of D_r (`left`) and
/// D′_r (`right`), given by summand assignments.
#[derive(Clone, Debug, PartialEq)]
pub struct GHWitness {
    pub ambient: Vec<MarkedModule>,
    pub left_modules: Vec<MarkedModule>,
    pub right_modules: Vec<MarkedModule>,
    pub left: Vec<Vec<usize>>,
    pub right: Vec<Vec<usize>>,
    pub delta: BigRational,
    pub k: BigInt,
}

#[derive(Clone, Debug)]
pub struct GHCheck {
    pub ok: bool,
    pub failures: Vec<String>,
    /// dim(φ_r(D_r) △ φ′_r(D′_r)).
    pub symmetric_difference: Vec<BigRational>,
    /// size₁(F_r − F′_r) with r = 0 for the augmentations.
    pub delta_f: Vec<BigRational>,
    pub norm_f: Vec<BigInt>,
    /// Φ_r = π_{φ′}∘φ_r: D_r → D′_r and Φ′_r.
    pub phi: Vec<MarkedMorphism>,
    pub phi_prime: Vec<MarkedMorphism>,
    /// size₁(Φ′Φ − id) per degree.
    pub roundtrip: Vec<BigRational>,
}

impl GHWitness {
    /// The witness D = D with P = D and identity inclusions.
    pub fn identity(d: &MarkedComplex, delta: BigRational, k: BigInt) -> Self {
        let ids: Vec<Vec<usize>> = d.modules.iter().map(|m| (0..m.rank()).collect()).collect();
        GHWitness {
            ambient: d.modules.clone(),
            left_modules: d.modules.clone(),
            right_modules: d.modules.clone(),
            left: ids.clone(),
            right: ids,
            delta,
            k,
        }
    }

    fn image(module: &MarkedModule, ambient: &MarkedModule, sigma: &[usize]) -> Vec<Carrier> {
        let mut out = vec![ambient.level().empty(); ambient.rank()];
        for (i, &k) in sigma.iter().enumerate() {
            out[k] = module.carrier(i).clone();
        }
        out
    }
}

/// F_r = φ_{r−1}∂_rπ_{φ_r}: P_r → P_{r−1}.
fn transported(c: &MarkedComplex, p: &[MarkedModule], sigma: &[Vec<usize>], r: usize) -> Result<MarkedMorphism> {
    let pi = marked_projection(&p[r], c.module(r), &sigma[r])?;
    let phi = marked_inclusion(c.module(r - 1), &p[r - 1], &sigma[r - 1])?;
    pi.then(c.boundary(r))?.then(&phi)
}

/// η∘π_{φ₀} as one vector per ambient summand.
fn transported_eta(c: &MarkedComplex, p0: &MarkedModule, sigma: &[usize]) -> Vec<Vec<BigInt>> {
    let n = p0.level().order();
    let mut out = vec![vec![BigInt::zero(); n]; p0.rank()];
    if let Some(aug) = &c.augmentation {
        for (i, &k) in sigma.iter().enumerate() {
            out[k] = aug.values[i].clone();
        }
    }
    out
}

pub fn gh_verify(w: &GHWitness, d: &MarkedComplex, dp: &MarkedComplex) -> Result<GHCheck> {
    let degrees = w.ambient.len();
    if w.left.len() != degrees || w.right.len() != degrees || d.modules.len() != degrees || dp.modules.len() != degrees {
        return Err(Error::Witness("degree ranges differ".into()));
    }
    if w.left_modules != d.modules || w.right_modules != dp.modules {
        return Err(Error::Witness("witness was built for other complexes".into()));
    }
    for r in 0..degrees {
        if w.left[r].len() != d.module(r).rank() || w.right[r].len() != dp.module(r).rank() {
            return Err(Error::Witness(format!("assignment lengths in degree {}", r)));
        }
    }
    let mut check = GHCheck {
        ok: true,
        failures: Vec::new(),
        symmetric_difference: Vec::new(),
        delta_f: Vec::new(),
        norm_f: Vec::new(),
        phi: Vec::new(),
        phi_prime: Vec::new(),
        roundtrip: Vec::new(),
    };
    let level = d.level();
    for r in 0..degrees {
        let (incl, incl_p) = match (
            marked_inclusion(d.module(r), &w.ambient[r], &w.left[r]),
            marked_inclusion(dp.module(r), &w.ambient[r], &w.right[r]),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                check.ok = false;
                check.failures.push(format!("degree {}: inclusions are not marked", r));
                return Ok(check);
            }
        };
        let a = GHWitness::image(d.module(r), &w.ambient[r], &w.left[r]);
        let b = GHWitness::image(dp.module(r), &w.ambient[r], &w.right[r]);
        let sd = sum(a.iter().zip(&b).map(|(x, y)| level.measure(&x.symmetric_difference(y))));
        if sd >= w.delta {
            check.ok = false;
            check.failures.push(format!("degree {}: symmetric difference {} ≥ δ", r, sd));
        }
        check.symmetric_difference.push(sd);
        let proj = marked_projection(&w.ambient[r], d.module(r), &w.left[r])?;
        let proj_p = marked_projection(&w.ambient[r], dp.module(r), &w.right[r])?;
        let phi = incl.then(&proj_p)?;
        let phi_p = incl_p.then(&proj)?;
        let rt = phi.then(&phi_p)?.almost_eq(&MarkedMorphism::identity(d.module(r)))?.delta_min;
        if rt >= w.delta {
            check.ok = false;
            check.failures.push(format!("degree {}: Φ′Φ differs from id on {}", r, rt));
        }
        check.roundtrip.push(rt);
        check.phi.push(phi);
        check.phi_prime.push(phi_p);
    }
    let e = transported_eta(d, &w.ambient[0], &w.left[0]);
    let ep = transported_eta(dp, &w.ambient[0], &w.right[0]);
    let mut size0 = 0usize;
    let mut norm0 = BigInt::zero();
    for (x, y) in e.iter().zip(&ep) {
        for (a, b) in x.iter().zip(y) {
            let diff = level.coeffs().normalize(a - b);
            if !diff.is_zero() {
                size0 += 1;
                norm0 = norm0.max(level.coeffs().norm(&diff));
            }
        }
    }
    let mut deltas = vec![(BigRational::new(BigInt::from(size0), BigInt::from(level.order())), norm0)];
    for r in 1..degrees {
        let f = transported(d, &w.ambient, &w.left, r)?;
        let fp = transported(dp, &w.ambient, &w.right, r)?;
        let ae = f.almost_eq(&fp)?;
        deltas.push((ae.delta_min, ae.norm_on_difference));
    }
    for (r, (s, k)) in deltas.into_iter().enumerate() {
        if s >= w.delta || k > w.k {
            check.ok = false;
            check.failures.push(format!("degree {}: F differs by size {} and norm {}", r, s, k));
        }
        check.delta_f.push(s);
        check.norm_f.push(k);
    }
    Ok(check)
}

/// Glues the ambient modules of two witnesses along the shared middle
/// complex; parameters add.
pub fn gh_compose(w1: &GHWitness, w2: &GHWitness) -> Result<GHWitness> {
    if w1.right_modules != w2.left_modules || w1.ambient.len() != w2.ambient.len() {
        return Err(Error::Witness("middle complexes differ".into()));
    }
    let mut ambient = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for r in 0..w1.ambient.len() {
        let (p, q) = (&w1.ambient[r], &w2.ambient[r]);
        // Q-summand glued onto each P-summand through the middle module.
        let mut glue: Vec<Option<usize>> = vec![None; p.rank()];
        for (j, &k) in w1.right[r].iter().enumerate() {
            glue[k] = Some(w2.left[r][j]);
        }
        let mut q_to_r = vec![usize::MAX; q.rank()];
        let mut carriers = Vec::new();
        for (k, g) in glue.iter().enumerate() {
            let mut c = p.carrier(k).clone();
            if let Some(l) = g {
                c = c.union(q.carrier(*l));
                q_to_r[*l] = k;
            }
            carriers.push(c);
        }
        for (l, slot) in q_to_r.iter_mut().enumerate() {
            if *slot == usize::MAX {
                *slot = carriers.len();
                carriers.push(q.carrier(l).clone());
            }
        }
        ambient.push(MarkedModule::new(p.level(), carriers)?);
        left.push(w1.left[r].clone());
        right.push(w2.right[r].iter().map(|&l| q_to_r[l]).collect());
    }
    Ok(GHWitness {
        ambient,
        left_modules: w1.left_modules.clone(),
        right_modules: w2.right_modules.clone(),
        left,
        right,
        delta: &w1.delta + &w2.delta,
        k: &w1.k + &w2.k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossring::ratio;
    use crate::groups::FiniteQuotient;

    fn z4() -> Level {
        LevelSpace::cyclic(4)
    }

    #[test]
    fn induced_integers_resolution() {
        let l = z4();
        let d = induce_resolution(&ResolutionData::integers(), &l).unwrap();
        let expected = &CrossedElt::one(&l) - &CrossedElt::group(&l, 1);
        assert_eq!(d.boundary(1).entry(0, 0), &expected);
        assert!(d.defect_report(&d.canonical_witness()).is_strict());
    }

    #[test]
    fn perturbation_defects() {
        let l = z4();
        let mut d = induce_resolution(&ResolutionData::integers(), &l).unwrap();
        let mut aug = d.augmentation.clone().unwrap();
        aug.values[0][3] = BigInt::zero();
        d.augmentation = Some(aug);
        let rep = d.defect_report(&d.canonical_witness());
        assert_eq!(rep.eta, ratio(1, 4));
    }

    #[test]
    fn koszul_tensor_is_strict() {
        let q = FiniteQuotient::abelian(2, &[2, 2]).unwrap();
        let l = LevelSpace::new(q);
        let za = induce_resolution(&one_gen(0), &l).unwrap();
        let zb = induce_resolution(&one_gen(1), &l).unwrap();
        let t = tensor_complex(&za, &zb).unwrap();
        assert_eq!(t.ranks(), vec![1, 2, 1]);
        assert!(t.is_strict());
        assert!(t.defect_report(&t.canonical_witness()).is_strict());
    }

    fn one_gen(k: usize) -> ResolutionData {
        use crate::groups::{GroupRingElt, Word};
        let b = &GroupRingElt::one() - &GroupRingElt::word(Word::gen(k));
        ResolutionData::new(2, vec![1, 1], vec![vec![vec![b]]], vec![BigInt::from(1)]).unwrap()
    }

    #[test]
    fn cone_of_identity() {
        let l = z4();
        let d = induce_resolution(&ResolutionData::integers(), &l).unwrap();
        let id: Vec<MarkedMorphism> = d.modules().iter().map(MarkedMorphism::identity).collect();
        let c = mapping_cone(&id, &d, &d).unwrap();
        assert_eq!(c.dims()[1], ratio(2, 1));
        assert!(c.is_strict());
    }

    #[test]
    fn identity_witness_verifies() {
        let l = z4();
        let d = induce_resolution(&ResolutionData::integers(), &l).unwrap();
        let w = GHWitness::identity(&d, ratio(1, 1000), BigInt::zero());
        assert!(gh_verify(&w, &d, &d).unwrap().ok);
    }
}
