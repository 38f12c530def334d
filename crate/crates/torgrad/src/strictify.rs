//! Strictification of almost chain complexes and almost chain maps.
//!
//! Both constructions add error summands E_r carried by the supp₁ of the
//! defects, degree by degree, and twist the boundary so that the new
//! complex satisfies ∂∂ = 0 exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::json;

use crate::complexes::{check_chain_map, gh_verify, DefectReport, GHCheck, GHWitness, MarkedComplex};
use crate::crossring::{
    defect_support, marked_inclusion, ratio, Augmentation, Carrier, CrossedElt, Level, MarkedModule, MarkedMorphism,
    ModuleVector,
};
use crate::error::{Error, Result};

/// Audit record of one strictification.
#[derive(Clone, Debug)]
pub struct StrictifyCert {
    /// supp(η(z) − 1), added to D₀ for surjectivity.
    pub surjectivity: Carrier,
    /// Error carriers Bᵢ of E_r, r = 0..n.
    pub error_carriers: Vec<Vec<Carrier>>,
    pub error_dims: Vec<BigRational>,
    pub dim_growth: BigRational,
    pub input: DefectReport,
    /// Per-degree defects of the inclusion D ↪ D̂ as an almost chain map.
    pub inclusion_defects: Vec<BigRational>,
    /// δ_r + rk(D_{r+1})·dim(E_{r−1})·N̲₁(∂_{r+1}), the bound on dim E_r.
    pub recursive_bounds: Vec<BigRational>,
    /// (1 + rk(D_{r+1})·N̲₁(∂_{r+1}))·δ, the same bound with dim E_{r−1} ≤ δ.
    pub degree_bounds: Vec<BigRational>,
    pub witness: GHWitness,
    pub z_hat: ModuleVector,
}

impl StrictifyCert {
    /// dim E_r ≤ recursive bound in every degree.
    pub fn recursive_bounds_hold(&self) -> bool {
        self.error_dims.iter().zip(&self.recursive_bounds).all(|(e, b)| e <= b)
    }

    /// Inclusion defect in degree r+1, which is dim E_r, against the
    /// simplified per-degree bound.
    pub fn degree_bounds_hold(&self) -> bool {
        self.error_dims.iter().zip(&self.degree_bounds).all(|(e, b)| e <= b)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let s = |v: &[BigRational]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        json!({
            "surjectivity": self.surjectivity.iter().collect::<Vec<_>>(),
            "error_carriers": self.error_carriers.iter().map(|es| es.iter().map(|c| c.iter().collect::<Vec<_>>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "error_dims": s(&self.error_dims),
            "dim_growth": self.dim_growth.to_string(),
            "input_defects": s(&self.input.degrees),
            "input_eta_boundary": self.input.eta_boundary.to_string(),
            "input_eta": self.input.eta.to_string(),
            "delta": self.input.overall.to_string(),
            "inclusion_defects": s(&self.inclusion_defects),
            "recursive_bounds": s(&self.recursive_bounds),
            "degree_bounds": s(&self.degree_bounds),
            "witness_delta": self.witness.delta.to_string(),
            "witness_k": self.witness.k.to_string(),
        })
    }
}

fn need_aug(d: &MarkedComplex) -> Result<&Augmentation> {
    d.augmentation().ok_or_else(|| Error::Shape("strictification needs an augmentation".into()))
}

fn prefix(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Morphism with rows of `upper` followed by rows of `lower`, over the
/// direct sum of their domains.
fn stack(upper: &MarkedMorphism, lower: &MarkedMorphism) -> Result<MarkedMorphism> {
    let dom = upper.domain().direct_sum(lower.domain())?;
    let entries = upper.entries().iter().chain(lower.entries()).cloned().collect();
    MarkedMorphism::new(&dom, upper.codomain(), entries)
}

/// Indices of the nonempty error carriers; empty ones get no summand.
fn live(errors: &[Carrier]) -> Vec<usize> {
    (0..errors.len()).filter(|&i| !errors[i].is_empty()).collect()
}

/// ⊕ ⟨Bᵢ⟩ over the nonempty Bᵢ.
fn error_module(level: &Level, errors: &[Carrier]) -> Result<MarkedModule> {
    MarkedModule::new(level, live(errors).into_iter().map(|i| errors[i].clone()).collect())
}

/// Rows of f followed by −χ_{Bᵢ} in the error column of i.
fn twist(f: &MarkedMorphism, extended: &MarkedModule, errors: &[Carrier]) -> Result<MarkedMorphism> {
    let level = f.level();
    let cols = live(errors);
    let entries = f
        .entries()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend(cols.iter().map(|&j| {
                if i == j {
                    CrossedElt::chi_g(level, &errors[i], 0, -1)
                } else {
                    CrossedElt::zero(level)
                }
            }));
            r
        })
        .collect();
    MarkedMorphism::new(f.domain(), extended, entries)
}

/// The rows of f belonging to nonempty error carriers, over ⊕ ⟨Bᵢ⟩.
fn error_rows(f: &MarkedMorphism, errors: &[Carrier]) -> Result<MarkedMorphism> {
    let level = f.level();
    let rows = live(errors).into_iter().map(|i| f.entries()[i].clone()).collect();
    MarkedMorphism::new(&error_module(level, errors)?, f.codomain(), rows)
}

fn supports(level: &Level, rows: &[Vec<BigInt>]) -> Vec<Carrier> {
    rows.iter()
        .map(|v| Carrier::from_indices(level.order(), v.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(x, _)| x)))
        .collect()
}

/// D̂₀ = D₀ ⊕ ⟨B⟩ with η̂(χ_B e) = 1 − η(z) and ẑ = z + χ_B e.
pub fn make_surjective(d: &MarkedComplex, z: &ModuleVector) -> Result<(MarkedComplex, StrictifyCert)> {
    let input = d.defect_report(z);
    let (dh, b, z_hat) = surjective_part(d, z)?;
    let witness = extension_witness(d, &dh, &[b.clone()], &[], &[])?;
    let cert = StrictifyCert {
        surjectivity: b.clone(),
        error_carriers: Vec::new(),
        error_dims: Vec::new(),
        dim_growth: d.level().measure(&b),
        input,
        inclusion_defects: check_chain_map(&inclusions(d, &dh)?, d, &dh)?,
        recursive_bounds: Vec::new(),
        degree_bounds: Vec::new(),
        witness,
        z_hat,
    };
    Ok((dh, cert))
}

fn surjective_part(d: &MarkedComplex, z: &ModuleVector) -> Result<(MarkedComplex, Carrier, ModuleVector)> {
    let aug = need_aug(d)?;
    let level = d.level();
    let v = aug.apply(z);
    let b = defect_support(level, &v);
    if b.is_empty() {
        return Ok((d.clone(), b, z.clone()));
    }
    let extra = MarkedModule::new(level, vec![b.clone()])?;
    let d0 = d.module(0).direct_sum(&extra)?;
    let one = BigInt::from(1);
    let mut values = aug.values.clone();
    values.push((0..level.order()).map(|x| if b.contains(x) { level.coeffs().normalize(&one - &v[x]) } else { BigInt::zero() }).collect());
    let mut modules = d.modules().to_vec();
    modules[0] = d0.clone();
    let mut boundaries = d.boundaries().to_vec();
    if let Some(d1) = boundaries.first_mut() {
        let widened: Vec<Vec<CrossedElt>> = d1
            .entries()
            .iter()
            .map(|row| row.iter().cloned().chain([CrossedElt::zero(level)]).collect())
            .collect();
        *d1 = MarkedMorphism::new(d1.domain(), &d0, widened)?;
    }
    let mut comps = z.comps().to_vec();
    comps.push(CrossedElt::chi(level, &b));
    let z_hat = ModuleVector::new(&d0, comps)?;
    let dh = MarkedComplex::new(modules, boundaries, Some(Augmentation::new(&d0, values)?))?;
    Ok((dh, b, z_hat))
}

/// Inclusions D_r ↪ D̂_r onto the leading summands.
fn inclusions(d: &MarkedComplex, dh: &MarkedComplex) -> Result<Vec<MarkedMorphism>> {
    (0..d.modules().len())
        .map(|r| marked_inclusion(d.module(r), dh.module(r), &prefix(d.module(r).rank())))
        .collect()
}

/// Witness with P = D̂, D sitting in the leading summands. `extra0` are the
/// carriers appended to D₀ before the error summands; δ and K are taken
/// from the construction.
fn extension_witness(d: &MarkedComplex, dh: &MarkedComplex, extra0: &[Carrier], errors: &[Vec<Carrier>], norms: &[BigInt]) -> Result<GHWitness> {
    let level = d.level();
    let mut added: Vec<BigRational> = (0..d.modules().len())
        .map(|r| errors.get(r).map_or_else(BigRational::zero, |es| es.iter().map(|c| level.measure(c)).sum()))
        .collect();
    added[0] += extra0.iter().map(|c| level.measure(c)).sum::<BigRational>();
    let worst = (0..added.len())
        .map(|r| &added[r] + if r > 0 { added[r - 1].clone() } else { BigRational::zero() })
        .max()
        .unwrap_or_default();
    let aug_k = match (d.augmentation(), dh.augmentation()) {
        (Some(a), Some(b)) => b.values[a.values.len()..].iter().flatten().map(|c| c.abs()).max().unwrap_or_default(),
        _ => BigInt::zero(),
    };
    let k = norms.iter().cloned().chain([aug_k, BigInt::from(1)]).max().unwrap_or_default();
    Ok(GHWitness {
        ambient: dh.modules().to_vec(),
        left_modules: d.modules().to_vec(),
        right_modules: dh.modules().to_vec(),
        left: d.modules().iter().map(|m| prefix(m.rank())).collect(),
        right: dh.modules().iter().map(|m| prefix(m.rank())).collect(),
        delta: worst + ratio(1, level.order()),
        k,
    })
}

/// Inductive strictification. Degrees 0..n gain error summands, the top
/// degree n+1 keeps D_{n+1} with the twisted boundary.
pub fn strictify_complex(d: &MarkedComplex, z: &ModuleVector) -> Result<(MarkedComplex, StrictifyCert)> {
    let input = d.defect_report(z);
    let level = d.level().clone();
    let (ds, b, z_hat) = surjective_part(d, z)?;
    let aug = need_aug(&ds)?.clone();
    let top = ds.top();

    let mut modules: Vec<MarkedModule> = Vec::new();
    let mut boundaries: Vec<MarkedMorphism> = Vec::new();
    let mut error_carriers: Vec<Vec<Carrier>> = Vec::new();
    let mut e_norms: Vec<BigInt> = Vec::new();
    let mut hat_aug = aug.values.clone();
    let mut tilde: Option<MarkedMorphism> = None;

    if top == 0 {
        modules.push(ds.module(0).clone());
    }
    for r in 0..top {
        let next = ds.boundary(r + 1);
        let (errors, hat_r) = if r == 0 {
            let eta = Augmentation { values: aug.values.clone() };
            let vals: Vec<Vec<BigInt>> = (0..next.domain().rank()).map(|i| eta.apply(&next.row(i))).collect();
            let errors = supports(&level, &vals);
            e_norms.push(vals.iter().flatten().map(|c| c.abs()).max().unwrap_or_default());
            hat_aug.extend(live(&errors).into_iter().map(|i| vals[i].clone()));
            (errors.clone(), ds.module(0).direct_sum(&error_module(&level, &errors)?)?)
        } else {
            let t = tilde.as_ref().expect("∂̃ exists above degree 0");
            let comp = next.then(t)?;
            let errors: Vec<Carrier> = (0..comp.domain().rank()).map(|i| comp.row(i).supp1()).collect();
            let lower = error_rows(&comp, &errors)?;
            e_norms.push(lower.op_norm());
            let hat = stack(t, &lower)?;
            let module = hat.domain().clone();
            boundaries.push(hat);
            (errors, module)
        };
        modules.push(hat_r.clone());
        tilde = Some(twist(next, &hat_r, &errors)?);
        error_carriers.push(errors);
    }
    if let Some(t) = tilde {
        modules.push(t.domain().clone());
        boundaries.push(t);
    }
    let hat_eta = Augmentation::new(&modules[0], hat_aug)?;
    let dh = MarkedComplex::new(modules, boundaries, Some(hat_eta))?;

    let error_dims: Vec<BigRational> =
        error_carriers.iter().map(|es| es.iter().map(|c| level.measure(c)).sum()).collect();
    let dim_growth = level.measure(&b) + error_dims.iter().cloned().sum::<BigRational>();
    let delta = input.overall.clone();
    let mut recursive_bounds = Vec::new();
    let mut degree_bounds = Vec::new();
    for r in 0..top {
        let st = ds.boundary(r + 1).stats();
        let rk = BigRational::from(BigInt::from(ds.module(r + 1).rank()));
        let n1 = BigRational::from(BigInt::from(st.n1_underline));
        let own = if r == 0 { input.eta_boundary.clone() } else { input.degrees[r - 1].clone() };
        let prev = if r == 0 { level.measure(&b) } else { error_dims[r - 1].clone() };
        recursive_bounds.push(own + &rk * &prev * &n1);
        degree_bounds.push((BigRational::from(BigInt::from(1)) + &rk * &n1) * &delta);
    }
    let witness = extension_witness(d, &dh, &[b.clone()], &error_carriers, &e_norms)?;
    let inclusion_defects = check_chain_map(&inclusions(d, &dh)?, d, &dh)?;
    let z_hat = ModuleVector::new(dh.module(0), {
        let mut c = z_hat.comps().to_vec();
        c.resize(dh.module(0).rank(), CrossedElt::zero(&level));
        c
    })?;
    let cert = StrictifyCert {
        surjectivity: b,
        error_carriers,
        error_dims,
        dim_growth,
        input,
        inclusion_defects,
        recursive_bounds,
        degree_bounds,
        witness,
        z_hat,
    };
    Ok((dh, cert))
}

/// Checks the certificate's witness against the complexes it links.
pub fn verify_cert(cert: &StrictifyCert, d: &MarkedComplex, dh: &MarkedComplex) -> Result<GHCheck> {
    gh_verify(&cert.witness, d, dh)
}

/// Audit record of a strictified chain map.
#[derive(Clone, Debug)]
pub struct MapCert {
    pub error_carriers: Vec<Vec<Carrier>>,
    pub error_dims: Vec<BigRational>,
    pub norms_before: Vec<BigInt>,
    pub norms_after: Vec<BigInt>,
    /// size₁(f̂_r − ι f_r).
    pub agreement: Vec<BigRational>,
    pub witness: GHWitness,
}

impl MapCert {
    pub fn norm_growth_ok(&self) -> bool {
        self.norms_before.iter().zip(&self.norms_after).all(|(a, b)| b <= &(a + 1))
    }
}

/// Strict chain map f̂: C → D̂ = D ⊕ E from an almost chain map f: C → D
/// extending the identity on Z^G.
pub fn strictify_map(f: &[MarkedMorphism], c: &MarkedComplex, d: &MarkedComplex) -> Result<(MarkedComplex, Vec<MarkedMorphism>, MapCert)> {
    if !c.is_strict() || !d.is_strict() {
        return Err(Error::NotStrict("strictify_map needs strict source and target".into()));
    }
    check_chain_map(f, c, d)?;
    let level = d.level().clone();
    let top = f.len() - 1;
    let zeta = need_aug(c)?;
    let eta = need_aug(d)?;

    // Δ₀ = η∘f₀ − ζ
    let delta0: Vec<Vec<BigInt>> = (0..c.module(0).rank())
        .map(|i| {
            eta.apply(&f[0].row(i))
                .iter()
                .zip(&zeta.values[i])
                .map(|(a, b)| level.coeffs().normalize(a - b))
                .collect()
        })
        .collect();
    let errors0 = supports(&level, &delta0);
    let d0h = d.module(0).direct_sum(&error_module(&level, &errors0)?)?;
    let mut values = eta.values.clone();
    values.extend(live(&errors0).into_iter().map(|i| delta0[i].clone()));
    let mut e_norms = vec![delta0.iter().flatten().map(|c| c.abs()).max().unwrap_or_default()];
    let mut modules = vec![d0h.clone()];
    let mut boundaries = Vec::new();
    let mut fhat = vec![twist(&f[0], &d0h, &errors0)?];
    let mut error_carriers = vec![errors0];

    for r in 0..top {
        let incl = marked_inclusion(d.module(r), &modules[r], &prefix(d.module(r).rank()))?;
        let upper = d.boundary(r + 1).then(&incl)?;
        let delta = f[r + 1].then(&upper)?.try_sub(&c.boundary(r + 1).then(&fhat[r])?)?;
        let errors: Vec<Carrier> = (0..delta.domain().rank()).map(|i| delta.row(i).supp1()).collect();
        let lower = error_rows(&delta, &errors)?;
        e_norms.push(lower.op_norm());
        let hat = stack(&upper, &lower)?;
        let module = hat.domain().clone();
        fhat.push(twist(&f[r + 1], &module, &errors)?);
        boundaries.push(hat);
        modules.push(module);
        error_carriers.push(errors);
    }
    let dh = MarkedComplex::new(modules, boundaries, Some(Augmentation::new(&d0h, values)?))?;
    let dt = MarkedComplex::new(d.modules()[..=top].to_vec(), d.boundaries()[..top].to_vec(), d.augmentation().cloned())?;
    let mut agreement = Vec::new();
    for r in 0..=top {
        let incl = marked_inclusion(d.module(r), dh.module(r), &prefix(d.module(r).rank()))?;
        agreement.push(fhat[r].try_sub(&f[r].then(&incl)?)?.size1());
    }
    let error_dims = error_carriers.iter().map(|es| es.iter().map(|c| level.measure(c)).sum()).collect();
    let witness = extension_witness(&dt, &dh, &[], &error_carriers, &e_norms)?;
    let cert = MapCert {
        error_carriers,
        error_dims,
        norms_before: f.iter().map(|g| g.op_norm()).collect(),
        norms_after: fhat.iter().map(|g| g.op_norm()).collect(),
        agreement,
        witness,
    };
    Ok((dh, fhat, cert))
}
