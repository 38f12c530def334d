//! Experiment orchestration: gradient tables along quotient chains and the
//! seeded verification suites.
//!
//! CSV columns, in order:
//! `level,order,degree,betti_q,betti_p,logtors,betti_q_norm,logtors_norm`
//! and, when an embedding is configured,
//! `dim_upper,coker_logtors_norm,lognorm_upper,verdict`.
//! Floats carry 12 significant digits.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::complexes::{induce_resolution, MarkedComplex};
use crate::constructions::{integer_towers, integers_embedding, integers_tile_for, tower_assembly, ResolutionData};
use crate::crossring::{
    marked_inclusion, rat_to_f64, Carrier, CrossedElt, Level, LevelSpace, MarkedModule, MarkedMorphism,
    ModuleVector,
};
use crate::discretize::{
    betti_mod_p, coinvariants_matrix, embedding_bounds, homology, log_torsion, shapiro_complex, HomologyResult, IntMatrix,
};
use crate::error::{Error, Result};
use crate::groups::{FinitePresentation, FiniteQuotient, QuotientChain, QuotientSpec, Word};
use crate::lognorm::{
    gabber_column_bound, gabber_split_bound, lognorm_exact, lognorm_of_decomposition, lognorm_upper, stability_check,
    trivial_split, Decomposition, Strategy, DEFAULT_EXACT_CAP,
};
use crate::strictify::{strictify_complex, verify_cert};

pub const SLACK: f64 = 1e-9;

/// `%.12g`-style formatting.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let e = x.abs().log10().floor() as i32;
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..12).contains(&e) {
        trim(format!("{:.*}", (11 - e).max(0) as usize, x))
    } else {
        let s = format!("{:.11e}", x);
        let (m, exp) = s.split_once('e').expect("exponent");
        format!("{}e{}", trim(m.to_string()), exp)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupSpec {
    Free { rank: usize },
    Integers,
    Surface { genus: usize },
    FreeAbelian { rank: usize },
    OneRelator { generators: usize, relator: String },
}

impl GroupSpec {
    pub fn presentation(&self) -> Result<FinitePresentation> {
        Ok(match self {
            GroupSpec::Free { rank } => FinitePresentation::free(*rank),
            GroupSpec::Integers => FinitePresentation::integers(),
            GroupSpec::Surface { genus } => FinitePresentation::surface(*genus),
            GroupSpec::FreeAbelian { rank } => FinitePresentation::free_abelian(*rank),
            GroupSpec::OneRelator { generators, relator } => FinitePresentation::new(*generators, vec![Word::parse(relator)?])?,
        })
    }

    pub fn resolution(&self) -> Result<ResolutionData> {
        Ok(match self {
            GroupSpec::Free { rank } => ResolutionData::free(*rank),
            GroupSpec::Integers => ResolutionData::integers(),
            GroupSpec::Surface { genus } => ResolutionData::surface(*genus),
            GroupSpec::FreeAbelian { rank } => ResolutionData::free_abelian(*rank),
            GroupSpec::OneRelator { generators, relator } => ResolutionData::one_relator(*generators, &Word::parse(relator)?),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingSpec {
    #[default]
    None,
    Induced,
    /// The Rokhlin resolution of ℤ with tile height N.
    Rokhlin { tile: usize },
    /// The tower-assembled cheap complex of ℤ for ε = "p/q".
    Cheap { eps: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: GroupSpec,
    /// "Z", or "F<p>" to add the mod-p Betti column.
    #[serde(default = "default_coeffs")]
    pub coefficients: String,
    pub degrees: Vec<usize>,
    pub chain: Vec<QuotientSpec>,
    #[serde(default)]
    pub embedding: EmbeddingSpec,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_coeffs() -> String {
    "Z".into()
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn prime(&self) -> Result<Option<u64>> {
        let c = self.coefficients.trim();
        if c == "Z" {
            return Ok(None);
        }
        let p = c
            .strip_prefix('F')
            .and_then(|s| s.trim_start_matches('_').parse::<u64>().ok())
            .filter(|&p| is_prime(p))
            .ok_or_else(|| Error::Config(format!("coefficients must be Z or F<p> with p prime, got {c:?}")))?;
        Ok(Some(p))
    }
}

/// Bound columns of one row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundColumns {
    /// dim(D_n), exact.
    pub dim_upper: String,
    pub rank_bound: usize,
    pub coker_logtors: f64,
    /// lognorm_upper(∂ᴰ_{n+1}), already divided by |G|.
    pub lognorm_upper: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientRow {
    pub level: usize,
    pub order: usize,
    pub degree: usize,
    pub betti_q: usize,
    pub betti_p: Option<usize>,
    pub torsion: Vec<String>,
    pub logtors: f64,
    pub betti_q_norm: f64,
    pub logtors_norm: f64,
    pub bounds: Option<BoundColumns>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientTable {
    pub rows: Vec<GradientRow>,
}

impl GradientTable {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.bounds.as_ref().map_or(true, |b| b.pass))
    }

    pub fn to_csv(&self) -> String {
        let with_bounds = self.rows.iter().any(|r| r.bounds.is_some());
        let mut s = String::from("level,order,degree,betti_q,betti_p,logtors,betti_q_norm,logtors_norm");
        if with_bounds {
            s.push_str(",dim_upper,coker_logtors_norm,lognorm_upper,verdict");
        }
        s.push('\n');
        for r in &self.rows {
            let bp = r.betti_p.map(|b| b.to_string()).unwrap_or_default();
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.level,
                r.order,
                r.degree,
                r.betti_q,
                bp,
                fmt_float(r.logtors),
                fmt_float(r.betti_q_norm),
                fmt_float(r.logtors_norm)
            );
            if let Some(b) = &r.bounds {
                let dim = b.rank_bound as f64 / r.order as f64;
                let _ = write!(
                    s,
                    ",{},{},{},{}",
                    fmt_float(dim),
                    fmt_float(b.coker_logtors / r.order as f64),
                    fmt_float(b.lognorm_upper),
                    if b.pass { "pass" } else { "FAIL" }
                );
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("table serializes")
    }
}

fn embedding_at(spec: &EmbeddingSpec, res: &ResolutionData, group: &GroupSpec, q: &FiniteQuotient) -> Result<Option<MarkedComplex>> {
    let cyclic_m = || -> Result<usize> {
        if *group != GroupSpec::Integers || *q != *LevelSpace::cyclic(q.order()).quotient() {
            return Err(Error::Config("rokhlin and cheap embeddings need ℤ with cyclic quotients t ↦ 1".into()));
        }
        Ok(q.order())
    };
    Ok(match spec {
        EmbeddingSpec::None => None,
        EmbeddingSpec::Induced => Some(induce_resolution(res, &LevelSpace::new(q.clone()))?),
        EmbeddingSpec::Rokhlin { tile } => {
            let m = cyclic_m()?;
            if *tile == 0 || *tile > m {
                return Err(Error::Config(format!("tile {tile} does not fit level ℤ/{m}")));
            }
            Some(integers_embedding(m, *tile)?.0.d)
        }
        EmbeddingSpec::Cheap { eps } => {
            let m = cyclic_m()?;
            let e: BigRational = eps.parse().map_err(|_| Error::Config(format!("bad ε {eps:?}")))?;
            if !e.is_positive() {
                return Err(Error::Config("ε must be positive".into()));
            }
            let n = integers_tile_for(&e);
            if n >= m {
                return Err(Error::Config(format!("ε = {eps} needs levels of order > {n}, got {m}")));
            }
            Some(tower_assembly(&LevelSpace::cyclic(m), res, &integer_towers(m, n)?, 1)?.d)
        }
    })
}

fn level_rows(cfg: &ExperimentConfig, res: &ResolutionData, p: Option<u64>, k: usize, q: &FiniteQuotient) -> Result<Vec<GradientRow>> {
    let c = shapiro_complex(res, q)?;
    let d = embedding_at(&cfg.embedding, res, &cfg.group, q)?;
    let order = q.order();
    let g = order as f64;
    let mut rows = Vec::new();
    for &n in &cfg.degrees {
        let h: HomologyResult = homology(&c, n);
        let betti_p = p.map(|p| betti_mod_p(&c, n, p));
        let bounds = d.as_ref().map(|d| {
            let (rank_bound, coker, ln) = embedding_bounds(d, n);
            let pass = h.betti_q <= rank_bound
                && betti_p.map_or(true, |b| b <= rank_bound)
                && h.logtors <= coker + SLACK
                && coker <= ln + SLACK;
            let dim_upper = if n <= d.top() { d.module(n).dim().to_string() } else { "0".into() };
            BoundColumns { dim_upper, rank_bound, coker_logtors: coker, lognorm_upper: ln / g, pass }
        });
        rows.push(GradientRow {
            level: k,
            order,
            degree: n,
            betti_q: h.betti_q,
            betti_p,
            torsion: h.torsion.iter().map(|t| t.to_string()).collect(),
            logtors: h.logtors,
            betti_q_norm: h.betti_q as f64 / g,
            logtors_norm: h.logtors / g,
            bounds,
        });
    }
    Ok(rows)
}

/// Levels run concurrently; rows come back in chain order.
pub fn run_gradient(cfg: &ExperimentConfig) -> Result<GradientTable> {
    let pres = cfg.group.presentation()?;
    let res = cfg.group.resolution()?;
    let p = cfg.prime()?;
    if cfg.degrees.is_empty() || cfg.chain.is_empty() {
        return Err(Error::Config("degrees and chain must be nonempty".into()));
    }
    let quotients = cfg.chain.iter().map(|s| s.build(&pres)).collect::<Result<Vec<_>>>()?;
    let chain = QuotientChain::new(quotients, None)?;
    let per_level: Vec<Vec<GradientRow>> = chain
        .quotients()
        .par_iter()
        .enumerate()
        .map(|(k, q)| level_rows(cfg, &res, p, k, q))
        .collect::<Result<_>>()?;
    Ok(GradientTable { rows: per_level.into_iter().flatten().collect() })
}

// ---------------------------------------------------------------------------
// random instances

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// A level of the given order: cyclic, or (ℤ/2)², S₃, ℤ/2×ℤ/4 for orders
/// 4, 6, 8 half of the time. Two free generators throughout.
pub fn random_level<R: Rng>(rng: &mut R, order: usize) -> Level {
    let q = match (order, rng.gen_bool(0.5)) {
        (4, true) => FiniteQuotient::abelian(2, &[2, 2]),
        (6, true) => FiniteQuotient::permutation(&FinitePresentation::free(2), 3, &[vec![1, 0, 2], vec![1, 2, 0]]),
        (8, true) => FiniteQuotient::abelian(2, &[2, 4]),
        (1, _) => Ok(FiniteQuotient::trivial(2)),
        _ => FiniteQuotient::cyclic(order, &[1, 0]),
    };
    LevelSpace::new(q.expect("small quotient"))
}

pub fn random_carrier<R: Rng>(rng: &mut R, n: usize, density: f64) -> Carrier {
    Carrier::from_indices(n, (0..n).filter(|_| rng.gen_bool(density)))
}

pub fn random_module<R: Rng>(rng: &mut R, level: &Level, max_rank: usize) -> MarkedModule {
    let k = rng.gen_range(1..=max_rank);
    let n = level.order();
    let carriers = (0..k)
        .map(|_| {
            let density = rng.gen_range(0.3..1.0);
            random_carrier(rng, n, density)
        })
        .collect();
    MarkedModule::new(level, carriers).expect("carriers fit the level")
}

/// Entries are sums of at most `terms` elements (λ, g) with λ in [−c, c].
pub fn random_morphism<R: Rng>(rng: &mut R, dom: &MarkedModule, cod: &MarkedModule, terms: usize, c: i64) -> MarkedMorphism {
    let level = dom.level();
    let n = level.order();
    let mut entries = Vec::with_capacity(dom.rank());
    for _ in 0..dom.rank() {
        let mut row = Vec::with_capacity(cod.rank());
        for _ in 0..cod.rank() {
            let mut z = CrossedElt::zero(level);
            if rng.gen_bool(0.7) {
                for _ in 0..rng.gen_range(1..=terms) {
                    let g = rng.gen_range(0..n);
                    let mut lam: Vec<(usize, BigInt)> = Vec::new();
                    for x in 0..n {
                        if rng.gen_bool(0.6) {
                            lam.push((x, BigInt::from(rng.gen_range(-c..=c))));
                        }
                    }
                    z = &z + &CrossedElt::term(level, &lam, g);
                }
            }
            row.push(z);
        }
        entries.push(row);
    }
    MarkedMorphism::new(dom, cod, entries).expect("random morphism")
}

pub fn random_int_matrix<R: Rng>(rng: &mut R, max_dim: usize, c: i64) -> IntMatrix {
    let r = rng.gen_range(1..=max_dim);
    let k = rng.gen_range(1..=max_dim);
    IntMatrix::from_rows((0..r).map(|_| (0..k).map(|_| BigInt::from(rng.gen_range(-c..=c))).collect()).collect())
        .expect("rectangular")
}

/// Strict complexes from standard resolutions at small abelian levels.
pub fn random_strict_complex<R: Rng>(rng: &mut R, max_order: usize) -> (MarkedComplex, ResolutionData, String) {
    let (name, res) = match rng.gen_range(0..4) {
        0 => ("Z", ResolutionData::integers()),
        1 => ("F2", ResolutionData::free(2)),
        2 => ("Z2", ResolutionData::free_abelian(2)),
        _ => ("T2", ResolutionData::surface(1)),
    };
    let m = rng.gen_range(2..=max_order);
    // the first generator maps to 1 so the images generate
    let images: Vec<i64> = (0..res.generators).map(|k| if k == 0 { 1 } else { rng.gen_range(0..m as i64) }).collect();
    let q = FiniteQuotient::cyclic(m, &images).expect("cyclic quotient");
    let c = induce_resolution(&res, &LevelSpace::new(q)).expect("induced resolution");
    (c, res, format!("{name} at Z/{m} images {images:?}"))
}

/// Adds one unit-row perturbation to the top boundary, so every defect has
/// size at most 1/|G|.
pub fn perturb_top<R: Rng>(rng: &mut R, d: &MarkedComplex) -> MarkedComplex {
    let top = d.top();
    let b = d.boundary(top);
    let i = rng.gen_range(0..b.domain().rank());
    let j = rng.gen_range(0..b.codomain().rank());
    let rows: Vec<usize> = b.domain().carrier(i).iter().collect();
    let cols: Vec<usize> = b.codomain().carrier(j).iter().collect();
    let mut out = b.clone();
    if let (Some(&x), Some(&y)) = (rows.choose(rng), cols.choose(rng)) {
        let mut e = out.entry(i, j).clone();
        let c = *[-2i64, -1, 1, 2].choose(rng).expect("nonempty");
        e.add_at(x, y, BigInt::from(c));
        out.set_entry(i, j, e);
    }
    let mut bs = d.boundaries().to_vec();
    bs[top - 1] = out;
    MarkedComplex::new(d.modules().to_vec(), bs, d.augmentation().cloned()).expect("same shapes")
}

// ---------------------------------------------------------------------------
// verify suites

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Opnorm,
    Gabber,
    Strictify,
    Rokhlin,
    Lognorm,
    Retract,
    Torsion,
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "opnorm" => Suite::Opnorm,
            "gabber" => Suite::Gabber,
            "strictify" => Suite::Strictify,
            "rokhlin" => Suite::Rokhlin,
            "lognorm" => Suite::Lognorm,
            "retract" => Suite::Retract,
            "torsion" => Suite::Torsion,
            _ => return Err(Error::Config(format!("unknown suite {s:?}"))),
        })
    }
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Opnorm, Suite::Gabber, Suite::Strictify, Suite::Rokhlin, Suite::Lognorm, Suite::Retract, Suite::Torsion];

    pub fn default_trials(self) -> usize {
        match self {
            Suite::Opnorm | Suite::Gabber => 500,
            Suite::Torsion | Suite::Lognorm => 200,
            Suite::Strictify | Suite::Retract => 100,
            Suite::Rokhlin => 60,
        }
    }
}

/// Outcome of one trial: failures carry a serialization of the case.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TrialOutcome {
    pub failure: Option<Value>,
    /// Counters kept alongside pass/fail, e.g. literal-form violations.
    pub notes: Vec<(String, u64)>,
}

impl TrialOutcome {
    fn check(cond: bool, case: impl FnOnce() -> Value) -> Self {
        TrialOutcome { failure: (!cond).then(case), notes: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub trials: usize,
    pub passed: usize,
    pub failures: Vec<Value>,
    pub notes: Vec<(String, u64)>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.passed == self.trials
    }
}

/// Runs `trials` seeded trials in parallel; trial k draws from stream k.
pub fn run_verify(suite: Suite, seed: u64, trials: usize) -> VerifyReport {
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = trial_rng(seed, k);
            let out = match suite {
                Suite::Opnorm => opnorm_trial(&mut rng, 1000),
                Suite::Gabber => gabber_trial(&mut rng),
                Suite::Strictify => strictify_trial(&mut rng),
                Suite::Rokhlin => rokhlin_trial(k),
                Suite::Lognorm => lognorm_trial(&mut rng),
                Suite::Retract => retract_trial(&mut rng),
                Suite::Torsion => torsion_trial(&mut rng),
            };
            out.unwrap_or_else(|e| TrialOutcome { failure: Some(json!({ "error": e.to_string() })), notes: Vec::new() })
        })
        .collect();
    let mut notes: Vec<(String, u64)> = Vec::new();
    let mut failures = Vec::new();
    for (k, o) in outcomes.iter().enumerate() {
        if let Some(f) = &o.failure {
            failures.push(json!({ "trial": k, "seed": seed, "case": f }));
        }
        for (name, c) in &o.notes {
            match notes.iter_mut().find(|(n, _)| n == name) {
                Some(e) => e.1 += c,
                None => notes.push((name.clone(), *c)),
            }
        }
    }
    VerifyReport { suite, seed, trials, passed: trials - failures.len(), failures, notes }
}

fn atom_vector(m: &MarkedModule, i: usize, u: usize) -> ModuleVector {
    let level = m.level();
    let mut comps = vec![CrossedElt::zero(level); m.rank()];
    comps[i] = CrossedElt::chi(level, &Carrier::from_indices(level.order(), [u]));
    ModuleVector::new(m, comps).expect("atom")
}

/// op_norm against the maximum over atoms and against random inputs.
pub fn opnorm_trial<R: Rng>(rng: &mut R, inputs: usize) -> Result<TrialOutcome> {
    let order = rng.gen_range(1..=8);
    let level = random_level(rng, order);
    let dom = random_module(rng, &level, 3);
    let cod = random_module(rng, &level, 3);
    let f = random_morphism(rng, &dom, &cod, 4, 5);
    let norm = BigRational::from(f.op_norm());
    let mut brute = BigRational::zero();
    let mut integral = true;
    for (i, a) in dom.carriers().iter().enumerate() {
        for u in a.iter() {
            let e = atom_vector(&dom, i, u);
            let r = f.apply(&e)?.l1() / e.l1();
            integral &= r.is_integer();
            brute = brute.max(r);
        }
    }
    let mut worst = BigRational::zero();
    for _ in 0..inputs {
        let comps = dom
            .carriers()
            .iter()
            .map(|a| {
                let cols: Vec<usize> = a.iter().collect();
                let mut z = CrossedElt::zero(&level);
                if !cols.is_empty() {
                    for _ in 0..rng.gen_range(0..=3) {
                        let x = rng.gen_range(0..order);
                        z.add_at(x, *cols.choose(rng).expect("nonempty"), BigInt::from(rng.gen_range(-5..=5)));
                    }
                }
                z
            })
            .collect();
        let v = ModuleVector::new(&dom, comps)?;
        if v.is_zero() {
            continue;
        }
        worst = worst.max(f.apply(&v)?.l1() / v.l1());
    }
    Ok(TrialOutcome::check(integral && brute == norm && worst <= norm, || {
        json!({ "morphism": f.to_json(), "op_norm": norm.to_string(), "brute": brute.to_string(), "worst_ratio": worst.to_string() })
    }))
}

pub fn gabber_trial<R: Rng>(rng: &mut R) -> Result<TrialOutcome> {
    let a = random_int_matrix(rng, 8, 9);
    let t = log_torsion(&a);
    let col = gabber_column_bound(&a.data);
    let split = gabber_split_bound(&a.data, &trivial_split(&a.data))?;
    Ok(TrialOutcome::check(t <= col + SLACK && col <= split + SLACK, || {
        json!({ "matrix": a.to_coo_json(), "logtors": t, "column_bound": col, "split_bound": split })
    }))
}

pub fn torsion_trial<R: Rng>(rng: &mut R) -> Result<TrialOutcome> {
    let order = *[4, 6, 8].choose(rng).expect("nonempty");
    let level = random_level(rng, order);
    let dom = random_module(rng, &level, 3);
    let cod = random_module(rng, &level, 3);
    let f = random_morphism(rng, &dom, &cod, 4, 3);
    let t = log_torsion(&coinvariants_matrix(&f));
    let (ln, _) = lognorm_of_decomposition(&f, &Decomposition::atoms(&f))?;
    let bound = order as f64 * ln;
    Ok(TrialOutcome::check(t <= bound + SLACK, || json!({ "morphism": f.to_json(), "logtors": t, "bound": bound })))
}

/// Strict output, inclusion defects within (1 + rank·N̲₁)·δ, a verifying
/// witness, and identity on the unperturbed complex.
pub fn strictify_trial<R: Rng>(rng: &mut R) -> Result<TrialOutcome> {
    let (c, _, name) = random_strict_complex(rng, 8);
    let (same, _) = strictify_complex(&c, &c.canonical_witness())?;
    let d = perturb_top(rng, &c);
    let z = d.canonical_witness();
    let rep = d.defect_report(&z);
    let delta_ok = rep.overall <= BigRational::new(BigInt::one(), BigInt::from(c.level().order()));
    let (dh, cert) = strictify_complex(&d, &z)?;
    let gh = verify_cert(&cert, &d, &dh)?;
    let incl_ok = cert.inclusion_defects[0].is_zero()
        && cert.degree_bounds.iter().enumerate().all(|(r, b)| cert.inclusion_defects.get(r + 1).map_or(true, |e| e <= b));
    let ok = same == c && delta_ok && dh.is_strict() && incl_ok && cert.recursive_bounds_hold() && gh.ok;
    Ok(TrialOutcome::check(ok, || {
        json!({
            "complex": name,
            "identity_on_strict": same == c,
            "delta": rep.overall.to_string(),
            "strict": dh.is_strict(),
            "certificate": cert.to_json(),
            "gh_ok": gh.ok,
        })
    }))
}

/// The (M, N) grid is walked deterministically: N = 2..=10, M = N..=5N.
pub fn rokhlin_grid() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for n in 2..=10 {
        for m in (n..=5 * n).step_by(n.max(3) / 2) {
            v.push((m, n));
        }
    }
    v
}

pub fn rokhlin_trial(k: usize) -> Result<TrialOutcome> {
    let grid = rokhlin_grid();
    let (m, n) = grid[k % grid.len()];
    let (_, rep) = integers_embedding(m, n)?;
    Ok(TrialOutcome::check(rep.all_pass(), || {
        let failed: Vec<&String> = rep.checks.iter().filter(|(_, ok)| !ok).map(|(s, _)| s).collect();
        json!({ "modulus": m, "tile": n, "failed": failed })
    }))
}

/// Dimension estimates, subadditivity over a domain split, marked-inclusion
/// invariance and almost-equality stability for lognorm_exact.
pub fn lognorm_trial<R: Rng>(rng: &mut R) -> Result<TrialOutcome> {
    let order = rng.gen_range(2..=6);
    let level = random_level(rng, order);
    let dom = loop {
        let m = random_module(rng, &level, 2);
        if m.atoms() <= DEFAULT_EXACT_CAP {
            break m;
        }
    };
    let cod = random_module(rng, &level, 2);
    let f = random_morphism(rng, &dom, &cod, 3, 4);
    let cap = DEFAULT_EXACT_CAP;
    let (lf, _) = lognorm_exact(&f, cap)?;
    let lp = crate::crossring::log_plus(crate::crossring::big_to_f64(&f.op_norm()));
    let dim_ok = lf <= rat_to_f64(&dom.dim()).min(rat_to_f64(&f.marked_rank())) * lp + SLACK
        && [Strategy::Atoms, Strategy::Greedy, Strategy::Block].iter().all(|&s| lf <= lognorm_upper(&f, s).0 + SLACK);

    let split: Vec<Carrier> = dom.carriers().iter().map(|a| Carrier::from_indices(order, a.iter().filter(|_| rng.gen_bool(0.5)))).collect();
    let rest: Vec<Carrier> = dom.carriers().iter().zip(&split).map(|(a, s)| a.difference(s)).collect();
    let (l1, _) = lognorm_exact(&f.restrict_domain(&split)?, cap)?;
    let (l2, _) = lognorm_exact(&f.restrict_domain(&rest)?, cap)?;
    let sub_ok = lf <= l1 + l2 + SLACK && l1 <= lf + SLACK && l2 <= lf + SLACK;

    // codomain ↪ codomain ⊕ extra, with carriers grown where possible
    let extra = random_module(rng, &level, 1);
    let grown: Vec<Carrier> = cod.carriers().iter().map(|b| b.union(&random_carrier(rng, order, 0.3))).collect();
    let big = MarkedModule::new(&level, grown)?.direct_sum(&extra)?;
    let sigma: Vec<usize> = (0..cod.rank()).collect();
    let j = marked_inclusion(&cod, &big, &sigma)?;
    let (lj, _) = lognorm_exact(&f.then(&j)?, cap)?;
    let incl_ok = (lj - lf).abs() <= SLACK;

    let mut g = f.clone();
    for _ in 0..rng.gen_range(1..=2) {
        let i = rng.gen_range(0..dom.rank());
        let jj = rng.gen_range(0..cod.rank());
        let rows: Vec<usize> = dom.carrier(i).iter().collect();
        let cols: Vec<usize> = cod.carrier(jj).iter().collect();
        if let (Some(&x), Some(&y)) = (rows.choose(rng), cols.choose(rng)) {
            let mut e = g.entry(i, jj).clone();
            e.add_at(x, y, BigInt::from(rng.gen_range(-20..=20)));
            g.set_entry(i, jj, e);
        }
    }
    let st = stability_check(&f, &g, cap)?;
    let stab_ok = st.restricted_holds(SLACK);
    let mut out = TrialOutcome::check(dim_ok && sub_ok && incl_ok && stab_ok, || {
        json!({
            "morphism": f.to_json(),
            "lognorm": lf,
            "dimension_ok": dim_ok,
            "subadditive_ok": sub_ok,
            "inclusion_ok": incl_ok,
            "stability_ok": stab_ok,
        })
    });
    out.notes.push(("literal_form_violations".into(), u64::from(!st.difference_holds(SLACK))));
    Ok(out)
}

/// Retract inequalities for induced embeddings at random cyclic levels,
/// plus Rokhlin and cheap embeddings for ℤ.
pub fn retract_trial<R: Rng>(rng: &mut R) -> Result<TrialOutcome> {
    let (c, res, name) = random_strict_complex(rng, 8);
    let mut checks = Vec::new();
    for n in 0..=c.top() + 1 {
        checks.push((name.clone(), crate::discretize::retract_inequality_check(&res, &c, n)?));
    }
    let m = rng.gen_range(2..=24);
    let tile = rng.gen_range(1..=m.min(6)).max(2).min(m);
    let (ir, _) = integers_embedding(m, tile)?;
    let eps = BigRational::new(BigInt::one(), BigInt::from(*[1i64, 2, 4].choose(rng).expect("nonempty")));
    let nt = integers_tile_for(&eps);
    let cheap = if nt < m { Some(tower_assembly(&LevelSpace::cyclic(m), &ResolutionData::integers(), &integer_towers(m, nt)?, 1)?.d) } else { None };
    for n in 0..=2 {
        checks.push((format!("rokhlin M={m} N={tile}"), crate::discretize::retract_inequality_check(&ResolutionData::integers(), &ir.d, n)?));
        if let Some(d) = &cheap {
            checks.push((format!("cheap M={m} eps={eps}"), crate::discretize::retract_inequality_check(&ResolutionData::integers(), d, n)?));
        }
    }
    let bad: Vec<Value> = checks
        .iter()
        .filter(|(_, r)| !r.holds(SLACK))
        .map(|(s, r)| json!({ "case": s, "report": serde_json::to_value(r).expect("report") }))
        .collect();
    Ok(TrialOutcome::check(bad.is_empty(), || json!(bad)))
}

// ---------------------------------------------------------------------------
// single-shot commands

/// `{"generators": k, "quotient": <quotient spec>, "morphism": <morphism>}`
/// over the free group on k generators.
#[derive(Clone, Debug, Deserialize)]
pub struct MorphismInput {
    pub generators: usize,
    pub quotient: QuotientSpec,
    pub morphism: Value,
}

pub fn load_morphism(s: &str) -> Result<MarkedMorphism> {
    let input: MorphismInput = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
    let q = input.quotient.build(&FinitePresentation::free(input.generators))?;
    MarkedMorphism::from_json(&LevelSpace::new(q), &input.morphism)
}

/// Value and certificate for `atoms`, `greedy`, `block` or `exact`.
pub fn lognorm_report(f: &MarkedMorphism, strategy: &str, cap: usize) -> Result<Value> {
    let (value, cert) = if strategy == "exact" {
        lognorm_exact(f, cap)?
    } else {
        lognorm_upper(f, strategy.parse::<Strategy>()?)
    };
    Ok(json!({ "strategy": strategy, "value": value, "certificate": serde_json::to_value(&cert)? }))
}

pub fn rokhlin_report(m: usize, n: usize, embedding: bool) -> Result<(bool, Value)> {
    let (ir, rep) = integers_embedding(m, n)?;
    let mut out = json!({
        "modulus": m,
        "tile": n,
        "checks": rep.checks.iter().map(|(name, ok)| json!({ "check": name, "ok": ok })).collect::<Vec<_>>(),
        "dim_d0": rep.dim_d0.to_string(),
        "dim_d1": rep.dim_d1.to_string(),
        "dim_bound": rep.dim_bound.to_string(),
        "norms": {
            "d1": rep.norm_d1.to_string(), "f0": rep.norm_f0.to_string(), "f1": rep.norm_f1.to_string(),
            "r0": rep.norm_r0.to_string(), "r1": rep.norm_r1.to_string(), "h0": rep.norm_h0.to_string(),
        },
    });
    if embedding {
        out["complex"] = ir.d.to_json();
        out["f"] = json!(ir.f.iter().map(|f| f.to_json()).collect::<Vec<_>>());
        out["r"] = json!(ir.r.iter().map(|f| f.to_json()).collect::<Vec<_>>());
        out["h0"] = ir.h0.to_json();
    }
    Ok((rep.all_pass(), out))
}

/// Perturbs ∂₁ of the ℤ resolution at ℤ/M on one atom and strictifies.
pub fn strictify_demo(m: usize, point: usize) -> Result<(bool, Value)> {
    if m < 2 || point >= m {
        return Err(Error::Config(format!("need M ≥ 2 and a point below M, got M = {m}, point = {point}")));
    }
    let level = LevelSpace::cyclic(m);
    let c = induce_resolution(&ResolutionData::integers(), &level)?;
    let mut e = c.boundary(1).entry(0, 0).clone();
    e.add_at(point, point, BigInt::one());
    let d1 = MarkedMorphism::new(c.module(1), c.module(0), vec![vec![e]])?;
    let d = MarkedComplex::new(c.modules().to_vec(), vec![d1], c.augmentation().cloned())?;
    let (dh, cert) = strictify_complex(&d, &d.canonical_witness())?;
    let gh = verify_cert(&cert, &d, &dh)?;
    let ok = dh.is_strict() && gh.ok && cert.recursive_bounds_hold() && cert.degree_bounds_hold();
    Ok((ok, json!({ "strict": dh.is_strict(), "witness_ok": gh.ok, "certificate": cert.to_json(), "output": dh.to_json() })))
}
