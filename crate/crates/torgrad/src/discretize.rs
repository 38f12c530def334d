//! Coinvariants, Shapiro complexes and integer homology.
//!
//! Matrices act on column vectors: column (i, u) of a coinvariants matrix is
//! the image of the basis vector e_{(i,u)}.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::constructions::ResolutionData;
use crate::complexes::MarkedComplex;
use crate::crossring::{big_to_f64, MarkedModule, MarkedMorphism};
use crate::error::{Error, Result};
use crate::groups::FiniteQuotient;
use crate::jsonint::Int;
use crate::lognorm::{lognorm_upper, Strategy};

/// Dense integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    #[serde(with = "crate::jsonint::rows")]
    pub data: Vec<Vec<BigInt>>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![vec![BigInt::zero(); cols]; rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i][i] = BigInt::one();
        }
        m
    }

    pub fn from_rows(data: Vec<Vec<BigInt>>) -> Result<Self> {
        let rows = data.len();
        let cols = data.first().map_or(0, |r| r.len());
        if data.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged matrix".into()));
        }
        Ok(IntMatrix { rows, cols, data })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        IntMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i][j]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.iter().all(Zero::is_zero))
    }

    pub fn mul(&self, o: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != o.rows {
            return Err(Error::Shape(format!("{}×{} times {}×{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut out = IntMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for (k, a) in self.data[i].iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o.data[k][j];
                    if !b.is_zero() {
                        out.data[i][j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// max over columns of the ℓ¹ norm, the operator norm on ℓ¹.
    pub fn column_l1(&self) -> BigInt {
        (0..self.cols)
            .map(|j| self.data.iter().map(|r| r[j].abs()).sum::<BigInt>())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// COO form {"rows", "cols", "entries": [[i, j, v], ...]}.
    pub fn to_coo_json(&self) -> serde_json::Value {
        let mut entries = Vec::new();
        for (i, r) in self.data.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                if !v.is_zero() {
                    entries.push(serde_json::json!([i, j, Int(v.clone())]));
                }
            }
        }
        serde_json::json!({ "rows": self.rows, "cols": self.cols, "entries": entries })
    }

    /// Accepts the dense form (a list of rows of integers) or the COO form.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        if let Some(rows) = v.as_array() {
            let data = rows
                .iter()
                .map(|r| r.as_array().ok_or_else(|| Error::Parse("matrix row".into()))?.iter().map(json_int).collect())
                .collect::<Result<Vec<Vec<BigInt>>>>()?;
            return IntMatrix::from_rows(data);
        }
        let dim = |k: &str| v.get(k).and_then(|x| x.as_u64()).map(|x| x as usize).ok_or_else(|| Error::Parse(format!("matrix {k}")));
        let mut m = IntMatrix::zeros(dim("rows")?, dim("cols")?);
        for e in v.get("entries").and_then(|e| e.as_array()).ok_or_else(|| Error::Parse("matrix entries".into()))? {
            let t = e.as_array().filter(|t| t.len() == 3).ok_or_else(|| Error::Parse("COO triple".into()))?;
            let i = t[0].as_u64().ok_or_else(|| Error::Parse("COO row".into()))? as usize;
            let j = t[1].as_u64().ok_or_else(|| Error::Parse("COO col".into()))? as usize;
            if i >= m.rows || j >= m.cols {
                return Err(Error::Shape(format!("COO entry ({i}, {j}) out of range")));
            }
            m.data[i][j] += json_int(&t[2])?;
        }
        Ok(m)
    }
}

fn json_int(v: &serde_json::Value) -> Result<BigInt> {
    Int::deserialize(v).map(|i| i.0).map_err(|_| Error::Parse(format!("not an integer: {v}")))
}

/// Natural log of a positive big integer without overflowing f64.
pub fn ln_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return big_to_f64(x).ln();
    }
    let s = bits - 64;
    big_to_f64(&(x >> s)).ln() + s as f64 * std::f64::consts::LN_2
}

/// Basis {(i, u) : u ∈ Aᵢ} of M_Γ, in summand-major order.
pub fn coinvariants_basis(m: &MarkedModule) -> Vec<(usize, usize)> {
    m.carriers().iter().enumerate().flat_map(|(i, a)| a.iter().map(move |u| (i, u))).collect()
}

pub fn coinvariants_rank(m: &MarkedModule) -> usize {
    m.carriers().iter().map(|a| a.count()).sum()
}

/// Entry at row (j, v), column (i, u) is f_ij(u, v).
pub fn coinvariants_matrix(f: &MarkedMorphism) -> IntMatrix {
    let dom = coinvariants_basis(f.domain());
    let cod = coinvariants_basis(f.codomain());
    let row_of: BTreeMap<(usize, usize), usize> = cod.iter().enumerate().map(|(k, &b)| (b, k)).collect();
    let mut m = IntMatrix::zeros(cod.len(), dom.len());
    for (col, &(i, u)) in dom.iter().enumerate() {
        for j in 0..f.codomain().rank() {
            for (&(x, v), c) in f.entry(i, j).pairs() {
                if x == u {
                    if let Some(&row) = row_of.get(&(j, v)) {
                        m.data[row][col] += c;
                    }
                }
            }
        }
    }
    m
}

/// Based free chain complex over ℤ; `boundaries[r-1]` is ∂_r : C_r → C_{r-1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZComplex {
    pub ranks: Vec<usize>,
    pub boundaries: Vec<IntMatrix>,
}

impl ZComplex {
    pub fn new(ranks: Vec<usize>, boundaries: Vec<IntMatrix>) -> Result<Self> {
        if ranks.is_empty() || boundaries.len() + 1 != ranks.len() {
            return Err(Error::Shape("one boundary per positive degree".into()));
        }
        for (r, b) in boundaries.iter().enumerate() {
            if b.rows != ranks[r] || b.cols != ranks[r + 1] {
                return Err(Error::Shape(format!("∂_{} is {}×{}", r + 1, b.rows, b.cols)));
            }
        }
        for r in 1..boundaries.len() {
            if !boundaries[r - 1].mul(&boundaries[r])?.is_zero() {
                return Err(Error::NotComplex(format!("∂_{}∂_{} ≠ 0", r, r + 1)));
            }
        }
        Ok(ZComplex { ranks, boundaries })
    }

    pub fn top(&self) -> usize {
        self.ranks.len() - 1
    }

    /// ∂_r, or a zero map outside the stored range.
    pub fn boundary(&self, r: usize) -> IntMatrix {
        if r >= 1 && r <= self.top() {
            self.boundaries[r - 1].clone()
        } else {
            IntMatrix::zeros(self.rank(r.wrapping_sub(1)), self.rank(r))
        }
    }

    pub fn rank(&self, r: usize) -> usize {
        self.ranks.get(r).copied().unwrap_or(0)
    }

    /// Coinvariants of a marked complex, degreewise.
    pub fn from_marked(c: &MarkedComplex) -> Result<Self> {
        let ranks = c.modules().iter().map(coinvariants_rank).collect();
        ZComplex::new(ranks, c.boundaries().iter().map(coinvariants_matrix).collect())
    }
}

/// Replaces each γ in the resolution matrices by its permutation
/// e_u ↦ e_{γ⁻¹u} on ℤ[G].
pub fn shapiro_complex(res: &ResolutionData, q: &FiniteQuotient) -> Result<ZComplex> {
    res.check_at(q)?;
    let n = q.order();
    let ranks: Vec<usize> = res.ranks.iter().map(|k| k * n).collect();
    let mut boundaries = Vec::new();
    for (r, lam) in res.boundaries.iter().enumerate() {
        let mut m = IntMatrix::zeros(ranks[r], ranks[r + 1]);
        for (i, row) in lam.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                for (w, c) in x.terms() {
                    let gi = q.inv(q.evaluate(w));
                    for u in 0..n {
                        m.data[j * n + q.mul(gi, u)][i * n + u] += c;
                    }
                }
            }
        }
        boundaries.push(m);
    }
    ZComplex::new(ranks, boundaries)
}

type SparseRow = BTreeMap<usize, BigInt>;

/// Nonzero invariant factors d₁ | d₂ | … of A, all positive.
pub fn smith_normal_form(a: &IntMatrix) -> Vec<BigInt> {
    let (mut diag, rest) = unit_pivot_phase(a);
    diag.extend(dense_snf(rest));
    normalize_diagonal(diag)
}

/// Sparse elimination on ±1 pivots with a Markowitz choice. Returns the
/// unit factors found and the dense remainder.
fn unit_pivot_phase(a: &IntMatrix) -> (Vec<BigInt>, Vec<Vec<BigInt>>) {
    let mut rows: Vec<SparseRow> = a
        .data
        .iter()
        .map(|r| r.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(j, v)| (j, v.clone())).collect())
        .collect();
    let mut col_rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); a.cols];
    for (i, r) in rows.iter().enumerate() {
        for &j in r.keys() {
            col_rows[j].insert(i);
        }
    }
    let mut live_rows: BTreeSet<usize> = (0..a.rows).filter(|&i| !rows[i].is_empty()).collect();
    let mut dead_cols = vec![false; a.cols];
    let mut units = Vec::new();
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for &i in &live_rows {
            let rl = rows[i].len() - 1;
            for (&j, v) in &rows[i] {
                if v.is_one() || (-v).is_one() {
                    let score = rl * (col_rows[j].len() - 1);
                    if best.map_or(true, |b| score < b.0) {
                        best = Some((score, i, j));
                    }
                }
            }
            if best.map_or(false, |b| b.0 == 0) {
                break;
            }
        }
        let Some((_, p, c)) = best else { break };
        let prow = std::mem::take(&mut rows[p]);
        let pv = prow[&c].clone();
        for &j in prow.keys() {
            col_rows[j].remove(&p);
        }
        live_rows.remove(&p);
        let targets: Vec<usize> = col_rows[c].iter().copied().collect();
        for t in targets {
            // row_t -= (a_tc / pv)·row_p, and pv = ±1
            let q = &rows[t][&c] * &pv;
            for (&j, v) in &prow {
                let e = rows[t].entry(j).or_insert_with(BigInt::zero);
                *e -= &q * v;
                if e.is_zero() {
                    rows[t].remove(&j);
                    col_rows[j].remove(&t);
                } else {
                    col_rows[j].insert(t);
                }
            }
            if rows[t].is_empty() {
                live_rows.remove(&t);
            }
        }
        // Column c is now zero off the pivot; clearing the pivot row by column
        // operations touches nothing else.
        dead_cols[c] = true;
        units.push(BigInt::one());
    }
    let cols: Vec<usize> = (0..a.cols).filter(|&j| !dead_cols[j] && !col_rows[j].is_empty()).collect();
    let rest = live_rows
        .iter()
        .map(|&i| cols.iter().map(|j| rows[i].get(j).cloned().unwrap_or_else(BigInt::zero)).collect())
        .collect();
    (units, rest)
}

/// Diagonalizes by row and column operations with minimal-|·| pivots.
fn dense_snf(mut m: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !m[i][j].is_zero() && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        m.swap(t, bi);
        for r in m.iter_mut() {
            r.swap(t, bj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if !m[i][t].is_zero() {
                    let q = m[i][t].div_floor(&m[t][t]);
                    for j in t..cols {
                        let s = &q * &m[t][j];
                        m[i][j] -= s;
                    }
                    dirty |= !m[i][t].is_zero();
                }
            }
            for j in t + 1..cols {
                if !m[t][j].is_zero() {
                    let q = m[t][j].div_floor(&m[t][t]);
                    for i in t..rows {
                        let s = &q * &m[i][t];
                        m[i][j] -= s;
                    }
                    dirty |= !m[t][j].is_zero();
                }
            }
            if dirty {
                // A smaller remainder appeared in the pivot cross; move it in.
                let mut best = (t, t);
                for i in t..rows {
                    if !m[i][t].is_zero() && m[i][t].abs() < m[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t..cols {
                    if !m[t][j].is_zero() && m[t][j].abs() < m[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                m.swap(t, best.0);
                for r in m.iter_mut() {
                    r.swap(t, best.1);
                }
                continue;
            }
            break;
        }
        diag.push(m[t][t].abs());
        t += 1;
    }
    diag
}

/// Replaces pairs (a, b) by (gcd, lcm) until the list is a divisibility chain.
fn normalize_diagonal(mut d: Vec<BigInt>) -> Vec<BigInt> {
    d.retain(|x| !x.is_zero());
    for x in d.iter_mut() {
        *x = x.abs();
    }
    d.sort();
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            if !(&d[j] % &d[i]).is_zero() {
                let g = d[i].gcd(&d[j]);
                let l = d[i].lcm(&d[j]);
                d[i] = g;
                d[j] = l;
            }
        }
    }
    d
}

/// Torsion invariant factors (those > 1) of coker A.
pub fn cokernel_torsion(a: &IntMatrix) -> Vec<BigInt> {
    smith_normal_form(a).into_iter().filter(|d| !d.is_one()).collect()
}

/// log # tors(coker A).
pub fn log_torsion(a: &IntMatrix) -> f64 {
    cokernel_torsion(a).iter().map(ln_big).sum()
}

pub fn rank_q(a: &IntMatrix) -> usize {
    smith_normal_form(a).len()
}

/// Rank over 𝔽_p by sparse elimination.
pub fn rank_mod_p(a: &IntMatrix, p: u64) -> usize {
    let pb = BigInt::from(p);
    let reduce = |x: &BigInt| -> u64 { x.mod_floor(&pb).to_u64().expect("residue") };
    let mut rows: Vec<BTreeMap<usize, u64>> = a
        .data
        .iter()
        .map(|r| r.iter().enumerate().map(|(j, v)| (j, reduce(v))).filter(|(_, v)| *v != 0).collect())
        .collect();
    let mut pivots: BTreeMap<usize, BTreeMap<usize, u64>> = BTreeMap::new();
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % p as u128) as u64;
    let inv = |a: u64| {
        let (mut r, mut base, mut e) = (1u64, a, p - 2);
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, base);
            }
            base = mul(base, base);
            e >>= 1;
        }
        r
    };
    for row in rows.iter_mut() {
        let mut row = std::mem::take(row);
        while let Some((&c, &v)) = row.iter().next() {
            match pivots.get(&c) {
                Some(prow) => {
                    // prow is monic at c
                    for (&j, &w) in prow {
                        let e = row.entry(j).or_insert(0);
                        *e = (*e + p - mul(v, w)) % p;
                        if *e == 0 {
                            row.remove(&j);
                        }
                    }
                }
                None => {
                    let iv = inv(v);
                    let monic = row.iter().map(|(&j, &w)| (j, mul(w, iv))).collect();
                    pivots.insert(c, monic);
                    break;
                }
            }
        }
    }
    pivots.len()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomologyResult {
    pub degree: usize,
    pub betti_q: usize,
    #[serde(with = "crate::jsonint::seq")]
    pub torsion: Vec<BigInt>,
    pub logtors: f64,
}

impl HomologyResult {
    fn build(degree: usize, betti_q: usize, torsion: Vec<BigInt>) -> Self {
        let logtors = torsion.iter().map(ln_big).sum();
        HomologyResult { degree, betti_q, torsion, logtors }
    }
}

/// H_n via the SNF of ∂_{n+1}. C_n / ker ∂_n embeds in the free module
/// C_{n-1}, so tors H_n = tors coker ∂_{n+1}.
pub fn homology(c: &ZComplex, n: usize) -> HomologyResult {
    let dn = c.boundary(n);
    let up = smith_normal_form(&c.boundary(n + 1));
    let betti = c.rank(n) - rank_q(&dn) - up.len();
    HomologyResult::build(n, betti, up.into_iter().filter(|d| !d.is_one()).collect())
}

/// H_n = ker ∂_n / im ∂_{n+1} computed on an explicit basis of the kernel
/// lattice.
pub fn homology_via_kernel(c: &ZComplex, n: usize) -> HomologyResult {
    let (kernel_rows, k) = kernel_coordinates(&c.boundary(n));
    let up = c.boundary(n + 1);
    // coordinates of im ∂_{n+1} in the kernel basis: rows of V on the kernel
    let coords = IntMatrix { rows: k, cols: kernel_rows.cols, data: kernel_rows.data };
    let b = coords.mul(&up).expect("kernel coordinates");
    let snf = smith_normal_form(&b);
    HomologyResult::build(n, k - snf.len(), snf.into_iter().filter(|d| !d.is_one()).collect())
}

/// Column-reduces A·U = H with U unimodular and tracks V = U⁻¹. The last k
/// columns of U span ker A; the matching k rows of V give coordinates in
/// that basis. Returns those rows and k.
fn kernel_coordinates(a: &IntMatrix) -> (IntMatrix, usize) {
    let n = a.cols;
    let mut h = a.data.clone();
    let mut v = IntMatrix::identity(n).data;
    let mut lead = 0;
    for r in 0..a.rows {
        if lead == n {
            break;
        }
        loop {
            let piv = (lead..n).filter(|&j| !h[r][j].is_zero()).min_by_key(|&j| h[r][j].abs());
            let Some(p) = piv else { break };
            swap_cols(&mut h, lead, p);
            v.swap(lead, p);
            let mut done = true;
            for j in lead + 1..n {
                if !h[r][j].is_zero() {
                    let q = h[r][j].div_floor(&h[r][lead]);
                    // col_j -= q·col_lead, so row_lead of V gains q·row_j
                    for row in h.iter_mut() {
                        let s = &q * &row[lead];
                        row[j] -= s;
                    }
                    let add: Vec<BigInt> = v[j].iter().map(|x| &q * x).collect();
                    for (x, y) in v[lead].iter_mut().zip(add) {
                        *x += y;
                    }
                    done &= h[r][j].is_zero();
                }
            }
            if done {
                lead += 1;
                break;
            }
        }
    }
    let k = n - lead;
    (IntMatrix { rows: k, cols: n, data: v[lead..].to_vec() }, k)
}

fn swap_cols(m: &mut [Vec<BigInt>], a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

/// dim over 𝔽_p of H_n(C ⊗ 𝔽_p).
pub fn betti_mod_p(c: &ZComplex, n: usize, p: u64) -> usize {
    c.rank(n) - rank_mod_p(&c.boundary(n), p) - rank_mod_p(&c.boundary(n + 1), p)
}

/// Both sides of the retract inequalities at one degree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RetractReport {
    pub degree: usize,
    pub order: usize,
    pub betti: usize,
    /// |G|·dim(D_n), the rank of D_n(i)_Γ.
    pub rank_bound: usize,
    pub logtors: f64,
    /// log # tors(D_n(i)_Γ / im ∂_{n+1}(i)_Γ).
    pub cokernel_logtors: f64,
    /// |G|·lognorm_upper(∂_{n+1}) with the greedy strategy.
    pub lognorm_bound: f64,
}

impl RetractReport {
    pub fn rank_holds(&self) -> bool {
        self.betti <= self.rank_bound
    }

    pub fn torsion_holds(&self, slack: f64) -> bool {
        self.logtors <= self.cokernel_logtors + slack && self.cokernel_logtors <= self.lognorm_bound + slack
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.rank_holds() && self.torsion_holds(slack)
    }
}

/// Right-hand sides at degree n for a complex D: the rank of D_n(i)_Γ,
/// log # tors(D_n(i)_Γ / im ∂_{n+1}(i)_Γ) and |G|·lognorm_upper(∂_{n+1}).
/// Degrees beyond D count as the zero module.
pub fn embedding_bounds(d: &MarkedComplex, n: usize) -> (usize, f64, f64) {
    if n > d.top() {
        return (0, 0.0, 0.0);
    }
    let rank = coinvariants_rank(d.module(n));
    if n == d.top() {
        return (rank, 0.0, 0.0);
    }
    let b = d.boundary(n + 1);
    let (ln, _) = lognorm_upper(b, Strategy::Greedy);
    (rank, log_torsion(&coinvariants_matrix(b)), d.level().order() as f64 * ln)
}

/// Compares H_n(Γᵢ) from the Shapiro complex of `res` with the coinvariants
/// of D at the same level.
pub fn retract_inequality_check(res: &ResolutionData, d: &MarkedComplex, n: usize) -> Result<RetractReport> {
    let q = d.level().quotient();
    let h = homology(&shapiro_complex(res, q)?, n);
    let (rank_bound, cokernel_logtors, lognorm_bound) = embedding_bounds(d, n);
    Ok(RetractReport {
        degree: n,
        order: q.order(),
        betti: h.betti_q,
        rank_bound,
        logtors: h.logtors,
        cokernel_logtors,
        lognorm_bound,
    })
}
