//! Exact nilpotent Lie algebras over the rationals.
//!
//! A [`LieContext`] holds sparse structure constants `[e_i, e_j] = Σ c_ij^k e_k`
//! together with a nilpotency step. The Baker–Campbell–Hausdorff product is
//! evaluated through the rank-2 Hall basis expansion of `log(exp X exp Y)`,
//! which is exact for any algebra of the given step.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hall::{Def, HallBasis};
use crate::rational::{int, rat_to_string, Rat, RatMatrix};

pub type LieVector = Vec<Rat>;

/// Largest step for which BCH series are generated.
pub const BCH_STEP_CAP: usize = 8;

pub fn zero_vec(d: usize) -> LieVector {
    vec![Rat::zero(); d]
}

pub fn unit_vec(d: usize, i: usize) -> LieVector {
    let mut v = zero_vec(d);
    v[i] = Rat::one();
    v
}

pub fn is_zero(v: &[Rat]) -> bool {
    v.iter().all(Zero::is_zero)
}

pub fn add(a: &[Rat], b: &[Rat]) -> LieVector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rat], b: &[Rat]) -> LieVector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(c: &Rat, a: &[Rat]) -> LieVector {
    a.iter().map(|x| c * x).collect()
}

pub fn neg(a: &[Rat]) -> LieVector {
    a.iter().map(|x| -x).collect()
}

fn axpy(acc: &mut [Rat], c: &Rat, v: &[Rat]) {
    if c.is_zero() {
        return;
    }
    for (a, x) in acc.iter_mut().zip(v) {
        if !x.is_zero() {
            *a += c * x;
        }
    }
}

type Sparse = Vec<(usize, Rat)>;

/// A finite-dimensional nilpotent Lie algebra with a fixed basis.
#[derive(Clone, Debug)]
pub struct LieContext {
    d: usize,
    s: usize,
    grading: Option<Vec<u32>>,
    /// `table[i * d + j]` is `[e_i, e_j]` in sparse form.
    table: Vec<Sparse>,
    series: Option<Arc<BchSeries>>,
}

impl LieContext {
    /// Builds a context from the brackets `[e_i, e_j]` for `i < j`, given as
    /// dense vectors. Antisymmetry fills in the rest.
    pub fn from_upper_brackets(
        d: usize,
        s: usize,
        upper: impl FnMut(usize, usize) -> LieVector,
    ) -> Result<Self> {
        let mut ctx = Self::bare(d, s, upper)?;
        ctx.series = Some(bch_series(s.max(1))?);
        Ok(ctx)
    }

    /// Context without a BCH series; only brackets are available.
    fn bare(d: usize, s: usize, mut upper: impl FnMut(usize, usize) -> LieVector) -> Result<Self> {
        let mut table = vec![Vec::new(); d * d];
        for i in 0..d {
            for j in i + 1..d {
                let v = upper(i, j);
                if v.len() != d {
                    return Err(Error::InvalidInput(format!(
                        "bracket [e{},e{}] has length {} not {d}",
                        i + 1,
                        j + 1,
                        v.len()
                    )));
                }
                let sp: Sparse = v
                    .into_iter()
                    .enumerate()
                    .filter(|(_, c)| !c.is_zero())
                    .collect();
                table[j * d + i] = sp.iter().map(|(k, c)| (*k, -c)).collect();
                table[i * d + j] = sp;
            }
        }
        Ok(LieContext {
            d,
            s,
            grading: None,
            table,
            series: None,
        })
    }

    pub fn abelian(d: usize) -> Self {
        Self::from_upper_brackets(d, 1, |_, _| zero_vec(d)).expect("abelian context")
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn step(&self) -> usize {
        self.s
    }

    pub fn grading(&self) -> Option<&[u32]> {
        self.grading.as_deref()
    }

    pub fn basis_bracket(&self, i: usize, j: usize) -> LieVector {
        let mut v = zero_vec(self.d);
        for (k, c) in &self.table[i * self.d + j] {
            v[*k] = c.clone();
        }
        v
    }

    pub fn basis_bracket_sparse(&self, i: usize, j: usize) -> &[(usize, Rat)] {
        &self.table[i * self.d + j]
    }

    pub fn is_abelian(&self) -> bool {
        self.table.iter().all(Vec::is_empty)
    }

    pub fn bracket(&self, x: &[Rat], y: &[Rat]) -> LieVector {
        let mut out = zero_vec(self.d);
        let xs: Vec<usize> = (0..self.d).filter(|&i| !x[i].is_zero()).collect();
        let ys: Vec<usize> = (0..self.d).filter(|&j| !y[j].is_zero()).collect();
        for &i in &xs {
            for &j in &ys {
                let entry = &self.table[i * self.d + j];
                if entry.is_empty() {
                    continue;
                }
                let f = &x[i] * &y[j];
                for (k, c) in entry {
                    out[*k] += &f * c;
                }
            }
        }
        out
    }

    /// Exact Jacobi identity over all basis triples; returns the first failure.
    pub fn check_jacobi(&self) -> std::result::Result<(), (usize, usize, usize)> {
        let d = self.d;
        for i in 0..d {
            for j in i + 1..d {
                for k in j + 1..d {
                    let (ei, ej, ek) = (unit_vec(d, i), unit_vec(d, j), unit_vec(d, k));
                    let a = self.bracket(&self.bracket(&ei, &ej), &ek);
                    let b = self.bracket(&self.bracket(&ej, &ek), &ei);
                    let c = self.bracket(&self.bracket(&ek, &ei), &ej);
                    if !is_zero(&add(&add(&a, &b), &c)) {
                        return Err((i, j, k));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether every bracket of `step + 1` basis elements vanishes.
    pub fn check_nilpotent(&self) -> bool {
        // Lower central series: g_1 = g, g_{k+1} = [g, g_k].
        let mut layer: Vec<LieVector> = (0..self.d).map(|i| unit_vec(self.d, i)).collect();
        for _ in 0..self.s {
            let mut span = crate::rational::EchelonSpan::new();
            let mut next = Vec::new();
            for i in 0..self.d {
                let ei = unit_vec(self.d, i);
                for v in &layer {
                    let b = self.bracket(&ei, v);
                    if span.insert(&b) {
                        next.push(b);
                    }
                }
            }
            layer = next;
            if layer.is_empty() {
                return true;
            }
        }
        layer.is_empty()
    }

    /// The same algebra in the basis given by the columns of `m`.
    pub fn change_basis(&self, m: &RatMatrix) -> Result<LieContext> {
        let inv = m
            .inverse()
            .ok_or_else(|| Error::InvalidInput("basis change is singular".into()))?;
        let cols = m.columns();
        let mut out = LieContext::from_upper_brackets(self.d, self.s, |i, j| {
            inv.mul_vec(&self.bracket(&cols[i], &cols[j]))
        })?;
        if let Some(g) = &self.grading {
            // Keep the grading only if every new vector is homogeneous.
            let mut new_g = Vec::with_capacity(self.d);
            for c in &cols {
                let ws: Vec<u32> = (0..self.d)
                    .filter(|&k| !c[k].is_zero())
                    .map(|k| g[k])
                    .collect();
                if ws.windows(2).all(|w| w[0] == w[1]) && !ws.is_empty() {
                    new_g.push(ws[0]);
                } else {
                    new_g.clear();
                    break;
                }
            }
            if new_g.len() == self.d {
                out.grading = Some(new_g);
            }
        }
        Ok(out)
    }

    /// Quotient by the span of the first `k` basis vectors, which must be an
    /// ideal. The remaining basis vectors are kept in order.
    pub fn quotient_leading(&self, k: usize) -> Result<LieContext> {
        let d = self.d;
        for i in 0..k {
            for j in 0..d {
                let b = self.basis_bracket(i, j);
                if b[k..].iter().any(|c| !c.is_zero()) {
                    return Err(Error::InvalidInput(format!(
                        "span of the first {k} basis vectors is not an ideal"
                    )));
                }
            }
        }
        let nd = d - k;
        LieContext::from_upper_brackets(nd, self.s, |i, j| {
            self.basis_bracket(i + k, j + k)[k..].to_vec()
        })
    }

    /// Whether `[e_i, e_j]` lies in `Span(e_j, …, e_d)` for all `i < j`.
    pub fn check_triangular(&self) -> Result<()> {
        for i in 0..self.d {
            for j in i + 1..self.d {
                if self.table[i * self.d + j].iter().any(|(k, _)| *k < j) {
                    return Err(Error::NotTriangular { i: i + 1, j: j + 1 });
                }
            }
        }
        Ok(())
    }

    /// Baker–Campbell–Hausdorff product `log(exp x exp y)`.
    pub fn bch(&self, x: &[Rat], y: &[Rat]) -> LieVector {
        if is_zero(x) {
            return y.to_vec();
        }
        if is_zero(y) {
            return x.to_vec();
        }
        let mut out = add(x, y);
        if self.is_abelian() || self.s < 2 {
            return out;
        }
        let series = self
            .series
            .as_ref()
            .expect("context built with a BCH series");
        let hb = &series.basis;
        let mut values: Vec<Option<LieVector>> = vec![None; hb.d];
        values[0] = Some(x.to_vec());
        values[1] = Some(y.to_vec());
        for (m, bc) in hb.basis.iter().enumerate().skip(2) {
            if bc.weight() as usize > self.s {
                break;
            }
            let Def::Pair(i, j) = bc.def else {
                unreachable!()
            };
            let a = values[i - 1].as_ref().expect("Hall order");
            let b = values[j - 1].as_ref().expect("Hall order");
            let v = if is_zero(a) || is_zero(b) {
                zero_vec(self.d)
            } else {
                self.bracket(a, b)
            };
            axpy(&mut out, &series.coeffs[m], &v);
            values[m] = Some(v);
        }
        out
    }

    /// Product of several exponentials, `log(exp v_1 ⋯ exp v_n)`.
    pub fn bch_many<'a>(&self, vs: impl IntoIterator<Item = &'a LieVector>) -> LieVector {
        vs.into_iter()
            .fold(zero_vec(self.d), |acc, v| self.bch(&acc, v))
    }

    /// `log [exp x, exp y]` with the group commutator `a⁻¹b⁻¹ab`.
    pub fn group_commutator(&self, x: &[Rat], y: &[Rat]) -> LieVector {
        let left = self.bch(&neg(x), &neg(y));
        let right = self.bch(x, y);
        self.bch(&left, &right)
    }

    /// Second-kind coordinates of `exp x` with respect to the basis vectors:
    /// `exp x = exp(ℓ_1 e_1) ⋯ exp(ℓ_d e_d)`.
    pub fn second_kind_from_first(&self, x: &[Rat]) -> Result<Vec<Rat>> {
        self.check_triangular()?;
        Ok(self.peel(x))
    }

    /// Peeling without the triangularity check, for callers that have
    /// verified it once.
    pub fn peel(&self, x: &[Rat]) -> Vec<Rat> {
        let mut cur = x.to_vec();
        let mut ell = zero_vec(self.d);
        for i in 0..self.d {
            if cur[i].is_zero() {
                continue;
            }
            ell[i] = cur[i].clone();
            let mut step = zero_vec(self.d);
            step[i] = -&cur[i];
            cur = self.bch(&step, &cur);
            debug_assert!(cur[..=i].iter().all(Zero::is_zero));
        }
        ell
    }

    /// Inverse of [`LieContext::second_kind_from_first`].
    pub fn first_kind_from_second(&self, ell: &[Rat]) -> LieVector {
        let mut acc = zero_vec(self.d);
        for i in 0..self.d {
            if ell[i].is_zero() {
                continue;
            }
            let mut v = zero_vec(self.d);
            v[i] = ell[i].clone();
            acc = self.bch(&acc, &v);
        }
        acc
    }

    /// Group multiplication on second-kind coordinates.
    pub fn second_kind_multiply(&self, a: &[Rat], b: &[Rat]) -> Vec<Rat> {
        let x = self.first_kind_from_second(a);
        let y = self.first_kind_from_second(b);
        self.peel(&self.bch(&x, &y))
    }

    /// JSON-friendly dump of the nonzero structure constants with `i < j`.
    pub fn structure_json(&self) -> StructureDump {
        let mut brackets = Vec::new();
        for i in 0..self.d {
            for j in i + 1..self.d {
                let e = &self.table[i * self.d + j];
                if e.is_empty() {
                    continue;
                }
                brackets.push(BracketEntry {
                    i: i + 1,
                    j: j + 1,
                    value: e.iter().map(|(k, c)| (k + 1, rat_to_string(c))).collect(),
                });
            }
        }
        StructureDump {
            d: self.d,
            s: self.s,
            grading: self.grading.clone(),
            brackets,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    /// Sparse `(k, c_ij^k)` pairs, 1-based.
    pub value: Vec<(usize, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureDump {
    pub d: usize,
    pub s: usize,
    pub grading: Option<Vec<u32>>,
    pub brackets: Vec<BracketEntry>,
}

/// Free nilpotent Lie algebra on a Hall basis, with brackets obtained by
/// Hall rewriting.
pub fn free_nilpotent_lie(basis: &HallBasis) -> LieContext {
    let mut ctx = free_lie_brackets(basis);
    ctx.series = Some(bch_series(basis.s).expect("Hall step within the BCH cap"));
    ctx
}

fn free_lie_brackets(basis: &HallBasis) -> LieContext {
    let d = basis.d;
    let mut pair_index: HashMap<(usize, usize), usize> = HashMap::new();
    for (m, bc) in basis.basis.iter().enumerate() {
        if let Def::Pair(i, j) = bc.def {
            pair_index.insert((i - 1, j - 1), m);
        }
    }
    let mut rw = Rewriter {
        basis,
        pair_index,
        memo: HashMap::new(),
    };
    let mut ctx = LieContext::bare(d, basis.s, |i, j| rw.bracket(i, j))
        .expect("Hall rewriting yields consistent brackets");
    ctx.grading = Some(basis.basis.iter().map(|b| b.weight()).collect());
    ctx
}

struct Rewriter<'a> {
    basis: &'a HallBasis,
    pair_index: HashMap<(usize, usize), usize>,
    memo: HashMap<(usize, usize), LieVector>,
}

impl Rewriter<'_> {
    fn weight(&self, i: usize) -> u32 {
        self.basis.basis[i].weight()
    }

    fn bracket_vec_basis(&mut self, v: &[Rat], j: usize) -> LieVector {
        let mut out = zero_vec(self.basis.d);
        for (k, c) in v.iter().enumerate() {
            if !c.is_zero() {
                let b = self.bracket(k, j);
                axpy(&mut out, c, &b);
            }
        }
        out
    }

    /// `[e_i, e_j]` expanded in the Hall basis (0-based indices).
    fn bracket(&mut self, i: usize, j: usize) -> LieVector {
        let d = self.basis.d;
        if i == j || (self.weight(i) + self.weight(j)) as usize > self.basis.s {
            return zero_vec(d);
        }
        if i < j {
            return neg(&self.bracket(j, i));
        }
        if let Some(v) = self.memo.get(&(i, j)) {
            return v.clone();
        }
        let v = if let Some(&m) = self.pair_index.get(&(i, j)) {
            unit_vec(d, m)
        } else {
            // e_i = [e_a, e_b] with j < b:
            // [[e_a, e_b], e_j] = [[e_a, e_j], e_b] + [e_a, [e_b, e_j]].
            let Def::Pair(a, b) = self.basis.basis[i].def else {
                unreachable!("a leaf paired with a smaller index is always basic")
            };
            let (a, b) = (a - 1, b - 1);
            let aj = self.bracket(a, j);
            let first = self.bracket_vec_basis(&aj, b);
            let bj = self.bracket(b, j);
            let second = neg(&self.bracket_vec_basis(&bj, a));
            add(&first, &second)
        };
        self.memo.insert((i, j), v.clone());
        v
    }
}

/// The BCH series `log(exp X exp Y)` up to a fixed step, expressed in the
/// rank-2 Hall basis `H_1 = X`, `H_2 = Y`, `H_m = [H_i, H_j]`.
#[derive(Debug)]
pub struct BchSeries {
    pub step: usize,
    pub basis: HallBasis,
    pub coeffs: Vec<Rat>,
}

impl BchSeries {
    pub fn denominator_lcm(&self) -> BigInt {
        crate::rational::denominator_lcm(&self.coeffs)
    }

    /// `(hall index, "p/q")` for every nonzero coefficient.
    pub fn terms(&self) -> Vec<(usize, String)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| (m + 1, rat_to_string(c)))
            .collect()
    }
}

/// Cached BCH series for step `s`.
pub fn bch_series(s: usize) -> Result<Arc<BchSeries>> {
    if s > BCH_STEP_CAP {
        return Err(Error::CapExceeded {
            what: "BCH step",
            value: s as u128,
            cap: BCH_STEP_CAP as u128,
        });
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<BchSeries>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(s) = cache.lock().expect("bch cache").get(&s) {
        return Ok(s.clone());
    }
    let series = Arc::new(compute_bch_series(s)?);
    cache.lock().expect("bch cache").insert(s, series.clone());
    Ok(series)
}

pub fn bch_denominator_lcm(s: usize) -> Result<BigInt> {
    Ok(bch_series(s)?.denominator_lcm())
}

/// Noncommutative polynomial in two letters truncated at a fixed degree.
type Poly = BTreeMap<Vec<u8>, Rat>;

fn poly_mul(a: &Poly, b: &Poly, s: usize) -> Poly {
    let mut out = Poly::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            if wa.len() + wb.len() > s {
                continue;
            }
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            *out.entry(w).or_insert_with(Rat::zero) += ca * cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn poly_exp_letter(letter: u8, s: usize) -> Poly {
    let mut p = Poly::new();
    let mut fact = BigInt::one();
    for n in 0..=s {
        if n > 0 {
            fact *= n;
        }
        p.insert(vec![letter; n], Rat::new(BigInt::one(), fact.clone()));
    }
    p
}

fn compute_bch_series(s: usize) -> Result<BchSeries> {
    // Z = log(exp X exp Y) in the truncated free associative algebra.
    let prod = poly_mul(&poly_exp_letter(0, s), &poly_exp_letter(1, s), s);
    let mut w = prod;
    w.remove(&Vec::new());
    let mut z = Poly::new();
    let mut power = w.clone();
    for n in 1..=s {
        let c = Rat::new(
            BigInt::from(if n % 2 == 1 { 1 } else { -1 }),
            BigInt::from(n),
        );
        for (word, v) in &power {
            *z.entry(word.clone()).or_insert_with(Rat::zero) += &c * v;
        }
        power = poly_mul(&power, &w, s);
    }
    z.retain(|_, c| !c.is_zero());

    // Z is a Lie element, so Z = Σ_w (c_w / |w|) [w] with left-normed brackets
    // (Dynkin–Specht–Wever). Evaluate in the free Lie algebra of rank 2.
    let basis = HallBasis::build_with_cap(2, s, usize::MAX)?;
    let ctx = free_lie_brackets(&basis);
    let d = basis.d;
    let mut coeffs = zero_vec(d);
    let mut nested: HashMap<Vec<u8>, LieVector> = HashMap::new();
    for (word, c) in &z {
        let v = left_normed(&ctx, word, &mut nested);
        axpy(&mut coeffs, &(c / int(word.len() as i64)), &v);
    }
    Ok(BchSeries {
        step: s,
        basis,
        coeffs,
    })
}

fn left_normed(ctx: &LieContext, word: &[u8], memo: &mut HashMap<Vec<u8>, LieVector>) -> LieVector {
    if let Some(v) = memo.get(word) {
        return v.clone();
    }
    let d = ctx.dim();
    let v = if word.len() == 1 {
        unit_vec(d, word[0] as usize)
    } else {
        let head = left_normed(ctx, &word[..word.len() - 1], memo);
        ctx.bracket(&head, &unit_vec(d, word[word.len() - 1] as usize))
    };
    memo.insert(word.to_vec(), v.clone());
    v
}

/// Reference BCH product from Dynkin's explicit formula, evaluated directly
/// with right-nested brackets. Independent of [`LieContext::bch`].
pub fn dynkin_bch(ctx: &LieContext, x: &[Rat], y: &[Rat]) -> LieVector {
    let s = ctx.step();
    let mut out = zero_vec(ctx.dim());
    let mut fact = vec![BigInt::one()];
    for k in 1..=s {
        let f = &fact[k - 1] * k;
        fact.push(f);
    }
    // Enumerate sequences of (r_i, s_i) with r_i + s_i ≥ 1 and total ≤ s.
    fn rec(
        ctx: &LieContext,
        x: &[Rat],
        y: &[Rat],
        fact: &[BigInt],
        pairs: &mut Vec<(usize, usize)>,
        total: usize,
        out: &mut LieVector,
    ) {
        let s = ctx.step();
        if !pairs.is_empty() {
            // [X^{r_1} Y^{s_1} ⋯ X^{r_n} Y^{s_n}] right-nested; vanishes if it
            // ends in a square of a letter.
            let mut word: Vec<&[Rat]> = Vec::with_capacity(total);
            for &(r, q) in pairs.iter() {
                word.extend(std::iter::repeat(x).take(r));
                word.extend(std::iter::repeat(y).take(q));
            }
            let mut v = word[word.len() - 1].to_vec();
            for w in word.iter().rev().skip(1) {
                v = ctx.bracket(w, &v);
            }
            if !is_zero(&v) {
                let n = pairs.len() as i64;
                let mut denom = BigInt::from(n * total as i64);
                for &(r, q) in pairs.iter() {
                    denom *= &fact[r];
                    denom *= &fact[q];
                }
                let sign = if n % 2 == 1 { 1 } else { -1 };
                axpy(out, &Rat::new(BigInt::from(sign), denom), &v);
            }
        }
        for r in 0..=s - total {
            for q in 0..=s - total - r {
                if r + q == 0 {
                    continue;
                }
                pairs.push((r, q));
                rec(ctx, x, y, fact, pairs, total + r + q, out);
                pairs.pop();
            }
        }
    }
    rec(ctx, x, y, &fact, &mut Vec::new(), 0, &mut out);
    out
}

/// A bracket form in variables `x_1, …, x_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BracketForm {
    Var(usize),
    Br(Box<BracketForm>, Box<BracketForm>),
}

impl BracketForm {
    pub fn br(a: BracketForm, b: BracketForm) -> Self {
        BracketForm::Br(Box::new(a), Box::new(b))
    }

    pub fn weight(&self) -> usize {
        match self {
            BracketForm::Var(_) => 1,
            BracketForm::Br(a, b) => a.weight() + b.weight(),
        }
    }

    /// The Lie bracket value `α(v)`.
    pub fn eval_lie(&self, ctx: &LieContext, vs: &[LieVector]) -> LieVector {
        match self {
            BracketForm::Var(i) => vs[*i].clone(),
            BracketForm::Br(a, b) => ctx.bracket(&a.eval_lie(ctx, vs), &b.eval_lie(ctx, vs)),
        }
    }

    /// `log α(exp v_1, …, exp v_m)` with group commutators in place of brackets.
    pub fn eval_group(&self, ctx: &LieContext, vs: &[LieVector]) -> LieVector {
        match self {
            BracketForm::Var(i) => vs[*i].clone(),
            BracketForm::Br(a, b) => {
                ctx.group_commutator(&a.eval_group(ctx, vs), &b.eval_group(ctx, vs))
            }
        }
    }
}

/// Expansion of a group commutator of exponentials as a Lie series.
#[derive(Clone, Debug)]
pub struct CommutatorSeries {
    pub value: LieVector,
    pub leading: LieVector,
    pub correction: LieVector,
}

pub fn log_commutator(form: &BracketForm, vs: &[LieVector], ctx: &LieContext) -> CommutatorSeries {
    let value = form.eval_group(ctx, vs);
    let leading = form.eval_lie(ctx, vs);
    let correction = sub(&value, &leading);
    CommutatorSeries {
        value,
        leading,
        correction,
    }
}

/// Result of rescaling a context so that a scaled basis spans a Lie ring
/// whose exponential is a group.
#[derive(Clone, Debug)]
pub struct Rescaled {
    /// Integrality factors: `[Q_i e_i, Q_j e_j]` has integer coordinates in
    /// the basis `Q_k e_k`.
    pub q: Vec<BigInt>,
    /// BCH denominator factor making `exp` of the lattice closed.
    pub closure: BigInt,
    /// The algebra in the basis `f_i = closure · Q_i · e_i`.
    pub ctx: LieContext,
}

impl Rescaled {
    pub fn factors(&self) -> Vec<BigInt> {
        self.q.iter().map(|q| q * &self.closure).collect()
    }
}

/// Greedy choice of `Q_d, Q_{d-1}, …, Q_1`, followed by the closure factor.
pub fn rescale_to_lattice(ctx: &LieContext) -> Result<Rescaled> {
    ctx.check_triangular()?;
    let d = ctx.dim();
    let mut q = vec![BigInt::one(); d];
    for i in (0..d).rev() {
        let mut need = BigInt::one();
        for j in i + 1..d {
            for (k, c) in ctx.basis_bracket_sparse(i, j) {
                if *k <= i {
                    return Err(Error::NotTriangular { i: i + 1, j: j + 1 });
                }
                let v = c * Rat::from_integer(q[j].clone()) / Rat::from_integer(q[*k].clone());
                need = need.lcm(v.denom());
            }
        }
        q[i] = need;
    }
    let closure = if ctx.is_abelian() {
        BigInt::one()
    } else {
        bch_denominator_lcm(ctx.step())?
    };
    let cols: Vec<LieVector> = (0..d)
        .map(|i| scale(&Rat::from_integer(&q[i] * &closure), &unit_vec(d, i)))
        .collect();
    let scaled = ctx.change_basis(&RatMatrix::from_columns(&cols))?;
    Ok(Rescaled {
        q,
        closure,
        ctx: scaled,
    })
}

/// Whether all structure constants are integers.
pub fn has_integer_constants(ctx: &LieContext) -> bool {
    (0..ctx.dim()).all(|i| {
        (0..ctx.dim()).all(|j| {
            ctx.basis_bracket_sparse(i, j)
                .iter()
                .all(|(_, c)| c.is_integer())
        })
    })
}

/// Largest absolute numerator and denominator, for diagnostics.
pub fn height(v: &[Rat]) -> BigInt {
    v.iter()
        .map(|c| c.numer().abs().max(c.denom().clone()))
        .max()
        .unwrap_or_else(BigInt::one)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn ctx(r: usize, s: usize) -> LieContext {
        free_nilpotent_lie(&HallBasis::build(r, s).unwrap())
    }

    #[test]
    fn heisenberg_bracket() {
        let c = ctx(2, 2);
        assert_eq!(c.basis_bracket(0, 1), vec![int(0), int(0), int(-1)]);
        assert_eq!(c.basis_bracket(1, 0), vec![int(0), int(0), int(1)]);
        assert!(is_zero(&c.basis_bracket(2, 2)));
    }

    #[test]
    fn step_three_brackets_are_integral_weight_three() {
        let c = ctx(2, 3);
        for &(i, j) in &[(0usize, 2usize), (1, 2)] {
            let v = c.basis_bracket(i, j);
            assert!(v[..3].iter().all(Zero::is_zero));
            assert!(v.iter().all(|x| x.is_integer()));
            assert!(!is_zero(&v));
        }
    }

    #[test]
    fn jacobi_and_nilpotency() {
        for (r, s) in [(2, 3), (2, 4), (3, 3)] {
            let c = ctx(r, s);
            assert_eq!(c.check_jacobi(), Ok(()));
            assert!(c.check_nilpotent());
            c.check_triangular().unwrap();
        }
    }

    #[test]
    fn bch_low_order_terms() {
        let c = ctx(2, 2);
        let x = unit_vec(3, 0);
        let y = unit_vec(3, 1);
        assert_eq!(c.bch(&x, &y), vec![int(1), int(1), rat(-1, 2)]);
        assert_eq!(c.bch(&x, &zero_vec(3)), x);
    }

    #[test]
    fn denominators() {
        assert_eq!(bch_denominator_lcm(1).unwrap(), BigInt::from(1));
        assert_eq!(bch_denominator_lcm(2).unwrap(), BigInt::from(2));
        assert_eq!(bch_denominator_lcm(3).unwrap(), BigInt::from(12));
        assert!(bch_denominator_lcm(BCH_STEP_CAP + 1).is_err());
    }

    #[test]
    fn dynkin_agrees_on_generators() {
        for s in 1..=5 {
            let c = ctx(2, s);
            let d = c.dim();
            let (x, y) = (unit_vec(d, 0), unit_vec(d, 1));
            assert_eq!(c.bch(&x, &y), dynkin_bch(&c, &x, &y), "step {s}");
        }
    }

    #[test]
    fn step_three_twelfths() {
        let c = ctx(2, 3);
        let v = c.bch(&unit_vec(5, 0), &unit_vec(5, 1));
        let weight3: Vec<Rat> = v[3..].iter().map(|x| x.abs()).collect();
        assert_eq!(weight3, vec![rat(1, 12), rat(1, 12)]);
    }

    #[test]
    fn peeling_example() {
        let c = ctx(2, 2);
        let x = vec![int(1), int(1), int(0)];
        let ell = c.second_kind_from_first(&x).unwrap();
        assert_eq!(ell, vec![int(1), int(1), rat(1, 2)]);
        assert_eq!(c.first_kind_from_second(&ell), x);
    }

    #[test]
    fn commutator_leading_terms() {
        let c = ctx(2, 2);
        let f = BracketForm::br(BracketForm::Var(0), BracketForm::Var(1));
        let vs = vec![unit_vec(3, 0), unit_vec(3, 1)];
        let series = log_commutator(&f, &vs, &c);
        assert!(is_zero(&series.correction));
        assert_eq!(series.value, c.bracket(&vs[0], &vs[1]));
    }

    #[test]
    fn heisenberg_rescale() {
        let c = ctx(2, 2);
        let r = rescale_to_lattice(&c).unwrap();
        assert_eq!(r.q, vec![BigInt::one(); 3]);
        assert_eq!(r.closure, BigInt::from(2));
        assert!(has_integer_constants(&r.ctx));
    }

    #[test]
    fn non_triangular_is_reported() {
        // [e1, e2] = e1 is solvable, not nilpotent, and not triangular.
        let c = LieContext::from_upper_brackets(2, 2, |_, _| vec![int(1), int(0)]).unwrap();
        assert!(matches!(
            c.second_kind_from_first(&[int(1), int(1)]),
            Err(Error::NotTriangular { i: 1, j: 2 })
        ));
    }
}
