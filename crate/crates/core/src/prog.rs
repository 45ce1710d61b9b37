//! Progressions over concrete target groups: enumeration, properness,
//! upper-triangular form, ζ-weights and coset structure.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hall::{Def, FreeNilpotentGroup, HallBasis};
use crate::rational::{floor_i64, int, Rat};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Group elements are integer vectors in every provided implementation.
pub type Elem = Vec<i64>;

pub type ElementSet = HashSet<Elem>;

pub trait TargetGroup: Send + Sync {
    fn identity(&self) -> Elem;
    fn multiply(&self, a: &[i64], b: &[i64]) -> Elem;
    fn invert(&self, a: &[i64]) -> Elem;

    fn pow(&self, a: &[i64], n: i64) -> Elem {
        let mut base = if n < 0 { self.invert(a) } else { a.to_vec() };
        let mut n = n.unsigned_abs();
        let mut acc = self.identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.multiply(&acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.multiply(&base, &base);
            }
        }
        acc
    }

    fn commutator(&self, a: &[i64], b: &[i64]) -> Elem {
        let ab = self.multiply(a, b);
        let ba = self.multiply(b, a);
        self.multiply(&self.invert(&ba), &ab)
    }

    /// Length of the element vectors.
    fn elem_len(&self) -> usize;

    /// Checks that `a` is a valid element encoding.
    fn validate(&self, a: &[i64]) -> Result<()> {
        if a.len() != self.elem_len() {
            return Err(Error::InvalidInput(format!(
                "element {:?} has length {}, expected {}",
                a,
                a.len(),
                self.elem_len()
            )));
        }
        Ok(())
    }

    /// Number of elements, when finite and small enough to count.
    fn order(&self) -> Option<u128> {
        None
    }
}

/// Unitriangular `n x n` matrices over `Z` or `Z/N`, stored as the strictly
/// upper entries in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unitriangular {
    n: usize,
    modulus: Option<i64>,
    /// Position of entry `(i, j)`, `i < j`, in the element vector.
    pos: Vec<usize>,
}

impl Unitriangular {
    pub fn new(n: usize, modulus: Option<i64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(
                "unitriangular size must be at least 2".into(),
            ));
        }
        if let Some(m) = modulus {
            if m < 2 {
                return Err(Error::InvalidInput("modulus must be at least 2".into()));
            }
        }
        let mut pos = vec![usize::MAX; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                pos[i * n + j] = k;
                k += 1;
            }
        }
        Ok(Unitriangular { n, modulus, pos })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> Option<i64> {
        self.modulus
    }

    fn reduce(&self, x: i64) -> i64 {
        match self.modulus {
            Some(m) => x.rem_euclid(m),
            None => x,
        }
    }

    pub fn entry(&self, a: &[i64], i: usize, j: usize) -> i64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 1,
            std::cmp::Ordering::Greater => 0,
            std::cmp::Ordering::Less => a[self.pos[i * self.n + j]],
        }
    }

    /// Elementary matrix `1 + c E_{ij}`.
    pub fn elementary(&self, i: usize, j: usize, c: i64) -> Elem {
        let mut e = self.identity();
        e[self.pos[i * self.n + j]] = self.reduce(c);
        e
    }
}

impl TargetGroup for Unitriangular {
    fn identity(&self) -> Elem {
        vec![0; self.elem_len()]
    }

    fn multiply(&self, a: &[i64], b: &[i64]) -> Elem {
        let n = self.n;
        let mut out = vec![0; self.elem_len()];
        for i in 0..n {
            for j in i + 1..n {
                let p = self.pos[i * n + j];
                let mut v = a[p] + b[p];
                for k in i + 1..j {
                    v += a[self.pos[i * n + k]] * b[self.pos[k * n + j]];
                }
                out[p] = self.reduce(v);
            }
        }
        out
    }

    fn invert(&self, a: &[i64]) -> Elem {
        // Back substitution for B with A B = 1: b_ij = -a_ij - Σ_{i<k<j} a_ik b_kj.
        let n = self.n;
        let mut out = vec![0; self.elem_len()];
        for gap in 1..n {
            for i in 0..n - gap {
                let j = i + gap;
                let p = self.pos[i * n + j];
                let mut v = -a[p];
                for k in i + 1..j {
                    v -= a[self.pos[i * n + k]] * out[self.pos[k * n + j]];
                }
                out[p] = self.reduce(v);
            }
        }
        out
    }

    fn elem_len(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    fn validate(&self, a: &[i64]) -> Result<()> {
        if a.len() != self.elem_len() {
            return Err(Error::InvalidInput(format!(
                "unitriangular element needs {} upper entries, got {}",
                self.elem_len(),
                a.len()
            )));
        }
        if let Some(m) = self.modulus {
            if a.iter().any(|&x| x < 0 || x >= m) {
                return Err(Error::InvalidInput(format!(
                    "entries of {a:?} must lie in [0, {m})"
                )));
            }
        }
        Ok(())
    }

    fn order(&self) -> Option<u128> {
        let m = self.modulus? as u128;
        m.checked_pow(self.elem_len() as u32)
    }
}

impl TargetGroup for FreeNilpotentGroup {
    fn identity(&self) -> Elem {
        FreeNilpotentGroup::identity(self)
    }

    fn multiply(&self, a: &[i64], b: &[i64]) -> Elem {
        FreeNilpotentGroup::multiply(self, a, b)
    }

    fn invert(&self, a: &[i64]) -> Elem {
        FreeNilpotentGroup::invert(self, a)
    }

    fn pow(&self, a: &[i64], n: i64) -> Elem {
        FreeNilpotentGroup::pow(self, a, n)
    }

    fn elem_len(&self) -> usize {
        self.dim()
    }
}

/// Serializable description of a target group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum TargetDescriptor {
    Unitriangular { n: usize },
    UnitriangularMod { n: usize, modulus: i64 },
    FreeNilpotent { r: usize, s: usize },
}

/// One of the provided target groups.
#[derive(Clone)]
pub enum Target {
    Unitriangular(Unitriangular),
    FreeNilpotent(Arc<FreeNilpotentGroup>),
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Target({:?})", self.descriptor())
    }
}

impl Target {
    pub fn from_descriptor(desc: &TargetDescriptor) -> Result<Self> {
        Ok(match *desc {
            TargetDescriptor::Unitriangular { n } => {
                Target::Unitriangular(Unitriangular::new(n, None)?)
            }
            TargetDescriptor::UnitriangularMod { n, modulus } => {
                Target::Unitriangular(Unitriangular::new(n, Some(modulus))?)
            }
            TargetDescriptor::FreeNilpotent { r, s } => {
                Target::FreeNilpotent(Arc::new(FreeNilpotentGroup::from_rank_step(r, s)?))
            }
        })
    }

    /// The integers, as `UT(2, Z)`.
    pub fn integers() -> Self {
        Target::Unitriangular(Unitriangular::new(2, None).expect("n = 2"))
    }

    /// `Z/N`, as `UT(2, Z/N)`.
    pub fn cyclic(modulus: i64) -> Result<Self> {
        Ok(Target::Unitriangular(Unitriangular::new(2, Some(modulus))?))
    }

    pub fn heisenberg() -> Self {
        Target::Unitriangular(Unitriangular::new(3, None).expect("n = 3"))
    }

    pub fn descriptor(&self) -> TargetDescriptor {
        match self {
            Target::Unitriangular(u) => match u.modulus {
                None => TargetDescriptor::Unitriangular { n: u.n },
                Some(modulus) => TargetDescriptor::UnitriangularMod { n: u.n, modulus },
            },
            Target::FreeNilpotent(g) => TargetDescriptor::FreeNilpotent {
                r: g.basis().r,
                s: g.basis().s,
            },
        }
    }
}

impl TargetGroup for Target {
    fn identity(&self) -> Elem {
        match self {
            Target::Unitriangular(u) => u.identity(),
            Target::FreeNilpotent(g) => TargetGroup::identity(g.as_ref()),
        }
    }

    fn multiply(&self, a: &[i64], b: &[i64]) -> Elem {
        match self {
            Target::Unitriangular(u) => u.multiply(a, b),
            Target::FreeNilpotent(g) => TargetGroup::multiply(g.as_ref(), a, b),
        }
    }

    fn invert(&self, a: &[i64]) -> Elem {
        match self {
            Target::Unitriangular(u) => u.invert(a),
            Target::FreeNilpotent(g) => TargetGroup::invert(g.as_ref(), a),
        }
    }

    fn pow(&self, a: &[i64], n: i64) -> Elem {
        match self {
            Target::Unitriangular(u) => u.pow(a, n),
            Target::FreeNilpotent(g) => TargetGroup::pow(g.as_ref(), a, n),
        }
    }

    fn elem_len(&self) -> usize {
        match self {
            Target::Unitriangular(u) => u.elem_len(),
            Target::FreeNilpotent(g) => g.dim(),
        }
    }

    fn validate(&self, a: &[i64]) -> Result<()> {
        match self {
            Target::Unitriangular(u) => u.validate(a),
            Target::FreeNilpotent(g) => TargetGroup::validate(g.as_ref(), a),
        }
    }

    fn order(&self) -> Option<u128> {
        match self {
            Target::Unitriangular(u) => u.order(),
            Target::FreeNilpotent(_) => None,
        }
    }
}

/// `P_ord(u; L) = {u_1^{ℓ_1} ⋯ u_d^{ℓ_d} : |ℓ_i| ≤ L_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedProgression {
    pub gens: Vec<Elem>,
    #[serde(rename = "L")]
    pub lengths: Vec<i64>,
}

impl OrderedProgression {
    pub fn new(gens: Vec<Elem>, lengths: Vec<i64>) -> Result<Self> {
        if gens.len() != lengths.len() {
            return Err(Error::InvalidInput(format!(
                "{} generators but {} lengths",
                gens.len(),
                lengths.len()
            )));
        }
        if lengths.iter().any(|&l| l < 0) {
            return Err(Error::InvalidInput("lengths must be non-negative".into()));
        }
        Ok(OrderedProgression { gens, lengths })
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    /// Coordinate bounds `⌊m L_i⌋`.
    pub fn scaled_bounds(&self, m: &Rat) -> Vec<i64> {
        self.lengths
            .iter()
            .map(|&l| floor_i64(&(m * int(l))))
            .collect()
    }

    pub fn validate(&self, g: &impl TargetGroup) -> Result<()> {
        self.gens.iter().try_for_each(|x| g.validate(x))
    }
}

/// An ordered progression together with an explicit finite subgroup `H`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetProgression {
    #[serde(rename = "H")]
    pub h: Vec<Elem>,
    #[serde(flatten)]
    pub prog: OrderedProgression,
}

impl CosetProgression {
    pub fn trivial(g: &impl TargetGroup, prog: OrderedProgression) -> Self {
        CosetProgression {
            h: vec![g.identity()],
            prog,
        }
    }

    /// Checks that `H` is a subgroup normalized by every generator.
    pub fn validate(&self, g: &impl TargetGroup) -> Result<()> {
        self.prog.validate(g)?;
        let set: ElementSet = self.h.iter().cloned().collect();
        if !set.contains(&g.identity()) {
            return Err(Error::InvalidInput(
                "H does not contain the identity".into(),
            ));
        }
        for a in &self.h {
            for b in &self.h {
                if !set.contains(&g.multiply(a, b)) {
                    return Err(Error::InvalidInput(
                        "H is not closed under multiplication".into(),
                    ));
                }
            }
        }
        for u in &self.prog.gens {
            let ui = g.invert(u);
            for h in &self.h {
                if !set.contains(&g.multiply(&g.multiply(&ui, h), u)) {
                    return Err(Error::InvalidInput(
                        "H is not normalized by a generator".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Number of exponent vectors with `|ℓ_i| ≤ b_i`, checked against `budget`.
pub fn grid_size(bounds: &[i64], budget: u64) -> Result<u64> {
    let mut total: u128 = 1;
    for &b in bounds {
        total = total.saturating_mul((2 * b.max(0) as u128) + 1);
    }
    if total > budget as u128 {
        return Err(Error::BudgetExceeded {
            needed: total,
            budget,
        });
    }
    Ok(total as u64)
}

/// Exponent vector with lexicographic rank `idx` (first coordinate most significant).
pub fn decode_rank(mut idx: u64, bounds: &[i64]) -> Vec<i64> {
    let mut ell = vec![0; bounds.len()];
    for i in (0..bounds.len()).rev() {
        let w = 2 * bounds[i] as u64 + 1;
        ell[i] = (idx % w) as i64 - bounds[i];
        idx /= w;
    }
    ell
}

/// Rank of `ell` in the lexicographic order of the grid.
pub fn encode_rank(ell: &[i64], bounds: &[i64]) -> u64 {
    ell.iter().zip(bounds).fold(0u64, |acc, (&l, &b)| {
        acc * (2 * b as u64 + 1) + (l + b) as u64
    })
}

fn power_tables(g: &impl TargetGroup, gens: &[Elem], bounds: &[i64]) -> Vec<Vec<Elem>> {
    gens.iter()
        .zip(bounds)
        .map(|(u, &b)| {
            let inv = g.invert(u);
            let mut neg = vec![g.identity()];
            let mut pos = vec![g.identity()];
            for _ in 0..b {
                let n = g.multiply(neg.last().unwrap(), &inv);
                neg.push(n);
                let p = g.multiply(pos.last().unwrap(), u);
                pos.push(p);
            }
            neg.into_iter().skip(1).rev().chain(pos).collect()
        })
        .collect()
}

fn fill_products(
    g: &impl TargetGroup,
    tables: &[Vec<Elem>],
    level: usize,
    prefix: &Elem,
    out: &mut Vec<Elem>,
) {
    if level == tables.len() {
        out.push(prefix.clone());
        return;
    }
    for p in &tables[level] {
        let next = g.multiply(prefix, p);
        fill_products(g, tables, level + 1, &next, out);
    }
}

/// All products `u_1^{ℓ_1} ⋯ u_d^{ℓ_d}`, `|ℓ_i| ≤ b_i`, in lexicographic order of ℓ.
pub fn enumerate_products(
    g: &impl TargetGroup,
    gens: &[Elem],
    bounds: &[i64],
    budget: u64,
) -> Result<Vec<Elem>> {
    grid_size(bounds, budget)?;
    if gens.is_empty() {
        return Ok(vec![g.identity()]);
    }
    let tables = power_tables(g, gens, bounds);
    let shards: Vec<Vec<Elem>> = tables[0]
        .par_iter()
        .map(|first| {
            let mut out = Vec::new();
            fill_products(g, &tables, 1, first, &mut out);
            out
        })
        .collect();
    Ok(shards.into_iter().flatten().collect())
}

/// `enumerate(P, m)` as a set.
pub fn enumerate(
    g: &impl TargetGroup,
    p: &OrderedProgression,
    m: &Rat,
    budget: u64,
) -> Result<ElementSet> {
    let bounds = p.scaled_bounds(m);
    Ok(enumerate_products(g, &p.gens, &bounds, budget)?
        .into_iter()
        .collect())
}

/// Canonical representative of the coset `xH`.
pub fn coset_key(g: &impl TargetGroup, h: &[Elem], x: &[i64]) -> Elem {
    if h.len() <= 1 {
        return x.to_vec();
    }
    h.iter()
        .map(|y| g.multiply(x, y))
        .min()
        .expect("H is non-empty")
}

/// Outcome of a properness scan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProperReport {
    pub proper: bool,
    pub scanned: u64,
    /// First repeat in lexicographic scan order: `(ℓ, ℓ')` with `ℓ < ℓ'`.
    pub collision: Option<(Vec<i64>, Vec<i64>)>,
}

/// Whether the images `u_1^{ℓ_1} ⋯ u_d^{ℓ_d}` (modulo `H`) are distinct for
/// `|ℓ_i| ≤ b_i`.
pub fn scan_proper(
    g: &impl TargetGroup,
    gens: &[Elem],
    h: &[Elem],
    bounds: &[i64],
    budget: u64,
) -> Result<ProperReport> {
    let images = enumerate_products(g, gens, bounds, budget)?;
    let keys: Vec<Elem> = if h.len() <= 1 {
        images
    } else {
        images.par_iter().map(|x| coset_key(g, h, x)).collect()
    };
    let mut seen: HashMap<&[i64], u64> = HashMap::with_capacity(keys.len());
    for (idx, k) in keys.iter().enumerate() {
        if let Some(&prev) = seen.get(k.as_slice()) {
            return Ok(ProperReport {
                proper: false,
                scanned: idx as u64 + 1,
                collision: Some((decode_rank(prev, bounds), decode_rank(idx as u64, bounds))),
            });
        }
        seen.insert(k, idx as u64);
    }
    Ok(ProperReport {
        proper: true,
        scanned: keys.len() as u64,
        collision: None,
    })
}

/// `m`-properness of `HP` with generators already mapped into the target.
pub fn is_proper(
    g: &impl TargetGroup,
    p: &CosetProgression,
    m: &Rat,
    budget: u64,
) -> Result<ProperReport> {
    scan_proper(g, &p.prog.gens, &p.h, &p.prog.scaled_bounds(m), budget)
}

/// Exponents `ℓ` with `u^ℓ = x` and `|ℓ_i| ≤ b_i`, the lexicographically
/// first one if several exist.
pub fn find_in_progression(
    g: &impl TargetGroup,
    gens: &[Elem],
    bounds: &[i64],
    x: &[i64],
    budget: u64,
) -> Result<Option<Vec<i64>>> {
    let all = enumerate_products(g, gens, bounds, budget)?;
    Ok(all
        .iter()
        .position(|y| y.as_slice() == x)
        .map(|i| decode_rank(i as u64, bounds)))
}

/// A recorded expression `[u_i^{s_i}, u_j^{s_j}] = u_{j+1}^{ℓ_{j+1}} ⋯ u_d^{ℓ_d}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PExpression {
    pub i: usize,
    pub j: usize,
    pub signs: (i64, i64),
    /// Exponents of `u_{j+1}, …, u_d`.
    pub tail: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpperTriReport {
    pub holds: bool,
    /// `(i, j, s_i, s_j)`, 1-based, of the first failing commutator.
    pub witness: Option<(usize, usize, i64, i64)>,
    pub expressions: Vec<PExpression>,
}

/// Checks `C`-upper-triangular form: every `[u_i^{±1}, u_j^{±1}]`, `i < j`,
/// lies in `P_ord(u_{j+1}, …, u_d; C L_{j+1}/(L_i L_j), …)`.
pub fn is_upper_triangular(
    g: &impl TargetGroup,
    p: &OrderedProgression,
    c: &Rat,
    budget: u64,
) -> Result<UpperTriReport> {
    let d = p.rank();
    let mut expressions = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let li = p.lengths[i].max(1);
            let lj = p.lengths[j].max(1);
            let bounds: Vec<i64> = (j + 1..d)
                .map(|k| floor_i64(&(c * int(p.lengths[k]) / int(li * lj))).max(0))
                .collect();
            for si in [1i64, -1] {
                for sj in [1i64, -1] {
                    let a = g.pow(&p.gens[i], si);
                    let b = g.pow(&p.gens[j], sj);
                    let comm = g.commutator(&a, &b);
                    match find_in_progression(g, &p.gens[j + 1..], &bounds, &comm, budget)? {
                        Some(tail) => expressions.push(PExpression {
                            i: i + 1,
                            j: j + 1,
                            signs: (si, sj),
                            tail,
                        }),
                        None => {
                            return Ok(UpperTriReport {
                                holds: false,
                                witness: Some((i + 1, j + 1, si, sj)),
                                expressions,
                            })
                        }
                    }
                }
            }
        }
    }
    Ok(UpperTriReport {
        holds: true,
        witness: None,
        expressions,
    })
}

/// ζ-weights from recorded P-expressions.
pub fn zeta_weights(d: usize, expressions: &[PExpression]) -> Result<Vec<u32>> {
    let mut zeta = vec![1u32; d];
    for k in 0..d {
        for e in expressions {
            if e.i == 0 || e.j <= e.i || e.j > d || e.tail.len() != d - e.j {
                return Err(Error::InvalidInput(format!(
                    "malformed expression for [u{}, u{}]",
                    e.i, e.j
                )));
            }
            // Tail index t is generator j + 1 + t (1-based), i.e. 0-based j + t.
            if k >= e.j && e.tail[k - e.j] != 0 {
                zeta[k] = zeta[k].max(zeta[e.i - 1] + zeta[e.j - 1]);
            }
        }
    }
    Ok(zeta)
}

/// `P_ord(u; K n^ζ L)`.
pub fn power_envelope(p: &OrderedProgression, zeta: &[u32], n: i64, k: &Rat) -> OrderedProgression {
    let lengths = p
        .lengths
        .iter()
        .zip(zeta)
        .map(|(&l, &z)| crate::rational::ceil_i64(&(k * int(n.pow(z) * l))))
        .collect();
    OrderedProgression {
        gens: p.gens.clone(),
        lengths,
    }
}

/// Product set `A · B`.
pub fn product_set(g: &impl TargetGroup, a: &ElementSet, b: &ElementSet) -> ElementSet {
    let av: Vec<&Elem> = a.iter().collect();
    let chunks: Vec<Vec<Elem>> = av
        .par_iter()
        .map(|x| b.iter().map(|y| g.multiply(x, y)).collect())
        .collect();
    chunks.into_iter().flatten().collect()
}

/// `A^n` for `n ≥ 1`.
pub fn power_set(g: &impl TargetGroup, a: &ElementSet, n: u32, budget: u64) -> Result<ElementSet> {
    let mut acc = a.clone();
    for _ in 1..n {
        if (acc.len() as u128) * (a.len() as u128) > budget as u128 * 16 {
            return Err(Error::BudgetExceeded {
                needed: acc.len() as u128 * a.len() as u128,
                budget,
            });
        }
        acc = product_set(g, &acc, a);
    }
    Ok(acc)
}

/// Smallest `K` with `P^n ⊆ P_ord(u; K n^ζ L)` for a free nilpotent target
/// whose generators are the Hall generators, so coordinates are read off directly.
pub fn measure_envelope_constant(
    g: &FreeNilpotentGroup,
    lengths: &[i64],
    zeta: &[u32],
    n: u32,
    budget: u64,
) -> Result<Rat> {
    let gens: Vec<Elem> = (0..g.dim()).map(|i| unit(g.dim(), i)).collect();
    let p: ElementSet = enumerate_products(g, &gens, lengths, budget)?
        .into_iter()
        .collect();
    let pn = power_set(g, &p, n, budget)?;
    let mut k = Rat::from_integer(0.into());
    for x in &pn {
        for i in 0..x.len() {
            let denom = (n as i64).pow(zeta[i]) * lengths[i].max(1);
            let r = Rat::new(x[i].abs().into(), denom.into());
            if r > k {
                k = r;
            }
        }
    }
    Ok(k)
}

pub fn unit(d: usize, i: usize) -> Elem {
    let mut v = vec![0; d];
    v[i] = 1;
    v
}

/// The nilpotent progression on the basic commutators of rank `r` and step
/// `s` with lengths `L^{χ(u_i)}`. Without images the generators are the free
/// Hall generators; otherwise `x_i ↦ images[i]` and `u_m` maps to the
/// corresponding commutator.
pub fn nilpotent_progression(
    basis: &HallBasis,
    generator_lengths: &[i64],
    target: &impl TargetGroup,
    images: Option<&[Elem]>,
) -> Result<OrderedProgression> {
    let lengths = basis.nilpotent_lengths(generator_lengths)?;
    let gens = match images {
        None => (0..basis.d).map(|i| unit(basis.d, i)).collect(),
        Some(imgs) => commutator_images(basis, target, imgs)?,
    };
    OrderedProgression::new(gens, lengths)
}

/// Images of all basic commutators from images of the free generators.
pub fn commutator_images(
    basis: &HallBasis,
    target: &impl TargetGroup,
    images: &[Elem],
) -> Result<Vec<Elem>> {
    if images.len() != basis.r {
        return Err(Error::InvalidInput(format!(
            "expected {} generator images, got {}",
            basis.r,
            images.len()
        )));
    }
    for x in images {
        target.validate(x)?;
    }
    let mut out: Vec<Elem> = Vec::with_capacity(basis.d);
    for b in &basis.basis {
        let v = match b.def {
            Def::Leaf(i) => images[i - 1].clone(),
            Def::Pair(i, j) => target.commutator(&out[i - 1], &out[j - 1]),
        };
        out.push(v);
    }
    Ok(out)
}

/// A homomorphism from the free nilpotent group on a Hall basis into a target.
#[derive(Clone, Debug)]
pub struct Homomorphism {
    pub target: Target,
    /// Image of every basic commutator `u_1, …, u_d`.
    pub images: Vec<Elem>,
}

impl Homomorphism {
    pub fn from_generator_images(
        domain: &FreeNilpotentGroup,
        target: Target,
        x_images: &[Elem],
    ) -> Result<Self> {
        let images = commutator_images(domain.basis(), &target, x_images)?;
        let hom = Homomorphism { target, images };
        hom.validate(domain)?;
        Ok(hom)
    }

    /// Evaluates on Mal'cev coordinates.
    pub fn apply(&self, ell: &[i64]) -> Elem {
        let t = &self.target;
        ell.iter()
            .zip(&self.images)
            .fold(t.identity(), |acc, (&e, u)| {
                if e == 0 {
                    acc
                } else {
                    t.multiply(&acc, &t.pow(u, e))
                }
            })
    }

    /// Checks that the images satisfy every collected commutator relation of
    /// the domain.
    pub fn validate(&self, domain: &FreeNilpotentGroup) -> Result<()> {
        let t = &self.target;
        let table = domain.commutator_table();
        for ((i, j, ei, ej), rhs) in table.sorted() {
            let a = t.pow(&self.images[i - 1], ei);
            let b = t.pow(&self.images[j - 1], ej);
            if t.commutator(&a, &b) != self.apply(rhs) {
                return Err(Error::Hypothesis(format!(
                    "images violate the relation for [u{i}^{ei}, u{j}^{ej}]; the target is not of step ≤ {}",
                    domain.basis().s
                )));
            }
        }
        Ok(())
    }
}

/// Result of splitting a free progression into coset representatives and a
/// progression on the powers `u_i^{Q_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetSplit {
    /// Distinct representatives `u^r` with `0 ≤ r_i < Q_i`, as exponent vectors.
    pub reps: Vec<Vec<i64>>,
    /// Lengths `M` with `P_ord(u; L) ⊆ reps · P_ord(u^Q; M)`.
    pub lengths: Vec<i64>,
}

/// Splits `x = u^r y` for every `x ∈ P_ord(u; L)` of the free nilpotent group,
/// with `y ∈ ⟨u_i^{Q_i}⟩` in collected form, and verifies the product.
pub fn coset_reps_split(
    g: &FreeNilpotentGroup,
    lengths: &[i64],
    q: &[i64],
    budget: u64,
) -> Result<CosetSplit> {
    let d = g.dim();
    if q.len() != d || q.iter().any(|&x| x < 1) {
        return Err(Error::InvalidInput(
            "Q must be positive with one entry per generator".into(),
        ));
    }
    let gens: Vec<Elem> = (0..d).map(|i| unit(d, i)).collect();
    let elems = enumerate_products(g, &gens, lengths, budget)?;
    let parts: Vec<(Vec<i64>, Vec<i64>)> = elems
        .par_iter()
        .map(|x| split_element(g, x, q))
        .collect::<Result<_>>()?;
    let mut reps: Vec<Vec<i64>> = parts.iter().map(|(r, _)| r.clone()).collect();
    reps.sort();
    reps.dedup();
    let mut m = vec![0i64; d];
    for (_, y) in &parts {
        for i in 0..d {
            m[i] = m[i].max((y[i] / q[i]).abs());
        }
    }
    Ok(CosetSplit { reps, lengths: m })
}

/// Writes `x = u^r y` with `0 ≤ r_i < Q_i` and `y ∈ ⟨u_i^{Q_i}⟩` in collected form.
pub fn split_element(g: &FreeNilpotentGroup, x: &[i64], q: &[i64]) -> Result<(Vec<i64>, Vec<i64>)> {
    let d = g.dim();
    let mut y = x.to_vec();
    let mut r = vec![0i64; d];
    // Left-multiplying by u_i^{-r_i} changes coordinate i by -r_i and only
    // touches higher coordinates otherwise.
    for i in 0..d {
        r[i] = y[i].rem_euclid(q[i]);
        if r[i] != 0 {
            let mut c = g.identity();
            g.mul_gen_power(&mut c, i, -r[i]);
            y = g.multiply(&c, &y);
        }
    }
    if g.multiply(&r, &y) != x || y.iter().zip(q).any(|(a, b)| a % b != 0) {
        return Err(Error::Internal(
            "coset split does not reproduce the element".into(),
        ));
    }
    Ok((r, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn unitriangular_group_laws() {
        let g = Unitriangular::new(4, None).unwrap();
        let a = vec![1, 2, -1, 3, 0, 2];
        let b = vec![-2, 1, 4, 0, 1, -1];
        assert_eq!(g.multiply(&a, &g.invert(&a)), g.identity());
        let c = vec![1, 1, 1, 1, 1, 1];
        assert_eq!(
            g.multiply(&g.multiply(&a, &b), &c),
            g.multiply(&a, &g.multiply(&b, &c))
        );
        let m = Unitriangular::new(3, Some(5)).unwrap();
        assert_eq!(m.pow(&[1, 0, 0], 5), m.identity());
        assert_eq!(m.order(), Some(125));
    }

    #[test]
    fn enumerate_examples() {
        let z = Target::integers();
        let p = OrderedProgression::new(vec![vec![1]], vec![2]).unwrap();
        assert_eq!(enumerate(&z, &p, &int(1), DEFAULT_BUDGET).unwrap().len(), 5);
        assert_eq!(enumerate(&z, &p, &int(0), DEFAULT_BUDGET).unwrap().len(), 1);
        let h = Target::heisenberg();
        let p = OrderedProgression::new(
            vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]],
            vec![1, 1, 1],
        )
        .unwrap();
        assert_eq!(
            enumerate(&h, &p, &int(1), DEFAULT_BUDGET).unwrap().len(),
            27
        );
        assert!(matches!(
            enumerate(&h, &p, &int(1000), 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn properness_collision() {
        let z = Target::integers();
        let p = CosetProgression::trivial(
            &z,
            OrderedProgression::new(vec![vec![1], vec![2]], vec![10, 10]).unwrap(),
        );
        let rep = is_proper(&z, &p, &int(1), DEFAULT_BUDGET).unwrap();
        assert!(!rep.proper);
        let (a, b) = rep.collision.unwrap();
        assert_eq!(a[0] + 2 * a[1], b[0] + 2 * b[1]);
        assert!(a < b);
    }

    #[test]
    fn upper_triangular_heisenberg() {
        let h = Target::heisenberg();
        let gens = vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]];
        let p = OrderedProgression::new(gens.clone(), vec![3, 3, 9]).unwrap();
        let rep = is_upper_triangular(&h, &p, &int(1), DEFAULT_BUDGET).unwrap();
        assert!(rep.holds);
        assert_eq!(zeta_weights(3, &rep.expressions).unwrap(), vec![1, 1, 2]);
        let p = OrderedProgression::new(gens, vec![3, 3, 1]).unwrap();
        let rep = is_upper_triangular(&h, &p, &int(1), DEFAULT_BUDGET).unwrap();
        assert_eq!(rep.witness.map(|w| (w.0, w.1)), Some((1, 2)));
    }

    #[test]
    fn coset_split_in_z() {
        let g = FreeNilpotentGroup::from_rank_step(1, 1).unwrap();
        let split = coset_reps_split(&g, &[5], &[2], DEFAULT_BUDGET).unwrap();
        assert_eq!(split.reps, vec![vec![0], vec![1]]);
        assert_eq!(split.lengths, vec![3]);
    }

    #[test]
    fn scaled_bounds_floor() {
        let p = OrderedProgression::new(vec![vec![1]], vec![5]).unwrap();
        assert_eq!(p.scaled_bounds(&rat(1, 2)), vec![2]);
    }
}
