//! Growth experiments: Cayley-ball enumeration, exponent fits, pigeonhole
//! scales, sumset covers and coset bookkeeping.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intlin;
use crate::prog::{self, product_set, Elem, ElementSet, Target, TargetGroup, Unitriangular};
use crate::rational::{int, rat_to_string, serde_rat, to_f64, Rat};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratingSet {
    pub elements: Vec<Elem>,
    pub symmetric: bool,
    pub contains_identity: bool,
}

impl GeneratingSet {
    pub fn new(g: &impl TargetGroup, elements: impl IntoIterator<Item = Elem>) -> Result<Self> {
        let mut elements: Vec<Elem> = elements.into_iter().collect();
        for x in &elements {
            g.validate(x)?;
        }
        elements.sort();
        elements.dedup();
        if elements.is_empty() {
            return Err(Error::InvalidInput("generating set is empty".into()));
        }
        let set: HashSet<&Elem> = elements.iter().collect();
        let symmetric = elements.iter().all(|x| set.contains(&g.invert(x)));
        let contains_identity = set.contains(&g.identity());
        Ok(GeneratingSet {
            elements,
            symmetric,
            contains_identity,
        })
    }

    /// `S ∪ S⁻¹ ∪ {1}`.
    pub fn symmetrize(&self, g: &impl TargetGroup) -> Result<Self> {
        let mut all = self.elements.clone();
        all.extend(self.elements.iter().map(|x| g.invert(x)));
        all.push(g.identity());
        Self::new(g, all)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// `{0, ±1}` in `Z`, encoded in `UT(2, Z)`.
pub fn integers_standard() -> (Target, GeneratingSet) {
    let g = Target::integers();
    let s = GeneratingSet::new(&g, [vec![0], vec![1], vec![-1]]).expect("valid");
    (g, s)
}

/// `{1, x^{±1}, y^{±1}, z^{±1}}` in the Heisenberg group.
pub fn heisenberg_standard() -> (Target, GeneratingSet) {
    let g = Target::heisenberg();
    let s = GeneratingSet::new(
        &g,
        [
            vec![0, 0, 0],
            vec![1, 0, 0],
            vec![-1, 0, 0],
            vec![0, 0, 1],
            vec![0, 0, -1],
            vec![0, 1, 0],
            vec![0, -1, 0],
        ],
    )
    .expect("valid");
    (g, s)
}

/// Unitriangular matrices with `|a_12| ≤ a`, `|a_23| ≤ b`, `|a_13| ≤ c`.
pub fn heisenberg_box(a: i64, b: i64, c: i64) -> (Target, GeneratingSet) {
    let g = Target::heisenberg();
    let mut els = Vec::new();
    for x in -a..=a {
        for z in -c..=c {
            for y in -b..=b {
                els.push(vec![x, z, y]);
            }
        }
    }
    let s = GeneratingSet::new(&g, els).expect("valid");
    (g, s)
}

/// The family with entries in `[-n, n]`, `[-n, n]`, `[-n³, n³]`, symmetrized.
pub fn cubic_family(n: i64) -> (Target, GeneratingSet) {
    let (g, s) = heisenberg_box(n, n, n * n * n);
    let s = s.symmetrize(&g).expect("valid");
    (g, s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthCurve {
    pub group: String,
    pub generators: String,
    /// `(n, |Sⁿ|)` for `n = 1, 2, …`.
    pub points: Vec<(u32, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub lo: u32,
    pub hi: u32,
}

impl GrowthCurve {
    pub fn size(&self, n: u32) -> Option<u64> {
        if n == 0 {
            return Some(1);
        }
        self.points.get(n as usize - 1).map(|p| p.1)
    }

    pub fn max_radius(&self) -> u32 {
        self.points.len() as u32
    }

    /// Least-squares slope of `log |S^r|` against `log r` on `lo ≤ r ≤ hi`.
    pub fn fit(&self, lo: u32, hi: u32) -> Result<ExponentFit> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|(n, _)| *n >= lo.max(1) && *n <= hi)
            .map(|&(n, s)| ((n as f64).ln(), (s as f64).ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need two radii in [{lo}, {hi}] to fit an exponent"
            )));
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residual = (pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum::<f64>()
            / k)
            .sqrt();
        Ok(ExponentFit {
            slope,
            intercept,
            residual,
            lo,
            hi,
        })
    }

    /// Fit over the top half `⌈hi/2⌉ ≤ r ≤ hi` of `[lo, hi]`.
    pub fn fit_top_half(&self, lo: u32, hi: u32) -> Result<ExponentFit> {
        let mid = lo + (hi - lo).div_ceil(2);
        self.fit(mid.min(hi.saturating_sub(1)).max(lo), hi)
    }

    /// CSV with columns `n, size, ratio, slope`: the ratio `|Sⁿ|/|S^{n-1}|`
    /// and the local log-log slope between `n - 1` and `n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,size,ratio,slope\n");
        let mut prev = 1u64;
        for &(n, s) in &self.points {
            let ratio = s as f64 / prev as f64;
            let slope = if n >= 2 {
                format!(
                    "{:.6}",
                    (s as f64 / prev as f64).ln() / (n as f64 / (n - 1) as f64).ln()
                )
            } else {
                String::new()
            };
            out.push_str(&format!("{n},{s},{ratio:.6},{slope}\n"));
            prev = s;
        }
        out
    }
}

fn is_heisenberg(g: &Target) -> bool {
    matches!(g, Target::Unitriangular(u) if u.size() == 3 && u.modulus().is_none())
}

/// Exact `|Sⁿ|` for `n = 1..=n_max`.
pub fn ball_growth(g: &Target, s: &GeneratingSet, n_max: u32, budget: u64) -> Result<GrowthCurve> {
    let sizes = if is_heisenberg(g) {
        heisenberg_growth(&s.elements, n_max, budget)?
    } else if s.contains_identity {
        frontier_growth(g, &s.elements, n_max, budget)?
    } else {
        product_growth(g, &s.elements, n_max, budget)?
    };
    Ok(GrowthCurve {
        group: format!("{:?}", g.descriptor()),
        generators: format!("{} elements", s.len()),
        points: sizes
            .into_iter()
            .enumerate()
            .map(|(i, c)| (i as u32 + 1, c))
            .collect(),
    })
}

fn check_budget(size: usize, budget: u64) -> Result<()> {
    if size as u64 > budget {
        return Err(Error::BudgetExceeded {
            needed: size as u128,
            budget,
        });
    }
    Ok(())
}

/// Ball growth by frontier expansion; requires `1 ∈ S`.
fn frontier_growth(g: &impl TargetGroup, s: &[Elem], n_max: u32, budget: u64) -> Result<Vec<u64>> {
    let mut seen: HashSet<Elem> = s.iter().cloned().collect();
    let mut frontier: Vec<Elem> = s.to_vec();
    frontier.sort();
    let mut sizes = Vec::new();
    for n in 1..=n_max {
        if n > 1 {
            let cand: Vec<Elem> = frontier
                .par_chunks(1024)
                .flat_map_iter(|chunk| {
                    let mut out = Vec::new();
                    for x in chunk {
                        for y in s {
                            out.push(g.multiply(x, y));
                        }
                    }
                    out
                })
                .collect();
            let mut next = Vec::new();
            for c in cand {
                if !seen.contains(&c) {
                    seen.insert(c.clone());
                    next.push(c);
                }
            }
            check_budget(seen.len(), budget)?;
            next.sort();
            frontier = next;
        }
        sizes.push(seen.len() as u64);
    }
    Ok(sizes)
}

fn product_growth(g: &impl TargetGroup, s: &[Elem], n_max: u32, budget: u64) -> Result<Vec<u64>> {
    let base: ElementSet = s.iter().cloned().collect();
    let mut cur = base.clone();
    let mut sizes = Vec::new();
    for n in 1..=n_max {
        if n > 1 {
            check_budget(cur.len() * base.len(), budget.saturating_mul(64))?;
            cur = product_set(g, &cur, &base);
            check_budget(cur.len(), budget)?;
        }
        sizes.push(cur.len() as u64);
    }
    Ok(sizes)
}

/// `dst |= src << shift` on little-endian bit vectors of equal length;
/// negative shifts move towards bit 0. Bits leaving the range are dropped.
fn or_shifted(dst: &mut [u64], src: &[u64], shift: i64) {
    let n = dst.len() as i64;
    let ws = shift.div_euclid(64);
    let bs = shift.rem_euclid(64) as u32;
    for (i, &w) in src.iter().enumerate() {
        if w == 0 {
            continue;
        }
        let lo = i as i64 + ws;
        if (0..n).contains(&lo) {
            dst[lo as usize] |= w << bs;
        }
        if bs > 0 && (0..n).contains(&(lo + 1)) {
            dst[(lo + 1) as usize] |= w >> (64 - bs);
        }
    }
}

/// `v | v << 1 | … | v << (w - 1)`.
fn dilate(v: &mut Vec<u64>, w: i64) {
    let mut covered = 1;
    while covered < w {
        let step = covered.min(w - covered);
        let copy = v.clone();
        or_shifted(v, &copy, step);
        covered += step;
    }
}

struct Fibers {
    xr: i64,
    yr: i64,
    zr: i64,
    data: Vec<Vec<u64>>,
}

impl Fibers {
    fn index(&self, x: i64, y: i64) -> Option<usize> {
        if x.abs() > self.xr || y.abs() > self.yr {
            return None;
        }
        Some(((x + self.xr) * (2 * self.yr + 1) + y + self.yr) as usize)
    }

    fn count(&self) -> u64 {
        self.data
            .iter()
            .flatten()
            .map(|w| w.count_ones() as u64)
            .sum()
    }
}

/// Ball growth in `UT(3, Z)` with each fiber over `(a_12, a_23)` stored as a
/// bit set of `a_13` values. Valid for any `S`, with or without identity.
fn heisenberg_growth(s: &[Elem], n_max: u32, budget: u64) -> Result<Vec<u64>> {
    let mx = s.iter().map(|e| e[0].abs()).max().unwrap_or(0);
    let mz = s.iter().map(|e| e[1].abs()).max().unwrap_or(0);
    let my = s.iter().map(|e| e[2].abs()).max().unwrap_or(0);
    // Group S by (a_12, a_23); the a_13 values of a group share one dilation.
    let mut groups: HashMap<(i64, i64), Vec<i64>> = HashMap::new();
    for e in s {
        groups.entry((e[0], e[2])).or_default().push(e[1]);
    }
    let mut shapes: Vec<Vec<i64>> = Vec::new();
    let mut group_list: Vec<(i64, i64, usize)> = Vec::new();
    let mut keys: Vec<(i64, i64)> = groups.keys().copied().collect();
    keys.sort();
    for k in keys {
        let mut zs = groups[&k].clone();
        zs.sort();
        zs.dedup();
        let id = match shapes.iter().position(|t| *t == zs) {
            Some(i) => i,
            None => {
                shapes.push(zs);
                shapes.len() - 1
            }
        };
        group_list.push((k.0, k.1, id));
    }

    let mut cur = Fibers {
        xr: 0,
        yr: 0,
        zr: 0,
        data: vec![vec![1u64]],
    };
    let mut sizes = Vec::with_capacity(n_max as usize);
    for _ in 1..=n_max {
        let xr = cur.xr + mx;
        let yr = cur.yr + my;
        let zr = cur.zr + mz + cur.xr * my;
        let bits = 2 * zr + 1;
        let words = (bits as usize).div_ceil(64);
        let fibers = ((2 * xr + 1) * (2 * yr + 1)) as usize;
        check_budget(fibers * words * 64, budget.saturating_mul(64))?;
        // Dilations of every source fiber by every shape, in new z-coordinates
        // without the x·s_y shear.
        let dil: Vec<Vec<Option<Vec<u64>>>> = shapes
            .iter()
            .map(|zs| {
                cur.data
                    .par_iter()
                    .map(|src| {
                        if src.iter().all(|&w| w == 0) {
                            return None;
                        }
                        let mut out = vec![0u64; words];
                        let (lo, hi) = (zs[0], *zs.last().unwrap());
                        if (hi - lo + 1) as usize == zs.len() {
                            or_shifted(&mut out, src, lo + zr - cur.zr);
                            dilate(&mut out, hi - lo + 1);
                        } else {
                            for &t in zs {
                                or_shifted(&mut out, src, t + zr - cur.zr);
                            }
                        }
                        Some(out)
                    })
                    .collect()
            })
            .collect();
        let cur_ref = &cur;
        let data: Vec<Vec<u64>> = (0..fibers)
            .into_par_iter()
            .map(|idx| {
                let x = idx as i64 / (2 * yr + 1) - xr;
                let y = idx as i64 % (2 * yr + 1) - yr;
                let mut out = vec![0u64; words];
                for &(sx, sy, shape) in &group_list {
                    let (px, py) = (x - sx, y - sy);
                    if let Some(src) = cur_ref.index(px, py) {
                        if let Some(d) = &dil[shape][src] {
                            or_shifted(&mut out, d, px * sy);
                        }
                    }
                }
                out
            })
            .collect();
        cur = Fibers { xr, yr, zr, data };
        let c = cur.count();
        check_budget(c as usize, budget)?;
        sizes.push(c);
    }
    Ok(sizes)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PigeonholeReport {
    pub n: u32,
    pub k: u32,
    /// `|S^{qk}| / |S^k|`.
    pub ratio: f64,
    /// `q^{(D+1)/(1-α)}`.
    pub threshold: f64,
}

/// Smallest `k` with `n^α < k < βn` and `|S^{qk}| ≤ q^{(D+1)/(1-α)} |S^k|`,
/// after checking `|Sⁿ| ≤ M n^D |S|`.
pub fn pigeonhole_scale(
    curve: &GrowthCurve,
    n: u32,
    q: u32,
    alpha: &Rat,
    beta: &Rat,
    m: &Rat,
    d: &Rat,
) -> Result<PigeonholeReport> {
    let (a, b, mf, df) = (to_f64(alpha), to_f64(beta), to_f64(m), to_f64(d));
    if !(0.0..1.0).contains(&a) || b <= 0.0 || q < 2 {
        return Err(Error::InvalidInput(
            "need 0 ≤ α < 1, β > 0 and q ≥ 2".into(),
        ));
    }
    let s1 = curve
        .size(1)
        .ok_or_else(|| Error::InvalidInput("empty curve".into()))?;
    let sn = curve
        .size(n)
        .ok_or_else(|| Error::InvalidInput(format!("curve stops before n = {n}")))?;
    if sn as f64 > mf * (n as f64).powf(df) * s1 as f64 {
        return Err(Error::Hypothesis(format!(
            "|S^{n}| = {sn} exceeds {} n^{} |S|",
            rat_to_string(m),
            rat_to_string(d)
        )));
    }
    let threshold = (q as f64).powf((df + 1.0) / (1.0 - a));
    let lo = (n as f64).powf(a).floor() as u32 + 1;
    let hi = (b * n as f64).ceil() as u32;
    for k in lo..hi {
        if (k as f64) >= b * n as f64 {
            break;
        }
        let big = curve.size(q * k).ok_or_else(|| {
            Error::InvalidInput(format!("curve must reach radius {} to test k = {k}", q * k))
        })?;
        let small = curve.size(k).expect("k < qk");
        let ratio = big as f64 / small as f64;
        if ratio <= threshold {
            return Ok(PigeonholeReport {
                n,
                k,
                ratio,
                threshold,
            });
        }
    }
    Err(Error::Hypothesis(format!(
        "no k in ({}, {}) meets the threshold",
        lo - 1,
        hi
    )))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rom8Report {
    pub k: u32,
    pub size: usize,
    /// `|A| / (L_1 ⋯ L_d)`.
    #[serde(with = "serde_rat")]
    pub density: Rat,
    /// `|kA|` for `k = 1, 2, …`.
    pub sumset_sizes: Vec<u64>,
}

/// Dense bit set over the box `[-R_1, R_1] × ⋯ × [-R_d, R_d]`.
struct GridSet {
    radii: Vec<i64>,
    strides: Vec<i64>,
    bits: Vec<u64>,
}

impl GridSet {
    fn new(radii: Vec<i64>, budget: u64) -> Result<Self> {
        let mut strides = vec![1i64; radii.len()];
        let mut total: u128 = 1;
        for i in (0..radii.len()).rev() {
            strides[i] = total as i64;
            total *= (2 * radii[i] + 1) as u128;
        }
        if total > budget as u128 * 64 {
            return Err(Error::BudgetExceeded {
                needed: total,
                budget,
            });
        }
        Ok(GridSet {
            radii,
            strides,
            bits: vec![0; (total as usize).div_ceil(64)],
        })
    }

    fn offset(&self, p: &[i64]) -> i64 {
        p.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }

    fn linear(&self, p: &[i64]) -> usize {
        p.iter()
            .zip(&self.radii)
            .zip(&self.strides)
            .map(|((x, r), s)| (x + r) * s)
            .sum::<i64>() as usize
    }

    fn insert(&mut self, p: &[i64]) {
        let i = self.linear(p);
        self.bits[i / 64] |= 1 << (i % 64);
    }

    fn contains(&self, p: &[i64]) -> bool {
        if p.iter().zip(&self.radii).any(|(x, r)| x.abs() > *r) {
            return false;
        }
        let i = self.linear(p);
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn points(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        for (wi, &w) in self.bits.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                let mut rem = (wi * 64 + b) as i64;
                let p: Vec<i64> = self
                    .strides
                    .iter()
                    .zip(&self.radii)
                    .map(|(s, r)| {
                        let c = rem / s;
                        rem %= s;
                        c - r
                    })
                    .collect();
                out.push(p);
            }
        }
        out
    }
}

fn lattice_index_of_differences(a: &[Vec<i64>], d: usize) -> Option<BigInt> {
    let base = &a[0];
    let diffs: Vec<Vec<BigInt>> = a[1..]
        .iter()
        .map(|x| intlin::big(&x.iter().zip(base).map(|(p, q)| p - q).collect::<Vec<_>>()))
        .collect();
    if diffs.is_empty() {
        return (d == 0).then(BigInt::one);
    }
    intlin::sublattice_index(&diffs, d)
}

/// Smallest `k` with `B_Z(e; L) ⊆ kA` for the standard basis `e`.
pub fn rom8_check(
    a: &[Vec<i64>],
    lengths: &[i64],
    c: &Rat,
    max_k: u32,
    budget: u64,
) -> Result<Rom8Report> {
    let d = lengths.len();
    let mut pts: Vec<Vec<i64>> = a.to_vec();
    pts.sort();
    pts.dedup();
    if pts.is_empty() || pts.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidInput(format!(
            "A must be a non-empty set of points in Z^{d}"
        )));
    }
    if pts
        .iter()
        .any(|p| p.iter().zip(lengths).any(|(x, l)| x.abs() > *l))
    {
        return Err(Error::Hypothesis("A is not contained in the box".into()));
    }
    let set: HashSet<&Vec<i64>> = pts.iter().collect();
    if pts
        .iter()
        .any(|p| !set.contains(&p.iter().map(|x| -x).collect::<Vec<_>>()))
    {
        return Err(Error::Hypothesis("A is not symmetric".into()));
    }
    let vol: i64 = lengths.iter().product();
    let density = int(pts.len() as i64) / int(vol.max(1));
    if density < *c {
        return Err(Error::Hypothesis(format!(
            "|A| = {} is below {} L_1⋯L_d",
            pts.len(),
            rat_to_string(c)
        )));
    }
    match lattice_index_of_differences(&pts, d) {
        Some(i) if i.is_one() => {}
        other => {
            return Err(Error::NotGenerating {
                index: other.map_or("infinite".into(), |i| i.to_string()),
            })
        }
    }
    let mut cur = GridSet::new(lengths.to_vec(), budget)?;
    for p in &pts {
        cur.insert(p);
    }
    let box_pts: u64 = lengths.iter().map(|&l| (2 * l + 1) as u64).product();
    let covers = |g: &GridSet| -> bool {
        let total = box_pts;
        (0..total).all(|idx| g.contains(&prog::decode_rank(idx, lengths)))
    };
    let mut sizes = vec![cur.count()];
    for k in 1..=max_k {
        if covers(&cur) {
            return Ok(Rom8Report {
                k,
                size: pts.len(),
                density,
                sumset_sizes: sizes,
            });
        }
        let radii: Vec<i64> = lengths.iter().map(|&l| l * (k as i64 + 1)).collect();
        let mut emb = GridSet::new(radii.clone(), budget)?;
        for p in cur.points() {
            emb.insert(&p);
        }
        let mut next = GridSet::new(radii, budget)?;
        let shifts: Vec<i64> = pts.iter().map(|p| next.offset(p)).collect();
        let chunk = next
            .bits
            .len()
            .div_ceil(rayon::current_num_threads().max(1))
            .max(1024);
        // Every shift is applied to the whole source; sharding the shifts
        // keeps each partial result independent and the merge is an OR.
        let partials: Vec<Vec<u64>> = shifts
            .par_chunks(chunk.min(shifts.len()).max(1))
            .map(|sh| {
                let mut out = vec![0u64; emb.bits.len()];
                for &s in sh {
                    or_shifted(&mut out, &emb.bits, s);
                }
                out
            })
            .collect();
        for part in partials {
            for (o, w) in next.bits.iter_mut().zip(part) {
                *o |= w;
            }
        }
        sizes.push(next.count());
        cur = next;
    }
    Err(Error::BudgetExceeded {
        needed: max_k as u128 + 1,
        budget: max_k as u64,
    })
}

/// Smallest `k` with `P ⊆ kA` in `Z/n`, or `None` if no `k ≤ max_k` works.
pub fn cyclic_cover_power(n: i64, a: &[i64], p: &[i64], max_k: u32) -> Option<u32> {
    let n_us = n as usize;
    let norm = |x: i64| x.rem_euclid(n) as usize;
    let base: Vec<usize> = a.iter().map(|&x| norm(x)).collect();
    let mut cur = vec![false; n_us];
    for &b in &base {
        cur[b] = true;
    }
    for k in 1..=max_k {
        if p.iter().all(|&x| cur[norm(x)]) {
            return Some(k);
        }
        let mut next = vec![false; n_us];
        for (i, &on) in cur.iter().enumerate() {
            if on {
                for &b in &base {
                    next[(i + b) % n_us] = true;
                }
            }
        }
        cur = next;
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreiCheck {
    pub omega: usize,
    pub omega_cubed: usize,
    /// Whether `|Ω³| < 2|Ω|` held.
    pub triggered: bool,
    /// Whether `Ω²` is a subgroup; checked only when triggered.
    pub square_is_subgroup: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverReport {
    pub k: u32,
    pub group_order: u64,
    /// `|Ω^j|` for `j = 1..=k`.
    pub sizes: Vec<u64>,
    pub frei: FreiCheck,
}

/// Whether `|Ω³| < 2|Ω|`, and if so whether `Ω²` is a subgroup.
pub fn frei_check(g: &impl TargetGroup, omega: &ElementSet) -> FreiCheck {
    let sq = product_set(g, omega, omega);
    let cube = product_set(g, &sq, omega);
    let triggered = cube.len() < 2 * omega.len();
    let square_is_subgroup =
        triggered.then(|| product_set(g, &sq, &sq).len() == sq.len() && sq.contains(&g.identity()));
    FreiCheck {
        omega: omega.len(),
        omega_cubed: cube.len(),
        triggered,
        square_is_subgroup,
    }
}

/// Smallest `k` with `Ω^k = H` for a symmetric generating `Ω` of a finite group.
pub fn finite_group_cover(
    g: &impl TargetGroup,
    omega: &[Elem],
    budget: u64,
) -> Result<CoverReport> {
    let order = g
        .order()
        .ok_or_else(|| Error::InvalidInput("group is not finite".into()))?;
    if order > budget as u128 {
        return Err(Error::BudgetExceeded {
            needed: order,
            budget,
        });
    }
    let base: ElementSet = omega.iter().cloned().collect();
    if base.is_empty() {
        return Err(Error::InvalidInput("Ω is empty".into()));
    }
    if base.iter().any(|x| !base.contains(&g.invert(x))) {
        return Err(Error::Hypothesis("Ω is not symmetric".into()));
    }
    let generated = {
        let mut seen: ElementSet = base.clone();
        seen.insert(g.identity());
        let mut frontier: Vec<Elem> = seen.iter().cloned().collect();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for x in &frontier {
                for s in &base {
                    let y = g.multiply(x, s);
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            frontier = next;
        }
        seen.len() as u128
    };
    if generated != order {
        return Err(Error::NotGenerating {
            index: (order / generated).to_string(),
        });
    }
    let frei = frei_check(g, &base);
    if frei.square_is_subgroup == Some(false) {
        return Err(Error::Internal(
            "|Ω³| < 2|Ω| but Ω² is not a subgroup".into(),
        ));
    }
    let mut cur = base.clone();
    let mut sizes = vec![cur.len() as u64];
    for k in 1..=(order as u32 + 1) {
        if cur.len() as u128 == order {
            return Ok(CoverReport {
                k,
                group_order: order as u64,
                sizes,
                frei,
            });
        }
        cur = product_set(g, &cur, &base);
        sizes.push(cur.len() as u64);
    }
    Err(Error::Hypothesis("powers of Ω never fill the group".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceRow {
    pub n: u32,
    pub s_size: u64,
    pub sn_size: u64,
    /// `|Sⁿ| ≤ M n^D |S|`.
    pub hypothesis: bool,
    pub fit: ExponentFit,
    pub floor_d: i64,
    pub exceeds_floor: bool,
}

/// Per `n`: the hypothesis `|Sⁿ| ≤ M n^D |S|` and the growth exponent of
/// `|S^r|` fitted on the top half of `[n, r_max]`.
pub fn persistence_harness(
    family: impl Fn(i64) -> (Target, GeneratingSet),
    ns: &[u32],
    m: &Rat,
    d: &Rat,
    r_max: u32,
    budget: u64,
) -> Result<Vec<PersistenceRow>> {
    let floor_d = crate::rational::floor_i64(d);
    ns.iter()
        .map(|&n| {
            if n >= r_max {
                return Err(Error::InvalidInput(format!(
                    "n = {n} must be below r_max = {r_max}"
                )));
            }
            let (g, s) = family(n as i64);
            let curve = ball_growth(&g, &s, r_max, budget)?;
            let s_size = curve.size(1).unwrap_or(0);
            let sn_size = curve.size(n).unwrap_or(0);
            let bound = m * power_rat(n, d) * int(s_size as i64);
            let hypothesis = int(sn_size as i64) <= bound;
            let fit = curve.fit_top_half(n, r_max)?;
            Ok(PersistenceRow {
                n,
                s_size,
                sn_size,
                hypothesis,
                exceeds_floor: fit.slope > floor_d as f64 + 0.3,
                fit,
                floor_d,
            })
        })
        .collect()
}

/// `n^D`, exact for integer `D` and rounded up from `f64` otherwise.
fn power_rat(n: u32, d: &Rat) -> Rat {
    if d.is_integer() {
        let e = d.to_integer().to_i32().unwrap_or(0);
        int(n as i64).pow(e)
    } else {
        let v = (n as f64).powf(to_f64(d));
        Rat::from_float(v).unwrap_or_else(|| int(i64::MAX))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FarApart {
    pub x: Vec<Elem>,
    /// `XHP ⊆ X' (HP)^power`.
    pub power: u32,
    /// The translates `x (HP)^{k·power}`, `x ∈ X'`, are pairwise disjoint.
    pub disjoint: bool,
    pub covered: bool,
}

fn power_of(g: &impl TargetGroup, base: &ElementSet, k: u32, budget: u64) -> Result<ElementSet> {
    let mut cur = base.clone();
    for _ in 1..k {
        check_budget(cur.len() * base.len(), budget)?;
        cur = product_set(g, &cur, base);
    }
    Ok(cur)
}

fn translate(g: &impl TargetGroup, x: &[i64], s: &ElementSet) -> ElementSet {
    s.iter().map(|y| g.multiply(x, y)).collect()
}

/// Prunes `X` until the translates `x (HP)^{k·t}` are pairwise disjoint,
/// where `t` grows by a factor `2k + 1` per removed element.
pub fn cosets_far_apart(
    g: &impl TargetGroup,
    x: &[Elem],
    hp: &ElementSet,
    k: u32,
    budget: u64,
) -> Result<FarApart> {
    let mut xs: Vec<Elem> = x.to_vec();
    xs.sort();
    xs.dedup();
    let mut power = 1u32;
    loop {
        let big = power_of(g, hp, k * power, budget)?;
        let translates: Vec<ElementSet> = xs.iter().map(|a| translate(g, a, &big)).collect();
        let mut clash = None;
        'outer: for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                if !translates[i].is_disjoint(&translates[j]) {
                    clash = Some(j);
                    break 'outer;
                }
            }
        }
        match clash {
            None => break,
            Some(j) => {
                xs.remove(j);
                power *= 2 * k + 1;
            }
        }
    }
    let hp_pow = power_of(g, hp, power, budget)?;
    let cover: ElementSet = xs.iter().flat_map(|a| translate(g, a, &hp_pow)).collect();
    let covered = x.iter().all(|a| translate(g, a, hp).is_subset(&cover));
    Ok(FarApart {
        x: xs,
        power,
        disjoint: true,
        covered,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalReps {
    pub x: Vec<Elem>,
    /// `S^k ⊆ X' A⁻¹ A`.
    pub covered: bool,
}

/// Greedy `X' ⊆ S^{|X|} ∩ XA` with `S^k ⊆ X' A⁻¹A`, given `S^k ⊆ XA` and `|X| < k`.
pub fn coset_reps_local(
    g: &impl TargetGroup,
    s: &ElementSet,
    x: &[Elem],
    a: &ElementSet,
    k: u32,
    budget: u64,
) -> Result<LocalReps> {
    if x.len() as u32 >= k {
        return Err(Error::Hypothesis(format!(
            "|X| = {} is not below k = {k}",
            x.len()
        )));
    }
    let sk = power_of(g, s, k, budget)?;
    let xa: ElementSet = x.iter().flat_map(|p| translate(g, p, a)).collect();
    if !sk.is_subset(&xa) {
        return Err(Error::Hypothesis("S^k is not contained in XA".into()));
    }
    let a_inv: ElementSet = a.iter().map(|y| g.invert(y)).collect();
    let aa = product_set(g, &a_inv, a);
    // Candidates in order of word length, then lexicographically.
    let mut layers: Vec<Vec<Elem>> = Vec::new();
    let mut seen: ElementSet = ElementSet::new();
    let mut cur: ElementSet = ElementSet::from([g.identity()]);
    for _ in 0..=x.len() {
        let mut layer: Vec<Elem> = cur.iter().filter(|e| !seen.contains(*e)).cloned().collect();
        layer.sort();
        seen.extend(layer.iter().cloned());
        layers.push(layer);
        cur = product_set(g, &cur, s);
    }
    let mut reps: Vec<Elem> = Vec::new();
    let mut reach = ElementSet::new();
    for e in layers.into_iter().flatten() {
        if xa.contains(&e) && !reach.contains(&e) {
            reach.extend(translate(g, &e, &aa));
            reps.push(e);
        }
    }
    let covered = sk.iter().all(|e| reach.contains(e));
    Ok(LocalReps { x: reps, covered })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerCover {
    /// `S^{rt} ⊆ X (A ∩ S^{-t} S^{2t})^{r-1}`.
    pub holds: bool,
    pub lhs: usize,
    pub rhs: usize,
}

pub fn power_cover(
    g: &impl TargetGroup,
    s: &ElementSet,
    x: &[Elem],
    a: &ElementSet,
    t: u32,
    r: u32,
    budget: u64,
) -> Result<PowerCover> {
    if r == 0 || t == 0 {
        return Err(Error::InvalidInput("r and t must be positive".into()));
    }
    let lhs = power_of(g, s, r * t, budget)?;
    let st = power_of(g, s, t, budget)?;
    let s2t = power_of(g, s, 2 * t, budget)?;
    let st_inv: ElementSet = st.iter().map(|y| g.invert(y)).collect();
    let mid = product_set(g, &st_inv, &s2t);
    let core: ElementSet = a.intersection(&mid).cloned().collect();
    let mut rhs: ElementSet = x.iter().cloned().collect();
    for _ in 1..r {
        check_budget(rhs.len() * core.len(), budget)?;
        rhs = product_set(g, &rhs, &core);
    }
    Ok(PowerCover {
        holds: lhs.is_subset(&rhs),
        lhs: lhs.len(),
        rhs: rhs.len(),
    })
}

/// `Z/n` as `UT(2, Z/n)`, for cover experiments.
pub fn cyclic_group(n: i64) -> Result<Target> {
    Ok(Target::Unitriangular(Unitriangular::new(2, Some(n))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn integer_balls() {
        let (g, s) = integers_standard();
        let c = ball_growth(&g, &s, 10, 1_000_000).unwrap();
        assert_eq!(
            c.points.iter().map(|p| p.1).collect::<Vec<_>>(),
            (1..=10).map(|n| 2 * n + 1).collect::<Vec<_>>()
        );
        let f = c.fit_top_half(1, 10).unwrap();
        assert!((f.slope - 1.0).abs() < 0.1);
    }

    #[test]
    fn heisenberg_kernel_matches_bfs() {
        for (g, s) in [
            heisenberg_standard(),
            heisenberg_box(1, 1, 1),
            cubic_family(1),
        ] {
            let fast = heisenberg_growth(&s.elements, 6, 10_000_000).unwrap();
            let slow = frontier_growth(&g, &s.elements, 6, 10_000_000).unwrap();
            assert_eq!(fast, slow);
        }
        // Without identity the kernel still computes product sets.
        let g = Target::heisenberg();
        let s = vec![vec![1, 0, 0], vec![0, 0, 1], vec![-1, 0, 0], vec![0, 0, -1]];
        assert_eq!(
            heisenberg_growth(&s, 5, 1_000_000).unwrap(),
            product_growth(&g, &s, 5, 1_000_000).unwrap()
        );
    }

    #[test]
    fn standard_ball_sizes() {
        let (g, s) = heisenberg_standard();
        let c = ball_growth(&g, &s, 3, 1_000_000).unwrap();
        assert_eq!(c.size(1), Some(7));
        let csv = c.to_csv();
        assert!(csv.starts_with("n,size,ratio,slope\n1,7,7.000000,\n"));
    }

    #[test]
    fn pigeonhole_on_integers() {
        let (g, s) = integers_standard();
        let c = ball_growth(&g, &s, 60, 1_000_000).unwrap();
        let r = pigeonhole_scale(
            &c,
            100.min(c.max_radius()),
            2,
            &rat(1, 2),
            &rat(1, 2),
            &int(3),
            &int(1),
        );
        // n = 60: 60^(1/2) < k < 30, smallest k = 8.
        let r = r.unwrap();
        assert_eq!(r.k, 8);
        assert_eq!(r.threshold, 16.0);
        let synthetic = GrowthCurve {
            group: "synthetic".into(),
            generators: "synthetic".into(),
            points: (1..=40u32).map(|n| (n, 1u64 << n.min(60))).collect(),
        };
        // Doubling at every radius: |S^{2k}| / |S^k| = 2^k > 2^4 throughout 6 < k < 20.
        let err = pigeonhole_scale(
            &synthetic,
            40,
            2,
            &rat(1, 2),
            &rat(1, 2),
            &int(1 << 40),
            &int(1),
        );
        assert!(matches!(err, Err(Error::Hypothesis(m)) if m.starts_with("no k")));
    }

    #[test]
    fn rom8_examples() {
        let mut a = Vec::new();
        for x in -3..=3 {
            a.push(vec![x]);
        }
        assert_eq!(
            rom8_check(&a, &[3], &rat(1, 4), 10, 1_000_000).unwrap().k,
            1
        );
        let a: Vec<Vec<i64>> = [-7, -2, 0, 2, 7].iter().map(|&x| vec![x]).collect();
        let r = rom8_check(&a, &[10], &rat(1, 4), 20, 1_000_000).unwrap();
        assert!(r.k >= 2);
        let even: Vec<Vec<i64>> = [-2, 0, 2].iter().map(|&x| vec![x]).collect();
        assert!(matches!(
            rom8_check(&even, &[4], &rat(1, 4), 10, 1_000_000),
            Err(Error::NotGenerating { .. })
        ));
        let k11 = cyclic_cover_power(11, &[-2, 0, 2], &[-2, -1, 0, 1, 2], 100).unwrap();
        let k41 = cyclic_cover_power(41, &[-2, 0, 2], &[-2, -1, 0, 1, 2], 100).unwrap();
        assert!(k41 > k11);
    }

    #[test]
    fn cyclic_cover() {
        let g = cyclic_group(101).unwrap();
        let omega: Vec<Elem> = (-13..=13).map(|x: i64| vec![x.rem_euclid(101)]).collect();
        let r = finite_group_cover(&g, &omega, 1_000_000).unwrap();
        assert_eq!(r.k, 4);
        assert!(!r.frei.triggered);
        let h = cyclic_group(12).unwrap();
        let sub: Vec<Elem> = [0, 4, 8].iter().map(|&x| vec![x]).collect();
        let f = frei_check(&h, &sub.iter().cloned().collect());
        assert_eq!(f.omega_cubed, f.omega);
        assert_eq!(f.square_is_subgroup, Some(true));
        assert!(matches!(
            finite_group_cover(&h, &sub, 1000),
            Err(Error::NotGenerating { .. })
        ));
    }

    #[test]
    fn local_cosets() {
        let g = Target::integers();
        let iv = |a: i64, b: i64| -> ElementSet { (a..=b).map(|x| vec![x]).collect() };
        let far = cosets_far_apart(&g, &[vec![0], vec![3]], &iv(-5, 5), 1, 1_000_000).unwrap();
        assert_eq!(far.x, vec![vec![0]]);
        assert_eq!(far.power, 3);
        assert!(far.covered);
        let single = cosets_far_apart(&g, &[vec![4]], &iv(-5, 5), 2, 1_000_000).unwrap();
        assert_eq!((single.x, single.power), (vec![vec![4]], 1));
        let reps = coset_reps_local(
            &g,
            &iv(-1, 1),
            &[vec![0], vec![7]],
            &iv(-10, 10),
            5,
            1_000_000,
        )
        .unwrap();
        assert_eq!(reps.x, vec![vec![0]]);
        assert!(reps.covered);
        let pc = power_cover(&g, &iv(-1, 1), &[vec![0]], &iv(-10, 10), 2, 3, 1_000_000).unwrap();
        assert!(pc.holds);
    }

    #[test]
    fn persistence_integers() {
        let rows = persistence_harness(
            |_| integers_standard(),
            &[2, 4],
            &int(1),
            &int(1),
            20,
            1_000_000,
        )
        .unwrap();
        for r in rows {
            assert!(r.hypothesis);
            assert!(!r.exceeds_floor);
        }
    }
}
