//! Hall basic commutators and exact multiplication in free nilpotent groups
//! by collection from the left.

use std::collections::HashMap;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nilalg::{free_nilpotent_lie, unit_vec, LieContext, LieVector};
use crate::rational::{int, RatMatrix};

pub const DEFAULT_DIM_CAP: usize = 200;

/// Definition of a basic commutator, with 1-based indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Def {
    Leaf(usize),
    /// `[u_i, u_j]` with `i > j`.
    Pair(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicCommutator {
    pub index: usize,
    pub def: Def,
    pub chi: Vec<u32>,
    pub zeta: u32,
}

impl BasicCommutator {
    pub fn weight(&self) -> u32 {
        self.chi.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HallBasis {
    pub r: usize,
    pub s: usize,
    pub d: usize,
    pub basis: Vec<BasicCommutator>,
}

/// Number of basic commutators of total weight exactly `n` on `r` generators.
pub fn witt_count(r: usize, n: usize) -> u128 {
    fn mobius(mut n: usize) -> i128 {
        let mut m = 1;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                n /= p;
                if n % p == 0 {
                    return 0;
                }
                m = -m;
            }
            p += 1;
        }
        if n > 1 {
            m = -m;
        }
        m
    }
    let mut total: i128 = 0;
    for k in 1..=n {
        if n % k == 0 {
            total += mobius(k) * (r as i128).pow((n / k) as u32);
        }
    }
    (total / n as i128) as u128
}

/// Dimension of the free nilpotent Lie algebra of rank `r` and step `s`.
pub fn witt_dimension(r: usize, s: usize) -> u128 {
    (1..=s).map(|n| witt_count(r, n)).sum()
}

impl HallBasis {
    pub fn build(r: usize, s: usize) -> Result<Self> {
        Self::build_with_cap(r, s, DEFAULT_DIM_CAP)
    }

    pub fn build_with_cap(r: usize, s: usize, cap: usize) -> Result<Self> {
        if r == 0 || s == 0 {
            return Err(Error::InvalidInput("rank and step must be positive".into()));
        }
        if s > 32 || r > 1 << 16 {
            return Err(Error::InvalidInput(format!(
                "rank {r} / step {s} out of range"
            )));
        }
        let expected = witt_dimension(r, s);
        if expected > cap as u128 {
            return Err(Error::CapExceeded {
                what: "Hall basis dimension",
                value: expected,
                cap: cap as u128,
            });
        }
        let mut basis: Vec<BasicCommutator> = (1..=r)
            .map(|i| {
                let mut chi = vec![0; r];
                chi[i - 1] = 1;
                BasicCommutator {
                    index: i,
                    def: Def::Leaf(i),
                    chi,
                    zeta: 1,
                }
            })
            .collect();
        for w in 2..=s as u32 {
            let mut fresh: Vec<(Vec<u32>, usize, usize)> = Vec::new();
            for i in 0..basis.len() {
                for j in 0..i {
                    let (bi, bj) = (&basis[i], &basis[j]);
                    if bi.weight() + bj.weight() != w {
                        continue;
                    }
                    if let Def::Pair(_, t) = bi.def {
                        if j + 1 < t {
                            continue;
                        }
                    }
                    let chi = bi.chi.iter().zip(&bj.chi).map(|(a, b)| a + b).collect();
                    fresh.push((chi, i + 1, j + 1));
                }
            }
            fresh.sort();
            for (chi, i, j) in fresh {
                let index = basis.len() + 1;
                basis.push(BasicCommutator {
                    index,
                    def: Def::Pair(i, j),
                    chi,
                    zeta: w,
                });
            }
        }
        let d = basis.len();
        if d as u128 != expected {
            return Err(Error::Internal(format!(
                "Hall enumeration found {d} commutators, Witt formula gives {expected}"
            )));
        }
        Ok(HallBasis { r, s, d, basis })
    }

    pub fn weights(&self) -> Vec<u32> {
        self.basis.iter().map(BasicCommutator::weight).collect()
    }

    /// Index (1-based) of the basic commutator `[u_i, u_j]`, if basic.
    pub fn pair_index(&self, i: usize, j: usize) -> Option<usize> {
        self.basis
            .iter()
            .find(|b| b.def == Def::Pair(i, j))
            .map(|b| b.index)
    }

    /// Lengths `L^{χ(u_i)} = ∏_k L_k^{χ_k}` of a nilpotent progression.
    pub fn nilpotent_lengths(&self, l: &[i64]) -> Result<Vec<i64>> {
        if l.len() != self.r {
            return Err(Error::InvalidInput(format!(
                "expected {} generator lengths, got {}",
                self.r,
                l.len()
            )));
        }
        self.basis
            .iter()
            .map(|b| {
                b.chi.iter().zip(l).try_fold(1i64, |acc, (&e, &li)| {
                    li.checked_pow(e)
                        .and_then(|p| acc.checked_mul(p))
                        .ok_or_else(|| Error::InvalidInput("progression length overflows".into()))
                })
            })
            .collect()
    }
}

/// A word in the basic commutators: `(index, exponent)` with 1-based indices.
pub type GroupWord = Vec<(usize, i64)>;

/// Free nilpotent group of rank `r` and step `s` in Mal'cev coordinates over
/// the Hall basis. Conjugation tables are built once at construction.
#[derive(Clone, Debug)]
pub struct FreeNilpotentGroup {
    basis: HallBasis,
    weights: Vec<u32>,
    lie: LieContext,
    log_gens: Vec<LieVector>,
    gen_ctx: LieContext,
    /// `conj[((j * d + k) * 2 + δ) * 2 + ε]` holds `[u_j^δ, u_k^ε]` for `j > k`
    /// in sparse collected form; empty if trivial.
    conj: Vec<Vec<(usize, i64)>>,
}

fn sign_slot(e: i64) -> usize {
    (e < 0) as usize
}

impl FreeNilpotentGroup {
    pub fn new(basis: HallBasis) -> Result<Self> {
        let d = basis.d;
        let weights = basis.weights();
        let lie = free_nilpotent_lie(&basis);
        let mut log_gens: Vec<LieVector> = Vec::with_capacity(d);
        for b in &basis.basis {
            let v = match b.def {
                Def::Leaf(i) => unit_vec(d, i - 1),
                Def::Pair(i, j) => lie.group_commutator(&log_gens[i - 1], &log_gens[j - 1]),
            };
            log_gens.push(v);
        }
        let gen_ctx = lie.change_basis(&RatMatrix::from_columns(&log_gens))?;
        gen_ctx.check_triangular()?;
        let s = basis.s as u32;
        let mut conj = vec![Vec::new(); d * d * 4];
        for j in 0..d {
            for k in 0..j {
                if weights[j] + weights[k] > s {
                    continue;
                }
                for delta in [1i64, -1] {
                    for eps in [1i64, -1] {
                        let x: LieVector = unit_vec(d, j).iter().map(|c| c * int(delta)).collect();
                        let y: LieVector = unit_vec(d, k).iter().map(|c| c * int(eps)).collect();
                        let ell = gen_ctx.peel(&gen_ctx.group_commutator(&x, &y));
                        let mut entry = Vec::new();
                        for (m, c) in ell.iter().enumerate() {
                            if c.is_integer() && c.numer().to_i64().is_some() {
                                let v = c.numer().to_i64().unwrap();
                                if v != 0 {
                                    entry.push((m, v));
                                }
                            } else {
                                return Err(Error::Internal(format!(
                                    "non-integral commutator coordinate at u{}",
                                    m + 1
                                )));
                            }
                        }
                        if entry.iter().any(|&(m, _)| m <= j) {
                            return Err(Error::Internal(format!(
                                "commutator [u{},u{}] not supported above u{}",
                                j + 1,
                                k + 1,
                                j + 1
                            )));
                        }
                        conj[((j * d + k) * 2 + sign_slot(delta)) * 2 + sign_slot(eps)] = entry;
                    }
                }
            }
        }
        Ok(FreeNilpotentGroup {
            basis,
            weights,
            lie,
            log_gens,
            gen_ctx,
            conj,
        })
    }

    pub fn from_rank_step(r: usize, s: usize) -> Result<Self> {
        Self::new(HallBasis::build(r, s)?)
    }

    pub fn basis(&self) -> &HallBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.d
    }

    /// Free nilpotent Lie algebra on the Hall basis `e_i`.
    pub fn lie(&self) -> &LieContext {
        &self.lie
    }

    /// `log u_i` in the `e`-basis.
    pub fn log_generators(&self) -> &[LieVector] {
        &self.log_gens
    }

    /// The Lie algebra in the basis `log u_1, …, log u_d`, in which
    /// second-kind coordinates are exactly Mal'cev coordinates.
    pub fn generator_context(&self) -> &LieContext {
        &self.gen_ctx
    }

    pub fn identity(&self) -> Vec<i64> {
        vec![0; self.dim()]
    }

    fn conj_entry(&self, j: usize, k: usize, delta: i64, eps: i64) -> &[(usize, i64)] {
        let d = self.dim();
        &self.conj[((j * d + k) * 2 + sign_slot(delta)) * 2 + sign_slot(eps)]
    }

    /// Right-multiplies the collected element `c` by `u_k^e` (0-based `k`).
    pub fn mul_gen_power(&self, c: &mut [i64], k: usize, e: i64) {
        if e == 0 {
            return;
        }
        let d = self.dim();
        let s = self.basis.s as u32;
        let wk = self.weights[k];
        let blocked = |c: &[i64]| (k + 1..d).any(|j| c[j] != 0 && self.weights[j] + wk <= s);
        if !blocked(c) {
            c[k] += e;
            return;
        }
        let sigma = e.signum();
        for _ in 0..e.unsigned_abs() {
            // (∏_{j>k} u_j^{t_j}) u_k^σ = u_k^σ ∏_{j>k} (u_j^δ [u_j^δ, u_k^σ])^{|t_j|}
            let tail: Vec<(usize, i64)> = (k + 1..d)
                .filter(|&j| c[j] != 0)
                .map(|j| (j, c[j]))
                .collect();
            for j in k + 1..d {
                c[j] = 0;
            }
            c[k] += sigma;
            for (j, t) in tail {
                if self.weights[j] + wk > s {
                    self.mul_gen_power(c, j, t);
                    continue;
                }
                let delta = t.signum();
                let comm = self.conj_entry(j, k, delta, sigma);
                for _ in 0..t.unsigned_abs() {
                    self.mul_gen_power(c, j, delta);
                    for &(m, v) in comm {
                        self.mul_gen_power(c, m, v);
                    }
                }
            }
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.dim() {
            return Err(Error::InvalidInput(format!(
                "letter index {i} outside 1..={}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Collected form of a word in the basic commutators.
    pub fn collect(&self, word: &[(usize, i64)]) -> Result<Vec<i64>> {
        let mut c = self.identity();
        for &(i, e) in word {
            self.check_index(i)?;
            self.mul_gen_power(&mut c, i - 1, e);
        }
        Ok(c)
    }

    pub fn multiply(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        let mut c = a.to_vec();
        for (i, &e) in b.iter().enumerate() {
            self.mul_gen_power(&mut c, i, e);
        }
        c
    }

    pub fn invert(&self, a: &[i64]) -> Vec<i64> {
        let mut c = self.identity();
        for i in (0..self.dim()).rev() {
            self.mul_gen_power(&mut c, i, -a[i]);
        }
        c
    }

    pub fn pow(&self, a: &[i64], n: i64) -> Vec<i64> {
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

    pub fn commutator(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        let ab = self.multiply(a, b);
        let ba = self.multiply(b, a);
        self.multiply(&self.invert(&ba), &ab)
    }

    /// Word `u_1^{ℓ_1} ⋯ u_d^{ℓ_d}` of a coordinate vector.
    pub fn word_of(ell: &[i64]) -> GroupWord {
        ell.iter()
            .enumerate()
            .filter(|(_, &e)| e != 0)
            .map(|(i, &e)| (i + 1, e))
            .collect()
    }

    /// Multiplication through the Lie algebra: convert to first-kind
    /// coordinates, apply BCH and peel back.
    pub fn bch_multiply(&self, a: &[i64], b: &[i64]) -> Result<Vec<i64>> {
        let to_rat = |v: &[i64]| v.iter().map(|&x| int(x)).collect::<Vec<_>>();
        let out = self.gen_ctx.second_kind_multiply(&to_rat(a), &to_rat(b));
        out.iter()
            .map(|c| {
                c.is_integer()
                    .then(|| c.numer().to_i64())
                    .flatten()
                    .ok_or_else(|| Error::Internal("non-integral product coordinate".into()))
            })
            .collect()
    }

    /// `[u_i^{ε_i}, u_j^{ε_j}]` for all `i < j` (1-based keys).
    pub fn commutator_table(&self) -> CommutatorTable {
        let d = self.dim();
        let mut entries = HashMap::new();
        for i in 0..d {
            for j in i + 1..d {
                for ei in [1i64, -1] {
                    for ej in [1i64, -1] {
                        let word = [(i + 1, -ei), (j + 1, -ej), (i + 1, ei), (j + 1, ej)];
                        let v = self.collect(&word).expect("indices in range");
                        entries.insert((i + 1, j + 1, ei, ej), v);
                    }
                }
            }
        }
        CommutatorTable { d, entries }
    }

    /// ζ-weights recomputed from the collected commutator expressions.
    pub fn zeta_from_table(&self, table: &CommutatorTable) -> Vec<u32> {
        let d = self.dim();
        let mut zeta = vec![1u32; d];
        // Support lies strictly above both indices, so increasing k is well founded.
        for k in 0..d {
            for (&(i, j, _, _), v) in &table.entries {
                if v[k] != 0 {
                    zeta[k] = zeta[k].max(zeta[i - 1] + zeta[j - 1]);
                }
            }
        }
        zeta
    }
}

/// The collected commutators `[u_i^{ε_i}, u_j^{ε_j}]`, `i < j`.
#[derive(Clone, Debug)]
pub struct CommutatorTable {
    pub d: usize,
    pub entries: HashMap<(usize, usize, i64, i64), Vec<i64>>,
}

impl CommutatorTable {
    pub fn get(&self, i: usize, j: usize, ei: i64, ej: i64) -> &[i64] {
        &self.entries[&(i, j, ei, ej)]
    }

    /// Entries in a fixed order, for serialization.
    pub fn sorted(&self) -> Vec<((usize, usize, i64, i64), &Vec<i64>)> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, v)| (*k, v)).collect();
        v.sort_by_key(|(k, _)| (k.0, k.1, -k.2, -k.3));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bases() {
        let b = HallBasis::build(2, 1).unwrap();
        assert_eq!(b.d, 2);
        let b = HallBasis::build(2, 2).unwrap();
        assert_eq!(b.d, 3);
        assert_eq!(b.basis[2].def, Def::Pair(2, 1));
        assert_eq!(b.basis[2].chi, vec![1, 1]);
        assert_eq!(HallBasis::build(2, 3).unwrap().d, 5);
        assert_eq!(HallBasis::build(3, 4).unwrap().d, 32);
    }

    #[test]
    fn witt_counts() {
        assert_eq!(witt_count(2, 4), 3);
        assert_eq!(witt_count(2, 5), 6);
        assert_eq!(witt_count(3, 3), 8);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            HallBasis::build(4, 5),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn hall_conditions_hold() {
        let b = HallBasis::build(3, 5).unwrap();
        for (n, bc) in b.basis.iter().enumerate() {
            assert_eq!(bc.index, n + 1);
            if let Def::Pair(i, j) = bc.def {
                assert!(i > j);
                if let Def::Pair(_, t) = b.basis[i - 1].def {
                    assert!(j >= t);
                }
            }
        }
        assert!(b.weights().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn heisenberg_collection() {
        let g = FreeNilpotentGroup::from_rank_step(2, 2).unwrap();
        assert_eq!(g.collect(&[(2, 1), (1, 1)]).unwrap(), vec![1, 1, 1]);
        assert_eq!(g.collect(&[(1, 1), (1, -1)]).unwrap(), vec![0, 0, 0]);
        assert_eq!(g.multiply(&[1, 0, 0], &[0, 1, 0]), vec![1, 1, 0]);
        assert_eq!(g.multiply(&[0, 1, 0], &[1, 0, 0]), vec![1, 1, 1]);
        let t = g.commutator_table();
        assert_eq!(t.get(1, 2, 1, 1), &[0, 0, -1]);
    }

    #[test]
    fn inverse_and_power() {
        let g = FreeNilpotentGroup::from_rank_step(2, 3).unwrap();
        let a = vec![2, -1, 3, 0, 1];
        assert_eq!(g.multiply(&a, &g.invert(&a)), g.identity());
        let a3 = g.multiply(&g.multiply(&a, &a), &a);
        assert_eq!(g.pow(&a, 3), a3);
        assert_eq!(g.pow(&a, -1), g.invert(&a));
    }

    #[test]
    fn zeta_agrees_with_weight() {
        let g = FreeNilpotentGroup::from_rank_step(2, 3).unwrap();
        let t = g.commutator_table();
        assert_eq!(g.zeta_from_table(&t), vec![1, 1, 2, 3, 3]);
    }

    #[test]
    fn basis_json_shape() {
        let b = HallBasis::build(2, 2).unwrap();
        let js = serde_json::to_string(&b).unwrap();
        assert!(js.starts_with(r#"{"r":2,"s":2,"d":3,"basis":[{"index":1,"def":{"leaf":1}"#));
        assert!(js.contains(r#""def":{"pair":[2,1]}"#));
    }

    fn heis_matrix(word: &[(usize, i64)]) -> [i64; 3] {
        // (a, b, c) is the matrix [[1, a, c], [0, 1, b], [0, 0, 1]].
        let mut m = [0i64; 3];
        for &(i, e) in word {
            let x = if i == 1 { [e, 0, 0] } else { [0, e, 0] };
            m = [m[0] + x[0], m[1] + x[1], m[2] + x[2] + m[0] * x[1]];
        }
        m
    }

    #[test]
    fn matrix_oracle_short_words() {
        let g = FreeNilpotentGroup::from_rank_step(2, 2).unwrap();
        let letters = [(1, 1), (1, -1), (2, 1), (2, -1)];
        let mut words: Vec<Vec<(usize, i64)>> = vec![vec![]];
        for _ in 0..5 {
            let mut next = Vec::new();
            for w in &words {
                for l in letters {
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.push(w2);
                }
            }
            for w in &next {
                let c = g.collect(w).unwrap();
                // u1^a u2^b u3^c with u3 = [x2, x1] ↦ E13^{-1}.
                let m = heis_matrix(w);
                assert_eq!(
                    (c[0], c[1], m[2]),
                    (m[0], m[1], c[0] * c[1] - c[2]),
                    "{w:?}"
                );
            }
            words = next;
        }
    }

    #[test]
    fn bch_oracle_rank3_step4() {
        let g = FreeNilpotentGroup::from_rank_step(3, 4).unwrap();
        let a = g.collect(&[(1, 1), (3, -1), (2, 1), (1, 1)]).unwrap();
        let b = g.collect(&[(2, -1), (3, 1), (1, -1)]).unwrap();
        assert_eq!(g.multiply(&a, &b), g.bch_multiply(&a, &b).unwrap());
    }
}
