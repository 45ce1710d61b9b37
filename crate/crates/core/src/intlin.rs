//! Integer lattice linear algebra: Hermite normal form, content, basis
//! completion and sublattice indices. Everything is exact over `BigInt`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::{Rat, RatMatrix};

pub type IntMatrix = Vec<Vec<BigInt>>;

pub fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

pub fn small(v: &[BigInt]) -> Option<Vec<i64>> {
    v.iter().map(ToPrimitive::to_i64).collect()
}

/// Returns `(g, x, y)` with `g = gcd(a, b) >= 0` and `a x + b y = g`.
pub fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// Gcd of the entries (zero for the zero vector).
pub fn content(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// Result of a row-style Hermite reduction `U * A = H`.
#[derive(Clone, Debug)]
pub struct Hnf {
    /// Row echelon form with positive pivots and reduced entries above them.
    pub h: IntMatrix,
    /// Unimodular transform, `U * A = H`.
    pub u: IntMatrix,
    /// Pivot column of each nonzero row of `h`, in order.
    pub pivots: Vec<usize>,
}

impl Hnf {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

fn combine_rows(m: &mut IntMatrix, a: usize, b: usize, coeffs: [[&BigInt; 2]; 2]) {
    let ncols = m[a].len();
    for c in 0..ncols {
        let x = &m[a][c];
        let y = &m[b][c];
        let na = coeffs[0][0] * x + coeffs[0][1] * y;
        let nb = coeffs[1][0] * x + coeffs[1][1] * y;
        m[a][c] = na;
        m[b][c] = nb;
    }
}

fn sub_row_multiple(m: &mut IntMatrix, target: usize, src: usize, f: &BigInt) {
    if f.is_zero() {
        return;
    }
    for c in 0..m[target].len() {
        let v = &m[src][c] * f;
        m[target][c] -= v;
    }
}

/// Row-style Hermite normal form of the `rows x cols` matrix `a`.
pub fn hnf(a: &IntMatrix) -> Hnf {
    let nrows = a.len();
    let ncols = a.first().map_or(0, Vec::len);
    let mut h = a.clone();
    let mut u: IntMatrix = (0..nrows)
        .map(|i| (0..nrows).map(|j| BigInt::from((i == j) as i64)).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        for i in r + 1..nrows {
            if h[i][c].is_zero() {
                continue;
            }
            let (g, x, y) = ext_gcd(&h[r][c], &h[i][c]);
            let p = h[r][c].div_floor(&g);
            let q = h[i][c].div_floor(&g);
            let mq = -&q;
            // [x y; -q p] has determinant x p + y q = 1.
            combine_rows(&mut h, r, i, [[&x, &y], [&mq, &p]]);
            combine_rows(&mut u, r, i, [[&x, &y], [&mq, &p]]);
        }
        if h[r][c].is_zero() {
            continue;
        }
        if h[r][c].is_negative() {
            for v in h[r].iter_mut().chain(u[r].iter_mut()) {
                *v = -&*v;
            }
        }
        let piv = h[r][c].clone();
        for i in 0..r {
            let f = h[i][c].div_floor(&piv);
            sub_row_multiple(&mut h, i, r, &f);
            sub_row_multiple(&mut u, i, r, &f);
        }
        pivots.push(c);
        r += 1;
    }
    Hnf { h, u, pivots }
}

/// Index of the lattice generated by `gens` inside `Z^n`, or `None` when the
/// generators do not span `Q^n`.
pub fn sublattice_index(gens: &[Vec<BigInt>], n: usize) -> Option<BigInt> {
    // Incremental echelon form: `rows[c]` has its first non-zero entry in
    // column `c`, and later entries are reduced modulo later pivots.
    let mut rows: Vec<Option<Vec<BigInt>>> = vec![None; n];
    for g in gens {
        let mut v = g.clone();
        for c in 0..n {
            if v[c].is_zero() {
                continue;
            }
            match rows[c].take() {
                None => {
                    if v[c].is_negative() {
                        v.iter_mut().for_each(|x| *x = -&*x);
                    }
                    rows[c] = Some(v);
                    reduce_below(&mut rows, c);
                    break;
                }
                Some(r) => {
                    let (g, s, t) = ext_gcd(&r[c], &v[c]);
                    let (a, b) = (&r[c] / &g, &v[c] / &g);
                    let merged: Vec<BigInt> =
                        r.iter().zip(&v).map(|(x, y)| &s * x + &t * y).collect();
                    v = r.iter().zip(&v).map(|(x, y)| &a * y - &b * x).collect();
                    rows[c] = Some(merged);
                    reduce_below(&mut rows, c);
                }
            }
        }
    }
    rows.iter()
        .map(|r| {
            r.as_ref()
                .map(|r| r.iter().find(|x| !x.is_zero()).cloned().unwrap_or_default())
        })
        .product()
}

fn reduce_below(rows: &mut [Option<Vec<BigInt>>], c: usize) {
    let n = rows.len();
    for j in c + 1..n {
        let Some(pj) = rows[j].clone() else { continue };
        let row = rows[c].as_mut().expect("row present");
        let q = row[j].div_floor(&pj[j]);
        if !q.is_zero() {
            for (x, y) in row.iter_mut().zip(&pj) {
                *x -= &q * y;
            }
        }
    }
}

/// A `Z`-basis (as rows) of the lattice generated by `gens`.
pub fn lattice_basis(gens: &[Vec<BigInt>]) -> IntMatrix {
    if gens.is_empty() {
        return Vec::new();
    }
    let res = hnf(&gens.to_vec());
    res.h.into_iter().take(res.pivots.len()).collect()
}

/// Unimodular matrix (returned as its list of columns) whose first column is
/// the primitive vector `z`.
pub fn complete_primitive_to_basis(z: &[BigInt]) -> Result<Vec<Vec<BigInt>>> {
    let n = z.len();
    let c = content(z);
    if !c.is_one() {
        return Err(Error::NotPrimitive {
            content: c.to_string(),
        });
    }
    // U z = e_1 with U unimodular, so z is the first column of U^{-1}.
    let col: IntMatrix = z.iter().map(|x| vec![x.clone()]).collect();
    let res = hnf(&col);
    debug_assert!(res.h[0][0].is_one());
    let u = RatMatrix::from_columns(
        &(0..n)
            .map(|j| {
                (0..n)
                    .map(|i| Rat::from_integer(res.u[i][j].clone()))
                    .collect()
            })
            .collect::<Vec<_>>(),
    );
    let inv = u
        .inverse()
        .ok_or_else(|| Error::Internal("Hermite transform is singular".into()))?;
    let cols: Vec<Vec<BigInt>> = inv
        .columns()
        .into_iter()
        .map(|c| c.into_iter().map(|x| x.to_integer()).collect())
        .collect();
    debug_assert_eq!(cols[0], z);
    Ok(cols)
}

/// Determinant of a square integer matrix.
pub fn det(m: &IntMatrix) -> BigInt {
    let n = m.len();
    let rm = RatMatrix::from_columns(
        &(0..n)
            .map(|j| (0..n).map(|i| Rat::from_integer(m[i][j].clone())).collect())
            .collect::<Vec<_>>(),
    );
    rm.determinant().to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm(rows: &[&[i64]]) -> IntMatrix {
        rows.iter().map(|r| big(r)).collect()
    }

    #[test]
    fn hnf_transform_is_consistent() {
        let a = bm(&[&[4, 6, 2], &[2, 3, 5], &[6, 9, 1]]);
        let res = hnf(&a);
        for i in 0..3 {
            for j in 0..3 {
                let v: BigInt = (0..3).map(|k| &res.u[i][k] * &a[k][j]).sum();
                assert_eq!(v, res.h[i][j]);
            }
        }
        assert!(det(&res.u).abs().is_one());
        assert_eq!(res.rank(), 2);
    }

    #[test]
    fn index_of_sublattices() {
        let gens = bm(&[&[2, 0], &[0, 3]]);
        assert_eq!(sublattice_index(&gens, 2), Some(BigInt::from(6)));
        let gens = bm(&[&[2, 1], &[1, 1], &[5, 5]]);
        assert_eq!(sublattice_index(&gens, 2), Some(BigInt::one()));
        assert_eq!(sublattice_index(&bm(&[&[1, 1]]), 2), None);
    }

    #[test]
    fn completion_of_primitive_vectors() {
        let cols = complete_primitive_to_basis(&big(&[2, -1])).unwrap();
        assert_eq!(cols[0], big(&[2, -1]));
        let m: IntMatrix = (0..2)
            .map(|i| vec![cols[0][i].clone(), cols[1][i].clone()])
            .collect();
        assert!(det(&m).abs().is_one());
        assert_eq!(
            complete_primitive_to_basis(&big(&[1, 0])).unwrap(),
            vec![big(&[1, 0]), big(&[0, 1])]
        );
        assert!(matches!(
            complete_primitive_to_basis(&big(&[2, 0])),
            Err(Error::NotPrimitive { .. })
        ));
    }
}
