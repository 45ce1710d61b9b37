//! Exact geometry of numbers for boxes and projected boxes: norms, successive
//! minima, Mahler bases and bracket-compatible box approximations.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intlin;
use crate::nilalg::LieContext;
use crate::rational::{
    ceil_i64, denominator_lcm, floor_i64, int, rat_to_string, serde_rat_mat, serde_rat_vec, to_f64,
    EchelonSpan, Rat, RatMatrix,
};

pub const DEFAULT_DIM_CAP: usize = 8;

/// A full-rank lattice given by the columns `vectors`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBasis {
    #[serde(with = "serde_rat_mat")]
    pub vectors: Vec<Vec<Rat>>,
}

impl LatticeBasis {
    pub fn new(vectors: Vec<Vec<Rat>>) -> Result<Self> {
        let d = vectors.len();
        if vectors.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidInput("lattice basis must be square".into()));
        }
        let l = LatticeBasis { vectors };
        if d > 0 && l.matrix().determinant().is_zero() {
            return Err(Error::InvalidInput("lattice basis is singular".into()));
        }
        Ok(l)
    }

    pub fn standard(d: usize) -> Self {
        LatticeBasis {
            vectors: (0..d)
                .map(|i| (0..d).map(|j| int((i == j) as i64)).collect())
                .collect(),
        }
    }

    pub fn from_int(vectors: &[Vec<i64>]) -> Result<Self> {
        Self::new(
            vectors
                .iter()
                .map(|v| v.iter().map(|&x| int(x)).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn matrix(&self) -> RatMatrix {
        RatMatrix::from_columns(&self.vectors)
    }

    pub fn determinant(&self) -> Rat {
        self.matrix().determinant().abs()
    }

    pub fn point(&self, k: &[i64]) -> Vec<Rat> {
        let d = self.dim();
        let mut v = vec![Rat::zero(); d];
        for (c, &ki) in k.iter().enumerate() {
            if ki != 0 {
                let f = int(ki);
                for r in 0..d {
                    v[r] += &f * &self.vectors[c][r];
                }
            }
        }
        v
    }

    /// Lattice coordinates of `v`, which must lie in the lattice.
    pub fn coords(&self, v: &[Rat]) -> Result<Vec<BigInt>> {
        let inv = self.matrix().inverse().expect("lattice is full rank");
        inv.mul_vec(v)
            .into_iter()
            .map(|c| {
                if c.is_integer() {
                    Ok(c.to_integer())
                } else {
                    Err(Error::InvalidInput("vector is not in the lattice".into()))
                }
            })
            .collect()
    }
}

/// A symmetric convex body: a box `{Σ t_i e_i : |t_i| ≤ L_i}` or the image
/// of such a box in the quotient by a line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolytopeNorm {
    Box {
        /// Columns `e_i` of the box basis.
        #[serde(with = "serde_rat_mat")]
        basis: Vec<Vec<Rat>>,
        #[serde(with = "serde_rat_vec")]
        lengths: Vec<Rat>,
    },
    ProjectedBox {
        #[serde(with = "serde_rat_mat")]
        basis: Vec<Vec<Rat>>,
        #[serde(with = "serde_rat_vec")]
        lengths: Vec<Rat>,
        /// Direction `z` that is collapsed.
        #[serde(with = "serde_rat_vec")]
        direction: Vec<Rat>,
        /// Columns of a section `S`: a lift of quotient coordinates `q` is `S q`.
        #[serde(with = "serde_rat_mat")]
        section: Vec<Vec<Rat>>,
        /// Rows of the projection `P` onto quotient coordinates, `P S = 1`, `P z = 0`.
        #[serde(with = "serde_rat_mat")]
        projection: Vec<Vec<Rat>>,
    },
}

impl PolytopeNorm {
    pub fn axis_box(lengths: &[Rat]) -> Self {
        PolytopeNorm::Box {
            basis: LatticeBasis::standard(lengths.len()).vectors,
            lengths: lengths.to_vec(),
        }
    }

    pub fn int_box(lengths: &[i64]) -> Self {
        Self::axis_box(&lengths.iter().map(|&l| int(l)).collect::<Vec<_>>())
    }

    /// Image of `Box(basis; lengths)` in the quotient by the line through
    /// `basis_change[0]`, using coordinates with respect to the remaining
    /// columns of the unimodular `basis_change`.
    pub fn project_box(
        basis: Vec<Vec<Rat>>,
        lengths: Vec<Rat>,
        basis_change: &RatMatrix,
    ) -> Result<Self> {
        let n = basis_change.rows();
        let inv = basis_change
            .inverse()
            .ok_or_else(|| Error::InvalidInput("basis change is singular".into()))?;
        let direction = basis_change.column(0);
        let section = (1..n).map(|c| basis_change.column(c)).collect();
        let projection = (1..n).map(|r| inv.row(r).to_vec()).collect();
        Ok(PolytopeNorm::ProjectedBox {
            basis,
            lengths,
            direction,
            section,
            projection,
        })
    }

    pub fn compile(&self) -> Result<Body> {
        let (basis, lengths) = match self {
            PolytopeNorm::Box { basis, lengths }
            | PolytopeNorm::ProjectedBox { basis, lengths, .. } => (basis, lengths),
        };
        let n = basis.len();
        if lengths.len() != n || basis.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidInput(
                "box basis and lengths disagree in size".into(),
            ));
        }
        if lengths.iter().any(|l| !l.is_positive()) {
            return Err(Error::InvalidInput("box lengths must be positive".into()));
        }
        let e = RatMatrix::from_columns(basis);
        let e_inv = e
            .inverse()
            .ok_or_else(|| Error::InvalidInput("box basis is singular".into()))?;
        let proj = match self {
            PolytopeNorm::Box { .. } => None,
            PolytopeNorm::ProjectedBox {
                direction,
                section,
                projection,
                ..
            } => {
                if direction.len() != n || section.len() + 1 != n || projection.len() + 1 != n {
                    return Err(Error::InvalidInput(
                        "projected box has inconsistent sizes".into(),
                    ));
                }
                let b = e_inv.mul_vec(direction);
                if b.iter().all(Zero::is_zero) {
                    return Err(Error::InvalidInput("projection direction is zero".into()));
                }
                Some(Projection {
                    section: RatMatrix::from_columns(section),
                    projection: RatMatrix::from_columns(projection).transpose(),
                    dir_coeffs: b,
                })
            }
        };
        Ok(Body {
            spec: self.clone(),
            e,
            e_inv,
            lengths: lengths.clone(),
            proj,
        })
    }
}

#[derive(Clone, Debug)]
struct Projection {
    section: RatMatrix,
    projection: RatMatrix,
    dir_coeffs: Vec<Rat>,
}

/// A compiled [`PolytopeNorm`] with cached inverses.
#[derive(Clone, Debug)]
pub struct Body {
    spec: PolytopeNorm,
    e: RatMatrix,
    e_inv: RatMatrix,
    lengths: Vec<Rat>,
    proj: Option<Projection>,
}

/// `min_t max_i |α_i + t β_i|`, attained at a breakpoint.
fn min_max_affine(alpha: &[Rat], beta: &[Rat]) -> Rat {
    let eval = |t: &Rat| {
        alpha
            .iter()
            .zip(beta)
            .map(|(a, b)| (a + t * b).abs())
            .max()
            .unwrap_or_else(Rat::zero)
    };
    let mut cands: Vec<Rat> = Vec::new();
    let n = alpha.len();
    for i in 0..n {
        if !beta[i].is_zero() {
            cands.push(-&alpha[i] / &beta[i]);
        }
        for j in i + 1..n {
            let db = &beta[i] - &beta[j];
            if !db.is_zero() {
                cands.push((&alpha[j] - &alpha[i]) / db);
            }
            let sb = &beta[i] + &beta[j];
            if !sb.is_zero() {
                cands.push(-(&alpha[i] + &alpha[j]) / sb);
            }
        }
    }
    cands
        .iter()
        .map(eval)
        .min()
        .unwrap_or_else(|| eval(&Rat::zero()))
}

fn min_max_affine_f64(alpha: &[f64], beta: &[f64]) -> f64 {
    let eval = |t: f64| {
        alpha
            .iter()
            .zip(beta)
            .map(|(a, b)| (a + t * b).abs())
            .fold(0.0, f64::max)
    };
    let mut best = eval(0.0);
    let n = alpha.len();
    for i in 0..n {
        if beta[i] != 0.0 {
            best = best.min(eval(-alpha[i] / beta[i]));
        }
        for j in i + 1..n {
            let db = beta[i] - beta[j];
            if db != 0.0 {
                best = best.min(eval((alpha[j] - alpha[i]) / db));
            }
            let sb = beta[i] + beta[j];
            if sb != 0.0 {
                best = best.min(eval(-(alpha[i] + alpha[j]) / sb));
            }
        }
    }
    best
}

/// `min_u max_i |a_i + u b_i|` for integer data, as a fraction.
fn min_max_affine_int(a: &[i128], b: &[i128]) -> (i128, i128) {
    let eval = |p: i128, q: i128| -> (i128, i128) {
        let m = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x * q + p * y).abs())
            .max()
            .unwrap_or(0);
        (m, q)
    };
    let mut best = eval(0, 1);
    let mut try_at = |p: i128, q: i128| {
        let (p, q) = if q < 0 { (-p, -q) } else { (p, q) };
        let v = eval(p, q);
        if v.0 * best.1 < best.0 * v.1 {
            best = v;
        }
    };
    let n = a.len();
    for i in 0..n {
        if b[i] != 0 {
            try_at(-a[i], b[i]);
        }
        for j in i + 1..n {
            if b[i] != b[j] {
                try_at(a[j] - a[i], b[i] - b[j]);
            }
            if b[i] != -b[j] {
                try_at(-(a[i] + a[j]), b[i] + b[j]);
            }
        }
    }
    best
}

/// The body norm pulled back to lattice coordinates, as an integer matrix
/// over a common denominator.
struct LatticeNorm {
    rows: Vec<Vec<i128>>,
    den: i128,
    /// Direction coefficients scaled by `den`, for projected bodies, with
    /// an integer multiple when one fits.
    beta: Option<(Vec<Rat>, Vec<f64>, Option<Vec<i128>>)>,
}

impl LatticeNorm {
    fn new(body: &Body, lattice: &LatticeBasis) -> Option<Self> {
        let b = lattice.matrix();
        let m = match &body.proj {
            None => body.e_inv.mul(&b),
            Some(p) => body.e_inv.mul(&p.section.mul(&b)),
        };
        let n = body.lengths.len();
        let d = lattice.dim();
        let a: Vec<Vec<Rat>> = (0..n)
            .map(|i| (0..d).map(|c| &m[(i, c)] / &body.lengths[i]).collect())
            .collect();
        let den = denominator_lcm(a.iter().flatten()).to_i64()? as i128;
        let rows = a
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| {
                        (x * Rat::from_integer(den.into()))
                            .to_integer()
                            .to_i64()
                            .map(i128::from)
                    })
                    .collect()
            })
            .collect::<Option<Vec<Vec<i128>>>>()?;
        let beta = body.proj.as_ref().map(|p| {
            let exact: Vec<Rat> = p
                .dir_coeffs
                .iter()
                .zip(&body.lengths)
                .map(|(x, l)| x / l * Rat::from_integer(den.into()))
                .collect();
            let approx = exact.iter().map(to_f64).collect();
            let l = denominator_lcm(&exact);
            let ints = exact
                .iter()
                .map(|x| {
                    (x * Rat::from_integer(l.clone()))
                        .to_integer()
                        .to_i64()
                        .map(i128::from)
                })
                .collect();
            (exact, approx, ints)
        });
        Some(LatticeNorm { rows, den, beta })
    }

    fn numerators(&self, k: &[i64]) -> Vec<i128> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(k).map(|(a, &x)| a * x as i128).sum())
            .collect()
    }

    fn approx(&self, k: &[i64]) -> f64 {
        let num = self.numerators(k);
        let scaled = match &self.beta {
            None => num.iter().map(|x| x.abs()).max().unwrap_or(0) as f64,
            Some((_, approx, _)) => {
                let af: Vec<f64> = num.iter().map(|&x| x as f64).collect();
                min_max_affine_f64(&af, approx)
            }
        };
        scaled / self.den as f64
    }

    fn exact(&self, k: &[i64]) -> Rat {
        let num = self.numerators(k);
        let n = match &self.beta {
            None => Rat::from_integer(num.iter().map(|x| x.abs()).max().unwrap_or(0).into()),
            Some((_, _, Some(b))) => {
                let (m, q) = min_max_affine_int(&num, b);
                Rat::new(m.into(), q.into())
            }
            Some((exact, _, None)) => {
                let alpha: Vec<Rat> = num.iter().map(|&x| Rat::from_integer(x.into())).collect();
                min_max_affine(&alpha, exact)
            }
        };
        n / Rat::from_integer(self.den.into())
    }
}

impl Body {
    pub fn spec(&self) -> &PolytopeNorm {
        &self.spec
    }

    /// Dimension of the ambient space of the body.
    pub fn dim(&self) -> usize {
        match &self.proj {
            None => self.lengths.len(),
            Some(_) => self.lengths.len() - 1,
        }
    }

    pub fn norm(&self, v: &[Rat]) -> Rat {
        match &self.proj {
            None => {
                let c = self.e_inv.mul_vec(v);
                c.iter()
                    .zip(&self.lengths)
                    .map(|(x, l)| x.abs() / l)
                    .max()
                    .unwrap_or_else(Rat::zero)
            }
            Some(p) => {
                let lift = p.section.mul_vec(v);
                let a = self.e_inv.mul_vec(&lift);
                let alpha: Vec<Rat> = a.iter().zip(&self.lengths).map(|(x, l)| x / l).collect();
                let beta: Vec<Rat> = p
                    .dir_coeffs
                    .iter()
                    .zip(&self.lengths)
                    .map(|(x, l)| x / l)
                    .collect();
                min_max_affine(&alpha, &beta)
            }
        }
    }

    /// Corners of the box, or their projections with duplicates removed.
    pub fn vertices(&self) -> Vec<Vec<Rat>> {
        let n = self.lengths.len();
        let mut out = BTreeSet::new();
        for mask in 0u64..(1u64 << n) {
            let t: Vec<Rat> = (0..n)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        -&self.lengths[i]
                    } else {
                        self.lengths[i].clone()
                    }
                })
                .collect();
            let v = self.e.mul_vec(&t);
            let v = match &self.proj {
                None => v,
                Some(p) => p.projection.mul_vec(&v),
            };
            out.insert(v);
        }
        out.into_iter().collect()
    }

    /// Exact volume. Projected boxes are zonotopes, whose volume is the sum of
    /// the absolute minors of the generator matrix.
    pub fn volume(&self) -> Rat {
        let n = self.lengths.len();
        let gens: Vec<Vec<Rat>> = (0..n)
            .map(|i| {
                self.e
                    .column(i)
                    .iter()
                    .map(|x| x * &self.lengths[i] * int(2))
                    .collect()
            })
            .collect();
        match &self.proj {
            None => RatMatrix::from_columns(&gens).determinant().abs(),
            Some(p) => {
                let pg: Vec<Vec<Rat>> = gens.iter().map(|g| p.projection.mul_vec(g)).collect();
                // Sum over (n-1)-subsets: drop one generator at a time.
                (0..n)
                    .map(|skip| {
                        let cols: Vec<Vec<Rat>> = pg
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != skip)
                            .map(|(_, g)| g.clone())
                            .collect();
                        if cols.is_empty() {
                            Rat::one()
                        } else {
                            RatMatrix::from_columns(&cols).determinant().abs()
                        }
                    })
                    .sum()
            }
        }
    }

    /// Box generators `2 L_i e_i` of an unprojected box.
    fn box_generators(&self) -> Vec<Vec<Rat>> {
        (0..self.lengths.len())
            .map(|i| {
                self.e
                    .column(i)
                    .iter()
                    .map(|x| x * &self.lengths[i] * int(2))
                    .collect()
            })
            .collect()
    }
}

/// Projection-volume bound for a box `B` and direction `v`, scaled by `|v|`:
/// returns `(Σ_S |det(g_S, v)|, (d/2) ‖v‖_B vol(B))`, which must satisfy `lhs ≤ rhs`.
pub fn projection_volume_bound(body: &Body, v: &[Rat]) -> Result<(Rat, Rat)> {
    if body.proj.is_some() {
        return Err(Error::InvalidInput("bound is stated for boxes".into()));
    }
    let gens = body.box_generators();
    let d = gens.len();
    let mut lhs = Rat::zero();
    for skip in 0..d {
        let mut cols: Vec<Vec<Rat>> = gens
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, g)| g.clone())
            .collect();
        cols.push(v.to_vec());
        lhs += RatMatrix::from_columns(&cols).determinant().abs();
    }
    let rhs = int(d as i64) / int(2) * body.norm(v) * body.volume();
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimaReport {
    #[serde(with = "serde_rat_vec")]
    pub lambda: Vec<Rat>,
    #[serde(with = "serde_rat_mat")]
    pub witnesses: Vec<Vec<Rat>>,
    /// Witnesses in lattice coordinates.
    pub coords: Vec<Vec<i64>>,
}

/// A lattice point with its norm, in canonical sign.
#[derive(Clone, Debug)]
struct Scored {
    norm: Rat,
    k: Vec<i64>,
}

fn canonical_sign(k: &[i64]) -> bool {
    k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Slack for comparing floating-point norms against exact ones.
fn slack(x: f64) -> f64 {
    1e-9 * (1.0 + x.abs())
}

/// Norm evaluation for one lattice, exact or floating point.
struct Evaluator<'a> {
    body: &'a Body,
    lattice: &'a LatticeBasis,
    fast: Option<LatticeNorm>,
}

impl<'a> Evaluator<'a> {
    fn new(body: &'a Body, lattice: &'a LatticeBasis) -> Self {
        Evaluator {
            body,
            lattice,
            fast: LatticeNorm::new(body, lattice),
        }
    }

    fn approx(&self, k: &[i64]) -> f64 {
        match &self.fast {
            Some(f) => f.approx(k),
            None => to_f64(&self.exact(k)),
        }
    }

    fn exact(&self, k: &[i64]) -> Rat {
        match &self.fast {
            Some(f) => f.exact(k),
            None => self.body.norm(&self.lattice.point(k)),
        }
    }

    /// Lattice points (one per `±` pair) whose approximate norm is within
    /// slack of `radius`, with that approximation.
    fn candidates(&self, radius: &Rat, budget: u64) -> Result<Vec<(f64, Vec<i64>)>> {
        let d = self.lattice.dim();
        let inv = self.lattice.matrix().inverse().expect("full rank");
        let verts = self.body.vertices();
        let bounds: Vec<i64> = (0..d)
            .map(|i| {
                let h = verts
                    .iter()
                    .map(|w| inv.mul_vec(w)[i].abs())
                    .max()
                    .unwrap_or_else(Rat::zero);
                floor_i64(&(radius * h))
            })
            .collect();
        crate::prog::grid_size(&bounds, budget)?;
        if d == 0 {
            return Ok(Vec::new());
        }
        let r = to_f64(radius);
        let limit = r + slack(r);
        let firsts: Vec<i64> = (0..=bounds[0]).collect();
        let shards: Vec<Vec<(f64, Vec<i64>)>> = firsts
            .par_iter()
            .map(|&k0| {
                let mut out = Vec::new();
                let rest = &bounds[1..];
                let total: u64 = rest.iter().map(|&b| 2 * b as u64 + 1).product();
                for idx in 0..total {
                    let mut k = vec![k0];
                    k.extend(crate::prog::decode_rank(idx, rest));
                    if !canonical_sign(&k) {
                        continue;
                    }
                    let a = self.approx(&k);
                    if a <= limit {
                        out.push((a, k));
                    }
                }
                out
            })
            .collect();
        Ok(shards.into_iter().flatten().collect())
    }
}

fn l1(k: &[i64]) -> u64 {
    k.iter().map(|x| x.unsigned_abs()).sum()
}

/// Successive minima with witnesses, by exact enumeration.
pub fn successive_minima(body: &Body, lattice: &LatticeBasis, budget: u64) -> Result<MinimaReport> {
    let d = lattice.dim();
    if body.dim() != d {
        return Err(Error::InvalidInput(format!(
            "body has dimension {} but lattice has rank {d}",
            body.dim()
        )));
    }
    if d > DEFAULT_DIM_CAP {
        return Err(Error::CapExceeded {
            what: "lattice dimension",
            value: d as u128,
            cap: DEFAULT_DIM_CAP as u128,
        });
    }
    let radius = lattice
        .vectors
        .iter()
        .map(|v| body.norm(v))
        .max()
        .unwrap_or_else(Rat::zero);
    let eval = Evaluator::new(body, lattice);
    let mut cands = eval.candidates(&radius, budget)?;
    cands.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| l1(&a.1).cmp(&l1(&b.1)))
            .then_with(|| b.1.cmp(&a.1))
    });
    // The greedy pass in approximate order bounds the last minimum; only
    // points up to that bound need exact norms.
    let mut span = EchelonSpan::new();
    let mut cutoff = f64::INFINITY;
    for (a, k) in &cands {
        let kr: Vec<Rat> = k.iter().map(|&x| int(x)).collect();
        if span.insert(&kr) && span.dim() == d {
            cutoff = a + 2.0 * slack(*a);
            break;
        }
    }
    let mut pts: Vec<Scored> = cands
        .into_par_iter()
        .filter(|(a, _)| *a <= cutoff)
        .map(|(_, k)| Scored {
            norm: eval.exact(&k),
            k,
        })
        .filter(|p| p.norm <= radius)
        .collect();
    pts.sort_by(|a, b| {
        a.norm
            .cmp(&b.norm)
            .then_with(|| l1(&a.k).cmp(&l1(&b.k)))
            .then_with(|| b.k.cmp(&a.k))
    });
    let mut span = EchelonSpan::new();
    let mut report = MinimaReport {
        lambda: Vec::new(),
        witnesses: Vec::new(),
        coords: Vec::new(),
    };
    for p in pts {
        let kr: Vec<Rat> = p.k.iter().map(|&x| int(x)).collect();
        if span.insert(&kr) {
            report.witnesses.push(lattice.point(&p.k));
            report.coords.push(p.k);
            report.lambda.push(p.norm);
            if span.dim() == d {
                break;
            }
        }
    }
    if report.lambda.len() != d {
        return Err(Error::Internal(
            "minima enumeration missed a direction".into(),
        ));
    }
    Ok(report)
}

/// Mahler basis from a minima report, as lattice coordinates (columns) and
/// ambient vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MahlerBasis {
    pub coords: Vec<Vec<i64>>,
    #[serde(with = "serde_rat_mat")]
    pub vectors: Vec<Vec<Rat>>,
}

pub fn mahler_basis(report: &MinimaReport, lattice: &LatticeBasis) -> Result<MahlerBasis> {
    let d = lattice.dim();
    let k_rows: intlin::IntMatrix = report.coords.iter().map(|c| intlin::big(c)).collect();
    // Rows of `k_rows` are the witness columns; U K = H with K having the
    // witnesses as columns means working with the transpose.
    let k_mat: intlin::IntMatrix = (0..d)
        .map(|r| (0..d).map(|c| k_rows[c][r].clone()).collect())
        .collect();
    let hnf = intlin::hnf(&k_mat);
    if hnf.rank() != d {
        return Err(Error::InvalidInput("witnesses are dependent".into()));
    }
    let v = RatMatrix::from_columns(
        &(0..d)
            .map(|c| {
                (0..d)
                    .map(|r| Rat::from_integer(hnf.h[r][c].clone()))
                    .collect()
            })
            .collect::<Vec<_>>(),
    );
    let t = v.inverse().expect("triangular factor is invertible");
    let kq: Vec<Vec<Rat>> = report
        .coords
        .iter()
        .map(|c| c.iter().map(|&x| int(x)).collect())
        .collect();
    let mut coords: Vec<Vec<i64>> = Vec::with_capacity(d);
    for i in 0..d {
        if hnf.h[i][i].abs().is_one() {
            coords.push(report.coords[i].clone());
            continue;
        }
        let mut e = vec![Rat::zero(); d];
        for l in 0..=i {
            let mut tl = t[(l, i)].clone();
            if l < i {
                tl -= tl.round();
            }
            for r in 0..d {
                e[r] += &tl * &kq[l][r];
            }
        }
        let e: Option<Vec<i64>> = e
            .iter()
            .map(|x| x.is_integer().then(|| x.to_integer().to_i64()).flatten())
            .collect();
        coords
            .push(e.ok_or_else(|| Error::Internal("Mahler vector is not a lattice point".into()))?);
    }
    let vectors = coords.iter().map(|c| lattice.point(c)).collect();
    Ok(MahlerBasis { coords, vectors })
}

/// Unimodular completion of a primitive lattice vector `z`.
pub fn complete_primitive_to_basis(z: &[Rat], lattice: &LatticeBasis) -> Result<LatticeBasis> {
    let k = lattice.coords(z)?;
    let cols = intlin::complete_primitive_to_basis(&k)?;
    let vectors = cols
        .iter()
        .map(|c| {
            let ci: Vec<i64> = c
                .iter()
                .map(|x| x.to_i64().expect("small coordinates"))
                .collect();
            lattice.point(&ci)
        })
        .collect();
    LatticeBasis::new(vectors)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxMode {
    /// Require `[B, B] ⊆ B` on vertices and an upper-triangular bracket.
    Strict,
    /// Skip `[B, B] ⊆ B`; fall back to a basis adapted to the lower central
    /// series when the reversed Mahler basis is not triangular.
    Relaxed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NilBox {
    /// Basis in lattice coordinates (columns).
    pub coords: Vec<Vec<i64>>,
    #[serde(with = "serde_rat_mat")]
    pub vectors: Vec<Vec<Rat>>,
    #[serde(rename = "L")]
    pub lengths: Vec<i64>,
    /// `c` with `B_R(e; L) ⊆ c B`.
    #[serde(with = "crate::rational::serde_rat")]
    pub blowup: Rat,
    #[serde(with = "serde_rat_vec")]
    pub lambda: Vec<Rat>,
    /// Whether `[e_i, e_j] ∈ Span(e_{j+1}, …)` for all `i < j`.
    pub triangular: bool,
    /// Whether the filtration-adapted fallback basis was used.
    pub adapted: bool,
    /// Lengths raised by the upper-triangular fix-up.
    pub fixups: usize,
}

/// Structure constants of `ctx` in the lattice basis given by `coords`
/// columns, checking integrality.
fn lattice_context(
    ctx: &LieContext,
    lattice: &LatticeBasis,
    coords: &[Vec<i64>],
) -> Result<LieContext> {
    let cols: Vec<Vec<Rat>> = coords.iter().map(|c| lattice.point(c)).collect();
    let c2 = ctx.change_basis(&RatMatrix::from_columns(&cols))?;
    Ok(c2)
}

fn strictly_triangular(ctx: &LieContext) -> bool {
    let d = ctx.dim();
    (0..d).all(|i| (i + 1..d).all(|j| ctx.basis_bracket_sparse(i, j).iter().all(|(k, _)| *k > j)))
}

/// Lattice basis (lattice coordinates, columns) adapted to the lower central
/// series, ordered from the top of the filtration down.
pub fn filtration_basis(ctx_lattice: &LieContext) -> Result<Vec<Vec<i64>>> {
    let d = ctx_lattice.dim();
    let units: Vec<Vec<Rat>> = (0..d).map(|i| crate::nilalg::unit_vec(d, i)).collect();
    let mut layers: Vec<Vec<Vec<Rat>>> = vec![units.clone()];
    loop {
        let prev = layers.last().unwrap();
        let mut span = EchelonSpan::new();
        let mut next = Vec::new();
        for e in &units {
            for v in prev {
                let b = ctx_lattice.bracket(e, v);
                if span.insert(&b) {
                    next.push(b);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layers.push(next);
        if layers.len() > d + 1 {
            return Err(Error::Hypothesis("algebra is not nilpotent".into()));
        }
    }
    // Deepest layer first, then extend.
    let mut span = EchelonSpan::new();
    let mut cols: Vec<Vec<Rat>> = Vec::new();
    for layer in layers.iter().rev() {
        for v in layer {
            if span.insert(v) {
                cols.push(v.clone());
            }
        }
    }
    let ints: intlin::IntMatrix = cols
        .iter()
        .map(|c| {
            let l = crate::rational::denominator_lcm(c);
            c.iter()
                .map(|x| (x * Rat::from_integer(l.clone())).to_integer())
                .collect()
        })
        .collect();
    let k_mat: intlin::IntMatrix = (0..d)
        .map(|r| (0..d).map(|c| ints[c][r].clone()).collect())
        .collect();
    let hnf = intlin::hnf(&k_mat);
    let u = RatMatrix::from_columns(
        &(0..d)
            .map(|c| {
                (0..d)
                    .map(|r| Rat::from_integer(hnf.u[r][c].clone()))
                    .collect()
            })
            .collect::<Vec<_>>(),
    );
    let e = u.inverse().expect("unimodular");
    let mut out: Vec<Vec<i64>> = e
        .columns()
        .into_iter()
        .map(|c| {
            c.iter()
                .map(|x| x.to_integer().to_i64().expect("small"))
                .collect()
        })
        .collect();
    out.reverse();
    Ok(out)
}

/// Points of norm `< 1` generate the lattice.
pub fn strictly_thick(body: &Body, lattice: &LatticeBasis, budget: u64) -> Result<bool> {
    let eval = Evaluator::new(body, lattice);
    let gens: Vec<Vec<BigInt>> = eval
        .candidates(&Rat::one(), budget)?
        .into_iter()
        .filter(|(a, k)| {
            *a < 1.0 - slack(1.0) || (*a <= 1.0 + slack(1.0) && eval.exact(k) < Rat::one())
        })
        .map(|(_, k)| intlin::big(&k))
        .collect();
    Ok(intlin::sublattice_index(&gens, lattice.dim()).is_some_and(|i| i.is_one()))
}

/// Box approximation `B ⊆ B_R(e; L) ⊆ c B` with `(e; L)` in upper-triangular
/// form for the bracket of `ctx` (given in ambient coordinates).
pub fn nilp_box_approx(
    body: &Body,
    lattice: &LatticeBasis,
    ctx: &LieContext,
    mode: BoxMode,
    budget: u64,
) -> Result<NilBox> {
    let d = lattice.dim();
    if ctx.dim() != d {
        return Err(Error::InvalidInput(
            "bracket and lattice dimensions differ".into(),
        ));
    }
    let std_coords: Vec<Vec<i64>> = (0..d).map(|i| crate::prog::unit(d, i)).collect();
    let lat_ctx = lattice_context(ctx, lattice, &std_coords)?;
    for i in 0..d {
        for j in 0..d {
            if lat_ctx
                .basis_bracket_sparse(i, j)
                .iter()
                .any(|(_, c)| !c.is_integer())
            {
                return Err(Error::Hypothesis(
                    "lattice is not closed under the bracket".into(),
                ));
            }
        }
    }
    let minima = successive_minima(body, lattice, budget)?;
    if minima.lambda.last().is_some_and(|l| *l >= Rat::one())
        || !strictly_thick(body, lattice, budget)?
    {
        return Err(Error::NotThick {
            lambda: minima.lambda.last().map(rat_to_string).unwrap_or_default(),
        });
    }
    let verts = body.vertices();
    if mode == BoxMode::Strict {
        for (a, v) in verts.iter().enumerate() {
            for (b, w) in verts.iter().enumerate().skip(a + 1) {
                let n = body.norm(&ctx.bracket(v, w));
                if n > Rat::one() {
                    return Err(Error::BracketIncompatible {
                        i: a + 1,
                        j: b + 1,
                        detail: format!("of vertices has norm {}", rat_to_string(&n)),
                    });
                }
            }
        }
    }
    let mahler = mahler_basis(&minima, lattice)?;
    let mut coords: Vec<Vec<i64>> = mahler.coords.into_iter().rev().collect();
    let mut ectx = lattice_context(ctx, lattice, &coords)?;
    let mut adapted = false;
    let mut triangular = strictly_triangular(&ectx);
    if !triangular {
        if mode == BoxMode::Strict {
            let (i, j) = first_non_triangular(&ectx);
            return Err(Error::BracketIncompatible {
                i,
                j,
                detail: "has a component at or below index j".into(),
            });
        }
        coords = filtration_basis(&lat_ctx)?;
        ectx = lattice_context(ctx, lattice, &coords)?;
        triangular = strictly_triangular(&ectx);
        adapted = true;
    }
    let vectors: Vec<Vec<Rat>> = coords.iter().map(|c| lattice.point(c)).collect();
    let e_inv = RatMatrix::from_columns(&vectors).inverse().expect("basis");
    let mut lengths: Vec<i64> = (0..d)
        .map(|i| {
            let m = verts
                .iter()
                .map(|v| e_inv.mul_vec(v)[i].abs())
                .max()
                .unwrap_or_else(Rat::zero);
            ceil_i64(&m).max(1)
        })
        .collect();
    let mut fixups = 0;
    if triangular {
        for l in 0..d {
            for i in 0..l {
                for j in i + 1..l {
                    for (k, c) in ectx.basis_bracket_sparse(i, j) {
                        if *k == l {
                            let need = ceil_i64(&(c.abs() * int(lengths[i]) * int(lengths[j])));
                            if need > lengths[l] {
                                lengths[l] = need;
                                fixups += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let corners = PolytopeNorm::Box {
        basis: vectors.clone(),
        lengths: lengths.iter().map(|&l| int(l)).collect(),
    }
    .compile()?
    .vertices();
    let blowup = corners
        .iter()
        .map(|c| body.norm(c))
        .max()
        .unwrap_or_else(Rat::zero);
    Ok(NilBox {
        coords,
        vectors,
        lengths,
        blowup,
        lambda: minima.lambda,
        triangular,
        adapted,
        fixups,
    })
}

fn first_non_triangular(ctx: &LieContext) -> (usize, usize) {
    let d = ctx.dim();
    for i in 0..d {
        for j in i + 1..d {
            if ctx.basis_bracket_sparse(i, j).iter().any(|(k, _)| *k <= j) {
                return (i + 1, j + 1);
            }
        }
    }
    (0, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn b(l: &[i64]) -> Body {
        PolytopeNorm::int_box(l).compile().unwrap()
    }

    #[test]
    fn box_norms() {
        let body = b(&[2, 3]);
        assert_eq!(body.norm(&[int(2), int(0)]), int(1));
        assert_eq!(body.norm(&[int(1), int(3)]), int(1));
    }

    #[test]
    fn projected_box_norm() {
        let u = RatMatrix::from_int_columns(&[vec![2, -1], vec![1, 0]]);
        let body = PolytopeNorm::project_box(
            LatticeBasis::standard(2).vectors,
            vec![int(10), int(10)],
            &u,
        )
        .unwrap()
        .compile()
        .unwrap();
        // The quotient coordinate of (1, 0) is 1 = a + 2b.
        assert_eq!(body.norm(&[int(1)]), rat(1, 30));
        assert_eq!(
            body.vertices(),
            vec![vec![int(-30)], vec![int(-10)], vec![int(10)], vec![int(30)]]
        );
        assert_eq!(body.volume(), int(60));
    }

    #[test]
    fn minima_examples() {
        let z2 = LatticeBasis::standard(2);
        let r = successive_minima(&b(&[2, 3]), &z2, 1000).unwrap();
        assert_eq!(r.lambda, vec![rat(1, 3), rat(1, 2)]);
        assert_eq!(
            r.witnesses,
            vec![vec![int(0), int(1)], vec![int(1), int(0)]]
        );
        let r = successive_minima(&b(&[1, 1]), &z2, 1000).unwrap();
        assert_eq!(r.lambda, vec![int(1), int(1)]);
        let lat =
            LatticeBasis::new(vec![vec![int(1), int(0)], vec![rat(1, 2), rat(1, 2)]]).unwrap();
        let r = successive_minima(&b(&[1, 1]), &lat, 1000).unwrap();
        assert_eq!(r.lambda, vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(r.witnesses[0], vec![rat(1, 2), rat(1, 2)]);
        let m = mahler_basis(&r, &lat).unwrap();
        assert_eq!(
            m.vectors,
            vec![vec![rat(1, 2), rat(1, 2)], vec![rat(1, 2), rat(-1, 2)]]
        );
    }

    #[test]
    fn mahler_with_non_basis_witnesses() {
        // Witnesses (1,1) and (1,-1) span an index-2 sublattice of Z^2.
        let body = PolytopeNorm::Box {
            basis: vec![vec![int(1), int(1)], vec![int(1), int(-1)]],
            lengths: vec![int(1), int(1)],
        }
        .compile()
        .unwrap();
        let z2 = LatticeBasis::standard(2);
        let r = successive_minima(&body, &z2, 1000).unwrap();
        let m = mahler_basis(&r, &z2).unwrap();
        let det = RatMatrix::from_columns(&m.vectors).determinant().abs();
        assert_eq!(det, int(1));
        for (i, e) in m.vectors.iter().enumerate() {
            let bound = std::cmp::max(int(1), rat(i as i64 + 1, 2)) * &r.lambda[i];
            assert!(body.norm(e) <= bound);
        }
    }

    #[test]
    fn completion() {
        let z2 = LatticeBasis::standard(2);
        let l = complete_primitive_to_basis(&[int(2), int(-1)], &z2).unwrap();
        assert_eq!(l.vectors[0], vec![int(2), int(-1)]);
        assert_eq!(l.determinant(), int(1));
        assert!(complete_primitive_to_basis(&[int(2), int(0)], &z2).is_err());
    }

    #[test]
    fn heisenberg_box_is_a_fixed_point() {
        let basis = crate::hall::HallBasis::build(2, 2).unwrap();
        let ctx = crate::nilalg::free_nilpotent_lie(&basis);
        for n in 2..=4i64 {
            let body = b(&[n, n, n * n]);
            let nb = nilp_box_approx(
                &body,
                &LatticeBasis::standard(3),
                &ctx,
                BoxMode::Relaxed,
                1_000_000,
            )
            .unwrap();
            assert_eq!(nb.lengths, vec![n, n, n * n]);
            assert_eq!(nb.blowup, int(1));
            assert!(nb.triangular && !nb.adapted);
        }
    }

    #[test]
    fn thickness_failure() {
        let ctx = LieContext::abelian(2);
        let err = nilp_box_approx(
            &b(&[1, 1]),
            &LatticeBasis::standard(2),
            &ctx,
            BoxMode::Strict,
            1000,
        );
        assert!(matches!(err, Err(Error::NotThick { .. })));
    }

    #[test]
    fn projection_bound_holds() {
        let body = b(&[2, 3, 5]);
        let (lhs, rhs) = projection_volume_bound(&body, &[int(1), int(-2), int(1)]).unwrap();
        assert!(lhs <= rhs);
    }
}
