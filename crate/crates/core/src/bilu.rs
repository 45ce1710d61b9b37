//! Dimension reduction by iterated central-kernel quotients: from a
//! progression in a free nilpotent group and a homomorphism, build a proper
//! coset progression `HP` with `HP_0 ⊆ XP ⊆ (HP_0)^k`.

use std::collections::{HashSet, VecDeque};

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hall::FreeNilpotentGroup;
use crate::intlin;
use crate::latgeo::{self, BoxMode, LatticeBasis, PolytopeNorm};
use crate::nilalg::{self, LieContext};
use crate::prog::{
    self, coset_key, enumerate_products, scan_proper, CosetProgression, Elem, Homomorphism,
    OrderedProgression, ProperReport, Target, TargetDescriptor, TargetGroup,
};
use crate::rational::{int, serde_rat, to_i64, Rat, RatMatrix};

#[derive(Clone, Debug)]
pub struct ProperizeConfig {
    pub budget: u64,
    /// Largest explicit subgroup `H` that may be materialized.
    pub h_budget: usize,
    pub seed: u64,
    /// Lift-independence probes per quotient step.
    pub probes: usize,
    /// Largest power searched in the sandwich checks.
    pub max_power: u32,
    /// Largest number of doublings of the lengths before reboxing gives up.
    pub max_prescale: u32,
}

impl Default for ProperizeConfig {
    fn default() -> Self {
        ProperizeConfig {
            budget: prog::DEFAULT_BUDGET,
            h_budget: 100_000,
            seed: 0,
            probes: 100,
            max_power: 32,
            max_prescale: 12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub r: usize,
    pub s: usize,
}

fn one() -> Rat {
    int(1)
}

/// Input of [`properize`]: the progression `P_ord(u; L)` on the Hall basis of
/// the free nilpotent group of rank `r` and step `s`, and the images of the
/// free generators.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProperizeInput {
    pub domain: DomainSpec,
    /// One length per basic commutator, or one per free generator (expanded
    /// to `L^{χ}`).
    #[serde(rename = "L")]
    pub lengths: Vec<i64>,
    pub codomain: TargetDescriptor,
    pub images: Vec<Elem>,
    #[serde(with = "serde_rat", default = "one")]
    pub m: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReboxRecord {
    /// Lengths were multiplied by this before the body became strictly thick.
    pub prescale: i64,
    #[serde(rename = "L")]
    pub lengths: Vec<i64>,
    #[serde(with = "serde_rat")]
    pub blowup: Rat,
    pub adapted: bool,
    /// `φ(B_Z(e; L)) ⊆ B_Z(e'; L')` by enumeration, when the window fits.
    pub image_contained: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationCertificate {
    pub iteration: usize,
    pub dim: usize,
    /// Lengths of the progression whose properness failed.
    pub measured_lengths: Vec<i64>,
    pub collision: (Vec<i64>, Vec<i64>),
    /// 1-based basis indices used in the commutator descent.
    pub descent: Vec<usize>,
    /// Central kernel element in lattice coordinates.
    pub z: Vec<i64>,
    pub content: i64,
    pub z0: Vec<i64>,
    pub h: Elem,
    /// Order of `h` modulo the previous `H`.
    pub h_order: i64,
    pub h_size: usize,
    /// Whether conjugation forced elements beyond `⟨H, h⟩`.
    pub normal_closure_grew: bool,
    pub rebox: Option<ReboxRecord>,
    pub probes_passed: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// `HP_0 ⊆ XP`.
    pub hp0_in_xp: bool,
    /// Least `k` with `XP ⊆ (HP_0)^k`.
    pub xp_power: u32,
    /// Least `k` with `HP ⊆ (HP_0)^k`.
    pub p_power: u32,
    /// Least `k` with `H ⊆ P_0^k`.
    pub h_power: u32,
    pub p0_size: usize,
    pub xp_size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProperizationResult {
    pub codomain: TargetDescriptor,
    #[serde(rename = "H")]
    pub h: Vec<Elem>,
    #[serde(rename = "P")]
    pub prog: OrderedProgression,
    #[serde(rename = "X")]
    pub x: Vec<Elem>,
    #[serde(with = "serde_rat")]
    pub m: Rat,
    /// Rescaling factors `F_i` with `exp f_i = u_i^{F_i}`.
    pub factors: Vec<i64>,
    /// Whether the final lattice basis is upper-triangular for the bracket.
    pub triangular: bool,
    pub proper: ProperReport,
    pub sandwich: SandwichReport,
    pub iterations: Vec<IterationCertificate>,
}

impl ProperizationResult {
    pub fn coset_progression(&self) -> CosetProgression {
        CosetProgression {
            h: self.h.clone(),
            prog: self.prog.clone(),
        }
    }
}

struct State {
    ctx: LieContext,
    /// Columns: lattice basis vectors lifted to `Λ_0` coordinates.
    lift: Vec<Vec<i64>>,
    /// Rows: the projection `Λ_0 → Λ_j` in coordinates.
    proj: Vec<Vec<i64>>,
    lengths: Vec<i64>,
    h: Vec<Elem>,
    hset: HashSet<Elem>,
    kernel: Vec<Vec<i64>>,
    triangular: bool,
}

struct Pipeline<'a> {
    hom: &'a Homomorphism,
    factors: Vec<i64>,
    ctx_f: LieContext,
    /// Images of `u_i^{±1}`, for normality.
    conj: Vec<Elem>,
    cfg: &'a ProperizeConfig,
}

fn combine(cols: &[Vec<i64>], v: &[i64], n: usize) -> Vec<i64> {
    let mut out = vec![0i64; n];
    for (c, &x) in cols.iter().zip(v) {
        if x != 0 {
            for (o, y) in out.iter_mut().zip(c) {
                *o += x * y;
            }
        }
    }
    out
}

fn apply_rows(rows: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    rows.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn to_ints(v: &[Rat], what: &str) -> Result<Vec<i64>> {
    v.iter()
        .map(|x| {
            to_i64(x)
                .ok_or_else(|| Error::Internal(format!("{what} has a non-integral coordinate")))
        })
        .collect()
}

fn rats(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| int(x)).collect()
}

fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

/// Subgroup generated by `seeds` and closed under conjugation by `conj`.
fn normal_closure(
    g: &impl TargetGroup,
    seeds: &[Elem],
    conj: &[Elem],
    cap: usize,
) -> Result<Vec<Elem>> {
    let id = g.identity();
    let mut gens: Vec<Elem> = seeds.iter().filter(|x| **x != id).cloned().collect();
    gens.sort();
    gens.dedup();
    loop {
        let mut set: HashSet<Elem> = HashSet::from([id.clone()]);
        let mut order = vec![id.clone()];
        let mut queue = VecDeque::from([id.clone()]);
        while let Some(x) = queue.pop_front() {
            for s in &gens {
                let y = g.multiply(&x, s);
                if set.insert(y.clone()) {
                    if set.len() > cap {
                        return Err(Error::BudgetExceeded {
                            needed: set.len() as u128,
                            budget: cap as u64,
                        });
                    }
                    order.push(y.clone());
                    queue.push_back(y);
                }
            }
        }
        let mut extra = Vec::new();
        for x in &order {
            for c in conj {
                let y = g.multiply(&g.multiply(&g.invert(c), x), c);
                if !set.contains(&y) && !extra.contains(&y) {
                    extra.push(y);
                }
            }
        }
        if extra.is_empty() {
            order.sort();
            return Ok(order);
        }
        gens.extend(extra);
    }
}

impl Pipeline<'_> {
    fn target(&self) -> &Target {
        &self.hom.target
    }

    /// `π(exp v)` for `v ∈ Λ_0` in `f`-coordinates.
    fn pi0(&self, v: &[i64]) -> Result<Elem> {
        let n = to_ints(&self.ctx_f.peel(&rats(v)), "second-kind coordinate in Λ_0")?;
        let ell: Vec<i64> = n.iter().zip(&self.factors).map(|(a, f)| a * f).collect();
        Ok(self.hom.apply(&ell))
    }

    fn measure(&self, state: &State, ws: &[Vec<i64>]) -> Result<Vec<i64>> {
        let d = state.ctx.dim();
        let mut out = vec![0i64; d];
        for w in ws {
            let v = apply_rows(&state.proj, w);
            let c = to_ints(&state.ctx.peel(&rats(&v)), "second-kind coordinate in Λ_j")?;
            for (o, x) in out.iter_mut().zip(&c) {
                *o = (*o).max(x.abs());
            }
        }
        Ok(out)
    }

    fn step(
        &self,
        state: &mut State,
        iteration: usize,
        collision: (Vec<i64>, Vec<i64>),
        measured: Vec<i64>,
    ) -> Result<IterationCertificate> {
        let ctx = &state.ctx;
        let d = ctx.dim();
        let d0 = self.factors.len();
        let g = self.target();
        let x = ctx.first_kind_from_second(&rats(&collision.0));
        let y = ctx.first_kind_from_second(&rats(&collision.1));
        let mut z = ctx.bch(&x, &nilalg::neg(&y));
        let mut descent = Vec::new();
        while let Some(i) =
            (0..d).find(|&i| !nilalg::is_zero(&ctx.bracket(&z, &nilalg::unit_vec(d, i))))
        {
            z = ctx.group_commutator(&z, &nilalg::unit_vec(d, i));
            descent.push(i + 1);
            if descent.len() > d {
                return Err(Error::Internal(
                    "commutator descent did not terminate".into(),
                ));
            }
        }
        if nilalg::is_zero(&z) {
            return Err(Error::Internal("descent produced the zero vector".into()));
        }
        let zi = to_ints(&z, "kernel element")?;
        if !state
            .hset
            .contains(&self.pi0(&combine(&state.lift, &zi, d0))?)
        {
            return Err(Error::Internal("kernel element does not map into H".into()));
        }
        let content = gcd_all(&zi);
        let sign = if zi.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
            -1
        } else {
            1
        };
        let z0: Vec<i64> = zi.iter().map(|c| sign * c / content).collect();
        let z0_lift = combine(&state.lift, &z0, d0);
        let h = self.pi0(&z0_lift)?;
        let mut pow = g.identity();
        let mut h_order = None;
        for k in 1..=content {
            pow = g.multiply(&pow, &h);
            if state.hset.contains(&pow) {
                h_order = Some(k);
                break;
            }
        }
        let h_order = h_order.ok_or_else(|| {
            Error::Inconclusive(format!(
                "image of the primitive kernel element has no order dividing {content} modulo H"
            ))
        })?;
        let mut seeds = state.h.clone();
        seeds.push(h.clone());
        let new_h = normal_closure(g, &seeds, &self.conj, self.cfg.h_budget)?;
        let normal_closure_grew = new_h.len() as i64 > state.h.len() as i64 * h_order;

        // Quotient by the line through z0.
        let u_cols: Vec<Vec<i64>> = intlin::complete_primitive_to_basis(&intlin::big(&z0))?
            .iter()
            .map(|c| intlin::small(c).ok_or_else(|| Error::Internal("completion overflow".into())))
            .collect::<Result<_>>()?;
        let umat = RatMatrix::from_int_columns(&u_cols);
        let uinv = umat
            .inverse()
            .ok_or_else(|| Error::Internal("completion is singular".into()))?;
        let uinv_rows: Vec<Vec<i64>> = (0..d)
            .map(|r| to_ints(uinv.row(r), "unimodular inverse"))
            .collect::<Result<_>>()?;
        let ctx_q = ctx.change_basis(&umat)?.quotient_leading(1)?;
        let lift_q: Vec<Vec<i64>> = u_cols[1..]
            .iter()
            .map(|c| combine(&state.lift, c, d0))
            .collect();
        let proj_q: Vec<Vec<i64>> = uinv_rows[1..]
            .iter()
            .map(|r| combine(&state.proj, r, d0))
            .collect();

        let dq = d - 1;
        let (ctx_new, lift_new, proj_new, lengths_new, rebox, triangular) = if dq == 0 {
            (ctx_q, lift_q, proj_q, Vec::new(), None, true)
        } else {
            let (nb, prescale) = self.rebox(state, &umat, &ctx_q)?;
            let wmat = RatMatrix::from_int_columns(&nb.coords);
            let winv = wmat
                .inverse()
                .ok_or_else(|| Error::Internal("rebox basis is singular".into()))?;
            let winv_rows: Vec<Vec<i64>> = (0..dq)
                .map(|r| to_ints(winv.row(r), "rebox inverse"))
                .collect::<Result<_>>()?;
            let image_contained =
                self.check_rebox(&state.lengths, &uinv_rows[1..], &winv_rows, &nb.lengths)?;
            let ctx_new = ctx_q.change_basis(&wmat)?;
            ctx_new.check_triangular()?;
            if !nilalg::has_integer_constants(&ctx_new) {
                return Err(Error::Internal("reboxed lattice is not a Lie ring".into()));
            }
            let lift_new: Vec<Vec<i64>> =
                nb.coords.iter().map(|c| combine(&lift_q, c, d0)).collect();
            let proj_new: Vec<Vec<i64>> =
                winv_rows.iter().map(|r| combine(&proj_q, r, d0)).collect();
            let record = ReboxRecord {
                prescale,
                lengths: nb.lengths.clone(),
                blowup: nb.blowup.clone(),
                adapted: nb.adapted,
                image_contained,
            };
            (
                ctx_new,
                lift_new,
                proj_new,
                nb.lengths,
                Some(record),
                nb.triangular,
            )
        };

        state.kernel.push(z0_lift);
        state.ctx = ctx_new;
        state.lift = lift_new;
        state.proj = proj_new;
        state.lengths = lengths_new;
        state.hset = new_h.iter().cloned().collect();
        state.h = new_h;
        state.triangular = triangular;
        let probes_passed = self.probe(state, iteration)?;
        Ok(IterationCertificate {
            iteration,
            dim: d,
            measured_lengths: measured,
            collision,
            descent,
            z: zi,
            content,
            z0,
            h,
            h_order,
            h_size: state.h.len(),
            normal_closure_grew,
            rebox,
            probes_passed,
        })
    }

    fn rebox(
        &self,
        state: &State,
        umat: &RatMatrix,
        ctx_q: &LieContext,
    ) -> Result<(latgeo::NilBox, i64)> {
        let d = state.ctx.dim();
        let mut prescale = 1i64;
        for _ in 0..=self.cfg.max_prescale {
            let lens: Vec<Rat> = state
                .lengths
                .iter()
                .map(|&l| int(l.max(1) * prescale))
                .collect();
            let body = PolytopeNorm::project_box(LatticeBasis::standard(d).vectors, lens, umat)?
                .compile()?;
            match latgeo::nilp_box_approx(
                &body,
                &LatticeBasis::standard(d - 1),
                ctx_q,
                BoxMode::Relaxed,
                self.cfg.budget,
            ) {
                Ok(nb) => return Ok((nb, prescale)),
                Err(Error::NotThick { .. }) => prescale *= 2,
                Err(e) => return Err(e),
            }
        }
        Err(Error::NotThick {
            lambda: format!("still thin after scaling lengths by {prescale}"),
        })
    }

    /// Enumerates `B_Z(e; L)` and checks that its image has new coordinates
    /// within `L'`.
    fn check_rebox(
        &self,
        lengths: &[i64],
        proj_rows: &[Vec<i64>],
        winv_rows: &[Vec<i64>],
        new_lengths: &[i64],
    ) -> Result<Option<bool>> {
        const WINDOW: u64 = 200_000;
        if prog::grid_size(lengths, WINDOW).is_err() {
            return Ok(None);
        }
        let total = prog::grid_size(lengths, WINDOW)?;
        let ok = (0..total).all(|idx| {
            let t = prog::decode_rank(idx, lengths);
            let c = apply_rows(winv_rows, &apply_rows(proj_rows, &t));
            c.iter().zip(new_lengths).all(|(a, l)| a.abs() <= *l)
        });
        Ok(Some(ok))
    }

    /// Compares `π_0` on two lifts differing by a kernel element.
    fn probe(&self, state: &State, iteration: usize) -> Result<usize> {
        let g = self.target();
        let d0 = self.factors.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed.wrapping_add(iteration as u64));
        for _ in 0..self.cfg.probes {
            let v: Vec<i64> = (0..state.lift.len())
                .map(|_| rng.gen_range(-2..=2))
                .collect();
            let a = combine(&state.lift, &v, d0);
            let c: Vec<i64> = (0..state.kernel.len())
                .map(|_| rng.gen_range(-2..=2))
                .collect();
            let k = combine(&state.kernel, &c, d0);
            let b: Vec<i64> = a.iter().zip(&k).map(|(x, y)| x + y).collect();
            let diff = g.multiply(&g.invert(&self.pi0(&a)?), &self.pi0(&b)?);
            if !state.hset.contains(&diff) {
                return Err(Error::Internal(format!(
                    "quotient map depends on the lift at iteration {iteration}"
                )));
            }
        }
        Ok(self.cfg.probes)
    }
}

fn power_search(
    g: &impl TargetGroup,
    h: &[Elem],
    p0: &[Elem],
    xp_keys: &HashSet<Elem>,
    p_keys: &HashSet<Elem>,
    cfg: &ProperizeConfig,
) -> Result<(u32, u32, u32)> {
    let key = |x: &[i64]| coset_key(g, h, x);
    let base_keys: Vec<Elem> = {
        let mut v: Vec<Elem> = p0.iter().map(|x| key(x)).collect();
        v.sort();
        v.dedup();
        v
    };
    let mut keys: HashSet<Elem> = base_keys.iter().cloned().collect();
    let mut elems: HashSet<Elem> = p0.iter().cloned().collect();
    let (mut kx, mut kp, mut kh) = (None, None, None);
    for k in 1..=cfg.max_power {
        if kx.is_none() && xp_keys.is_subset(&keys) {
            kx = Some(k);
        }
        if kp.is_none() && p_keys.is_subset(&keys) {
            kp = Some(k);
        }
        if kh.is_none() && h.iter().all(|x| elems.contains(x)) {
            kh = Some(k);
        }
        if let (Some(a), Some(b), Some(c)) = (kx, kp, kh) {
            return Ok((a, b, c));
        }
        let work = (keys.len().max(elems.len()) as u128) * (p0.len() as u128);
        if work > cfg.budget as u128 {
            return Err(Error::BudgetExceeded {
                needed: work,
                budget: cfg.budget,
            });
        }
        let mut sorted_keys: Vec<&Elem> = keys.iter().collect();
        sorted_keys.sort();
        let next_keys: HashSet<Elem> = sorted_keys
            .iter()
            .flat_map(|a| base_keys.iter().map(move |b| (a, b)))
            .map(|(a, b)| key(&g.multiply(a, b)))
            .collect();
        keys = next_keys;
        if kh.is_none() {
            elems = prog::product_set(g, &elems, &p0.iter().cloned().collect());
        }
    }
    Err(Error::Inconclusive(format!(
        "sandwich powers not reached within {} (found {kx:?}, {kp:?}, {kh:?})",
        cfg.max_power
    )))
}

/// Runs the pipeline on `P_ord(u; L)` in the free nilpotent group `domain`
/// with the homomorphism `hom`.
pub fn properize(
    domain: &FreeNilpotentGroup,
    lengths: &[i64],
    hom: &Homomorphism,
    m: &Rat,
    cfg: &ProperizeConfig,
) -> Result<ProperizationResult> {
    let d0 = domain.dim();
    if lengths.len() != d0 || lengths.iter().any(|&l| l < 0) {
        return Err(Error::InvalidInput(format!(
            "expected {d0} non-negative lengths"
        )));
    }
    if hom.images.len() != d0 {
        return Err(Error::InvalidInput(
            "homomorphism does not match the domain".into(),
        ));
    }
    if *m <= Rat::zero() {
        return Err(Error::InvalidInput("m must be positive".into()));
    }
    let g = &hom.target;
    let p0_input = OrderedProgression::new(hom.images.clone(), lengths.to_vec())?;
    let conj: Vec<Elem> = hom
        .images
        .iter()
        .flat_map(|u| [u.clone(), g.invert(u)])
        .collect();
    let p0_elems = {
        let mut v = enumerate_products(g, &hom.images, lengths, cfg.budget)?;
        v.sort();
        v.dedup();
        v
    };

    let direct = scan_proper(
        g,
        &hom.images,
        &[g.identity()],
        &p0_input.scaled_bounds(m),
        cfg.budget,
    )?;
    if direct.proper {
        let h = vec![g.identity()];
        let x = vec![g.identity()];
        let sandwich = sandwich(g, &h, &x, &p0_input, &p0_elems, cfg)?;
        return Ok(ProperizationResult {
            codomain: g.descriptor(),
            h,
            prog: p0_input,
            x,
            m: m.clone(),
            factors: vec![1; d0],
            triangular: true,
            proper: direct,
            sandwich,
            iterations: Vec::new(),
        });
    }

    let rescaled = nilalg::rescale_to_lattice(domain.generator_context())?;
    let factors: Vec<i64> = rescaled
        .factors()
        .iter()
        .map(|f| {
            f.to_i64()
                .ok_or_else(|| Error::Internal("rescaling factor overflow".into()))
        })
        .collect::<Result<_>>()?;
    if !nilalg::has_integer_constants(&rescaled.ctx) {
        return Err(Error::Internal("rescaled lattice is not a Lie ring".into()));
    }
    let pipeline = Pipeline {
        hom,
        factors: factors.clone(),
        ctx_f: rescaled.ctx.clone(),
        conj,
        cfg,
    };

    // P_0 ⊆ X_0 · exp(W) with W ⊆ Λ_0.
    let free_gens: Vec<Elem> = (0..d0).map(|i| prog::unit(d0, i)).collect();
    let free_elems = enumerate_products(domain, &free_gens, lengths, cfg.budget)?;
    let mut reps: Vec<Vec<i64>> = Vec::new();
    let mut ws: Vec<Vec<i64>> = Vec::new();
    for p in &free_elems {
        let (r, y) = prog::split_element(domain, p, &factors)?;
        let n: Vec<i64> = y.iter().zip(&factors).map(|(a, f)| a / f).collect();
        let w = to_ints(
            &rescaled.ctx.first_kind_from_second(&rats(&n)),
            "first-kind coordinate in Λ_0",
        )?;
        reps.push(r);
        ws.push(w);
    }
    reps.sort();
    reps.dedup();
    ws.sort();
    ws.dedup();
    let box_lengths: Vec<i64> = (0..d0)
        .map(|i| ws.iter().map(|w| w[i].abs()).max().unwrap_or(0).max(1))
        .collect();

    let mut state = State {
        ctx: rescaled.ctx.clone(),
        lift: (0..d0).map(|i| prog::unit(d0, i)).collect(),
        proj: (0..d0).map(|i| prog::unit(d0, i)).collect(),
        lengths: box_lengths,
        h: vec![g.identity()],
        hset: HashSet::from([g.identity()]),
        kernel: Vec::new(),
        triangular: true,
    };
    let mut iterations = Vec::new();
    let (gens, measured) = loop {
        let d = state.ctx.dim();
        let gens: Vec<Elem> = state
            .lift
            .iter()
            .map(|c| pipeline.pi0(c))
            .collect::<Result<_>>()?;
        let measured = pipeline.measure(&state, &ws)?;
        let bounds: Vec<i64> = measured
            .iter()
            .map(|&l| crate::rational::floor_i64(&(m * int(l))))
            .collect();
        let report = scan_proper(g, &gens, &state.h, &bounds, cfg.budget)?;
        if report.proper {
            break (gens, measured);
        }
        if iterations.len() >= d0 || d == 0 {
            return Err(Error::Internal(
                "rank did not decrease to a proper progression".into(),
            ));
        }
        let collision = report.collision.expect("improper scans report a collision");
        let cert = pipeline.step(&mut state, iterations.len() + 1, collision, measured)?;
        iterations.push(cert);
    };

    let prog_out = OrderedProgression::new(gens, measured)?;
    let out = CosetProgression {
        h: state.h.clone(),
        prog: prog_out.clone(),
    };
    out.validate(g)?;
    let proper = prog::is_proper(g, &out, m, cfg.budget)?;
    if !proper.proper {
        return Err(Error::Internal(
            "output progression failed re-verification".into(),
        ));
    }
    let mut x: Vec<Elem> = reps.iter().map(|r| hom.apply(r)).collect();
    x.sort();
    x.dedup();
    let sandwich = sandwich(g, &state.h, &x, &prog_out, &p0_elems, cfg)?;
    if !sandwich.hp0_in_xp {
        return Err(Error::Internal("HP_0 is not contained in XP".into()));
    }
    Ok(ProperizationResult {
        codomain: g.descriptor(),
        h: state.h,
        prog: prog_out,
        x,
        m: m.clone(),
        factors,
        triangular: state.triangular,
        proper,
        sandwich,
        iterations,
    })
}

fn sandwich(
    g: &Target,
    h: &[Elem],
    x: &[Elem],
    p: &OrderedProgression,
    p0: &[Elem],
    cfg: &ProperizeConfig,
) -> Result<SandwichReport> {
    let key = |e: &[i64]| coset_key(g, h, e);
    let p_elems = enumerate_products(g, &p.gens, &p.lengths, cfg.budget)?;
    let p_keys: HashSet<Elem> = p_elems.iter().map(|e| key(e)).collect();
    let xp_keys: HashSet<Elem> = x
        .iter()
        .flat_map(|a| p_elems.iter().map(move |b| (a, b)))
        .map(|(a, b)| key(&g.multiply(a, b)))
        .collect();
    let hp0_in_xp = p0.iter().all(|e| xp_keys.contains(&key(e)));
    let (xp_power, p_power, h_power) = power_search(g, h, p0, &xp_keys, &p_keys, cfg)?;
    Ok(SandwichReport {
        hp0_in_xp,
        xp_power,
        p_power,
        h_power,
        p0_size: p0.len(),
        xp_size: xp_keys.len(),
    })
}

/// Builds the domain and homomorphism described by `input` and runs
/// [`properize`].
pub fn properize_input(
    input: &ProperizeInput,
    cfg: &ProperizeConfig,
) -> Result<ProperizationResult> {
    let domain = FreeNilpotentGroup::from_rank_step(input.domain.r, input.domain.s)?;
    let target = Target::from_descriptor(&input.codomain)?;
    let hom = Homomorphism::from_generator_images(&domain, target, &input.images)?;
    let lengths = if input.lengths.len() == domain.dim() {
        input.lengths.clone()
    } else if input.lengths.len() == input.domain.r {
        domain.basis().nilpotent_lengths(&input.lengths)?
    } else {
        return Err(Error::InvalidInput(format!(
            "expected {} or {} lengths, got {}",
            domain.dim(),
            input.domain.r,
            input.lengths.len()
        )));
    };
    properize(&domain, &lengths, &hom, &input.m, cfg)
}

/// The pipeline for an abelian domain, which additionally requires the
/// coset progression to lie in a bounded power of the input.
pub fn abelian_properize(
    input: &ProperizeInput,
    cfg: &ProperizeConfig,
) -> Result<ProperizationResult> {
    if input.domain.s != 1 {
        return Err(Error::Hypothesis(
            "abelian pipeline needs a step-1 domain".into(),
        ));
    }
    let res = properize_input(input, cfg)?;
    // Every rescaling factor is 1 in step 1, so X is the identity alone.
    let target = Target::from_descriptor(&input.codomain)?;
    if res.x != [target.identity()] {
        return Err(Error::Internal(
            "abelian pipeline produced translates".into(),
        ));
    }
    Ok(res)
}

/// A `Homomorphism` evaluation of `exp v` through second-kind coordinates in
/// the generator basis, for callers holding first-kind coordinates.
pub fn evaluate_exp(domain: &FreeNilpotentGroup, hom: &Homomorphism, v: &[Rat]) -> Result<Elem> {
    let ell = domain.generator_context().second_kind_from_first(v)?;
    let ell: Vec<i64> = ell
        .iter()
        .map(|c| {
            if c.is_integer() {
                c.to_integer()
                    .to_i64()
                    .ok_or_else(|| Error::Internal("coordinate overflow".into()))
            } else {
                Err(Error::Hypothesis("exp v is not in the group".into()))
            }
        })
        .collect::<Result<_>>()?;
    Ok(hom.apply(&ell))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2_to_z() -> ProperizeInput {
        ProperizeInput {
            domain: DomainSpec { r: 2, s: 1 },
            lengths: vec![10, 10],
            codomain: TargetDescriptor::Unitriangular { n: 2 },
            images: vec![vec![1], vec![2]],
            m: int(1),
        }
    }

    fn heisenberg_mod(q: i64) -> ProperizeInput {
        ProperizeInput {
            domain: DomainSpec { r: 2, s: 2 },
            lengths: vec![4, 4, 16],
            codomain: TargetDescriptor::UnitriangularMod { n: 3, modulus: q },
            images: vec![vec![1, 0, 0], vec![0, 0, 1]],
            m: int(1),
        }
    }

    #[test]
    fn z2_to_z_pipeline() {
        let res = properize_input(&z2_to_z(), &ProperizeConfig::default()).unwrap();
        assert_eq!(res.iterations.len(), 1);
        let it = &res.iterations[0];
        assert_eq!(it.collision, (vec![-10, -9], vec![-8, -10]));
        assert_eq!(it.z0, vec![2, -1]);
        assert_eq!(it.content, 1);
        assert_eq!(res.h, vec![vec![0]]);
        assert_eq!(res.prog.rank(), 1);
        assert_eq!(res.prog.lengths, vec![30]);
        assert_eq!(
            res.prog.gens[0].iter().map(|x| x.abs()).collect::<Vec<_>>(),
            vec![1]
        );
        assert!(res.proper.proper);
        assert!(res.sandwich.hp0_in_xp);
        assert_eq!(res.sandwich.xp_power, 1);
        assert_eq!(res.x, vec![vec![0]]);
        assert!(abelian_properize(&z2_to_z(), &ProperizeConfig::default()).is_ok());
    }

    #[test]
    fn already_proper_input() {
        let mut input = z2_to_z();
        input.images = vec![vec![1], vec![21]];
        let res = properize_input(&input, &ProperizeConfig::default()).unwrap();
        assert!(res.iterations.is_empty());
        assert_eq!(res.h, vec![vec![0]]);
        assert_eq!(res.x, vec![vec![0]]);
        assert_eq!(res.prog.gens, vec![vec![1], vec![21]]);
    }

    #[test]
    fn heisenberg_mod_q() {
        for q in [3i64, 5, 7] {
            let res = properize_input(&heisenberg_mod(q), &ProperizeConfig::default()).unwrap();
            assert_eq!(res.factors, vec![2, 2, 2]);
            assert!(res.proper.proper);
            assert!(res.sandwich.hp0_in_xp);
            let mut n = res.h.len();
            while n % q as usize == 0 {
                n /= q as usize;
            }
            assert_eq!(n, 1, "q = {q}, |H| = {}", res.h.len());
            if q == 3 {
                assert_eq!(res.h.len(), 27);
            } else {
                assert_eq!(res.h.len(), q as usize);
                assert_eq!(res.prog.rank(), 2);
            }
        }
    }

    #[test]
    fn kernel_order_three() {
        // Z → Z/3 with L = 4: the collision (-4, -1) gives z = 3e_1, and
        // the primitive e_1 maps to an element of order 3.
        let input = ProperizeInput {
            domain: DomainSpec { r: 1, s: 1 },
            lengths: vec![4],
            codomain: TargetDescriptor::UnitriangularMod { n: 2, modulus: 3 },
            images: vec![vec![1]],
            m: int(1),
        };
        let res = properize_input(&input, &ProperizeConfig::default()).unwrap();
        assert_eq!(res.iterations[0].content, 3);
        assert_eq!(res.iterations[0].h_order, 3);
        assert_eq!(res.h.len(), 3);
        assert_eq!(res.prog.rank(), 0);
    }

    #[test]
    fn normal_closure_of_center() {
        let g = Target::from_descriptor(&TargetDescriptor::UnitriangularMod { n: 3, modulus: 5 })
            .unwrap();
        let h =
            normal_closure(&g, &[vec![0, 1, 0]], &[vec![1, 0, 0], vec![0, 0, 1]], 1000).unwrap();
        assert_eq!(h.len(), 5);
        let h = normal_closure(&g, &[vec![1, 0, 0]], &[vec![0, 0, 1]], 1000).unwrap();
        assert_eq!(h.len(), 25);
    }
}
