//! Named invariant suites. Each criterion returns a pass flag, a one-line
//! summary and a canonical output string used for determinism checks.

use std::collections::HashSet;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bilu::{self, DomainSpec, ProperizeConfig, ProperizeInput};
use crate::error::{Error, Result};
use crate::growth;
use crate::hall::{FreeNilpotentGroup, HallBasis};
use crate::latgeo::{self, BoxMode, LatticeBasis, PolytopeNorm};
use crate::ledger::ConstantsLedger;
use crate::nilalg::{self, LieContext};
use crate::prog::{self, Elem, TargetDescriptor};
use crate::rational::{int, rat, rat_to_string, Rat, RatMatrix};

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "collection agrees with the matrix and BCH oracles"),
    (2, "BCH associativity and denominators"),
    (3, "commutator table support"),
    (4, "successive minima and Mahler bases"),
    (5, "nilpotent box sandwich"),
    (6, "properization pipeline"),
    (7, "growth exponents"),
    (8, "separation example"),
    (9, "sumset covers"),
    (10, "finite group covers"),
    (11, "determinism across worker counts"),
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Canonical measured output.
    pub output: String,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {}: {} ({})",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn name_of(id: u8) -> String {
    CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1.to_string())
        .unwrap_or_default()
}

fn outcome(id: u8, pass: bool, detail: String, output: String) -> Outcome {
    Outcome {
        id,
        name: name_of(id),
        pass,
        detail,
        output,
    }
}

fn failed(id: u8, e: Error) -> Outcome {
    outcome(id, false, format!("error: {e}"), String::new())
}

/// Suite names accepted by [`run_suite`].
pub fn suite_ids(name: &str) -> Option<Vec<u8>> {
    match name {
        "all" | "acceptance" => Some((1..=11).collect()),
        "hall" | "collection" => Some(vec![1, 3]),
        "nilalg" | "bch" => Some(vec![2]),
        "latgeo" | "geometry" => Some(vec![4, 5]),
        "bilu" | "properize" => Some(vec![6]),
        "growth" => Some(vec![7, 8, 9, 10]),
        "determinism" => Some(vec![11]),
        _ => name
            .strip_prefix("criterion")
            .and_then(|n| n.parse().ok())
            .filter(|n| (1..=11).contains(n))
            .map(|n| vec![n]),
    }
}

pub fn run_suite(ids: &[u8], ledger: &mut ConstantsLedger) -> Vec<Outcome> {
    ids.iter().map(|&id| run_criterion(id, ledger)).collect()
}

pub fn run_criterion(id: u8, ledger: &mut ConstantsLedger) -> Outcome {
    let res = match id {
        1 => collection(),
        2 => bch_validity(),
        3 => table_support(),
        4 => geometry(),
        5 => box_sandwich(ledger),
        6 => pipeline(ledger),
        7 => growth_exponents(ledger),
        8 => separation(ledger),
        9 => sumsets(ledger),
        10 => covers(ledger),
        11 => determinism(),
        _ => Err(Error::InvalidInput(format!("no criterion {id}"))),
    };
    res.unwrap_or_else(|e| failed(id, e))
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
}

/// Outputs of criteria 1–10 with one and with eight workers.
fn determinism() -> Result<Outcome> {
    let run = |w: usize| -> Vec<String> {
        pool(w).install(|| {
            let mut l = ConstantsLedger::new();
            let mut outs: Vec<String> = (1..=10)
                .map(|id| run_criterion(id, &mut l).output)
                .collect();
            outs.push(l.to_json());
            outs
        })
    };
    let one = run(1);
    let eight = run(8);
    let differing: Vec<usize> = (0..one.len())
        .filter(|&i| one[i] != eight[i])
        .map(|i| i + 1)
        .collect();
    Ok(outcome(
        11,
        differing.is_empty(),
        if differing.is_empty() {
            "outputs of criteria 1-10 and the ledger identical with 1 and 8 workers".into()
        } else {
            format!("outputs differ for {differing:?}")
        },
        String::new(),
    ))
}

fn heis_matrix(word: &[(usize, i64)]) -> [i64; 3] {
    let mut m = [0i64; 3];
    for &(i, e) in word {
        let x = if i == 1 { [e, 0, 0] } else { [0, e, 0] };
        m = [m[0] + x[0], m[1] + x[1], m[2] + x[2] + m[0] * x[1]];
    }
    m
}

fn collection() -> Result<Outcome> {
    let g = FreeNilpotentGroup::from_rank_step(2, 2)?;
    let letters = [(1usize, 1i64), (1, -1), (2, 1), (2, -1)];
    let mut words: Vec<Vec<(usize, i64)>> = vec![vec![]];
    let mut all = vec![vec![]];
    for _ in 0..6 {
        let mut next = Vec::new();
        for w in &words {
            for l in letters {
                let mut w2 = w.clone();
                w2.push(l);
                next.push(w2);
            }
        }
        all.extend(next.iter().cloned());
        words = next;
    }
    let mut bad = 0usize;
    for w in &all {
        let c = g.collect(w)?;
        let m = heis_matrix(w);
        if (c[0], c[1], m[2]) != (m[0], m[1], c[0] * c[1] - c[2]) {
            bad += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut random_bad = 0usize;
    let mut checked = 0usize;
    let mut digest = Vec::new();
    for (r, s) in [(2, 3), (2, 4), (3, 2), (3, 3), (3, 4)] {
        let g = FreeNilpotentGroup::from_rank_step(r, s)?;
        for _ in 0..200 {
            let len = rng.gen_range(0..=6);
            let word: Vec<(usize, i64)> = (0..len)
                .map(|_| {
                    (
                        rng.gen_range(1..=r),
                        if rng.gen_bool(0.5) { 1 } else { -1 } * rng.gen_range(1..=2),
                    )
                })
                .collect();
            let c = g.collect(&word)?;
            let mut acc = g.identity();
            for &(i, e) in &word {
                let mut x = g.identity();
                x[i - 1] = e;
                acc = g.bch_multiply(&acc, &x)?;
            }
            if acc != c {
                random_bad += 1;
            }
            checked += 1;
            digest.push(
                c.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
        }
    }
    Ok(outcome(
        1,
        bad == 0 && random_bad == 0,
        format!(
            "{} words of length <= 6 vs matrices, {} mismatches; {checked} random words vs BCH, {random_bad} mismatches",
            all.len(),
            bad
        ),
        digest.join("\n"),
    ))
}

fn random_rat(rng: &mut ChaCha8Rng) -> Rat {
    rat(rng.gen_range(-3..=3), rng.gen_range(1..=3))
}

fn bch_validity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0usize;
    let mut checked = 0usize;
    let mut digest = Vec::new();
    for (r, s, n) in [
        (2, 2, 500),
        (2, 3, 500),
        (2, 4, 500),
        (3, 2, 500),
        (3, 3, 500),
        (3, 4, 500),
    ] {
        let basis = HallBasis::build(r, s)?;
        let ctx = nilalg::free_nilpotent_lie(&basis);
        let d = ctx.dim();
        for _ in 0..n {
            // Sparse vectors keep the rational arithmetic small.
            let mut v = || -> Vec<Rat> {
                (0..d)
                    .map(|i| {
                        if i < r || rng.gen_bool(0.2) {
                            random_rat(&mut rng)
                        } else {
                            Rat::zero()
                        }
                    })
                    .collect()
            };
            let (x, y, z) = (v(), v(), v());
            let left = ctx.bch(&ctx.bch(&x, &y), &z);
            let right = ctx.bch(&x, &ctx.bch(&y, &z));
            if left != right {
                failures += 1;
            }
            checked += 1;
            if digest.len() < 20 {
                digest.push(left.iter().map(rat_to_string).collect::<Vec<_>>().join(" "));
            }
        }
    }
    let dens: Vec<String> = (1..=3)
        .map(|s| nilalg::bch_denominator_lcm(s).map(|x| x.to_string()))
        .collect::<Result<_>>()?;
    let pass = failures == 0 && dens == ["1", "2", "12"];
    Ok(outcome(
        2,
        pass,
        format!(
            "{checked} triples, {failures} failures; denominators {}",
            dens.join(", ")
        ),
        format!("{}\n{}", digest.join("\n"), dens.join(" ")),
    ))
}

fn table_support() -> Result<Outcome> {
    let mut bad = 0usize;
    let mut entries = 0usize;
    for r in 1..=3 {
        for s in 1..=4 {
            let g = FreeNilpotentGroup::from_rank_step(r, s)?;
            let basis = g.basis();
            let table = g.commutator_table();
            for ((i, j, _, _), v) in table.sorted() {
                entries += 1;
                let need: Vec<u32> = basis.basis[i - 1]
                    .chi
                    .iter()
                    .zip(&basis.basis[j - 1].chi)
                    .map(|(a, b)| a + b)
                    .collect();
                for (k, &c) in v.iter().enumerate() {
                    if c != 0 && basis.basis[k].chi.iter().zip(&need).any(|(a, b)| a < b) {
                        bad += 1;
                    }
                }
            }
        }
    }
    Ok(outcome(
        3,
        bad == 0,
        format!("{entries} table entries for r <= 3, s <= 4; {bad} violations"),
        format!("{entries} {bad}"),
    ))
}

struct RandomLattice {
    cols: Vec<Vec<i64>>,
    den: i64,
    lengths: Vec<(i64, i64)>,
}

impl RandomLattice {
    fn basis(&self) -> Result<LatticeBasis> {
        LatticeBasis::new(
            self.cols
                .iter()
                .map(|c| c.iter().map(|&x| rat(x, self.den)).collect())
                .collect(),
        )
    }

    fn rat_lengths(&self) -> Vec<Rat> {
        self.lengths.iter().map(|&(a, b)| rat(a, b)).collect()
    }
}

fn random_lattice(rng: &mut ChaCha8Rng) -> RandomLattice {
    loop {
        let d = rng.gen_range(1..=4);
        let den = rng.gen_range(1..=2);
        let cols: Vec<Vec<i64>> = (0..d)
            .map(|c| {
                (0..d)
                    .map(|r| {
                        if r == c {
                            rng.gen_range(1..=2)
                        } else {
                            rng.gen_range(-1..=1)
                        }
                    })
                    .collect()
            })
            .collect();
        let m = RatMatrix::from_int_columns(&cols);
        if m.determinant().is_zero() {
            continue;
        }
        let lengths = (0..d)
            .map(|_| (rng.gen_range(1..=5), rng.gen_range(1..=2)))
            .collect();
        return RandomLattice { cols, den, lengths };
    }
}

/// Successive minima by scanning a window twice the size of the enumeration
/// bound, with ranks computed from scratch. Norms are kept as integers over a
/// common denominator.
fn brute_minima(lat: &RandomLattice) -> Vec<Rat> {
    let d = lat.cols.len();
    let p: i64 = lat
        .lengths
        .iter()
        .fold(1, |acc, &(a, _)| num_integer::lcm(acc, a));
    let scale: Vec<i64> = lat.lengths.iter().map(|&(a, b)| b * (p / a)).collect();
    let norm = |k: &[i64]| -> (i64, Vec<i64>) {
        let v: Vec<i64> = (0..d)
            .map(|r| (0..d).map(|c| lat.cols[c][r] * k[c]).sum())
            .collect();
        let n = v
            .iter()
            .zip(&scale)
            .map(|(x, s)| x.abs() * s)
            .max()
            .unwrap_or(0);
        (n, v)
    };
    let radius = (0..d)
        .map(|c| {
            let mut k = vec![0; d];
            k[c] = 1;
            norm(&k).0
        })
        .max()
        .unwrap();
    // |k_j| <= sum_i |B^-1_ji| * |v_i| with |v_i| <= radius / scale_i.
    let inv = RatMatrix::from_int_columns(&lat.cols)
        .inverse()
        .expect("full rank");
    let bounds: Vec<i64> = (0..d)
        .map(|j| {
            let h: Rat = (0..d)
                .map(|i| inv[(j, i)].abs() * rat(radius, scale[i]))
                .sum();
            2 * crate::rational::ceil_i64(&h)
        })
        .collect();
    let total = prog::grid_size(&bounds, u64::MAX).unwrap();
    let mut pts: Vec<(i64, Vec<i64>)> = (0..total)
        .map(|idx| norm(&prog::decode_rank(idx, &bounds)))
        .filter(|(n, _)| *n != 0 && *n <= radius)
        .collect();
    pts.sort();
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    let mut lambda = Vec::new();
    for (n, v) in pts {
        let mut trial = chosen.clone();
        trial.push(v);
        if RatMatrix::from_int_columns(&trial).rank() == trial.len() {
            chosen = trial;
            lambda.push(rat(n, lat.den * p));
            if lambda.len() == d {
                break;
            }
        }
    }
    lambda
}

fn geometry() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = Vec::new();
    let mut digest = Vec::new();
    for t in 0..50 {
        let fixture = random_lattice(&mut rng);
        let lat = fixture.basis()?;
        let body = PolytopeNorm::axis_box(&fixture.rat_lengths()).compile()?;
        let rep = latgeo::successive_minima(&body, &lat, prog::DEFAULT_BUDGET)?;
        let brute = brute_minima(&fixture);
        let mahler = latgeo::mahler_basis(&rep, &lat)?;
        let det = RatMatrix::from_int_columns(&mahler.coords)
            .determinant()
            .abs();
        let mut ok =
            rep.lambda == brute && det == int(1) && body.norm(&mahler.vectors[0]) == rep.lambda[0];
        for (i, e) in mahler.vectors.iter().enumerate() {
            let factor = std::cmp::max(int(1), rat(i as i64 + 1, 2));
            ok &= body.norm(e) <= factor * &rep.lambda[i];
        }
        if !ok {
            bad.push(t);
        }
        digest.push(
            rep.lambda
                .iter()
                .map(rat_to_string)
                .collect::<Vec<_>>()
                .join(" "),
        );
    }
    Ok(outcome(
        4,
        bad.is_empty(),
        format!("50 random lattices of rank <= 4; failures {bad:?}"),
        digest.join("\n"),
    ))
}

struct BoxCase {
    label: String,
    body: latgeo::Body,
    ctx: LieContext,
}

fn heisenberg_ctx() -> Result<LieContext> {
    Ok(nilalg::free_nilpotent_lie(&HallBasis::build(2, 2)?))
}

/// Quotient fixtures: a box in a Lie lattice projected along a primitive
/// central vector.
fn quotient_cases(rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<BoxCase>> {
    let mut out = Vec::new();
    let ambients: Vec<(String, LieContext, Vec<usize>)> = vec![
        ("abelian3".into(), LieContext::abelian(3), vec![0, 1, 2]),
        ("heisenberg".into(), heisenberg_ctx()?, vec![2]),
        (
            "free23".into(),
            nilalg::free_nilpotent_lie(&HallBasis::build(2, 3)?),
            vec![3, 4],
        ),
    ];
    while out.len() < count {
        let (label, ctx, center) = &ambients[out.len() % ambients.len()];
        let d = ctx.dim();
        let mut z = vec![0i64; d];
        for &c in center {
            z[c] = rng.gen_range(-2..=2);
        }
        let content = z.iter().fold(0i64, |g, &x| num_integer::gcd(g, x));
        if content != 1 {
            continue;
        }
        let lengths: Vec<Rat> = (0..d).map(|_| int(rng.gen_range(2..=6))).collect();
        let cols = crate::intlin::complete_primitive_to_basis(&crate::intlin::big(&z))?;
        let u = RatMatrix::from_columns(
            &cols
                .iter()
                .map(|c| c.iter().map(|x| Rat::from_integer(x.clone())).collect())
                .collect::<Vec<_>>(),
        );
        let q = ctx.change_basis(&u)?.quotient_leading(1)?;
        let mut scale = 1i64;
        loop {
            let ls: Vec<Rat> = lengths.iter().map(|l| l * int(scale)).collect();
            let body =
                PolytopeNorm::project_box(LatticeBasis::standard(d).vectors, ls, &u)?.compile()?;
            let thick = latgeo::strictly_thick(
                &body,
                &LatticeBasis::standard(d - 1),
                prog::DEFAULT_BUDGET,
            )?;
            if thick {
                out.push(BoxCase {
                    label: format!("{label} z={z:?} x{scale}"),
                    body,
                    ctx: q.clone(),
                });
                break;
            }
            scale *= 2;
        }
    }
    Ok(out)
}

fn box_sandwich(ledger: &mut ConstantsLedger) -> Result<Outcome> {
    let mut cases = Vec::new();
    for n in 2..=4i64 {
        cases.push(BoxCase {
            label: format!("heisenberg n={n}"),
            body: PolytopeNorm::int_box(&[n, n, n * n]).compile()?,
            ctx: heisenberg_ctx()?,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    cases.extend(quotient_cases(&mut rng, 20)?);
    let mut worst = Rat::zero();
    let mut bad = Vec::new();
    let mut digest = Vec::new();
    for case in &cases {
        let d = case.ctx.dim();
        let nb = latgeo::nilp_box_approx(
            &case.body,
            &LatticeBasis::standard(d),
            &case.ctx,
            BoxMode::Relaxed,
            prog::DEFAULT_BUDGET,
        )?;
        let e_inv = RatMatrix::from_columns(&nb.vectors)
            .inverse()
            .expect("basis");
        let inner = case.body.vertices().iter().all(|v| {
            e_inv
                .mul_vec(v)
                .iter()
                .zip(&nb.lengths)
                .all(|(c, l)| c.abs() <= int(*l))
        });
        let corners = PolytopeNorm::Box {
            basis: nb.vectors.clone(),
            lengths: nb.lengths.iter().map(|&l| int(l)).collect(),
        }
        .compile()?
        .vertices();
        let c = corners
            .iter()
            .map(|v| case.body.norm(v))
            .max()
            .unwrap_or_else(Rat::zero);
        let ok = inner && c == nb.blowup && (d > 4 || c <= int(64)) && nb.triangular;
        if !ok {
            bad.push(case.label.clone());
        }
        if c > worst {
            worst = c.clone();
        }
        digest.push(format!(
            "{}: L={:?} c={}",
            case.label,
            nb.lengths,
            rat_to_string(&c)
        ));
    }
    for (i, line) in digest.iter().enumerate().take(3) {
        ledger.record(
            "nilp.box",
            &[("fixture", format!("heisenberg{}", i + 2))],
            line.split("c=").nth(1).unwrap_or(""),
            Some("64".into()),
        );
    }
    ledger.record(
        "nilp.box",
        &[("fixture", "quotients20".into())],
        rat_to_string(&worst),
        Some("64".into()),
    );
    Ok(outcome(
        5,
        bad.is_empty(),
        format!(
            "{} fixtures, largest c = {}; failures {bad:?}",
            cases.len(),
            rat_to_string(&worst)
        ),
        digest.join("\n"),
    ))
}

pub fn z2_to_z_input() -> ProperizeInput {
    ProperizeInput {
        domain: DomainSpec { r: 2, s: 1 },
        lengths: vec![10, 10],
        codomain: TargetDescriptor::Unitriangular { n: 2 },
        images: vec![vec![1], vec![2]],
        m: int(1),
    }
}

pub fn heisenberg_mod_input(q: i64) -> ProperizeInput {
    ProperizeInput {
        domain: DomainSpec { r: 2, s: 2 },
        lengths: vec![4, 4, 16],
        codomain: TargetDescriptor::UnitriangularMod { n: 3, modulus: q },
        images: vec![vec![1, 0, 0], vec![0, 0, 1]],
        m: int(1),
    }
}

fn pipeline(ledger: &mut ConstantsLedger) -> Result<Outcome> {
    let cfg = ProperizeConfig::default();
    let mut notes = Vec::new();
    let mut pass = true;
    let mut digest = Vec::new();
    let mut cases = vec![("z2_to_z".to_string(), z2_to_z_input(), 0i64)];
    for q in [3, 5, 7] {
        cases.push((format!("heisenberg_mod{q}"), heisenberg_mod_input(q), q));
    }
    for (label, input, q) in cases {
        let res = bilu::properize_input(&input, &cfg)?;
        let target = prog::Target::from_descriptor(&res.codomain)?;
        let recheck = prog::is_proper(&target, &res.coset_progression(), &input.m, cfg.budget)?;
        let mut ok = recheck.proper && res.proper.proper && res.sandwich.hp0_in_xp;
        if q == 0 {
            ok &= res.prog.rank() == 1 && res.h.len() == 1;
        } else {
            let mut n = res.h.len() as i64;
            while n % q == 0 {
                n /= q;
            }
            ok &= n == 1;
        }
        pass &= ok;
        notes.push(format!(
            "{label}: rank {}, |H| {}, k {}",
            res.prog.rank(),
            res.h.len(),
            res.sandwich.xp_power
        ));
        ledger.record(
            "bilu.sandwich",
            &[("fixture", label.clone())],
            res.sandwich.xp_power,
            None,
        );
        ledger.record(
            "bilu.h_power",
            &[("fixture", label.clone())],
            res.sandwich.h_power,
            None,
        );
        digest.push(serde_json::to_string(&res)?);
    }
    Ok(outcome(6, pass, notes.join("; "), digest.join("\n")))
}

fn growth_exponents(ledger: &mut ConstantsLedger) -> Result<Outcome> {
    let (g, s) = growth::heisenberg_standard();
    let h = growth::ball_growth(&g, &s, 12, prog::DEFAULT_BUDGET)?.fit_top_half(1, 12)?;
    let (g, s) = growth::integers_standard();
    let z = growth::ball_growth(&g, &s, 12, prog::DEFAULT_BUDGET)?.fit_top_half(1, 12)?;
    let pass = (3.5..=4.5).contains(&h.slope) && (0.9..=1.1).contains(&z.slope);
    ledger.record(
        "growth.exponent",
        &[("group", "heisenberg".into()), ("n", "12".into())],
        format!("{:.3}", h.slope),
        Some("[3.5,4.5]".into()),
    );
    ledger.record(
        "growth.exponent",
        &[("group", "integers".into()), ("n", "12".into())],
        format!("{:.3}", z.slope),
        Some("[0.9,1.1]".into()),
    );
    Ok(outcome(
        7,
        pass,
        format!("Heisenberg slope {:.3}, Z slope {:.3}", h.slope, z.slope),
        format!("{:.9} {:.9}", h.slope, z.slope),
    ))
}

fn separation(ledger: &mut ConstantsLedger) -> Result<Outcome> {
    let (g, s) = growth::cubic_family(2);
    let c = growth::ball_growth(&g, &s, 24, 1_000_000_000)?;
    let s1 = c.size(1).unwrap_or(0);
    let s2 = c.size(2).unwrap_or(0);
    let hyp = s2 <= 8 * s1;
    let fit = c.fit_top_half(4, 24)?;
    let pass = hyp && fit.slope > 3.5;
    ledger.record(
        "persistence.separation",
        &[("n", "2".into()), ("r", "4..24".into())],
        format!("{:.3}", fit.slope),
        Some(">3.5".into()),
    );
    Ok(outcome(
        8,
        pass,
        format!(
            "|S| = {s1}, |S^2| = {s2} <= 8|S|: {hyp}; exponent on r in [{}, 24] {:.3}",
            fit.lo, fit.slope
        ),
        format!("{:?}", c.points),
    ))
}

fn random_symmetric(rng: &mut ChaCha8Rng, l: i64) -> Vec<Vec<i64>> {
    let mut a = vec![vec![0, 0]];
    for x in -l..=l {
        for y in -l..=l {
            if (x, y) > (0, 0) && rng.gen_bool(0.25) {
                a.push(vec![x, y]);
                a.push(vec![-x, -y]);
            }
        }
    }
    a
}

fn sumsets(ledger: &mut ConstantsLedger) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = rat(1, 4);
    let mut ks = Vec::new();
    for l in [20i64, 40] {
        let mut row = Vec::new();
        while row.len() < 30 {
            let a = random_symmetric(&mut rng, l);
            match growth::rom8_check(&a, &[l, l], &c, 64, prog::DEFAULT_BUDGET) {
                Ok(r) => row.push(r.k),
                Err(Error::NotGenerating { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        ks.push(row);
    }
    let max20 = *ks[0].iter().max().unwrap();
    let max40 = *ks[1].iter().max().unwrap();
    let pass = max20 <= 12 && max40 <= max20.max(12);
    ledger.record(
        "rom8",
        &[("d", "2".into()), ("L", "20".into())],
        max20,
        Some("12".into()),
    );
    ledger.record(
        "rom8",
        &[("d", "2".into()), ("L", "40".into())],
        max40,
        None,
    );
    Ok(outcome(
        9,
        pass,
        format!("max k {max20} at L = 20 and {max40} at L = 40"),
        format!("{ks:?}"),
    ))
}

fn covers(ledger: &mut ConstantsLedger) -> Result<Outcome> {
    let g = growth::cyclic_group(101)?;
    let omega: Vec<Elem> = (-13..=13).map(|x: i64| vec![x.rem_euclid(101)]).collect();
    let r = growth::finite_group_cover(&g, &omega, 1_000_000)?;
    let z12 = growth::cyclic_group(12)?;
    let sub: HashSet<Elem> = [0, 4, 8].iter().map(|&x| vec![x]).collect();
    let f1 = growth::frei_check(&z12, &sub);
    let ut =
        prog::Target::from_descriptor(&TargetDescriptor::UnitriangularMod { n: 3, modulus: 3 })?;
    let center: HashSet<Elem> = (0..3).map(|c| vec![0, c, 0]).collect();
    let f2 = growth::frei_check(&ut, &center);
    let f3 = growth::frei_check(
        &ut,
        &(0..3)
            .flat_map(|a| (0..3).map(move |c| vec![a, c, 0]))
            .collect(),
    );
    let frei_ok = [&f1, &f2, &f3]
        .iter()
        .all(|f| f.triggered && f.square_is_subgroup == Some(true));
    ledger.record(
        "cover",
        &[("group", "Z/101".into()), ("omega", "13".into())],
        r.k,
        Some("4".into()),
    );
    Ok(outcome(
        10,
        r.k == 4 && frei_ok,
        format!(
            "Z/101 cover k = {}; Frei checks on 3 subgroup fixtures: {frei_ok}",
            r.k
        ),
        format!("{:?} {:?} {:?} {:?}", r, f1, f2, f3),
    ))
}

/// The proper fixtures as named inputs, for the CLI.
pub fn named_fixture(name: &str) -> Option<ProperizeInput> {
    match name {
        "z2_to_z" => Some(z2_to_z_input()),
        _ => name
            .strip_prefix("heisenberg_mod")
            .and_then(|q| q.parse().ok())
            .map(heisenberg_mod_input),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!(suite_ids("all").unwrap().len(), 11);
        assert_eq!(suite_ids("criterion7"), Some(vec![7]));
        assert_eq!(suite_ids("criterion12"), None);
    }

    #[test]
    fn quick_criteria() {
        let mut l = ConstantsLedger::new();
        for id in [3, 10] {
            let o = run_criterion(id, &mut l);
            assert!(o.pass, "{}", o.line());
        }
    }
}
