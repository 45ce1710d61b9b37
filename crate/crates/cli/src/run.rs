use std::path::Path;

use nilprog::bilu::{self, ProperizeConfig, ProperizeInput};
use nilprog::growth::{self, GeneratingSet};
use nilprog::hall::{FreeNilpotentGroup, HallBasis};
use nilprog::intlin;
use nilprog::latgeo::{self, BoxMode, LatticeBasis, PolytopeNorm};
use nilprog::ledger::ConstantsLedger;
use nilprog::nilalg::{self, LieContext};
use nilprog::prog::Target;
use nilprog::rational::{rat_to_string, Rat, RatMatrix};
use nilprog::verify;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::args::{Algebra, Command, ExperimentManifest, Family, Group, Mode};
use crate::error::CliError;
use crate::parse;

fn to_json(v: &impl Serialize) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn rats(v: &[Rat]) -> Vec<String> {
    v.iter().map(rat_to_string).collect()
}

/// Runs a manifest and returns the text to emit.
pub fn execute(m: &ExperimentManifest) -> Result<String, CliError> {
    match &m.command {
        Command::Hall { rank, step, table } => hall(*rank, *step, *table),
        Command::Collect { rank, step, word } => {
            let g = FreeNilpotentGroup::from_rank_step(*rank, *step)?;
            let w = parse::word(word)?;
            if let Some(&(i, _)) = w.iter().find(|(i, _)| *i > *rank) {
                return Err(CliError::Usage(format!(
                    "generator x{i} exceeds rank {rank}"
                )));
            }
            let coords = g.collect(&w)?;
            to_json(&json!({ "rank": rank, "step": step, "word": word, "coords": coords }))
        }
        Command::Bch { rank, step, x, y } => bch(*rank, *step, x.as_deref(), y.as_deref()),
        Command::Box {
            lengths,
            algebra,
            rank,
            step,
            quotient,
            mode,
            prescale,
        } => nil_box(
            lengths,
            *algebra,
            *rank,
            *step,
            quotient.as_deref(),
            *mode,
            *prescale,
            m.budget,
        ),
        Command::Minima { basis, lengths } => {
            let lat = LatticeBasis::new(parse::columns(basis)?)?;
            let body = PolytopeNorm::axis_box(&parse::rat_list(lengths)?).compile()?;
            let rep = latgeo::successive_minima(&body, &lat, m.budget)?;
            let mahler = latgeo::mahler_basis(&rep, &lat)?;
            to_json(&json!({ "minima": rep, "mahler": mahler }))
        }
        Command::Properize {
            input,
            m: m_override,
            probes,
            abelian,
        } => {
            let mut inp: ProperizeInput = read_json(input)?;
            if let Some(text) = m_override {
                inp.m = parse::rat(text)?;
            }
            let cfg = ProperizeConfig {
                budget: m.budget,
                seed: m.seed,
                probes: *probes,
                ..ProperizeConfig::default()
            };
            let res = if *abelian {
                bilu::abelian_properize(&inp, &cfg)?
            } else {
                bilu::properize_input(&inp, &cfg)?
            };
            to_json(&res)
        }
        Command::Grow {
            group,
            gens,
            modulus,
            nmax,
        } => {
            let (g, s) = generating_set(*group, gens, *modulus)?;
            Ok(growth::ball_growth(&g, &s, *nmax, m.budget)?.to_csv())
        }
        Command::Persist {
            family,
            ns,
            big_m,
            big_d,
            rmax,
        } => {
            let ns = parse::u32_list(ns)?;
            let fam = |n: i64| match family {
                Family::Cubic => growth::cubic_family(n),
                Family::Heisenberg => {
                    let (g, s) = growth::heisenberg_box(n, n, n);
                    let s = s.symmetrize(&g).expect("valid generators");
                    (g, s)
                }
            };
            let rows = growth::persistence_harness(
                fam,
                &ns,
                &parse::rat(big_m)?,
                &parse::rat(big_d)?,
                *rmax,
                m.budget,
            )?;
            let mut out = String::from(
                "n,s_size,sn_size,hypothesis,slope,residual,lo,hi,floor_d,exceeds_floor\n",
            );
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{:.6},{:.6},{},{},{},{}\n",
                    r.n,
                    r.s_size,
                    r.sn_size,
                    r.hypothesis,
                    r.fit.slope,
                    r.fit.residual,
                    r.fit.lo,
                    r.fit.hi,
                    r.floor_d,
                    r.exceeds_floor
                ));
            }
            Ok(out)
        }
        Command::Rom8 {
            points,
            lengths,
            density,
            c,
            max_k,
        } => {
            let lengths = parse::int_list(lengths)?;
            let a: Vec<Vec<i64>> = match points {
                Some(p) => read_json(p)?,
                None => random_symmetric(&lengths, &parse::rat(density)?, m.seed),
            };
            let rep = growth::rom8_check(&a, &lengths, &parse::rat(c)?, *max_k, m.budget)?;
            to_json(&rep)
        }
        Command::Verify { suite } => {
            let ids = verify::suite_ids(suite)
                .ok_or_else(|| CliError::Usage(format!("unknown suite {suite:?}")))?;
            let mut ledger = ConstantsLedger::new();
            let outcomes = verify::run_suite(&ids, &mut ledger);
            let mut out: String = outcomes.iter().map(|o| o.line() + "\n").collect();
            let failed = outcomes.iter().filter(|o| !o.pass).count();
            if failed > 0 {
                print!("{out}");
                return Err(CliError::SuiteFailed {
                    failed,
                    total: outcomes.len(),
                });
            }
            if !ledger.entries.is_empty() {
                out.push_str(&ledger.to_json());
                out.push('\n');
            }
            Ok(out)
        }
    }
}

fn hall(rank: usize, step: usize, table: bool) -> Result<String, CliError> {
    let basis = HallBasis::build(rank, step)?;
    if !table {
        return to_json(&basis);
    }
    let g = FreeNilpotentGroup::new(basis.clone())?;
    let t = g.commutator_table();
    let entries: Vec<_> = t
        .sorted()
        .into_iter()
        .map(|((i, j, ei, ej), v)| json!({ "i": i, "j": j, "ei": ei, "ej": ej, "coords": v }))
        .collect();
    to_json(&json!({ "basis": basis, "commutators": entries }))
}

fn bch(rank: usize, step: usize, x: Option<&str>, y: Option<&str>) -> Result<String, CliError> {
    let ctx = nilalg::free_nilpotent_lie(&HallBasis::build(rank, step)?);
    let d = ctx.dim();
    let (Some(x), Some(y)) = (x, y) else {
        let series = nilalg::bch_series(step)?;
        return to_json(&json!({
            "structure": ctx.structure_json(),
            "series": series.terms(),
            "denominator_lcm": series.denominator_lcm().to_string(),
        }));
    };
    let (x, y) = (parse::rat_list(x)?, parse::rat_list(y)?);
    if x.len() != d || y.len() != d {
        return Err(CliError::Usage(format!(
            "vectors must have {d} coordinates"
        )));
    }
    to_json(&json!({
        "x": rats(&x),
        "y": rats(&y),
        "bch": rats(&ctx.bch(&x, &y)),
        "bracket": rats(&ctx.bracket(&x, &y)),
        "group_commutator": rats(&ctx.group_commutator(&x, &y)),
        "second_kind": rats(&ctx.second_kind_from_first(&ctx.bch(&x, &y))?),
    }))
}

#[allow(clippy::too_many_arguments)]
fn nil_box(
    lengths: &str,
    algebra: Algebra,
    rank: Option<usize>,
    step: Option<usize>,
    quotient: Option<&str>,
    mode: Mode,
    prescale: bool,
    budget: u64,
) -> Result<String, CliError> {
    let lengths = parse::rat_list(lengths)?;
    let d = lengths.len();
    let ctx = match algebra {
        Algebra::Abelian => LieContext::abelian(d),
        Algebra::Free => {
            let (Some(r), Some(s)) = (rank, step) else {
                return Err(CliError::Usage(
                    "--rank and --step are required for the free algebra".into(),
                ));
            };
            nilalg::free_nilpotent_lie(&HallBasis::build(r, s)?)
        }
    };
    if ctx.dim() != d {
        return Err(CliError::Usage(format!(
            "expected {} lengths, got {d}",
            ctx.dim()
        )));
    }
    let change = match quotient {
        None => None,
        Some(z) => {
            let z = parse::int_list(z)?;
            if z.len() != d {
                return Err(CliError::Usage(format!(
                    "quotient vector needs {d} coordinates"
                )));
            }
            let cols = intlin::complete_primitive_to_basis(&intlin::big(&z))?;
            Some(RatMatrix::from_columns(
                &cols
                    .iter()
                    .map(|c| c.iter().map(|x| Rat::from_integer(x.clone())).collect())
                    .collect::<Vec<_>>(),
            ))
        }
    };
    let (ctx, dim) = match &change {
        None => (ctx, d),
        Some(u) => (ctx.change_basis(u)?.quotient_leading(1)?, d - 1),
    };
    let lattice = LatticeBasis::standard(dim);
    let mode = match mode {
        Mode::Strict => BoxMode::Strict,
        Mode::Relaxed => BoxMode::Relaxed,
    };
    let mut scale = 1i64;
    loop {
        let ls: Vec<Rat> = lengths
            .iter()
            .map(|l| l * Rat::from_integer(scale.into()))
            .collect();
        let spec = match &change {
            None => PolytopeNorm::axis_box(&ls),
            Some(u) => PolytopeNorm::project_box(LatticeBasis::standard(d).vectors, ls, u)?,
        };
        let body = spec.compile()?;
        match latgeo::nilp_box_approx(&body, &lattice, &ctx, mode, budget) {
            Ok(nb) => return to_json(&json!({ "body": spec, "scale": scale, "box": nb })),
            Err(nilprog::Error::NotThick { .. }) if prescale && scale < 1 << 20 => scale *= 2,
            Err(e) => return Err(e.into()),
        }
    }
}

fn generating_set(
    group: Group,
    gens: &str,
    modulus: Option<i64>,
) -> Result<(Target, GeneratingSet), CliError> {
    let (kind, arg) = gens.split_once(':').unwrap_or((gens, ""));
    let target = match group {
        Group::Integers => Target::integers(),
        Group::Heisenberg => Target::heisenberg(),
        Group::Cyclic => {
            let n = modulus
                .ok_or_else(|| CliError::Usage("--modulus is required for cyclic groups".into()))?;
            growth::cyclic_group(n)?
        }
    };
    let unsupported = || {
        CliError::Usage(format!(
            "generating set {gens:?} is not available for {group:?}"
        ))
    };
    match (group, kind) {
        (Group::Integers, "standard") => Ok(growth::integers_standard()),
        (Group::Heisenberg, "standard") => Ok(growth::heisenberg_standard()),
        (Group::Heisenberg, "box") => {
            let v = parse::int_list(arg)?;
            let [a, b, c] = v[..] else {
                return Err(CliError::Usage(
                    "box generators need three half-widths".into(),
                ));
            };
            let (g, s) = growth::heisenberg_box(a, b, c);
            let s = s.symmetrize(&g)?;
            Ok((g, s))
        }
        (Group::Heisenberg, "cubic") => {
            let n: i64 = arg
                .parse()
                .map_err(|_| CliError::Usage(format!("bad family parameter {arg:?}")))?;
            Ok(growth::cubic_family(n))
        }
        (Group::Integers | Group::Cyclic, "interval" | "standard") => {
            let k: i64 = if kind == "standard" {
                1
            } else {
                arg.parse()
                    .map_err(|_| CliError::Usage(format!("bad interval radius {arg:?}")))?
            };
            let s = GeneratingSet::new(&target, (-k..=k).map(|x| vec![x]))?;
            Ok((target, s))
        }
        _ => Err(unsupported()),
    }
}

/// Symmetric set in the box containing 0, each `±p` pair drawn independently.
pub fn random_symmetric(lengths: &[i64], p: &Rat, seed: u64) -> Vec<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prob = nilprog::rational::to_f64(p).clamp(0.0, 1.0);
    let total: u64 = nilprog::prog::grid_size(lengths, u64::MAX).unwrap_or(0);
    let mut a = vec![vec![0; lengths.len()]];
    for idx in 0..total {
        let x = nilprog::prog::decode_rank(idx, lengths);
        let positive = x.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0);
        if positive && rng.gen_bool(prob) {
            a.push(x.iter().map(|c| -c).collect());
            a.push(x);
        }
    }
    a
}
