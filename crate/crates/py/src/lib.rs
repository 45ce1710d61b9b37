//! Python bindings. Structured results come back as JSON strings.

use nilprog::bilu::{self, ProperizeConfig, ProperizeInput};
use nilprog::growth;
use nilprog::hall::{FreeNilpotentGroup, HallBasis};
use nilprog::nilalg;
use nilprog::rational::{parse_rat, rat_to_string, Rat};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(nilprog_py, HypothesisViolation, PyException);

fn to_py(e: nilprog::Error) -> PyErr {
    if e.is_hypothesis_violation() {
        HypothesisViolation::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn json(v: &impl serde::Serialize) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn rats(xs: &[String]) -> PyResult<Vec<Rat>> {
    xs.iter()
        .map(|s| parse_rat(s).map_err(|_| PyValueError::new_err(format!("not a rational: {s:?}"))))
        .collect()
}

/// Hall basis of the free nilpotent group of the given rank and step, as JSON.
#[pyfunction]
fn hall_basis(rank: usize, step: usize) -> PyResult<String> {
    json(&HallBasis::build(rank, step).map_err(to_py)?)
}

/// Collected Mal'cev coordinates of a word given as `(generator, exponent)` pairs, generators 1-based.
#[pyfunction]
fn collect(rank: usize, step: usize, word: Vec<(usize, i64)>) -> PyResult<Vec<i64>> {
    let g = FreeNilpotentGroup::from_rank_step(rank, step).map_err(to_py)?;
    if let Some(&(i, _)) = word.iter().find(|(i, _)| *i == 0 || *i > rank) {
        return Err(PyValueError::new_err(format!(
            "generator index {i} out of range"
        )));
    }
    g.collect(&word).map_err(to_py)
}

/// `log(exp x exp y)` in the free nilpotent Lie algebra; coordinates are rational strings.
#[pyfunction]
fn bch(rank: usize, step: usize, x: Vec<String>, y: Vec<String>) -> PyResult<Vec<String>> {
    let ctx = nilalg::free_nilpotent_lie(&HallBasis::build(rank, step).map_err(to_py)?);
    let (x, y) = (rats(&x)?, rats(&y)?);
    if x.len() != ctx.dim() || y.len() != ctx.dim() {
        return Err(PyValueError::new_err(format!(
            "vectors must have {} coordinates",
            ctx.dim()
        )));
    }
    Ok(ctx.bch(&x, &y).iter().map(rat_to_string).collect())
}

#[pyfunction]
#[pyo3(signature = (input, seed=0, budget=10_000_000, abelian=false))]
fn properize(input: &str, seed: u64, budget: u64, abelian: bool) -> PyResult<String> {
    let inp: ProperizeInput =
        serde_json::from_str(input).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let cfg = ProperizeConfig {
        seed,
        budget,
        ..ProperizeConfig::default()
    };
    let res = if abelian {
        bilu::abelian_properize(&inp, &cfg)
    } else {
        bilu::properize_input(&inp, &cfg)
    };
    json(&res.map_err(to_py)?)
}

/// Ball sizes for the standard generators of `"integers"` or `"heisenberg"`, as CSV.
#[pyfunction]
#[pyo3(signature = (group, nmax, budget=10_000_000))]
fn grow(group: &str, nmax: u32, budget: u64) -> PyResult<String> {
    let (g, s) = match group {
        "integers" => growth::integers_standard(),
        "heisenberg" => growth::heisenberg_standard(),
        other => return Err(PyValueError::new_err(format!("unknown group {other:?}"))),
    };
    Ok(growth::ball_growth(&g, &s, nmax, budget)
        .map_err(to_py)?
        .to_csv())
}

#[pymodule]
fn nilprog_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add(
        "HypothesisViolation",
        m.py().get_type::<HypothesisViolation>(),
    )?;
    m.add_function(wrap_pyfunction!(hall_basis, m)?)?;
    m.add_function(wrap_pyfunction!(collect, m)?)?;
    m.add_function(wrap_pyfunction!(bch, m)?)?;
    m.add_function(wrap_pyfunction!(properize, m)?)?;
    m.add_function(wrap_pyfunction!(grow, m)?)?;
    Ok(())
}
