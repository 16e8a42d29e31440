//! Dirichlet forms on level sets and their traces (Schur complements).
//!
//! Two rescaling identities are checked here: the trace of the Basilica
//! Laplacian `L_{n+1}` on the words starting with a fixed letter is `λ·L_n`,
//! and the trace of the Hanoi form at level `n+1` is the level-`n` form with
//! `x` replaced by `3x/(5 + 3x/y)`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::automaton::{Automaton, TreeWord};
use crate::error::{Error, Result};
use crate::matrix::{asymmetry, level_permutations, max_abs, schur_complement, submatrix, Matrix, SchurPartition};

/// Basilica weights `α = (2−√2)/2` and `β = (√2−1)/2`, with scaling `λ = 1/√2`.
pub fn basilica_constants() -> (f64, f64, f64) {
    let s = std::f64::consts::SQRT_2;
    ((2.0 - s) / 2.0, (s - 1.0) / 2.0, 1.0 / s)
}

/// A symmetric matrix with a label for every index.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub matrix: Matrix,
    pub labels: Vec<String>,
}

impl QuadraticForm {
    pub fn new(matrix: Matrix, labels: Vec<String>) -> Result<QuadraticForm> {
        if labels.len() != matrix.nrows() || !matrix.is_square() {
            return Err(Error::DimensionMismatch(labels.len(), matrix.nrows()));
        }
        let skew = asymmetry(&matrix);
        if skew > 1e-12 * max_abs(&matrix).max(1.0) {
            return Err(Error::NotSymmetric(skew));
        }
        Ok(QuadraticForm { matrix, labels })
    }

    pub fn value(&self, f: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(f);
        v.dot(&(&self.matrix * &v))
    }
}

fn level_labels(aut: &Automaton, n: usize) -> Vec<String> {
    let k = aut.arity();
    (0..k.pow(n as u32))
        .map(|v| TreeWord::from_index(v, k, n).to_string())
        .collect()
}

/// `I − Σ_s w_s π_n(s)`. Every weighted generator's inverse must carry the
/// same weight.
pub fn laplacian_form(aut: &Automaton, n: usize, weights: &BTreeMap<String, f64>) -> Result<QuadraticForm> {
    let perms = level_permutations(aut, n);
    let dim = aut.arity().pow(n as u32);
    let mut m = Matrix::identity(dim, dim);
    for (name, &w) in weights {
        let s = aut
            .state_index(name)
            .ok_or_else(|| Error::UnknownState(name.clone()))?;
        let inv = &aut.state(aut.inverse_of(s)).name;
        let w_inv = weights.get(inv).copied().unwrap_or(0.0);
        if w_inv != w {
            return Err(Error::InvalidArgument(format!(
                "weight of `{name}` is {w} but its inverse `{inv}` has {w_inv}"
            )));
        }
        for (v, &t) in perms[s].iter().enumerate() {
            m[(t, v)] -= w;
        }
    }
    QuadraticForm::new(m, level_labels(aut, n))
}

pub fn basilica_weights(alpha: f64, beta: f64) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("a".to_string(), alpha),
        ("a^-1".to_string(), alpha),
        ("b".to_string(), beta),
        ("b^-1".to_string(), beta),
    ])
}

#[derive(Clone, Debug, Serialize)]
pub struct BasilicaTraceReport {
    pub level: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Least-squares `λ` fitting the trace to `L_n`.
    pub fitted_lambda: f64,
    /// `max |T − λ L_n|` over all entries.
    pub full_residual: f64,
    /// Same after projecting both sides onto mean-zero vectors.
    pub mean_zero_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Trace of the Basilica Laplacian `L_{n+1}` on the words starting with
/// `top_letter`, compared with `λ·L_n`. Passes on the mean-zero residual.
pub fn basilica_trace_check(
    aut: &Automaton,
    n: usize,
    alpha: f64,
    beta: f64,
    lambda: f64,
    top_letter: usize,
    tol: f64,
) -> Result<BasilicaTraceReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("trace check needs n ≥ 1".into()));
    }
    let weights = basilica_weights(alpha, beta);
    let big = laplacian_form(aut, n + 1, &weights)?;
    let small = laplacian_form(aut, n, &weights)?;
    let sub = small.matrix.nrows();
    let part = SchurPartition::from_predicate(big.matrix.nrows(), |i| i / sub == top_letter);
    let trace = schur_complement(&big.matrix, &part)?;
    let expected = &small.matrix * lambda;

    let fitted_lambda = trace.dot(&small.matrix) / small.matrix.dot(&small.matrix);
    let full_residual = max_abs(&(&trace - &expected));
    let p = Matrix::identity(sub, sub) - Matrix::from_element(sub, sub, 1.0 / sub as f64);
    let mean_zero_residual = max_abs(&(&p * (&trace - &expected) * &p));
    Ok(BasilicaTraceReport {
        level: n,
        alpha,
        beta,
        lambda,
        fitted_lambda,
        full_residual,
        mean_zero_residual,
        tol,
        passed: mean_zero_residual <= tol,
    })
}

/// The Hanoi form on three copies of `ℓ²(X^n)`: diagonal blocks
/// `y(I − π_n(s_i)) + 2xI` for the generators `s_0, s_1, s_2`, and `−xI`
/// off the diagonal.
pub fn hanoi_form(aut: &Automaton, n: usize, x: f64, y: f64) -> Result<QuadraticForm> {
    let gens = hanoi_generators(aut)?;
    let perms = level_permutations(aut, n);
    let sub = aut.arity().pow(n as u32);
    let mut m = Matrix::zeros(3 * sub, 3 * sub);
    for (i, &s) in gens.iter().enumerate() {
        for j in 0..3 {
            for v in 0..sub {
                if i == j {
                    m[(i * sub + v, i * sub + v)] += y + 2.0 * x;
                } else {
                    m[(i * sub + v, j * sub + v)] -= x;
                }
            }
        }
        for (v, &t) in perms[s].iter().enumerate() {
            m[(i * sub + t, i * sub + v)] -= y;
        }
    }
    let words = level_labels(aut, n);
    let labels = (0..3)
        .flat_map(|c| words.iter().map(move |w| format!("{c}:{w}")))
        .collect();
    QuadraticForm::new(m, labels)
}

fn hanoi_generators(aut: &Automaton) -> Result<[usize; 3]> {
    match (aut.arity(), aut.generators()) {
        (3, [a, b, c]) => Ok([*a, *b, *c]),
        _ => Err(Error::Unsupported(
            aut.name().to_string(),
            "Hanoi form needs three generators on a ternary alphabet".into(),
        )),
    }
}

/// For each generator, the letter it fixes with itself as section.
///
/// Inside copy `i` of `V_{n+1}`, the vertices kept when passing to level `n`
/// are those starting with this letter.
pub fn hanoi_kept_letters(aut: &Automaton) -> Result<[usize; 3]> {
    let gens = hanoi_generators(aut)?;
    let mut out = [0; 3];
    for (i, &s) in gens.iter().enumerate() {
        let st = aut.state(s);
        out[i] = (0..3)
            .find(|&x| st.perm[x] == x && st.sections[x] == s)
            .ok_or_else(|| {
                Error::Unsupported(st.name.clone(), "generator has no self-fixed letter".into())
            })?;
    }
    Ok(out)
}

/// `3x / (5 + 3x/y)`.
pub fn hanoi_parameter_map(x: f64, y: f64) -> f64 {
    3.0 * x / (5.0 + 3.0 * x / y)
}

pub fn hanoi_partition(aut: &Automaton, n: usize) -> Result<SchurPartition> {
    let kept = hanoi_kept_letters(aut)?;
    let sub = 3usize.pow(n as u32);
    let copy = 3 * sub;
    Ok(SchurPartition::from_predicate(3 * copy, |i| {
        let c = i / copy;
        (i % copy) / sub == kept[c]
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct HanoiTraceReport {
    pub level: usize,
    pub x: f64,
    pub y: f64,
    pub mapped_x: f64,
    pub residual: f64,
    pub scale: f64,
    pub tol: f64,
    pub passed: bool,
}

pub fn hanoi_trace_check(aut: &Automaton, n: usize, x: f64, y: f64, tol: f64) -> Result<HanoiTraceReport> {
    let big = hanoi_form(aut, n + 1, x, y)?;
    let trace = schur_complement(&big.matrix, &hanoi_partition(aut, n)?)?;
    let mapped_x = hanoi_parameter_map(x, y);
    let expected = hanoi_form(aut, n, mapped_x, y)?;
    let residual = max_abs(&(&trace - &expected.matrix));
    let scale = max_abs(&expected.matrix).max(1.0);
    Ok(HanoiTraceReport {
        level: n,
        x,
        y,
        mapped_x,
        residual,
        scale,
        tol,
        passed: residual <= tol * scale,
    })
}

/// Conjugate gradients for a symmetric positive definite system.
fn conjugate_gradient(a: &Matrix, b: &nalgebra::DVector<f64>, tol: f64) -> nalgebra::DVector<f64> {
    let mut x = nalgebra::DVector::zeros(b.len());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let stop = tol * tol * rr.max(f64::MIN_POSITIVE);
    for _ in 0..10 * b.len().max(1) {
        if rr <= stop {
            break;
        }
        let ap = a * &p;
        let step = rr / p.dot(&ap);
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        let next = r.dot(&r);
        p = &r + &p * (next / rr);
        rr = next;
    }
    x
}

#[derive(Clone, Debug, Serialize)]
pub struct VariationalReport {
    pub vectors: usize,
    pub max_rel_err: f64,
    /// Smallest energy increase seen when perturbing the harmonic extension.
    pub min_perturbation_gain: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Checks that `fᵀ T f` equals the minimum of `gᵀ M g` over extensions `g`
/// of `f`, where `T` is the Schur complement. The minimiser is found by
/// conjugate gradients on `D h = −C f`, independently of the LU-based
/// complement, and random perturbations of it must not lower the energy.
pub fn harmonic_extension_check<R: Rng>(
    m: &Matrix,
    part: &SchurPartition,
    vectors: usize,
    tol: f64,
    rng: &mut R,
) -> Result<VariationalReport> {
    let trace = schur_complement(m, part)?;
    let c = submatrix(m, &part.bottom, &part.top);
    let d = submatrix(m, &part.bottom, &part.bottom);
    let mut worst = 0.0_f64;
    let mut min_gain = f64::INFINITY;
    for _ in 0..vectors {
        let f = nalgebra::DVector::from_fn(part.top.len(), |_, _| rng.random_range(-1.0..1.0));
        let h = conjugate_gradient(&d, &(-(&c * &f)), 1e-14);
        let energy = |h: &nalgebra::DVector<f64>| {
            let mut g = nalgebra::DVector::zeros(m.nrows());
            for (i, &t) in part.top.iter().enumerate() {
                g[t] = f[i];
            }
            for (i, &b) in part.bottom.iter().enumerate() {
                g[b] = h[i];
            }
            g.dot(&(m * &g))
        };
        let e_min = energy(&h);
        let e_trace = f.dot(&(&trace * &f));
        worst = worst.max((e_min - e_trace).abs() / e_trace.abs().max(1.0));
        let delta = nalgebra::DVector::from_fn(h.len(), |_, _| rng.random_range(-1e-3..1e-3));
        min_gain = min_gain.min(energy(&(&h + delta)) - e_min);
    }
    Ok(VariationalReport {
        vectors,
        max_rel_err: worst,
        min_perturbation_gain: min_gain,
        tol,
        passed: worst <= tol && min_gain >= -tol,
    })
}
