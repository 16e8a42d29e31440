//! Closed-form level spectra and limiting KNS masses for the catalog groups
//! whose Schreier spectra are known exactly.
//!
//! These formulas are evaluated independently of the matrix code and serve
//! as reference values for it.

use std::f64::consts::PI;

use crate::dynamics::{backward_orbit, Quadratic};
use crate::error::{Error, Result};
use crate::spectra::SpectrumReport;

/// Tolerance recorded in oracle reports.
pub const ORACLE_TOL: f64 = 1e-12;

pub const ORACLE_GROUPS: [&str; 5] = ["grigorchuk", "hanoi", "tangled", "lamplighter", "dinf"];

pub fn has_oracle(group: &str) -> bool {
    ORACLE_GROUPS.contains(&group)
}

fn unsupported(group: &str) -> Error {
    Error::Unsupported(group.to_string(), "no closed-form spectrum".to_string())
}

/// Adjacency spectrum of `Γ_n` with multiplicities.
pub fn oracle_spectrum(group: &str, n: usize) -> Result<SpectrumReport> {
    let pairs = match group {
        "grigorchuk" => grigorchuk(n),
        "hanoi" => hanoi(n),
        "tangled" => tangled(n),
        "lamplighter" => lamplighter(n),
        "dinf" => dinf(n),
        _ => return Err(unsupported(group)),
    };
    Ok(SpectrumReport::from_clusters(n, pairs, ORACLE_TOL))
}

/// Number of distinct eigenvalues of `Γ_n`, counted from the closed-form
/// statements rather than from the spectra themselves.
pub fn oracle_set_size(group: &str, n: usize) -> Result<usize> {
    Ok(match group {
        "grigorchuk" | "dinf" => 1 << n,
        "hanoi" if n == 0 => 1,
        "hanoi" => 3 * (1 << (n - 1)) - 1,
        "tangled" => (1 << (n + 1)) - 1,
        "lamplighter" => 1 + (2..=n + 1).map(totient).sum::<usize>(),
        _ => return Err(unsupported(group)),
    })
}

/// `{1 ± √(5 + 4cos(2kπ/2^n))} ∖ {−2, 0}`, all simple.
fn grigorchuk(n: usize) -> Vec<(f64, usize)> {
    let m = 1usize << n;
    let mut values = Vec::new();
    for k in 0..m {
        let r = (5.0 + 4.0 * (2.0 * PI * k as f64 / m as f64).cos()).sqrt();
        values.push(1.0 + r);
        values.push(1.0 - r);
    }
    values.sort_by(f64::total_cmp);
    values.dedup_by(|b, a| (*b - *a).abs() < 1e-9);
    values.retain(|&v| (v + 2.0).abs() > 1e-9 && v.abs() > 1e-9);
    values.into_iter().map(|v| (v, 1)).collect()
}

/// `{3} ∪ ⋃_{i<n} f^{-i}(0) ∪ ⋃_{j<n-1} f^{-j}(−2)` with `f = x² − x − 3`.
fn hanoi(n: usize) -> Vec<(f64, usize)> {
    let f = Quadratic::new(1.0, -1.0, -3.0).expect("quadratic");
    let a = |m: usize| (3usize.pow(m as u32 - 1) + 3) / 2;
    let b = |m: usize| (3usize.pow(m as u32 - 1) - 1) / 2;
    let mut out = vec![(3.0, 1)];
    if n >= 1 {
        let zeros = backward_orbit(&f, 0.0, n - 1);
        for (i, generation) in zeros.generations.iter().enumerate() {
            out.extend(generation.iter().map(|&v| (v, a(n - i))));
        }
    }
    if n >= 2 {
        let minus_two = backward_orbit(&f, -2.0, n - 2);
        for (j, generation) in minus_two.generations.iter().enumerate() {
            out.extend(generation.iter().map(|&v| (v, b(n - j))));
        }
    }
    out
}

/// `{4} ∪ ⋃_{i<n} f^{-i}(2) ∪ ⋃_{j<n} f^{-j}(−2)` with `f = x² − 2x − 4`.
fn tangled(n: usize) -> Vec<(f64, usize)> {
    let f = Quadratic::new(1.0, -2.0, -4.0).expect("quadratic");
    let mut out = vec![(4.0, 1)];
    if n >= 1 {
        let twos = backward_orbit(&f, 2.0, n - 1);
        for (i, generation) in twos.generations.iter().enumerate() {
            out.extend(generation.iter().map(|&v| (v, 3usize.pow((n - 1 - i) as u32))));
        }
        let minus_twos = backward_orbit(&f, -2.0, n - 1);
        for generation in &minus_twos.generations {
            out.extend(generation.iter().map(|&v| (v, 1)));
        }
    }
    out
}

/// `{4} ∪ {4cos(pπ/q) : 1 ≤ p < q ≤ n+1, gcd(p,q) = 1}`.
fn lamplighter(n: usize) -> Vec<(f64, usize)> {
    let mut out = vec![(4.0, 1)];
    for q in 2..=n + 1 {
        let mult = ((1usize << n) - (1usize << (n % q))) / ((1usize << q) - 1)
            + usize::from((n + 1).is_multiple_of(q));
        for p in 1..q {
            if gcd(p, q) == 1 {
                out.push((4.0 * (p as f64 * PI / q as f64).cos(), mult));
            }
        }
    }
    out
}

/// Twice the Markov spectrum `{1} ∪ ½⋃_{i<n} f^{-i}(0)`, `f = x² − 2`.
fn dinf(n: usize) -> Vec<(f64, usize)> {
    let f = Quadratic::new(1.0, 0.0, -2.0).expect("quadratic");
    let mut out = vec![(2.0, 1)];
    if n >= 1 {
        let zeros = backward_orbit(&f, 0.0, n - 1);
        out.extend(zeros.generations.iter().flatten().map(|&v| (v, 1)));
    }
    out
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn totient(q: usize) -> usize {
    (1..=q).filter(|&p| gcd(p, q) == 1).count()
}

/// Eigenvalue families whose limiting KNS mass is known.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KnsClass {
    /// A point of `f^{-depth}(root)`.
    BackwardOrbit { depth: usize, root: f64 },
    /// A point `4cos(pπ/q)` with `gcd(p, q) = 1`.
    Cosine { q: usize },
    /// The top eigenvalue `|S|`.
    Top,
}

/// Limit of the counting-measure mass of a single eigenvalue in `class`.
pub fn kns_limit(group: &str, class: KnsClass) -> Result<f64> {
    let bad = || {
        Error::Unsupported(
            format!("{group} {class:?}"),
            "no known limiting mass for this eigenvalue class".to_string(),
        )
    };
    let root_is = |root: f64, target: f64| (root - target).abs() < 1e-12;
    match (group, class) {
        ("hanoi" | "tangled" | "lamplighter", KnsClass::Top) => Ok(0.0),
        ("hanoi", KnsClass::BackwardOrbit { depth, root }) if root_is(root, 0.0) || root_is(root, -2.0) => {
            Ok(1.0 / (2.0 * 3f64.powi(depth as i32 + 1)))
        }
        ("tangled", KnsClass::BackwardOrbit { depth, root }) if root_is(root, 2.0) => {
            Ok(1.0 / 3f64.powi(depth as i32 + 1))
        }
        // Each point of f^{-j}(−2) is simple at every level, so its mass tends to 0.
        ("tangled", KnsClass::BackwardOrbit { root, .. }) if root_is(root, -2.0) => Ok(0.0),
        ("lamplighter", KnsClass::Cosine { q }) if (2..63).contains(&q) => Ok(1.0 / ((1u64 << q) - 1) as f64),
        _ => Err(bad()),
    }
}
