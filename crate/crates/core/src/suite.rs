//! The verification suite run by `selfsim verify`.
//!
//! Every check is deterministic for a given seed. The `Break` hooks perturb
//! one ingredient so that the suite can be seen to fail.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::automaton::{Automaton, GroupWord};
use crate::catalog;
use crate::dirichlet::{
    basilica_constants, basilica_trace_check, basilica_weights, harmonic_extension_check, hanoi_form,
    hanoi_partition, hanoi_trace_check, laplacian_form,
};
use crate::dynamics::semiconjugacy_check;
use crate::error::{Error, Result};
use crate::matrix::{
    action_permutation, adjacency_matrix, asymmetry, level_permutations, permutation_matrix, rep_matrix,
    Matrix, SchurPartition,
};
use crate::oracle::{has_oracle, oracle_spectrum};
use crate::pencil::{verify_det_recursion, Pencil};
use crate::schreier::{build_level_graph, covering_check};
use crate::spectra::{compare_spectra, eigen_spectrum, inclusion_distance};

/// Which ingredient to perturb.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Break {
    /// Scales the first pencil coefficient by 1.001.
    Det,
    /// Shifts the constant term of `f` by 1e-3.
    Semiconj,
    /// Shifts the lowest oracle eigenvalue by 1e-3.
    Oracle,
}

impl std::str::FromStr for Break {
    type Err = Error;
    fn from_str(s: &str) -> Result<Break> {
        match s {
            "det" => Ok(Break::Det),
            "semiconj" => Ok(Break::Semiconj),
            "oracle" => Ok(Break::Oracle),
            _ => Err(Error::InvalidArgument(format!(
                "unknown break target `{s}` (det, semiconj, oracle)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub max_level: usize,
    pub seed: u64,
    pub brk: Option<Break>,
    pub timings: bool,
    pub det_points: usize,
    pub semiconj_samples: usize,
    pub spectrum_tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            max_level: 4,
            seed: 0,
            brk: None,
            timings: false,
            det_points: 100,
            semiconj_samples: 10_000,
            spectrum_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub group: String,
    pub seed: u64,
    pub max_level: usize,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Highest level at which exact representation checks run.
pub fn representation_cap(arity: usize) -> usize {
    if arity <= 2 {
        7
    } else {
        5
    }
}

/// Highest level at which spectra are compared with the closed forms.
pub fn oracle_cap(group: &str) -> usize {
    match group {
        "hanoi" | "tangled" => 6,
        _ => 10,
    }
}

struct Runner<'a> {
    cfg: &'a SuiteConfig,
    checks: Vec<CheckResult>,
}

impl Runner<'_> {
    fn run(&mut self, name: String, f: impl FnOnce() -> Result<(bool, String)>) {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let seconds = self.cfg.timings.then(|| start.elapsed().as_secs_f64());
        self.checks.push(CheckResult {
            name,
            passed,
            detail,
            seconds,
        });
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// Runs every check that applies to `group`. `aut` is the automaton to test;
/// group-specific checks (oracles, pencils, Dirichlet forms) are selected by
/// `group`.
pub fn run_suite(group: &str, aut: &Automaton, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let pencil = if catalog::pencil_ids().contains(&group) {
        let mut spec = catalog::pencil(group)?;
        if cfg.brk == Some(Break::Det) {
            if let Some(t) = spec.terms.first_mut() {
                t.coef = format!("({}) * 1.001", t.coef);
            }
        }
        if cfg.brk == Some(Break::Semiconj) {
            if let Some(m) = spec.map.as_mut() {
                if let Some(c) = m.f.last_mut() {
                    *c += 1e-3;
                }
            }
        }
        Some(Pencil::new(spec, aut)?)
    } else {
        None
    };
    let has_det = pencil.as_ref().is_some_and(|p| p.has_det_recursion());
    let has_map = pencil.as_ref().is_some_and(|p| p.map().is_some());
    match cfg.brk {
        Some(Break::Det) if !has_det => {
            return Err(Error::InvalidArgument(format!("{group} has no determinant recursion to break")))
        }
        Some(Break::Semiconj) if !has_map => {
            return Err(Error::InvalidArgument(format!("{group} has no semi-conjugacy to break")))
        }
        Some(Break::Oracle) if !has_oracle(group) => {
            return Err(Error::InvalidArgument(format!("{group} has no spectrum oracle to break")))
        }
        _ => {}
    }

    let mut r = Runner {
        cfg,
        checks: Vec::new(),
    };
    let k = aut.arity();
    let top = cfg.max_level;
    let rep_top = top.min(representation_cap(k));

    r.run(format!("representation n<={rep_top}"), || {
        for n in 0..=rep_top {
            for &s in aut.generators() {
                let direct = permutation_matrix(&action_permutation(aut, &GroupWord::single(s), n));
                if rep_matrix(aut, s, n) != direct {
                    return Ok((false, format!("{} differs at n={n}", aut.state(s).name)));
                }
            }
        }
        Ok((true, format!("{} generators", aut.generators().len())))
    });

    r.run(format!("inverses n={rep_top}"), || {
        let perms = level_permutations(aut, rep_top);
        for &s in aut.generators() {
            let inv = &perms[aut.inverse_of(s)];
            if perms[s].iter().enumerate().any(|(v, &w)| inv[w] != v) {
                return Ok((false, format!("{} is not inverted", aut.state(s).name)));
            }
        }
        Ok((true, String::new()))
    });

    r.run(format!("schreier graphs n<={rep_top}"), || {
        let mut prev = build_level_graph(aut, aut.generators(), 0);
        for n in 1..=rep_top {
            let g = build_level_graph(aut, aut.generators(), n);
            if !g.is_regular() {
                return Ok((false, format!("Γ_{n} is not |S|-regular")));
            }
            if !covering_check(&g, &prev) {
                return Ok((false, format!("Γ_{n} does not cover Γ_{}", n - 1)));
            }
            if g.is_connected() != aut.is_level_transitive(n) {
                return Ok((false, format!("connectivity disagrees with transitivity at n={n}")));
            }
            let a = adjacency_matrix(aut, n);
            let mut counts = Matrix::zeros(a.nrows(), a.ncols());
            for e in &g.edges {
                counts[(e.target, e.source)] += 1.0;
            }
            if counts != a {
                return Ok((false, format!("adjacency disagrees with Γ_{n}")));
            }
            if asymmetry(&a) != 0.0 {
                return Ok((false, format!("A_{n} is not symmetric")));
            }
            prev = g;
        }
        Ok((true, String::new()))
    });

    if has_oracle(group) {
        let otop = top.min(oracle_cap(group));
        let tol = cfg.spectrum_tol;
        r.run(format!("spectrum oracle n=1..{otop}"), || {
            let mut worst = 0.0_f64;
            let mut prev = None;
            let mut incl = 0.0_f64;
            for n in 1..=otop {
                let computed = eigen_spectrum(&adjacency_matrix(aut, n), n, None)?;
                let mut oracle = oracle_spectrum(group, n)?;
                if cfg.brk == Some(Break::Oracle) {
                    oracle.clusters[0].value += 1e-3;
                }
                let cmp = compare_spectra(&computed, &oracle, tol)?;
                worst = worst.max(cmp.max_distance);
                if !cmp.passed {
                    return Ok((false, format!("n={n}: {}", cmp.problems.join("; "))));
                }
                if let Some(p) = prev.replace(computed.clone()) {
                    incl = incl.max(inclusion_distance(&p, &computed));
                }
            }
            if incl > 1e-7 {
                return Ok((false, format!("Sp(Γ_n) ⊄ Sp(Γ_n+1): distance {incl:.3e}")));
            }
            Ok((true, format!("max distance {worst:.3e}, inclusion {incl:.3e}")))
        });
    }

    if let Some(p) = &pencil {
        let ptop = top.clamp(1, 4);
        let mut rng = r.rng(1);
        r.run(format!("pencil line n=1..{ptop}"), || {
            for n in 1..=ptop {
                let a = adjacency_matrix(aut, n);
                for _ in 0..3 {
                    let t: f64 = rng.random_range(-5.0..5.0);
                    let Some(params) = p.line_params(t) else {
                        return Ok((true, "no line restriction".into()));
                    };
                    let m = p.assemble(n, &params)?;
                    let expected = &a - Matrix::identity(a.nrows(), a.ncols()) * t;
                    if crate::matrix::max_abs(&(m - expected)) > 1e-12 {
                        return Ok((false, format!("pencil differs from A_{n} − tI at t={t}")));
                    }
                }
            }
            Ok((true, String::new()))
        });

        if has_det {
            let dtop = top.min(4);
            for n in 2..=dtop {
                let mut rng = r.rng(10 + n as u64);
                let pts = cfg.det_points;
                r.run(format!("determinant recursion n={n}"), || {
                    let rep = verify_det_recursion(p, n, pts, 5.0, 1e-8, &mut rng)?;
                    Ok((
                        rep.passed,
                        format!(
                            "{} points, {} resampled, max rel err {:.3e}",
                            rep.points, rep.resampled, rep.max_rel_err
                        ),
                    ))
                });
            }
        }
        if let Some(map) = p.map() {
            let mut rng = r.rng(2);
            let samples = cfg.semiconj_samples;
            r.run("semi-conjugacy".to_string(), || {
                let rep = semiconjugacy_check(map, samples, 10.0, 1e-9, &mut rng);
                Ok((
                    rep.passed,
                    format!("{} samples, max rel err {:.3e}", rep.samples, rep.max_rel_err),
                ))
            });
        }
    }

    if group == "basilica" {
        let (al, be, lam) = basilica_constants();
        let btop = top.clamp(1, 4);
        r.run(format!("basilica trace n=1..{btop}"), || {
            let mut worst = 0.0_f64;
            for n in 1..=btop {
                let rep = basilica_trace_check(aut, n, al, be, lam, 1, 1e-9)?;
                worst = worst.max(rep.mean_zero_residual);
                if !rep.passed {
                    return Ok((false, format!("n={n}: mean-zero residual {:.3e}", rep.mean_zero_residual)));
                }
            }
            Ok((true, format!("max mean-zero residual {worst:.3e}")))
        });
        let mut rng = r.rng(3);
        r.run(format!("basilica variational n=1..{btop}"), || {
            for n in 1..=btop {
                let q = laplacian_form(aut, n + 1, &basilica_weights(al, be))?;
                let half = q.matrix.nrows() / 2;
                let part = SchurPartition::from_predicate(q.matrix.nrows(), |i| i >= half);
                let rep = harmonic_extension_check(&q.matrix, &part, 10, 1e-8, &mut rng)?;
                if !rep.passed {
                    return Ok((false, format!("n={n}: rel err {:.3e}", rep.max_rel_err)));
                }
            }
            Ok((true, String::new()))
        });
    }

    if group == "hanoi" {
        let htop = top.saturating_sub(1).min(3);
        let mut rng = r.rng(4);
        r.run(format!("hanoi trace n=0..{htop}"), || {
            let mut worst = 0.0_f64;
            for n in 0..=htop {
                for _ in 0..20 {
                    let x = 5.0 - rng.random_range(0.0..5.0);
                    let y = 5.0 - rng.random_range(0.0..5.0);
                    let rep = hanoi_trace_check(aut, n, x, y, 1e-8)?;
                    worst = worst.max(rep.residual / rep.scale);
                    if !rep.passed {
                        return Ok((false, format!("n={n} (x,y)=({x},{y}): residual {:.3e}", rep.residual)));
                    }
                }
            }
            Ok((true, format!("max scaled residual {worst:.3e}")))
        });
        let mut rng = r.rng(5);
        r.run(format!("hanoi variational n=0..{htop}"), || {
            for n in 0..=htop {
                let x = 5.0 - rng.random_range(0.0..5.0);
                let y = 5.0 - rng.random_range(0.0..5.0);
                let q = hanoi_form(aut, n + 1, x, y)?;
                let rep = harmonic_extension_check(&q.matrix, &hanoi_partition(aut, n)?, 10, 1e-8, &mut rng)?;
                if !rep.passed {
                    return Ok((false, format!("n={n}: rel err {:.3e}", rep.max_rel_err)));
                }
            }
            Ok((true, String::new()))
        });
    }

    let passed = r.checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        group: group.to_string(),
        seed: cfg.seed,
        max_level: cfg.max_level,
        passed,
        checks: r.checks,
    })
}
