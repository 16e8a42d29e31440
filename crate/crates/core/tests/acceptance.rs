//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always printed:
//! `cargo test -p selfsim --test acceptance`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selfsim::automaton::GroupWord;
use selfsim::catalog;
use selfsim::dirichlet::{
    basilica_constants, basilica_trace_check, basilica_weights, hanoi_form, hanoi_partition, hanoi_trace_check,
    harmonic_extension_check, laplacian_form,
};
use selfsim::dynamics::{coverage_gap, semiconjugacy_check};
use selfsim::matrix::{action_permutation, adjacency_matrix, permutation_matrix, rep_matrix, SchurPartition};
use selfsim::oracle::{oracle_set_size, oracle_spectrum};
use selfsim::pencil::{verify_det_recursion, Pencil};
use selfsim::schreier::{build_level_graph, covering_check};
use selfsim::spectra::{compare_spectra, default_tol, eigen_spectrum, inclusion_distance, kns_counting, SpectrumReport};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn level_range(arity: usize) -> usize {
    if arity == 2 {
        7
    } else {
        5
    }
}

/// Eigensolve `A_n`, compare with the closed form at `tol`, and check that the
/// oracle clusters are separated by more than ten cluster tolerances.
fn matched_spectrum(group: &str, n: usize, tol: f64) -> Result<SpectrumReport, String> {
    let aut = catalog::automaton(group).map_err(|e| e.to_string())?;
    let a = adjacency_matrix(&aut, n);
    let cluster_tol = default_tol(&a);
    let computed = eigen_spectrum(&a, n, Some(cluster_tol)).map_err(|e| e.to_string())?;
    let oracle = oracle_spectrum(group, n).map_err(|e| e.to_string())?;
    ensure(oracle.min_gap() > 10.0 * cluster_tol, || {
        format!("{group} n={n}: oracle gap {:.2e} too small for tol {cluster_tol:.1e}", oracle.min_gap())
    })?;
    let cmp = compare_spectra(&computed, &oracle, tol).map_err(|e| e.to_string())?;
    ensure(cmp.passed, || format!("{group} n={n}: {}", cmp.problems.join("; ")))?;
    let size = oracle_set_size(group, n).map_err(|e| e.to_string())?;
    ensure(computed.clusters.len() == size, || {
        format!("{group} n={n}: {} distinct eigenvalues, closed form says {size}", computed.clusters.len())
    })?;
    Ok(computed)
}

fn within_bands(values: &[f64], bands: &[(f64, f64)], tol: f64) -> bool {
    values
        .iter()
        .all(|&v| bands.iter().any(|&(lo, hi)| v >= lo - tol && v <= hi + tol))
}

fn c1_grigorchuk() -> Outcome {
    let bands = [(-2.0, 0.0), (2.0, 4.0)];
    let mut all = Vec::new();
    let mut n10_seconds = 0.0;
    for n in 1..=10 {
        let start = Instant::now();
        let r = matched_spectrum("grigorchuk", n, 1e-8)?;
        if n == 10 {
            n10_seconds = start.elapsed().as_secs_f64();
        }
        ensure(r.clusters.len() == 1 << n && r.clusters.iter().all(|c| c.multiplicity == 1), || {
            format!("n={n}: eigenvalues not all simple")
        })?;
        ensure(within_bands(&r.values(), &bands, 1e-8), || format!("n={n}: eigenvalue outside bands"))?;
        all.extend(r.values());
    }
    // sqrt(5+4cosθ) has slope at most 1 in θ, so consecutive level-10
    // eigenvalues are at most 2π/1024 apart: gap ≤ π/1024 ≈ 0.0031.
    let gap = coverage_gap(&all, -2.0, 0.0).max(coverage_gap(&all, 2.0, 4.0));
    ensure(gap <= 0.02, || format!("density gap {gap:.4} > 0.02"))?;
    ensure(n10_seconds <= 60.0, || format!("n=10 took {n10_seconds:.1}s"))?;
    Ok(format!("n=1..10 simple spectra, density gap {gap:.4}"))
}

fn c2_hanoi() -> Outcome {
    let mut n6_seconds = 0.0;
    for n in 1..=6 {
        let start = Instant::now();
        let r = matched_spectrum("hanoi", n, 1e-8)?;
        if n == 6 {
            n6_seconds = start.elapsed().as_secs_f64();
        }
        ensure(r.clusters.len() == 3 * (1 << (n - 1)) - 1, || format!("n={n}: set size"))?;
    }
    ensure(n6_seconds <= 120.0, || format!("n=6 took {n6_seconds:.1}s"))?;
    Ok(format!("n=1..6 with multiplicities, n=6 in {n6_seconds:.2}s"))
}

fn c3_tangled() -> Outcome {
    for n in 1..=6 {
        let r = matched_spectrum("tangled", n, 1e-8)?;
        let top = r.clusters.last().ok_or("empty spectrum")?;
        ensure((top.value - 4.0).abs() < 1e-8 && top.multiplicity == 1, || format!("n={n}: eigenvalue 4"))?;
        let two = r
            .clusters
            .iter()
            .find(|c| (c.value - 2.0).abs() < 1e-8)
            .ok_or_else(|| format!("n={n}: 2 missing"))?;
        ensure(two.multiplicity == 3usize.pow(n as u32 - 1), || format!("n={n}: multiplicity of 2"))?;
        let mass = kns_counting(&r).mass_at(2.0, 1e-8);
        ensure(mass == 1.0 / 3.0, || format!("n={n}: KNS mass of 2 is {mass}"))?;
    }
    Ok("n=1..6, mass of 2 is exactly 1/3".into())
}

fn c4_lamplighter() -> Outcome {
    for n in 1..=10 {
        let r = matched_spectrum("lamplighter", n, 1e-8)?;
        ensure(within_bands(&r.values(), &[(-4.0, 4.0)], 1e-8), || format!("n={n}: outside [-4,4]"))?;
    }
    Ok("n=1..10".into())
}

fn c5_dinf() -> Outcome {
    let aut = catalog::automaton("dinf").map_err(|e| e.to_string())?;
    let s = aut.generators().len() as f64;
    for n in 1..=10 {
        let markov = adjacency_matrix(&aut, n) / s;
        let computed = eigen_spectrum(&markov, n, None).map_err(|e| e.to_string())?;
        let oracle = oracle_spectrum("dinf", n).map_err(|e| e.to_string())?.scaled(1.0 / s);
        let cmp = compare_spectra(&computed, &oracle, 1e-8).map_err(|e| e.to_string())?;
        ensure(cmp.passed, || format!("n={n}: {}", cmp.problems.join("; ")))?;
    }
    Ok("Markov spectra n=1..10".into())
}

fn c6_representation() -> Outcome {
    let mut count = 0;
    for id in catalog::ids() {
        let aut = catalog::automaton(id).map_err(|e| e.to_string())?;
        for n in 0..=level_range(aut.arity()) {
            for &s in aut.generators() {
                let direct = permutation_matrix(&action_permutation(&aut, &GroupWord::single(s), n));
                ensure(rep_matrix(&aut, s, n) == direct, || {
                    format!("{id} {} n={n}", aut.state(s).name)
                })?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} generator/level pairs equal"))
}

fn c7_determinants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    for id in ["grigorchuk", "hanoi"] {
        let aut = catalog::automaton(id).map_err(|e| e.to_string())?;
        let pencil = Pencil::new(catalog::pencil(id).map_err(|e| e.to_string())?, &aut).map_err(|e| e.to_string())?;
        for n in 2..=4 {
            let rep = verify_det_recursion(&pencil, n, 100, 5.0, 1e-8, &mut rng).map_err(|e| e.to_string())?;
            worst = worst.max(rep.max_rel_err);
            ensure(rep.passed, || format!("{id} n={n}: max rel err {:.3e}", rep.max_rel_err))?;
        }
    }
    Ok(format!("max rel err {worst:.2e}"))
}

fn c8_semiconjugacy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0_f64;
    for id in ["grigorchuk", "hanoi"] {
        let aut = catalog::automaton(id).map_err(|e| e.to_string())?;
        let pencil = Pencil::new(catalog::pencil(id).map_err(|e| e.to_string())?, &aut).map_err(|e| e.to_string())?;
        let map = pencil.map().ok_or("pencil has no map")?;
        let rep = semiconjugacy_check(map, 10_000, 10.0, 1e-9, &mut rng);
        worst = worst.max(rep.max_rel_err);
        ensure(rep.passed, || format!("{id}: max rel err {:.3e}", rep.max_rel_err))?;
    }
    Ok(format!("10^4 samples each, max rel err {worst:.2e}"))
}

fn c9_covering() -> Outcome {
    let mut worst = 0.0_f64;
    for id in catalog::ids() {
        let aut = catalog::automaton(id).map_err(|e| e.to_string())?;
        let mut prev_graph = build_level_graph(&aut, aut.generators(), 0);
        let mut prev_spec = eigen_spectrum(&adjacency_matrix(&aut, 0), 0, None).map_err(|e| e.to_string())?;
        for n in 1..=level_range(aut.arity()) {
            let g = build_level_graph(&aut, aut.generators(), n);
            ensure(covering_check(&g, &prev_graph), || format!("{id}: Γ_{n} → Γ_{}", n - 1))?;
            let spec = eigen_spectrum(&adjacency_matrix(&aut, n), n, None).map_err(|e| e.to_string())?;
            let d = inclusion_distance(&prev_spec, &spec);
            worst = worst.max(d);
            ensure(d <= 1e-7, || format!("{id}: Sp(Γ_{}) ⊄ Sp(Γ_{n}), distance {d:.2e}", n - 1))?;
            prev_graph = g;
            prev_spec = spec;
        }
    }
    Ok(format!("all catalog groups, inclusion distance {worst:.2e}"))
}

fn c10_dirichlet() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let basilica = catalog::automaton("basilica").map_err(|e| e.to_string())?;
    let (al, be, lam) = basilica_constants();
    let mut b_worst = 0.0_f64;
    let mut full_worst = 0.0_f64;
    let mut var_worst = 0.0_f64;
    for n in 1..=4 {
        let rep = basilica_trace_check(&basilica, n, al, be, lam, 1, 1e-9).map_err(|e| e.to_string())?;
        b_worst = b_worst.max(rep.mean_zero_residual);
        full_worst = full_worst.max(rep.full_residual);
        ensure(rep.passed, || format!("basilica n={n}: residual {:.2e}", rep.mean_zero_residual))?;
        let q = laplacian_form(&basilica, n + 1, &basilica_weights(al, be)).map_err(|e| e.to_string())?;
        let half = q.matrix.nrows() / 2;
        let part = SchurPartition::from_predicate(q.matrix.nrows(), |i| i >= half);
        let v = harmonic_extension_check(&q.matrix, &part, 10, 1e-8, &mut rng).map_err(|e| e.to_string())?;
        var_worst = var_worst.max(v.max_rel_err);
        ensure(v.passed, || format!("basilica variational n={n}: {:.2e}", v.max_rel_err))?;
    }
    let hanoi = catalog::automaton("hanoi").map_err(|e| e.to_string())?;
    let mut h_worst = 0.0_f64;
    for n in 0..=3 {
        for _ in 0..20 {
            // Uniform on (0, 5].
            let x = 5.0 - rng.random_range(0.0..5.0);
            let y = 5.0 - rng.random_range(0.0..5.0);
            let rep = hanoi_trace_check(&hanoi, n, x, y, 1e-8).map_err(|e| e.to_string())?;
            h_worst = h_worst.max(rep.residual / rep.scale);
            ensure(rep.passed, || format!("hanoi n={n} ({x},{y}): residual {:.2e}", rep.residual))?;
            let q = hanoi_form(&hanoi, n + 1, x, y).map_err(|e| e.to_string())?;
            let part = hanoi_partition(&hanoi, n).map_err(|e| e.to_string())?;
            let v = harmonic_extension_check(&q.matrix, &part, 10, 1e-8, &mut rng).map_err(|e| e.to_string())?;
            var_worst = var_worst.max(v.max_rel_err);
            ensure(v.passed, || format!("hanoi variational n={n}: {:.2e}", v.max_rel_err))?;
        }
    }
    Ok(format!(
        "basilica mean-zero {b_worst:.1e} (full {full_worst:.1e}), hanoi {h_worst:.1e}, variational {var_worst:.1e}"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("C1 grigorchuk spectra", c1_grigorchuk),
        ("C2 hanoi spectra", c2_hanoi),
        ("C3 tangled odometer spectra", c3_tangled),
        ("C4 lamplighter spectra", c4_lamplighter),
        ("C5 infinite dihedral Markov spectra", c5_dinf),
        ("C6 representation equivalence", c6_representation),
        ("C7 determinant recursions", c7_determinants),
        ("C8 semi-conjugacies", c8_semiconjugacy),
        ("C9 coverings and spectrum inclusion", c9_covering),
        ("C10 Dirichlet traces", c10_dirichlet),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
