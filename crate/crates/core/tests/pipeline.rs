use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use selfsim::automaton::TreeWord;
use selfsim::catalog;
use selfsim::dynamics::{complex_backward_cloud, coverage_gap, julia_approx_1d, ComplexMap, Quadratic};
use selfsim::matrix::{action_permutation, adjacency_matrix};
use selfsim::nucleus::check_contracting;
use selfsim::oracle::{kns_limit, KnsClass};
use selfsim::schreier::{build_level_graph, covering_check};
use selfsim::spectra::{eigen_spectrum, kns_counting};
use selfsim::suite::{run_suite, Break, SuiteConfig};

#[test]
fn contracting_groups_have_section_closed_nuclei() {
    for id in ["odometer", "grigorchuk", "basilica", "hanoi", "tangled", "dinf"] {
        let aut = catalog::automaton(id).unwrap();
        let result = check_contracting(&aut, 4);
        let nucleus = result.nucleus().unwrap_or_else(|| panic!("{id}: {result:?}"));
        assert!(nucleus.iter().any(|g| g.is_empty()), "{id}: identity missing");
        // Compare elements through their action on level 6.
        let perm = |g: &selfsim::GroupWord| action_permutation(&aut, g, 6);
        let perms: Vec<_> = nucleus.iter().map(perm).collect();
        for g in nucleus {
            for x in 0..aut.arity() {
                let s = aut.section(g, &TreeWord::new(vec![x]));
                assert!(perms.contains(&perm(&s)), "{id}: section of {} leaves the nucleus", aut.format_word(g));
            }
        }
    }
}

#[test]
fn lamplighter_is_not_contracting() {
    let aut = catalog::automaton("lamplighter").unwrap();
    assert!(!check_contracting(&aut, 4).is_contracting());
}

#[test]
fn coverings_and_connectivity_up_to_level_seven() {
    for id in catalog::ids() {
        let aut = catalog::automaton(id).unwrap();
        let top = if aut.arity() == 2 { 7 } else { 5 };
        let mut prev = build_level_graph(&aut, aut.generators(), 0);
        for n in 1..=top {
            let g = build_level_graph(&aut, aut.generators(), n);
            assert!(g.is_regular(), "{id} {n}");
            assert_eq!(g.edges.len(), aut.generators().len() * aut.arity().pow(n as u32));
            assert!(covering_check(&g, &prev), "{id} {n}");
            assert_eq!(g.is_connected(), aut.is_level_transitive(n), "{id} {n}");
            prev = g;
        }
    }
}

#[test]
fn spectra_lie_in_expected_ranges() {
    let ranges = [("grigorchuk", -2.0, 4.0), ("lamplighter", -4.0, 4.0), ("basilica", -4.0, 4.0), ("hanoi", -2.0, 3.0)];
    for (id, lo, hi) in ranges {
        let aut = catalog::automaton(id).unwrap();
        for n in 1..=5 {
            let r = eigen_spectrum(&adjacency_matrix(&aut, n), n, None).unwrap();
            for v in r.values() {
                assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{id} n={n}: {v}");
            }
        }
    }
}

#[test]
fn hanoi_kns_mass_approaches_limit() {
    let aut = catalog::automaton("hanoi").unwrap();
    let limit = kns_limit("hanoi", KnsClass::BackwardOrbit { depth: 0, root: 0.0 }).unwrap();
    let mut prev = f64::INFINITY;
    for n in 2..=6 {
        let r = eigen_spectrum(&adjacency_matrix(&aut, n), n, None).unwrap();
        let err = (kns_counting(&r).mass_at(0.0, 1e-8) - limit).abs();
        assert!(err < prev, "n={n}: {err} did not shrink");
        prev = err;
    }
    assert!(prev < 1e-2);
}

#[test]
fn julia_sets_of_real_quadratics() {
    let chebyshev = Quadratic::new(1.0, 0.0, -2.0).unwrap();
    let sample = julia_approx_1d(&chebyshev, 0.0, 14);
    assert!(sample.isolated.iter().all(|x| x.abs() <= 2.0 + 1e-12));
    assert!(coverage_gap(&sample.isolated, -2.0, 2.0) < 1e-3);

    let hanoi = Quadratic::new(1.0, -1.0, -3.0).unwrap();
    let sample = julia_approx_1d(&hanoi, 0.0, 12);
    assert!(sample.isolated.iter().all(|&x| (-2.0 - 1e-12..=3.0 + 1e-12).contains(&x)));
    assert!(!sample.closure_sample.is_empty());
}

#[test]
fn complex_clouds_stay_on_their_julia_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let basilica = ComplexMap::parse("basilica").unwrap();
    let cloud = complex_backward_cloud(&basilica, Complex64::new(0.0, 0.0), 2000, 50, &mut rng);
    assert!(cloud.iter().all(|z| z.norm() <= 1.7));

    let interval = ComplexMap::parse("interval").unwrap();
    let cloud = complex_backward_cloud(&interval, Complex64::new(0.3, 0.0), 2000, 50, &mut rng);
    assert!(cloud.iter().all(|z| z.re.abs() <= 2.0 + 1e-9 && z.im.abs() <= 1e-6));

    let cubic = ComplexMap::parse("cubic").unwrap();
    let cloud = complex_backward_cloud(&cubic, Complex64::new(0.5, 0.2), 500, 50, &mut rng);
    for w in cloud.windows(2) {
        assert!((cubic.eval(w[1]) - w[0]).norm() < 1e-9);
    }
}

#[test]
fn suite_passes_and_breaks_are_caught() {
    let aut = catalog::automaton("grigorchuk").unwrap();
    let cfg = SuiteConfig { max_level: 4, ..SuiteConfig::default() };
    let report = run_suite("grigorchuk", &aut, &cfg).unwrap();
    assert!(report.passed, "{:?}", report.failures());

    // A perturbed pencil also fails the line check; nothing else may fail.
    let families = [
        (Break::Det, &["determinant", "pencil"][..]),
        (Break::Semiconj, &["semi-conjugacy"][..]),
        (Break::Oracle, &["spectrum"][..]),
    ];
    for (brk, allowed) in families {
        let cfg = SuiteConfig { max_level: 4, brk: Some(brk), ..SuiteConfig::default() };
        let report = run_suite("grigorchuk", &aut, &cfg).unwrap();
        let failures = report.failures();
        assert!(!report.passed, "{brk:?} went unnoticed");
        assert!(failures.iter().any(|f| f.contains(allowed[0])), "{brk:?}: {failures:?}");
        assert!(failures.iter().all(|f| allowed.iter().any(|a| f.contains(a))), "{brk:?}: {failures:?}");
    }

    let basilica = catalog::automaton("basilica").unwrap();
    let cfg = SuiteConfig { max_level: 3, brk: Some(Break::Oracle), ..SuiteConfig::default() };
    assert!(run_suite("basilica", &basilica, &cfg).is_err());
}
