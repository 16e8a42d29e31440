use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use selfsim::dirichlet::{basilica_constants, basilica_trace_check, hanoi_trace_check};
use selfsim::dynamics::{backward_orbit, complex_backward_cloud, semiconjugacy_check, ComplexMap, Quadratic};
use selfsim::matrix::adjacency_matrix;
use selfsim::nucleus::{check_contracting, Contraction};
use selfsim::oracle::{has_oracle, oracle_set_size, oracle_spectrum};
use selfsim::pencil::Pencil;
use selfsim::ray::Ray;
use selfsim::schreier::{build_level_graph, orbital_ball, GraphBall};
use selfsim::spectra::{compare_spectra, default_tol, eigen_spectrum, Comparison};
use selfsim::suite::{run_suite, Break, SuiteConfig};
use selfsim::{catalog, Automaton};

/// Largest level graph, in vertices: 2^13 for binary trees, 3^8 for ternary.
const GRAPH_VERTEX_CAP: usize = 8192;
/// Largest dense eigensolve, in vertices: 2^12 for binary trees, 3^7 for ternary.
const EIGEN_VERTEX_CAP: usize = 4096;

const RNG_NAME: &str = "ChaCha8";

#[derive(Parser)]
#[command(name = "selfsim", version, about = "Schreier graphs, spectra and renormalization checks for self-similar groups")]
#[command(after_help = "Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.\n\
Set SPECTRA_CATALOG_DIR to load <dir>/<id>.json and <dir>/pencils/<id>.json before the built-in catalog.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in automata.
    Catalog,
    /// Adjacency spectrum of the level-n Schreier graph.
    ///
    /// CSV columns: eigenvalue,multiplicity,kns_mass (mass = multiplicity / k^n).
    /// Lines starting with '#' carry the report header and, with --verify, the verdict.
    Spectrum(SpectrumArgs),
    /// Export a level-n Schreier graph, or an orbital ball with --ray.
    ///
    /// CSV columns: source,label,target (vertices named by their words).
    Graph(GraphArgs),
    /// Run every registered check for a group and print a JSON summary.
    Verify(VerifyArgs),
    /// Backward orbits, Julia set clouds and semi-conjugacy checks.
    ///
    /// Orbit CSV columns: generation,value. Cloud CSV columns: re,im.
    Dynamics(DynamicsArgs),
    /// Decide contraction and print the nucleus as JSON.
    Contracting(ContractingArgs),
    /// Dirichlet form trace checks (basilica or hanoi) as JSON.
    Dirichlet(DirichletArgs),
}

#[derive(Args)]
struct GroupArgs {
    /// Catalog id, see `selfsim catalog`.
    #[arg(long, conflicts_with = "automaton", required_unless_present = "automaton")]
    group: Option<String>,
    /// Automaton JSON file instead of a catalog id.
    #[arg(long)]
    automaton: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Csv,
    Dot,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long)]
    level: usize,
    /// Compare with the closed-form spectrum; fails with exit 1 on mismatch.
    #[arg(long)]
    verify: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    /// Write here (atomically) instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Eigenvalue clustering tolerance [default: 1e-8 * max(1, ||A||_inf)].
    #[arg(long)]
    tol: Option<f64>,
    /// Eigenvalue tolerance for --verify.
    #[arg(long, default_value_t = 1e-8)]
    compare_tol: f64,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long, required_unless_present = "ray")]
    level: Option<usize>,
    /// Periodic boundary point such as `01(10)`; exports the ball around it.
    #[arg(long, requires = "radius", conflicts_with = "level")]
    ray: Option<String>,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: GraphFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long, default_value_t = 4)]
    max_level: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturb one check on purpose: det, semiconj or oracle.
    #[arg(long = "break")]
    brk: Option<Break>,
    /// Include per-check wall-clock seconds (makes output nondeterministic).
    #[arg(long)]
    timings: bool,
    /// Random points per determinant recursion level.
    #[arg(long, default_value_t = 100)]
    det_points: usize,
    /// Random samples for the semi-conjugacy check.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Eigenvalue tolerance against the closed forms.
    #[arg(long, default_value_t = 1e-8)]
    spectrum_tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DynamicsArgs {
    /// Real quadratic for a backward orbit: hanoi-f, tangled-f, dinf-f.
    #[arg(long, group = "mode")]
    map: Option<String>,
    /// Quadratic a,b,c for a x^2 + b x + c, instead of --map.
    #[arg(long, group = "mode", value_delimiter = ',', num_args = 3, allow_hyphen_values = true)]
    coeffs: Option<Vec<f64>>,
    /// Orbit seed value.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    seed: f64,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    /// Complex map for a random backward cloud: basilica, circle, interval, cubic, rational.
    #[arg(long, group = "mode")]
    julia: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    /// RNG seed for --julia and --semiconj.
    #[arg(long, default_value_t = 0)]
    rng: u64,
    /// Group whose pencil map is checked against its determinant.
    #[arg(long, group = "mode")]
    semiconj: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Sampling box half-width for --semiconj.
    #[arg(long, default_value_t = 10.0)]
    half_width: f64,
    /// Relative tolerance for --semiconj.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ContractingArgs {
    #[command(flatten)]
    group: GroupArgs,
    /// Depth at which sections of N·N must land in N.
    #[arg(long, default_value_t = 4)]
    radius: usize,
}

#[derive(Args)]
struct DirichletArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long)]
    level: usize,
    /// Hanoi resistance parameter x.
    #[arg(long, default_value_t = 1.0)]
    x: f64,
    /// Hanoi resistance parameter y.
    #[arg(long, default_value_t = 1.0)]
    y: f64,
    #[arg(long)]
    tol: Option<f64>,
}

enum Failure {
    /// Exit 1.
    Verification(String),
    /// Exit 2.
    Config(String),
}

impl From<selfsim::Error> for Failure {
    fn from(e: selfsim::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Catalog => cmd_catalog(),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Graph(a) => cmd_graph(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Dynamics(a) => cmd_dynamics(a),
        Command::Contracting(a) => cmd_contracting(a),
        Command::Dirichlet(a) => cmd_dirichlet(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Returns the automaton and the id used for oracle and pencil lookups.
fn load(args: &GroupArgs) -> Result<(Automaton, String), Failure> {
    match (&args.group, &args.automaton) {
        (Some(id), None) => Ok((catalog::automaton(id)?, id.clone())),
        (None, Some(path)) => {
            let aut = catalog::automaton_from_path(path)?;
            let id = aut.name().to_string();
            Ok((aut, id))
        }
        _ => Err(config("give exactly one of --group and --automaton")),
    }
}

fn check_cap(aut: &Automaton, n: usize, cap: usize, what: &str) -> CmdResult {
    let size = aut.arity().checked_pow(n as u32).filter(|&s| s <= cap);
    match size {
        Some(_) => Ok(()),
        None => Err(config(format!(
            "level {n} is too large for {what} on a {}-ary tree (at most {cap} vertices)",
            aut.arity()
        ))),
    }
}

/// Writes to `path` via a temporary file in the same directory, or to stdout.
fn emit(path: Option<&Path>, text: &str) -> CmdResult {
    let Some(path) = path else {
        print!("{text}");
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let write = || -> std::io::Result<()> {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    };
    write().map_err(|e| config(format!("cannot write {}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn cmd_catalog() -> CmdResult {
    let mut out = String::from("id,arity,generators,oracle,pencil\n");
    let pencils = catalog::pencil_ids();
    for id in catalog::ids() {
        let aut = catalog::automaton(id)?;
        writeln!(
            out,
            "{id},{},{},{},{}",
            aut.arity(),
            aut.generator_names().join(" "),
            has_oracle(id),
            pencils.contains(&id)
        )
        .unwrap();
    }
    emit(None, &out)
}

#[derive(Serialize)]
struct Verdict {
    passed: bool,
    expected_clusters: usize,
    comparison: Comparison,
}

fn cmd_spectrum(a: SpectrumArgs) -> CmdResult {
    let (aut, id) = load(&a.group)?;
    if a.verify && !has_oracle(&id) {
        return Err(config(format!("{id} has no closed-form spectrum to verify against")));
    }
    check_cap(&aut, a.level, EIGEN_VERTEX_CAP, "a dense eigensolve")?;
    let m = adjacency_matrix(&aut, a.level);
    let tol = a.tol.unwrap_or_else(|| default_tol(&m));
    let report = eigen_spectrum(&m, a.level, Some(tol))?;

    let verdict = if a.verify {
        let oracle = oracle_spectrum(&id, a.level)?;
        let comparison = compare_spectra(&report, &oracle, a.compare_tol)?;
        let expected_clusters = oracle_set_size(&id, a.level)?;
        Some(Verdict {
            passed: comparison.passed && report.clusters.len() == expected_clusters,
            expected_clusters,
            comparison,
        })
    } else {
        None
    };

    let text = match a.format {
        TableFormat::Csv => {
            let mut s = format!(
                "# group={id} level={} dimension={} clusters={} tol={:e}\n",
                a.level,
                report.dimension,
                report.clusters.len(),
                report.tol
            );
            if let Some(v) = &verdict {
                writeln!(
                    s,
                    "# verdict={} expected_clusters={} max_distance={:e} compare_tol={:e}",
                    if v.passed { "pass" } else { "fail" },
                    v.expected_clusters,
                    v.comparison.max_distance,
                    v.comparison.tol
                )
                .unwrap();
            }
            s + &report.to_csv()
        }
        TableFormat::Json => to_json(&json!({ "group": id, "spectrum": report, "verdict": verdict })),
    };
    emit(a.output.as_deref(), &text)?;
    match verdict {
        Some(v) if !v.passed => {
            let mut problems = v.comparison.problems;
            if report.clusters.len() != v.expected_clusters {
                problems.push(format!("{} clusters, expected {}", report.clusters.len(), v.expected_clusters));
            }
            Err(Failure::Verification(problems.join("; ")))
        }
        _ => Ok(()),
    }
}

fn ball_text(ball: &GraphBall, format: GraphFormat, name: &str) -> String {
    match format {
        GraphFormat::Csv => {
            let mut s = String::from("source,label,target\n");
            for e in &ball.edges {
                writeln!(s, "{},{},{}", ball.vertices[e.source], ball.labels[e.label], ball.vertices[e.target]).unwrap();
            }
            s
        }
        GraphFormat::Dot => {
            let mut s = format!("digraph \"{name}\" {{\n");
            for (v, d) in ball.vertices.iter().zip(&ball.distance) {
                writeln!(s, "  \"{v}\" [distance={d}];").unwrap();
            }
            for e in &ball.edges {
                writeln!(
                    s,
                    "  \"{}\" -> \"{}\" [label=\"{}\"];",
                    ball.vertices[e.source], ball.vertices[e.target], ball.labels[e.label]
                )
                .unwrap();
            }
            s.push_str("}\n");
            s
        }
    }
}

fn cmd_graph(a: GraphArgs) -> CmdResult {
    let (aut, id) = load(&a.group)?;
    let text = if let Some(ray) = &a.ray {
        let xi = Ray::parse(ray, aut.alphabet())?;
        let radius = a.radius.ok_or_else(|| config("--ray needs --radius"))?;
        let ball = orbital_ball(&aut, aut.generators(), &xi, radius)?;
        ball_text(&ball, a.format, &format!("{id}_ball"))
    } else {
        let n = a.level.ok_or_else(|| config("give --level or --ray"))?;
        check_cap(&aut, n, GRAPH_VERTEX_CAP, "a graph export")?;
        let g = build_level_graph(&aut, aut.generators(), n);
        match a.format {
            GraphFormat::Csv => g.to_csv(),
            GraphFormat::Dot => g.to_dot(&format!("{id}_{n}")),
        }
    };
    emit(a.output.as_deref(), &text)
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let (aut, id) = load(&a.group)?;
    check_cap(&aut, a.max_level, EIGEN_VERTEX_CAP, "verification")?;
    let cfg = SuiteConfig {
        max_level: a.max_level,
        seed: a.seed,
        brk: a.brk,
        timings: a.timings,
        det_points: a.det_points,
        semiconj_samples: a.samples,
        spectrum_tol: a.spectrum_tol,
    };
    let report = run_suite(&id, &aut, &cfg)?;
    emit(a.output.as_deref(), &to_json(&json!({ "rng": RNG_NAME, "report": report })))?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification(report.failures().join(", ")))
    }
}

fn named_quadratic(name: &str) -> Result<Quadratic, Failure> {
    let (b, c) = match name {
        "hanoi-f" => (-1.0, -3.0),
        "tangled-f" => (-2.0, -4.0),
        "dinf-f" => (0.0, -2.0),
        _ => return Err(config(format!("unknown map `{name}` (hanoi-f, tangled-f, dinf-f)"))),
    };
    Ok(Quadratic::new(1.0, b, c)?)
}

fn cmd_dynamics(a: DynamicsArgs) -> CmdResult {
    let out = a.output.as_deref();
    if let Some(name) = &a.julia {
        let map = ComplexMap::parse(name)?;
        let mut rng = ChaCha8Rng::seed_from_u64(a.rng);
        let cloud = complex_backward_cloud(&map, Complex64::new(1.0, 0.0), a.points, a.burn_in, &mut rng);
        let mut s = format!(
            "# map={name} rng={RNG_NAME} seed={} points={} burn_in={}\nre,im\n",
            a.rng, a.points, a.burn_in
        );
        for z in cloud {
            writeln!(s, "{:.15e},{:.15e}", z.re, z.im).unwrap();
        }
        return emit(out, &s);
    }
    if let Some(group) = &a.semiconj {
        let aut = catalog::automaton(group)?;
        let pencil = Pencil::new(catalog::pencil(group)?, &aut)?;
        let map = pencil
            .map()
            .ok_or_else(|| config(format!("{group} has no rational map")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(a.rng);
        let rep = semiconjugacy_check(map, a.samples, a.half_width, a.tol, &mut rng);
        emit(out, &to_json(&json!({ "group": group, "rng": RNG_NAME, "seed": a.rng, "report": rep })))?;
        return if rep.passed {
            Ok(())
        } else {
            Err(Failure::Verification(format!("max relative error {:e}", rep.max_rel_err)))
        };
    }
    let (f, label) = match (&a.map, &a.coeffs) {
        (Some(name), _) => (named_quadratic(name)?, name.clone()),
        (None, Some(c)) => (Quadratic::from_coeffs(c)?, format!("{},{},{}", c[0], c[1], c[2])),
        (None, None) => return Err(config("give one of --map, --coeffs, --julia, --semiconj")),
    };
    let orbit = backward_orbit(&f, a.seed, a.depth);
    let header = format!(
        "# map={label} seed={} depth={} dropped_complex={}\n",
        a.seed, a.depth, orbit.dropped_complex
    );
    emit(out, &(header + &orbit.to_csv()))
}

fn cmd_contracting(a: ContractingArgs) -> CmdResult {
    let (aut, id) = load(&a.group)?;
    let value = match check_contracting(&aut, a.radius) {
        Contraction::Contracting { nucleus, min_radius } => json!({
            "group": id,
            "contracting": true,
            "min_radius": min_radius,
            "nucleus": nucleus.iter().map(|g| aut.format_word(g)).collect::<Vec<_>>(),
        }),
        Contraction::NotContracting { radius, reason } => json!({
            "group": id,
            "contracting": false,
            "radius": radius,
            "reason": reason,
        }),
    };
    emit(None, &to_json(&value))
}

fn cmd_dirichlet(a: DirichletArgs) -> CmdResult {
    let (aut, id) = load(&a.group)?;
    check_cap(&aut, a.level + 1, EIGEN_VERTEX_CAP, "a trace check")?;
    let (passed, value) = match id.as_str() {
        "basilica" => {
            let (al, be, lam) = basilica_constants();
            let rep = basilica_trace_check(&aut, a.level, al, be, lam, 1, a.tol.unwrap_or(1e-9))?;
            (rep.passed, json!({ "group": id, "report": rep }))
        }
        "hanoi" => {
            if !(a.x > 0.0 && a.y > 0.0) {
                return Err(config("hanoi needs x > 0 and y > 0"));
            }
            let rep = hanoi_trace_check(&aut, a.level, a.x, a.y, a.tol.unwrap_or(1e-8))?;
            (rep.passed, json!({ "group": id, "report": rep }))
        }
        _ => return Err(config(format!("no Dirichlet form for {id} (basilica, hanoi)"))),
    };
    emit(None, &to_json(&value))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification("trace differs from the renormalized form".into()))
    }
}
