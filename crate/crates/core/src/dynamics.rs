//! Backward orbits of real quadratics, semi-conjugacy checks for the pencil
//! maps, and inverse-iteration sampling of complex Julia sets.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Points closer than this are merged when expanding backward orbits.
pub const DEDUP_TOL: f64 = 1e-12;

/// `f(x) = a x² + b x + c` with `a ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Quadratic> {
        if a == 0.0 || !a.is_finite() {
            return Err(Error::NotQuadratic);
        }
        Ok(Quadratic { a, b, c })
    }

    /// Coefficients from highest degree down; must be exactly three.
    pub fn from_coeffs(coeffs: &[f64]) -> Result<Quadratic> {
        match coeffs {
            [a, b, c] => Quadratic::new(*a, *b, *c),
            _ => Err(Error::NotQuadratic),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    fn derivative(&self, x: f64) -> f64 {
        2.0 * self.a * x + self.b
    }

    /// Real solutions of `f(x) = y`, or `None` when both are complex.
    pub fn preimages(&self, y: f64) -> Option<[f64; 2]> {
        let (a, b, c) = (self.a, self.b, self.c - y);
        let mut disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            // Double roots computed with rounding error.
            if disc > -1e-14 * (b * b + (4.0 * a * c).abs()).max(1.0) {
                disc = 0.0;
            } else {
                return None;
            }
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let roots = if q == 0.0 {
            let r = -b / (2.0 * a);
            [r, r]
        } else {
            let (r1, r2) = (q / a, c / q);
            if r1 <= r2 {
                [r1, r2]
            } else {
                [r2, r1]
            }
        };
        Some(roots.map(|r| self.polish(r, y)))
    }

    fn polish(&self, mut x: f64, y: f64) -> f64 {
        for _ in 0..2 {
            let d = self.derivative(x);
            if d.abs() < 1e-8 {
                break;
            }
            let step = (self.eval(x) - y) / d;
            if !step.is_finite() {
                break;
            }
            x -= step;
        }
        x
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BackwardOrbit {
    pub seed: f64,
    pub depth: usize,
    /// `generations[g]` is `f^{-g}(seed)` over the reals, sorted and deduplicated.
    pub generations: Vec<Vec<f64>>,
    /// Parent points whose preimages were complex.
    pub dropped_complex: usize,
}

impl BackwardOrbit {
    pub fn all_points(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.generations.iter().flatten().copied().collect();
        sort_dedup(&mut v);
        v
    }

    /// CSV with header `generation,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,value\n");
        for (g, pts) in self.generations.iter().enumerate() {
            for p in pts {
                out.push_str(&format!("{g},{p:.17e}\n"));
            }
        }
        out
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|b, a| (*b - *a).abs() <= DEDUP_TOL);
}

pub fn backward_orbit(f: &Quadratic, seed: f64, depth: usize) -> BackwardOrbit {
    let mut generations = vec![vec![seed]];
    let mut dropped = 0;
    for _ in 0..depth {
        let mut next = Vec::new();
        for &y in generations.last().expect("nonempty") {
            match f.preimages(y) {
                Some(r) => next.extend_from_slice(&r),
                None => dropped += 1,
            }
        }
        sort_dedup(&mut next);
        generations.push(next);
    }
    BackwardOrbit {
        seed,
        depth,
        generations,
        dropped_complex: dropped,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JuliaSample {
    /// Union of all generations.
    pub isolated: Vec<f64>,
    /// The deepest two generations, a proxy for the accumulation set.
    pub closure_sample: Vec<f64>,
}

pub fn julia_approx_1d(f: &Quadratic, seed: f64, depth: usize) -> JuliaSample {
    let orbit = backward_orbit(f, seed, depth.max(1));
    let d = orbit.generations.len();
    let mut closure: Vec<f64> = orbit.generations[d - 2..].iter().flatten().copied().collect();
    sort_dedup(&mut closure);
    JuliaSample {
        isolated: orbit.all_points(),
        closure_sample: closure,
    }
}

/// Largest distance from a point of `[lo, hi]` to the nearest sample.
pub fn coverage_gap(points: &[f64], lo: f64, hi: f64) -> f64 {
    let mut inside: Vec<f64> = points.iter().copied().filter(|p| (lo..=hi).contains(p)).collect();
    if inside.is_empty() {
        return hi - lo;
    }
    inside.sort_by(f64::total_cmp);
    let mut gap = (inside[0] - lo).max(hi - inside[inside.len() - 1]);
    for w in inside.windows(2) {
        gap = gap.max((w[1] - w[0]) / 2.0);
    }
    gap
}

/// On-disk form of a pencil's rational map `F`, semi-conjugacy `ψ` and `f`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RationalMapSpec {
    pub components: Vec<String>,
    pub psi: String,
    /// Coefficients of `f`, highest degree first.
    pub f: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RationalMap {
    pub params: Vec<String>,
    pub components: Vec<Expr>,
    pub psi: Expr,
    pub f: Quadratic,
}

impl RationalMap {
    pub fn new(spec: &RationalMapSpec, params: &[String]) -> Result<RationalMap> {
        let names: Vec<&str> = params.iter().map(String::as_str).collect();
        if spec.components.len() != params.len() {
            return Err(Error::DimensionMismatch(spec.components.len(), params.len()));
        }
        Ok(RationalMap {
            params: params.to_vec(),
            components: spec
                .components
                .iter()
                .map(|c| Expr::parse(c, &names))
                .collect::<Result<_>>()?,
            psi: Expr::parse(&spec.psi, &names)?,
            f: Quadratic::from_coeffs(&spec.f)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    /// `F(p)` together with the smallest divisor met while evaluating it.
    pub fn apply_guarded(&self, p: &[f64]) -> (Vec<f64>, f64) {
        let mut min_den = f64::INFINITY;
        let image = self
            .components
            .iter()
            .map(|c| {
                let g = c.eval_guarded(p);
                min_den = min_den.min(g.min_denominator);
                g.value
            })
            .collect();
        (image, min_den)
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.apply_guarded(p).0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SemiconjugacyReport {
    pub samples: usize,
    pub resampled: usize,
    pub max_rel_err: f64,
    pub worst_point: Vec<f64>,
    pub tol: f64,
    pub passed: bool,
}

/// Minimum allowed `|denominator|` when sampling near poles.
pub const POLE_THRESHOLD: f64 = 1e-6;

/// Samples `p` uniformly in `[-half_width, half_width]^d` and measures
/// `|ψ(F(p)) − f(ψ(p))| / max(1, |f(ψ(p))|)`.
pub fn semiconjugacy_check<R: Rng>(
    map: &RationalMap,
    samples: usize,
    half_width: f64,
    tol: f64,
    rng: &mut R,
) -> SemiconjugacyReport {
    let mut worst = 0.0_f64;
    let mut worst_point = Vec::new();
    let mut resampled = 0;
    let mut done = 0;
    while done < samples {
        let p: Vec<f64> = (0..map.dim())
            .map(|_| rng.random_range(-half_width..=half_width))
            .collect();
        let psi = map.psi.eval_guarded(&p);
        let (image, den) = map.apply_guarded(&p);
        let psi_image = map.psi.eval_guarded(&image);
        if psi.min_denominator.min(den).min(psi_image.min_denominator) < POLE_THRESHOLD {
            resampled += 1;
            log::debug!("resampling {p:?}: too close to a pole");
            continue;
        }
        let rhs = map.f.eval(psi.value);
        let err = (psi_image.value - rhs).abs() / rhs.abs().max(1.0);
        if err.is_nan() || err > worst {
            worst = err;
            worst_point = p;
        }
        done += 1;
    }
    SemiconjugacyReport {
        samples,
        resampled,
        max_rel_err: worst,
        worst_point,
        tol,
        passed: worst <= tol,
    }
}

/// Complex maps whose Julia sets can be sampled by inverse iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComplexMap {
    /// `z² + c`
    Quadratic(Complex64),
    /// `−z³/2 + 3z/2`
    Cubic,
    /// `z² − 16/(27z)`
    Rational,
}

impl ComplexMap {
    /// Accepts `basilica` (`z^2-1`), `circle` (`z^2`), `interval` (`z^2-2`),
    /// `cubic` (`-z^3/2+3z/2`) and `rational` (`z^2-16/(27z)`).
    pub fn parse(name: &str) -> Result<ComplexMap> {
        let compact: String = name.chars().filter(|c| !c.is_whitespace()).collect();
        Ok(match compact.as_str() {
            "basilica" | "z^2-1" => ComplexMap::Quadratic(Complex64::new(-1.0, 0.0)),
            "circle" | "z^2" => ComplexMap::Quadratic(Complex64::new(0.0, 0.0)),
            "interval" | "z^2-2" => ComplexMap::Quadratic(Complex64::new(-2.0, 0.0)),
            "cubic" | "-z^3/2+3z/2" => ComplexMap::Cubic,
            "rational" | "z^2-16/(27z)" => ComplexMap::Rational,
            _ => {
                return Err(Error::Unsupported(
                    name.to_string(),
                    "known maps: basilica, circle, interval, cubic, rational".to_string(),
                ))
            }
        })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            ComplexMap::Quadratic(c) => z * z + c,
            ComplexMap::Cubic => -z * z * z / 2.0 + 1.5 * z,
            ComplexMap::Rational => z * z - 16.0 / (27.0 * z),
        }
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        match *self {
            ComplexMap::Quadratic(_) => 2.0 * z,
            ComplexMap::Cubic => -1.5 * z * z + 1.5,
            ComplexMap::Rational => 2.0 * z + 16.0 / (27.0 * z * z),
        }
    }

    /// All preimages of `w`, polished by Newton steps.
    pub fn preimages(&self, w: Complex64) -> Vec<Complex64> {
        let raw = match *self {
            ComplexMap::Quadratic(c) => {
                let r = (w - c).sqrt();
                vec![r, -r]
            }
            // z³ − 3z + 2w = 0
            ComplexMap::Cubic => depressed_cubic_roots(Complex64::new(-3.0, 0.0), 2.0 * w),
            // z³ − w z² − 16/27 = 0, shifted by z = t + w/3
            ComplexMap::Rational => {
                let p = -w * w / 3.0;
                let q = -2.0 * w * w * w / 27.0 - Complex64::new(16.0 / 27.0, 0.0);
                depressed_cubic_roots(p, q)
                    .into_iter()
                    .map(|t| t + w / 3.0)
                    .collect()
            }
        };
        raw.into_iter().map(|z| self.polish(z, w)).collect()
    }

    fn polish(&self, mut z: Complex64, w: Complex64) -> Complex64 {
        for _ in 0..8 {
            let d = self.derivative(z);
            if d.norm() < 1e-10 {
                break;
            }
            let step = (self.eval(z) - w) / d;
            if !step.is_finite() {
                break;
            }
            z -= step;
            if step.norm() <= 1e-16 * z.norm().max(1.0) {
                break;
            }
        }
        z
    }
}

/// Roots of `t³ + p t + q` by Cardano's formula.
fn depressed_cubic_roots(p: Complex64, q: Complex64) -> Vec<Complex64> {
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    // Pick the sign that keeps u away from zero.
    let s1 = -q / 2.0 + disc;
    let s2 = -q / 2.0 - disc;
    let s = if s1.norm() >= s2.norm() { s1 } else { s2 };
    if s.norm() == 0.0 {
        return vec![Complex64::new(0.0, 0.0); 3];
    }
    let u = s.powf(1.0 / 3.0);
    let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    (0..3)
        .map(|k| {
            let uk = u * omega.powu(k);
            uk - p / (3.0 * uk)
        })
        .collect()
}

/// Random inverse-branch iteration from `seed`; returns `points` samples after
/// a burn-in of `burn_in` steps.
pub fn complex_backward_cloud<R: Rng>(
    map: &ComplexMap,
    seed: Complex64,
    points: usize,
    burn_in: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    let mut z = seed;
    let mut out = Vec::with_capacity(points);
    for step in 0..burn_in + points {
        let pre = map.preimages(z);
        z = pre[rng.random_range(0..pre.len())];
        if step >= burn_in {
            out.push(z);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_validation() {
        assert!(matches!(Quadratic::new(0.0, 1.0, 2.0), Err(Error::NotQuadratic)));
        assert!(Quadratic::from_coeffs(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn first_preimages() {
        let f = Quadratic::new(1.0, 0.0, -2.0).unwrap();
        let o = backward_orbit(&f, 0.0, 1);
        let s = 2f64.sqrt();
        assert_eq!(o.generations[1].len(), 2);
        assert!((o.generations[1][0] + s).abs() < 1e-15 && (o.generations[1][1] - s).abs() < 1e-15);

        let f = Quadratic::new(1.0, -2.0, -4.0).unwrap();
        let o = backward_orbit(&f, 2.0, 1);
        let r = 7f64.sqrt();
        assert!((o.generations[1][0] - (1.0 - r)).abs() < 1e-14);
        assert!((o.generations[1][1] - (1.0 + r)).abs() < 1e-14);

        assert_eq!(backward_orbit(&f, 0.3, 0).generations, vec![vec![0.3]]);
    }

    #[test]
    fn complex_preimages_are_dropped() {
        let f = Quadratic::new(1.0, 0.0, 0.0).unwrap();
        let o = backward_orbit(&f, -1.0, 2);
        assert_eq!(o.dropped_complex, 1);
        assert!(o.generations[1].is_empty());
    }

    #[test]
    fn julia_depth_one() {
        let f = Quadratic::new(1.0, 0.0, -2.0).unwrap();
        let j = julia_approx_1d(&f, 0.0, 1);
        assert_eq!(j.isolated.len(), 3);
        assert_eq!(j.closure_sample, j.isolated);
    }

    #[test]
    fn grigorchuk_map_at_three_one() {
        let spec = RationalMapSpec {
            components: vec!["x - x*y^2/(x^2 - 4)".into(), "2*y^2/(x^2 - 4)".into()],
            psi: "(x^2 - 4 - y^2)/(2*y)".into(),
            f: vec![1.0, 0.0, -2.0],
        };
        let m = RationalMap::new(&spec, &["x".into(), "y".into()]).unwrap();
        let image = m.apply(&[3.0, 1.0]);
        assert!((image[0] - 2.4).abs() < 1e-15 && (image[1] - 0.4).abs() < 1e-15);
        assert_eq!(m.psi.eval(&[3.0, 1.0]), 2.0);
        assert!((m.psi.eval(&image) - 2.0).abs() < 1e-14);
        assert_eq!(m.f.eval(2.0), 2.0);
    }

    #[test]
    fn cubic_branches_are_preimages() {
        for map in [ComplexMap::Cubic, ComplexMap::Rational] {
            for w in [Complex64::new(0.3, -0.2), Complex64::new(-1.1, 0.7)] {
                let pre = map.preimages(w);
                assert_eq!(pre.len(), 3);
                for i in 0..3 {
                    assert!((pre[i] - pre[(i + 1) % 3]).norm() > 1e-3, "{map:?} {w} {pre:?}");
                }
                for z in pre {
                    assert!((map.eval(z) - w).norm() < 1e-12, "{map:?} {w}");
                }
            }
        }
    }

    #[test]
    fn circle_cloud_stays_on_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = ComplexMap::parse("z^2").unwrap();
        let cloud = complex_backward_cloud(&m, Complex64::from_polar(1.0, 0.4), 2000, 0, &mut rng);
        assert!(cloud.iter().all(|z| (z.norm() - 1.0).abs() <= 1e-9));
    }

    #[test]
    fn coverage_gap_of_grid() {
        let pts: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        assert!((coverage_gap(&pts, 0.0, 1.0) - 0.05).abs() < 1e-12);
        assert_eq!(coverage_gap(&[], 0.0, 1.0), 1.0);
    }
}
