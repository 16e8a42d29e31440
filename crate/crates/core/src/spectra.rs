//! Eigenvalue clustering, spectrum comparison and counting measures.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{asymmetry, max_abs, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

/// Eigenvalues grouped into clusters with multiplicities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub level: usize,
    /// Matrix dimension; multiplicities sum to this.
    pub dimension: usize,
    pub tol: f64,
    pub clusters: Vec<Cluster>,
}

/// Default cluster tolerance `1e-8 · max(1, ‖m‖_∞)`.
pub fn default_tol(m: &Matrix) -> f64 {
    let norm = m
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    1e-8 * norm.max(1.0)
}

impl SpectrumReport {
    /// Groups values into clusters: consecutive sorted values closer than
    /// `tol` share a cluster, whose value is their mean.
    pub fn from_values(level: usize, values: &[f64], tol: f64) -> SpectrumReport {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mut clusters: Vec<Cluster> = Vec::new();
        let mut start = 0;
        for i in 0..v.len() {
            let last = i + 1 == v.len() || v[i + 1] - v[i] > tol;
            if last {
                let group = &v[start..=i];
                clusters.push(Cluster {
                    value: group.iter().sum::<f64>() / group.len() as f64,
                    multiplicity: group.len(),
                });
                start = i + 1;
            }
        }
        SpectrumReport {
            level,
            dimension: v.len(),
            tol,
            clusters,
        }
    }

    /// Builds a report from exact (value, multiplicity) pairs; equal values
    /// within `1e-12` are merged.
    pub fn from_clusters(level: usize, mut pairs: Vec<(f64, usize)>, tol: f64) -> SpectrumReport {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut clusters: Vec<Cluster> = Vec::new();
        for (value, multiplicity) in pairs {
            match clusters.last_mut() {
                Some(c) if (value - c.value).abs() <= 1e-12 => c.multiplicity += multiplicity,
                _ => clusters.push(Cluster {
                    value,
                    multiplicity,
                }),
            }
        }
        SpectrumReport {
            level,
            dimension: clusters.iter().map(|c| c.multiplicity).sum(),
            tol,
            clusters,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.value).collect()
    }

    /// Smallest distance between neighbouring clusters (`∞` for one cluster).
    pub fn min_gap(&self) -> f64 {
        self.clusters
            .windows(2)
            .map(|w| w[1].value - w[0].value)
            .fold(f64::INFINITY, f64::min)
    }

    /// Multiplies every eigenvalue by `factor` (e.g. adjacency to Markov).
    pub fn scaled(&self, factor: f64) -> SpectrumReport {
        let mut out = self.clone();
        for c in &mut out.clusters {
            c.value *= factor;
        }
        if factor < 0.0 {
            out.clusters.reverse();
        }
        out.tol *= factor.abs();
        out
    }

    /// CSV with header `eigenvalue,multiplicity,kns_mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eigenvalue,multiplicity,kns_mass\n");
        for c in &self.clusters {
            out.push_str(&format!(
                "{:.15e},{},{:.15e}\n",
                c.value,
                c.multiplicity,
                c.multiplicity as f64 / self.dimension as f64
            ));
        }
        out
    }
}

/// All eigenvalues of a symmetric matrix, clustered with `tol`
/// (default [`default_tol`]).
pub fn eigen_spectrum(m: &Matrix, level: usize, tol: Option<f64>) -> Result<SpectrumReport> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
    }
    let skew = asymmetry(m);
    if skew > 1e-12 * max_abs(m).max(1.0) {
        return Err(Error::NotSymmetric(skew));
    }
    let tol = tol.unwrap_or_else(|| default_tol(m));
    let values = m.clone().symmetric_eigenvalues();
    Ok(SpectrumReport::from_values(level, values.as_slice(), tol))
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub passed: bool,
    pub max_distance: f64,
    pub tol: f64,
    pub problems: Vec<String>,
}

/// Cluster-by-cluster comparison: same number of clusters, equal
/// multiplicities and eigenvalue distance at most `tol`.
pub fn compare_spectra(computed: &SpectrumReport, oracle: &SpectrumReport, tol: f64) -> Result<Comparison> {
    if computed.dimension != oracle.dimension {
        return Err(Error::DimensionMismatch(computed.dimension, oracle.dimension));
    }
    let mut problems = Vec::new();
    let mut max_distance = 0.0_f64;
    if computed.clusters.len() != oracle.clusters.len() {
        problems.push(format!(
            "{} clusters computed, {} expected",
            computed.clusters.len(),
            oracle.clusters.len()
        ));
    }
    for (c, o) in computed.clusters.iter().zip(&oracle.clusters) {
        let d = (c.value - o.value).abs();
        max_distance = max_distance.max(d);
        if d > tol {
            problems.push(format!("eigenvalue {:.12} expected {:.12}", c.value, o.value));
        }
        if c.multiplicity != o.multiplicity {
            problems.push(format!(
                "eigenvalue {:.12} has multiplicity {} expected {}",
                o.value, c.multiplicity, o.multiplicity
            ));
        }
    }
    Ok(Comparison {
        passed: problems.is_empty(),
        max_distance,
        tol,
        problems,
    })
}

/// Largest distance from an eigenvalue of `small` to the nearest eigenvalue of `big`.
pub fn inclusion_distance(small: &SpectrumReport, big: &SpectrumReport) -> f64 {
    let targets = big.values();
    small
        .clusters
        .iter()
        .map(|c| {
            targets
                .iter()
                .map(|t| (t - c.value).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Counting measure `μ_n`: each cluster gets multiplicity / dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnsMeasure {
    pub atoms: Vec<(f64, f64)>,
}

impl KnsMeasure {
    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Mass of the atom nearest `value` within `tol`, or 0.
    pub fn mass_at(&self, value: f64, tol: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| (a.0 - value).abs() <= tol)
            .map(|a| a.1)
            .sum()
    }
}

pub fn kns_counting(report: &SpectrumReport) -> KnsMeasure {
    let dim = report.dimension as f64;
    KnsMeasure {
        atoms: report
            .clusters
            .iter()
            .map(|c| (c.value, c.multiplicity as f64 / dim))
            .collect(),
    }
}
