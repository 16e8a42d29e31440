//! Multi-parameter pencils `A_n(x_1, …, x_d)` and their determinant recursions.
//!
//! A pencil is a sum of operators with polynomial coefficients. Operators are
//! the identity `I`, states of the automaton, or auxiliary operators given as
//! `k×k` block patterns whose blocks are `0`, `I` or an auxiliary operator one
//! level down.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::automaton::Automaton;
use crate::dynamics::{RationalMap, RationalMapSpec, POLE_THRESHOLD};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::matrix::{determinant, level_permutations, Matrix};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PencilSpec {
    pub name: String,
    /// Catalog id of the automaton the pencil is written for.
    pub group: String,
    pub params: Vec<String>,
    #[serde(default)]
    pub aux: BTreeMap<String, AuxSpec>,
    pub terms: Vec<TermSpec>,
    /// Parameters as expressions in `t` that turn the pencil into `A_n − tI`.
    #[serde(default)]
    pub line: Option<Vec<String>>,
    #[serde(default)]
    pub map: Option<RationalMapSpec>,
    #[serde(default)]
    pub det_recursion: Option<DetRecursionSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuxSpec {
    pub blocks: Vec<Vec<String>>,
    /// Value (`0` or `I`) of the operator at level 0, needed only when the
    /// pattern refers to an auxiliary operator.
    #[serde(default)]
    pub base: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermSpec {
    pub op: String,
    pub coef: String,
}

/// `det A_n(p) = Π_j e_j(p)^{mult_j · base_j^{n−2}} · det A_{n−1}(F(p))` for
/// `n ≥ min_level`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetRecursionSpec {
    pub min_level: usize,
    pub factors: Vec<FactorSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorSpec {
    pub expr: String,
    pub mult: u32,
    pub base: u32,
}

#[derive(Clone, Debug)]
enum Operator {
    Identity,
    State(usize),
    Aux(String),
}

/// A pencil bound to an automaton, with parsed coefficients.
#[derive(Clone, Debug)]
pub struct Pencil {
    pub spec: PencilSpec,
    aut: Automaton,
    terms: Vec<(Operator, Expr)>,
    line: Option<Vec<Expr>>,
    map: Option<RationalMap>,
    factors: Vec<(Expr, u32, u32)>,
}

impl Pencil {
    pub fn new(spec: PencilSpec, aut: &Automaton) -> Result<Pencil> {
        let names: Vec<&str> = spec.params.iter().map(String::as_str).collect();
        let mut terms = Vec::new();
        for t in &spec.terms {
            let op = if t.op == "I" {
                Operator::Identity
            } else if spec.aux.contains_key(&t.op) {
                Operator::Aux(t.op.clone())
            } else if let Some(s) = aut.state_index(&t.op) {
                Operator::State(s)
            } else {
                return Err(Error::UnresolvedOperator(t.op.clone()));
            };
            let coef = Expr::parse(&t.coef, &names)?;
            if !coef.is_polynomial() {
                return Err(Error::Expr(t.coef.clone(), "coefficient must be a polynomial".into()));
            }
            terms.push((op, coef));
        }
        let k = aut.arity();
        for (name, aux) in &spec.aux {
            if aux.blocks.len() != k || aux.blocks.iter().any(|row| row.len() != k) {
                return Err(Error::AlphabetMismatch(format!(
                    "auxiliary `{name}` must be a {k}×{k} block pattern"
                )));
            }
            for block in aux.blocks.iter().flatten() {
                if block != "0" && block != "I" && !spec.aux.contains_key(block) {
                    return Err(Error::UnresolvedOperator(block.clone()));
                }
            }
        }
        let line = match &spec.line {
            Some(exprs) => {
                if exprs.len() != names.len() {
                    return Err(Error::DimensionMismatch(exprs.len(), names.len()));
                }
                Some(exprs.iter().map(|e| Expr::parse(e, &["t"])).collect::<Result<Vec<_>>>()?)
            }
            None => None,
        };
        let map = spec
            .map
            .as_ref()
            .map(|m| RationalMap::new(m, &spec.params))
            .transpose()?;
        let factors = match &spec.det_recursion {
            Some(d) => d
                .factors
                .iter()
                .map(|f| Ok((Expr::parse(&f.expr, &names)?, f.mult, f.base)))
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        Ok(Pencil {
            spec,
            aut: aut.clone(),
            terms,
            line,
            map,
            factors,
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.params.len()
    }

    pub fn map(&self) -> Option<&RationalMap> {
        self.map.as_ref()
    }

    pub fn has_det_recursion(&self) -> bool {
        self.spec.det_recursion.is_some() && self.map.is_some()
    }

    /// Parameters on the line where the pencil equals `A_n − tI`.
    pub fn line_params(&self, t: f64) -> Option<Vec<f64>> {
        self.line
            .as_ref()
            .map(|exprs| exprs.iter().map(|e| e.eval(&[t])).collect())
    }

    /// Materialises every operator at level `n` once, for repeated evaluation.
    pub fn at_level(&self, n: usize) -> Result<LevelPencil> {
        let uses_aux = self.terms.iter().any(|(op, _)| matches!(op, Operator::Aux(_)));
        if n == 0 && uses_aux {
            return Err(Error::InvalidArgument(
                "auxiliary operators are defined from level 1 on".into(),
            ));
        }
        let perms = level_permutations(&self.aut, n);
        let dim = self.aut.arity().pow(n as u32);
        let mut ops = Vec::with_capacity(self.terms.len());
        for (op, _) in &self.terms {
            ops.push(match op {
                Operator::Identity => Matrix::identity(dim, dim),
                Operator::State(s) => {
                    let mut m = Matrix::zeros(dim, dim);
                    for (v, &w) in perms[*s].iter().enumerate() {
                        m[(w, v)] = 1.0;
                    }
                    m
                }
                Operator::Aux(name) => self.aux_matrix(name, n)?,
            });
        }
        Ok(LevelPencil {
            ops,
            coefs: self.terms.iter().map(|(_, c)| c.clone()).collect(),
            dim,
        })
    }

    fn aux_matrix(&self, name: &str, n: usize) -> Result<Matrix> {
        let aux = &self.spec.aux[name];
        let dim = self.aut.arity().pow(n as u32);
        if n == 0 {
            return match aux.base.as_deref() {
                Some("I") => Ok(Matrix::identity(1, 1)),
                Some("0") => Ok(Matrix::zeros(1, 1)),
                _ => Err(Error::InvalidArgument(format!(
                    "auxiliary `{name}` has no level-0 value"
                ))),
            };
        }
        let sub = dim / self.aut.arity();
        let mut m = Matrix::zeros(dim, dim);
        for (i, row) in aux.blocks.iter().enumerate() {
            for (j, block) in row.iter().enumerate() {
                let mut view = m.view_mut((i * sub, j * sub), (sub, sub));
                match block.as_str() {
                    "0" => {}
                    "I" => view.fill_with_identity(),
                    other => view.copy_from(&self.aux_matrix(other, n - 1)?),
                }
            }
        }
        Ok(m)
    }

    pub fn assemble(&self, n: usize, params: &[f64]) -> Result<Matrix> {
        self.at_level(n)?.eval(params)
    }

    /// `Π_j e_j(p)^{mult_j · base_j^{n−2}}`.
    pub fn det_prefactor(&self, n: usize, p: &[f64]) -> f64 {
        self.factors
            .iter()
            .map(|(e, mult, base)| {
                let exp = *mult as i32 * (*base as i32).pow(n.saturating_sub(2) as u32);
                e.eval(p).powi(exp)
            })
            .product()
    }
}

/// Operators of a pencil at a fixed level.
#[derive(Clone, Debug)]
pub struct LevelPencil {
    ops: Vec<Matrix>,
    coefs: Vec<Expr>,
    dim: usize,
}

impl LevelPencil {
    pub fn eval(&self, params: &[f64]) -> Result<Matrix> {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for (op, coef) in self.ops.iter().zip(&self.coefs) {
            let c = coef.eval(params);
            if c != 0.0 {
                m += op * c;
            }
        }
        Ok(m)
    }
}

/// Assembles `A_n(params)` for a pencil spec and automaton.
pub fn assemble_pencil(spec: &PencilSpec, aut: &Automaton, n: usize, params: &[f64]) -> Result<Matrix> {
    if params.len() != spec.params.len() {
        return Err(Error::DimensionMismatch(params.len(), spec.params.len()));
    }
    Pencil::new(spec.clone(), aut)?.assemble(n, params)
}

#[derive(Clone, Debug, Serialize)]
pub struct DetReport {
    pub level: usize,
    pub points: usize,
    pub resampled: usize,
    pub max_rel_err: f64,
    pub worst_point: Vec<f64>,
    pub tol: f64,
    pub passed: bool,
}

/// Checks the determinant recursion at `points` random points of
/// `[-half_width, half_width]^d`, resampling points where `F` is within
/// [`POLE_THRESHOLD`] of a pole.
pub fn verify_det_recursion<R: Rng>(
    pencil: &Pencil,
    n: usize,
    points: usize,
    half_width: f64,
    tol: f64,
    rng: &mut R,
) -> Result<DetReport> {
    let (Some(rec), Some(map)) = (&pencil.spec.det_recursion, pencil.map()) else {
        return Err(Error::Unsupported(
            pencil.spec.name.clone(),
            "pencil has no determinant recursion".into(),
        ));
    };
    if n < rec.min_level.max(1) {
        return Err(Error::InvalidArgument(format!(
            "determinant recursion holds for n ≥ {}",
            rec.min_level
        )));
    }
    let upper = pencil.at_level(n)?;
    let lower = pencil.at_level(n - 1)?;
    let mut worst = 0.0_f64;
    let mut worst_point = Vec::new();
    let mut resampled = 0;
    let mut done = 0;
    while done < points {
        let p: Vec<f64> = (0..pencil.dim())
            .map(|_| rng.random_range(-half_width..=half_width))
            .collect();
        let (image, min_den) = map.apply_guarded(&p);
        if min_den < POLE_THRESHOLD {
            resampled += 1;
            log::debug!("resampling {p:?}: too close to a pole of F");
            continue;
        }
        let lhs = determinant(&upper.eval(&p)?);
        let rhs = pencil.det_prefactor(n, &p) * determinant(&lower.eval(&image)?);
        let err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
        if err.is_nan() || err > worst {
            worst = err;
            worst_point = p;
        }
        done += 1;
    }
    Ok(DetReport {
        level: n,
        points,
        resampled,
        max_rel_err: worst,
        worst_point,
        tol,
        passed: worst <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::matrix::adjacency_matrix;
    use nalgebra::dmatrix;

    fn pencil(id: &str) -> Pencil {
        Pencil::new(catalog::pencil(id).unwrap(), &catalog::automaton(id).unwrap()).unwrap()
    }

    #[test]
    fn grigorchuk_level_one() {
        let p = pencil("grigorchuk");
        let m = p.assemble(1, &[3.0, 1.0]).unwrap();
        assert_eq!(m, dmatrix![-1.0, 1.0; 1.0, -1.0]);
        assert_eq!(determinant(&m), 0.0);
        assert!(determinant(&p.assemble(2, &[3.0, 1.0]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn grigorchuk_recursion_at_three_one() {
        let p = pencil("grigorchuk");
        let image = p.map().unwrap().apply(&[3.0, 1.0]);
        assert!((image[0] - 12.0 / 5.0).abs() < 1e-15 && (image[1] - 2.0 / 5.0).abs() < 1e-15);
        assert_eq!(p.det_prefactor(2, &[3.0, 1.0]), 5.0);
        assert!(determinant(&p.assemble(1, &image).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn hanoi_at_y_one_is_shifted_adjacency() {
        let p = pencil("hanoi");
        let a = adjacency_matrix(&catalog::automaton("hanoi").unwrap(), 1);
        let m = p.assemble(1, &[0.7, 1.0]).unwrap();
        assert_eq!(m, a - Matrix::identity(3, 3) * 0.7);
    }

    #[test]
    fn tangled_level_one() {
        let p = pencil("tangled");
        let m = p.assemble(1, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(m, dmatrix![0.0, 2.0, 2.0; 2.0, 0.0, 0.0; 2.0, 0.0, 0.0]);
    }

    #[test]
    fn unresolved_operator() {
        let mut spec = catalog::pencil("grigorchuk").unwrap();
        spec.terms.push(TermSpec {
            op: "zz".into(),
            coef: "1".into(),
        });
        let aut = catalog::automaton("grigorchuk").unwrap();
        assert!(matches!(Pencil::new(spec, &aut), Err(Error::UnresolvedOperator(s)) if s == "zz"));
    }

    #[test]
    fn nested_aux_with_base() {
        let text = r#"{"name":"t","group":"grigorchuk","params":["x"],
            "aux":{"u":{"blocks":[["u","0"],["0","0"]],"base":"I"}},
            "terms":[{"op":"u","coef":"x"}]}"#;
        let spec: PencilSpec = serde_json::from_str(text).unwrap();
        let aut = catalog::automaton("grigorchuk").unwrap();
        let m = assemble_pencil(&spec, &aut, 2, &[2.0]).unwrap();
        assert_eq!(m, Matrix::from_diagonal(&nalgebra::dvector![2.0, 0.0, 0.0, 0.0]));
    }
}
