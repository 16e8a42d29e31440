//! Level representation matrices, determinants and Schur complements.
//!
//! Vertices of level `n` are indexed lexicographically with the first letter
//! most significant, so the `k×k` block structure of a level matrix follows
//! the first letter. The representation of a state satisfies
//! `π_n(s)[s(v)][v] = 1`.

use nalgebra::DMatrix;

use crate::automaton::{Automaton, GroupWord, TreeWord};
use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Level-`n` permutations of every state, computed by the wreath recursion
/// `s(x·w) = α_s(x)·s_x(w)` one level at a time.
///
/// `perms[s][v]` is the index of `s(v)`.
pub fn level_permutations(aut: &Automaton, n: usize) -> Vec<Vec<usize>> {
    let k = aut.arity();
    let mut cur: Vec<Vec<usize>> = vec![vec![0]; aut.states().len()];
    for level in 1..=n {
        let sub = k.pow(level as u32 - 1);
        cur = aut
            .states()
            .iter()
            .map(|st| {
                let mut p = vec![0; sub * k];
                for x in 0..k {
                    let inner = &cur[st.sections[x]];
                    let y = st.perm[x];
                    for w in 0..sub {
                        p[x * sub + w] = y * sub + inner[w];
                    }
                }
                p
            })
            .collect();
    }
    cur
}

/// Permutation of `X^n` induced by a group word, computed vertex by vertex
/// with [`Automaton::act_word`].
pub fn action_permutation(aut: &Automaton, g: &GroupWord, n: usize) -> Vec<usize> {
    let k = aut.arity();
    (0..k.pow(n as u32))
        .map(|v| aut.act_word(g, &TreeWord::from_index(v, k, n)).to_index(k))
        .collect()
}

pub fn permutation_matrix(perm: &[usize]) -> Matrix {
    let mut m = Matrix::zeros(perm.len(), perm.len());
    for (v, &w) in perm.iter().enumerate() {
        m[(w, v)] = 1.0;
    }
    m
}

/// `π_n(s)` assembled from blocks: block `(α_s(x), x)` is `π_{n-1}(s_x)`, all
/// other blocks vanish, and `π_0(s) = [1]`.
pub fn rep_matrix(aut: &Automaton, s: usize, n: usize) -> Matrix {
    if n == 0 {
        return Matrix::from_element(1, 1, 1.0);
    }
    let k = aut.arity();
    let sub = k.pow(n as u32 - 1);
    let st = aut.state(s);
    let mut m = Matrix::zeros(sub * k, sub * k);
    for x in 0..k {
        let block = rep_matrix(aut, st.sections[x], n - 1);
        m.view_mut((st.perm[x] * sub, x * sub), (sub, sub)).copy_from(&block);
    }
    m
}

/// `A_n = Σ_{s∈S} π_n(s)` over the automaton's symmetric generating set.
pub fn adjacency_matrix(aut: &Automaton, n: usize) -> Matrix {
    adjacency_from(aut, aut.generators(), n)
}

pub fn adjacency_from(aut: &Automaton, gens: &[usize], n: usize) -> Matrix {
    let perms = level_permutations(aut, n);
    let dim = aut.arity().pow(n as u32);
    let mut m = Matrix::zeros(dim, dim);
    for &s in gens {
        for (v, &w) in perms[s].iter().enumerate() {
            m[(w, v)] += 1.0;
        }
    }
    m
}

/// Determinant by partial-pivot LU. An exactly singular matrix gives 0.
pub fn determinant(m: &Matrix) -> f64 {
    m.clone().lu().determinant()
}

/// Largest `|m_ij − m_ji|`.
pub fn asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |a, &v| a.max(v.abs()))
}

/// Split of the index set into a kept top block `T` and an eliminated block `B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchurPartition {
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
}

impl SchurPartition {
    pub fn new(top: Vec<usize>, bottom: Vec<usize>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        for &i in top.iter().chain(&bottom) {
            if i >= dim || seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "partition index {i} repeated or outside 0..{dim}"
                )));
            }
            seen[i] = true;
        }
        if top.len() + bottom.len() != dim {
            return Err(Error::InvalidArgument("partition does not cover every index".into()));
        }
        Ok(SchurPartition { top, bottom })
    }

    /// Top block = indices satisfying `keep`, in increasing order.
    pub fn from_predicate(dim: usize, keep: impl Fn(usize) -> bool) -> Self {
        let (top, bottom) = (0..dim).partition(|&i| keep(i));
        SchurPartition { top, bottom }
    }
}

pub fn submatrix(m: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `A − B·D⁻¹·C` where `A` is the top block and `D` the bottom block.
///
/// Fails with [`Error::SingularBlock`] when `D` is numerically singular.
pub fn schur_complement(m: &Matrix, p: &SchurPartition) -> Result<Matrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(m.nrows(), m.ncols()));
    }
    if p.top.len() + p.bottom.len() != m.nrows() {
        return Err(Error::DimensionMismatch(p.top.len() + p.bottom.len(), m.nrows()));
    }
    let a = submatrix(m, &p.top, &p.top);
    if p.bottom.is_empty() {
        return Ok(a);
    }
    let b = submatrix(m, &p.top, &p.bottom);
    let c = submatrix(m, &p.bottom, &p.top);
    let d = submatrix(m, &p.bottom, &p.bottom);
    let scale = max_abs(&d).max(f64::MIN_POSITIVE);
    let lu = d.full_piv_lu();
    let u = lu.u();
    let smallest = (0..u.nrows()).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if smallest.is_nan() || smallest <= 1e-13 * scale {
        return Err(Error::SingularBlock);
    }
    let x = lu.solve(&c).ok_or(Error::SingularBlock)?;
    Ok(a - b * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use nalgebra::dmatrix;

    #[test]
    fn grigorchuk_a1_and_base() {
        let g = catalog::automaton("grigorchuk").unwrap();
        let a = g.state_index("a").unwrap();
        assert_eq!(rep_matrix(&g, a, 1), dmatrix![0.0, 1.0; 1.0, 0.0]);
        for s in 0..g.states().len() {
            assert_eq!(rep_matrix(&g, s, 0), dmatrix![1.0]);
        }
    }

    #[test]
    fn grigorchuk_b2_is_blockdiag_a1_c1() {
        let g = catalog::automaton("grigorchuk").unwrap();
        let b = g.state_index("b").unwrap();
        let m = rep_matrix(&g, b, 2);
        let expected = Matrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        );
        assert_eq!(m, expected);
        let word = GroupWord::single(b);
        assert_eq!(m, permutation_matrix(&action_permutation(&g, &word, 2)));
    }

    #[test]
    fn small_adjacency_matrices() {
        let g = catalog::automaton("grigorchuk").unwrap();
        assert_eq!(adjacency_matrix(&g, 1), dmatrix![3.0, 1.0; 1.0, 3.0]);
        let h = catalog::automaton("hanoi").unwrap();
        assert_eq!(adjacency_matrix(&h, 1), Matrix::from_element(3, 3, 1.0));
        for id in catalog::ids() {
            let aut = catalog::automaton(id).unwrap();
            assert_eq!(adjacency_matrix(&aut, 0)[(0, 0)], aut.generators().len() as f64, "{id}");
        }
    }

    #[test]
    fn determinants() {
        assert_eq!(determinant(&dmatrix![-1.0, 1.0; 1.0, -1.0]), 0.0);
        assert_eq!(determinant(&Matrix::identity(4, 4)), 1.0);
    }

    #[test]
    fn schur_examples() {
        let m = dmatrix![2.0, 1.0; 1.0, 2.0];
        let p = SchurPartition::new(vec![0], vec![1], 2).unwrap();
        assert_eq!(schur_complement(&m, &p).unwrap(), dmatrix![1.5]);

        let m = dmatrix![1.0, 2.0, 0.0; 2.0, 5.0, 0.0; 0.0, 0.0, 7.0];
        let p = SchurPartition::new(vec![0, 1], vec![2], 3).unwrap();
        assert_eq!(schur_complement(&m, &p).unwrap(), dmatrix![1.0, 2.0; 2.0, 5.0]);

        let m = dmatrix![1.0, 1.0; 1.0, 0.0];
        assert!(matches!(schur_complement(&m, &p_one()), Err(Error::SingularBlock)));
    }

    fn p_one() -> SchurPartition {
        SchurPartition::new(vec![0], vec![1], 2).unwrap()
    }

    #[test]
    fn bad_partitions() {
        assert!(SchurPartition::new(vec![0], vec![0], 2).is_err());
        assert!(SchurPartition::new(vec![0], vec![], 2).is_err());
        assert!(SchurPartition::new(vec![0], vec![2], 2).is_err());
    }
}
