//! Contraction check and nucleus computation.
//!
//! Starting from the generators, the candidate set `N` is replaced by the
//! recurrent part of the section closure of `N·N` until it stabilises. An
//! element is recurrent when it is reachable from a cycle of the section graph.
//! The result is a nucleus when every section of `N·N` at depth `r` lies in `N`.

use std::collections::HashMap;

use crate::automaton::{mealy_classes, Automaton, GroupWord};

const MAX_ITERATIONS: usize = 64;
const MAX_NUCLEUS: usize = 4096;
const MAX_UNIVERSE: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Contraction {
    /// The nucleus, sorted by length then letters; `min_radius` is the
    /// smallest depth at which sections of `N·N` land in `N`.
    Contracting {
        nucleus: Vec<GroupWord>,
        min_radius: usize,
    },
    NotContracting {
        radius: usize,
        reason: String,
    },
}

impl Contraction {
    pub fn is_contracting(&self) -> bool {
        matches!(self, Contraction::Contracting { .. })
    }

    pub fn nucleus(&self) -> Option<&[GroupWord]> {
        match self {
            Contraction::Contracting { nucleus, .. } => Some(nucleus),
            Contraction::NotContracting { .. } => None,
        }
    }
}

/// Section-closed set of words with its Mealy table and equivalence classes.
struct Universe {
    words: Vec<Vec<usize>>,
    succ: Vec<Vec<usize>>,
    class: Vec<usize>,
    classes: usize,
}

impl Universe {
    fn build(aut: &Automaton, seeds: &[Vec<usize>]) -> Option<Universe> {
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut words: Vec<Vec<usize>> = Vec::new();
        for w in seeds {
            if !index.contains_key(w) {
                index.insert(w.clone(), words.len());
                words.push(w.clone());
            }
        }
        let mut perms = Vec::new();
        let mut succ = Vec::new();
        let mut i = 0;
        while i < words.len() {
            if words.len() > MAX_UNIVERSE {
                return None;
            }
            let (perm, sections) = aut.word_recursion(&words[i]);
            let row = sections
                .into_iter()
                .map(|s| {
                    *index.entry(s.clone()).or_insert_with(|| {
                        words.push(s);
                        words.len() - 1
                    })
                })
                .collect();
            perms.push(perm);
            succ.push(row);
            i += 1;
        }
        let class = mealy_classes(&perms, &succ);
        let classes = class.iter().max().map_or(0, |m| m + 1);
        Some(Universe {
            words,
            succ,
            class,
            classes,
        })
    }

    /// Class-level section graph.
    fn class_edges(&self) -> Vec<Vec<usize>> {
        let mut edges = vec![Vec::new(); self.classes];
        for (i, row) in self.succ.iter().enumerate() {
            let c = self.class[i];
            if edges[c].is_empty() {
                edges[c] = row.iter().map(|&j| self.class[j]).collect();
            }
        }
        edges
    }

    /// Shortest (then lexicographically least) word of every class.
    fn representatives(&self) -> Vec<Vec<usize>> {
        let mut rep: Vec<Option<&Vec<usize>>> = vec![None; self.classes];
        for (i, w) in self.words.iter().enumerate() {
            let c = self.class[i];
            let better = match rep[c] {
                None => true,
                Some(r) => (w.len(), w) < (r.len(), r),
            };
            if better {
                rep[c] = Some(w);
            }
        }
        rep.into_iter().map(|r| r.expect("class is nonempty").clone()).collect()
    }
}

/// Classes reachable from a cycle, found by peeling classes of in-degree zero.
fn recurrent(edges: &[Vec<usize>]) -> Vec<bool> {
    let n = edges.len();
    let mut indeg = vec![0usize; n];
    for row in edges {
        for &j in row {
            indeg[j] += 1;
        }
    }
    let mut alive = vec![true; n];
    let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    while let Some(i) = stack.pop() {
        alive[i] = false;
        for &j in &edges[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                stack.push(j);
            }
        }
    }
    alive
}

fn products(nucleus: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    out.extend(nucleus.iter().cloned());
    for g in nucleus {
        for h in nucleus {
            let mut w = g.clone();
            w.extend_from_slice(h);
            out.push(w);
        }
    }
    out
}

/// Tries to certify that the group generated by `aut` is contracting with a
/// nucleus reached within `radius` levels.
pub fn check_contracting(aut: &Automaton, radius: usize) -> Contraction {
    let fail = |reason: String| Contraction::NotContracting { radius, reason };

    let mut current: Vec<Vec<usize>> = vec![Vec::new()];
    for &g in aut.generators() {
        let w = aut.strip_trivial(&[g]);
        if !current.contains(&w) {
            current.push(w);
        }
    }
    current.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));

    for _ in 0..MAX_ITERATIONS {
        let seeds = products(&current);
        let Some(universe) = Universe::build(aut, &seeds) else {
            return fail(format!("section closure exceeded {MAX_UNIVERSE} words"));
        };
        let edges = universe.class_edges();
        let alive = recurrent(&edges);
        let reps = universe.representatives();
        let mut next: Vec<Vec<usize>> = (0..universe.classes)
            .filter(|&c| alive[c])
            .map(|c| reps[c].clone())
            .collect();
        next.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        if next.len() > MAX_NUCLEUS {
            return fail(format!("candidate nucleus exceeded {MAX_NUCLEUS} elements"));
        }
        if next == current {
            let min_radius = absorption_depth(&universe, &edges, &alive, &seeds);
            if min_radius <= radius {
                return Contraction::Contracting {
                    nucleus: current.into_iter().map(GroupWord::new).collect(),
                    min_radius,
                };
            }
            return fail(format!(
                "sections of N·N need depth {min_radius} to reach the nucleus"
            ));
        }
        current = next;
    }
    fail(format!("candidate set did not stabilise in {MAX_ITERATIONS} rounds"))
}

/// Largest depth after which every section of a seed is in the recurrent set.
fn absorption_depth(u: &Universe, edges: &[Vec<usize>], alive: &[bool], seeds: &[Vec<usize>]) -> usize {
    // depth[c] = 0 for recurrent classes; otherwise 1 + max over sections.
    // Non-recurrent classes form a DAG, so memoised DFS terminates.
    let mut depth: Vec<Option<usize>> = vec![None; u.classes];
    fn visit(c: usize, edges: &[Vec<usize>], alive: &[bool], depth: &mut Vec<Option<usize>>) -> usize {
        if alive[c] {
            return 0;
        }
        if let Some(d) = depth[c] {
            return d;
        }
        let d = 1 + edges[c]
            .iter()
            .map(|&j| visit(j, edges, alive, depth))
            .max()
            .unwrap_or(0);
        depth[c] = Some(d);
        d
    }
    let index: HashMap<&Vec<usize>, usize> = u.words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    seeds
        .iter()
        .map(|w| visit(u.class[index[w]], edges, alive, &mut depth))
        .max()
        .unwrap_or(0)
}
