//! Level Schreier graphs, coverings between levels and orbital balls.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write;

use crate::automaton::{Automaton, GroupWord, TreeWord};
use crate::error::Result;
use crate::ray::{act_ray, Ray};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    /// Position of the generator in [`SchreierGraph::labels`].
    pub label: usize,
    pub target: usize,
}

/// `Γ_n`: vertices `X^n` in lexicographic order, one edge `v → s(v)` per
/// generator and vertex. Loops and multi-edges are kept.
#[derive(Clone, Debug, PartialEq)]
pub struct SchreierGraph {
    pub level: usize,
    pub arity: usize,
    pub labels: Vec<String>,
    /// Whether each generator is an involution (drawn undirected in DOT).
    pub involution: Vec<bool>,
    /// For each generator, the position of its inverse in `labels` if present.
    pub inverse: Vec<Option<usize>>,
    /// Edges ordered by vertex, then generator.
    pub edges: Vec<Edge>,
}

pub fn build_level_graph(aut: &Automaton, gens: &[usize], n: usize) -> SchreierGraph {
    let k = aut.arity();
    let size = k.pow(n as u32);
    let mut edges = Vec::with_capacity(size * gens.len());
    for v in 0..size {
        let word = TreeWord::from_index(v, k, n);
        for (label, &s) in gens.iter().enumerate() {
            let target = aut.act_word(&GroupWord::single(s), &word).to_index(k);
            edges.push(Edge {
                source: v,
                label,
                target,
            });
        }
    }
    SchreierGraph {
        level: n,
        arity: k,
        labels: gens.iter().map(|&s| aut.state(s).name.clone()).collect(),
        involution: gens.iter().map(|&s| aut.is_involution(s)).collect(),
        inverse: gens
            .iter()
            .map(|&s| gens.iter().position(|&t| t == aut.inverse_of(s)))
            .collect(),
        edges,
    }
}

impl SchreierGraph {
    pub fn vertex_count(&self) -> usize {
        self.arity.pow(self.level as u32)
    }

    pub fn vertex_name(&self, v: usize) -> String {
        TreeWord::from_index(v, self.arity, self.level).to_string()
    }

    /// Target of the edge labelled `label` leaving `v`.
    pub fn target(&self, v: usize, label: usize) -> usize {
        self.edges[v * self.labels.len() + label].target
    }

    /// Every vertex has in- and out-degree `|S|` and there are `|S|·k^n` edges.
    pub fn is_regular(&self) -> bool {
        let s = self.labels.len();
        let n = self.vertex_count();
        if self.edges.len() != s * n {
            return false;
        }
        let mut indeg = vec![0usize; n];
        let mut outdeg = vec![0usize; n];
        for e in &self.edges {
            outdeg[e.source] += 1;
            indeg[e.target] += 1;
        }
        indeg.iter().chain(&outdeg).all(|&d| d == s)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.source].push(e.target);
            adj[e.target].push(e.source);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// DOT digraph. Involutions are drawn once per unordered pair with
    /// `dir=none`; of a generator and its inverse only the first is drawn.
    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
        for v in 0..self.vertex_count() {
            let _ = writeln!(out, "  \"{}\";", self.vertex_name(v));
        }
        for e in &self.edges {
            let (src, dst) = (self.vertex_name(e.source), self.vertex_name(e.target));
            let label = escape(&self.labels[e.label]);
            if self.involution[e.label] {
                if e.source <= e.target {
                    let _ = writeln!(out, "  \"{src}\" -> \"{dst}\" [label=\"{label}\", dir=none];");
                }
                continue;
            }
            if matches!(self.inverse[e.label], Some(i) if i < e.label) {
                continue;
            }
            let _ = writeln!(out, "  \"{src}\" -> \"{dst}\" [label=\"{label}\"];");
        }
        out.push_str("}\n");
        out
    }

    /// CSV with header `source,label,target`, one row per edge.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,label,target\n");
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.vertex_name(e.source),
                self.labels[e.label],
                self.vertex_name(e.target)
            );
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Checks that deleting the last letter maps `big = Γ_{n+1}` onto `small = Γ_n`
/// as a `k`-to-1 graph covering.
pub fn covering_check(big: &SchreierGraph, small: &SchreierGraph) -> bool {
    if big.labels != small.labels || big.arity != small.arity || big.level != small.level + 1 {
        return false;
    }
    if !big.is_regular() || !small.is_regular() {
        return false;
    }
    let k = big.arity;
    let mut fibre = vec![0usize; small.vertex_count()];
    for v in 0..big.vertex_count() {
        fibre[v / k] += 1;
    }
    if fibre.iter().any(|&c| c != k) {
        return false;
    }
    big.edges
        .iter()
        .all(|e| small.target(e.source / k, e.label) == e.target / k)
}

/// Ball of radius `r` around a boundary ray in its orbital Schreier graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphBall {
    pub center: Ray,
    pub radius: usize,
    /// Vertices in breadth-first order; `vertices[0]` is the center.
    pub vertices: Vec<Ray>,
    pub distance: Vec<usize>,
    pub labels: Vec<String>,
    /// Edges with both endpoints in the ball.
    pub edges: Vec<Edge>,
}

pub fn orbital_ball(aut: &Automaton, gens: &[usize], xi: &Ray, r: usize) -> Result<GraphBall> {
    let mut index: HashMap<Ray, usize> = HashMap::new();
    let mut vertices = vec![xi.clone()];
    let mut distance = vec![0];
    index.insert(xi.clone(), 0);
    let mut pending = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for (label, &s) in gens.iter().enumerate() {
            let image = act_ray(aut, &GroupWord::single(s), &vertices[v])?;
            if !index.contains_key(&image) && distance[v] < r {
                index.insert(image.clone(), vertices.len());
                queue.push_back(vertices.len());
                vertices.push(image.clone());
                distance.push(distance[v] + 1);
            }
            pending.push((v, label, image));
        }
    }
    let edges = pending
        .into_iter()
        .filter_map(|(source, label, image)| {
            index.get(&image).map(|&target| Edge {
                source,
                label,
                target,
            })
        })
        .collect();
    Ok(GraphBall {
        center: xi.clone(),
        radius: r,
        vertices,
        distance,
        labels: gens.iter().map(|&s| aut.state(s).name.clone()).collect(),
        edges,
    })
}
