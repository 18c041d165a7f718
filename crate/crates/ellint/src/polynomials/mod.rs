//! Kirchhoff polynomials, cut sets and the graph matrix M(t).

mod collapse;
mod rational;
mod schwinger;

pub use collapse::{flat_collapse_check, CollapseReport, FlatTestFunction};
pub use rational::{a_constant, a_constant_numeric, RationalConstant};
pub use schwinger::{schwinger_integral, SchwingerResult};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DecoratedGraph;

/// Positive Schwinger times, one per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SchwingerVector {
    t: Vec<f64>,
}

impl SchwingerVector {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if let Some(bad) = t.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidControl(format!("Schwinger time must be positive, got {bad}")));
        }
        Ok(SchwingerVector { t })
    }

    pub fn ones(n: usize) -> Self {
        SchwingerVector { t: vec![1.0; n] }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Drop entry `e` (edge removed by contraction or deletion).
    pub fn without(&self, e: usize) -> Self {
        let mut t = self.t.clone();
        t.remove(e);
        SchwingerVector { t }
    }
}

fn check_len(g: &DecoratedGraph, t: &SchwingerVector) -> Result<()> {
    if t.len() != g.n_edges() {
        return Err(Error::InvalidControl(format!(
            "{} Schwinger times for {} edges",
            t.len(),
            g.n_edges()
        )));
    }
    Ok(())
}

/// Vertex-by-edge matrix with +1 at the head and -1 at the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    pub entries: DMatrix<i8>,
}

pub fn incidence(g: &DecoratedGraph) -> Result<IncidenceMatrix> {
    let mut m = DMatrix::zeros(g.n_vertices(), g.n_edges());
    for (k, e) in g.edges().iter().enumerate() {
        if e.is_self_loop() {
            return Err(Error::SelfLoopPresent(k));
        }
        m[(e.head, k)] = 1;
        m[(e.tail, k)] = -1;
    }
    Ok(IncidenceMatrix { entries: m })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasedGraphMatrix {
    pub base: usize,
    /// Vertex index of each row/column.
    pub rows: Vec<usize>,
    pub matrix: DMatrix<f64>,
    pub t: SchwingerVector,
}

fn require_connected(g: &DecoratedGraph) -> Result<()> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(())
}

pub fn graph_matrix(g: &DecoratedGraph, t: &SchwingerVector, base: usize) -> Result<BasedGraphMatrix> {
    let rho = incidence(g)?;
    require_connected(g)?;
    check_len(g, t)?;
    if base >= g.n_vertices() {
        return Err(Error::InvalidVertexIndex(base));
    }
    let rows: Vec<usize> = (0..g.n_vertices()).filter(|&v| v != base).collect();
    let n = rows.len();
    let mut m = DMatrix::zeros(n, n);
    for (k, &te) in t.as_slice().iter().enumerate() {
        for (i, &vi) in rows.iter().enumerate() {
            let ri = rho.entries[(vi, k)] as f64;
            if ri == 0.0 {
                continue;
            }
            for (j, &vj) in rows.iter().enumerate() {
                m[(i, j)] += ri * rho.entries[(vj, k)] as f64 / te;
            }
        }
    }
    Ok(BasedGraphMatrix { base, rows, matrix: m, t: t.clone() })
}

/// Lexicographic k-subsets of `items`.
fn for_each_subset<F: FnMut(&[usize])>(items: &[usize], k: usize, f: &mut F) {
    fn rec<F: FnMut(&[usize])>(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut F) {
        if cur.len() == k {
            f(cur);
            return;
        }
        let need = k - cur.len();
        for i in start..=items.len().saturating_sub(need) {
            if items.len() < need {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, f);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::with_capacity(k), f)
}

/// Union-find over the vertices touched by `edges`; None if they contain a cycle.
fn forest_labels(g: &DecoratedGraph, edges: &[usize]) -> Option<Vec<usize>> {
    let mut parent: Vec<usize> = (0..g.n_vertices()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &k in edges {
        let e = g.edges()[k];
        let (a, b) = (find(&mut parent, e.head), find(&mut parent, e.tail));
        if a == b {
            return None;
        }
        parent[a.max(b)] = a.min(b);
    }
    Some((0..g.n_vertices()).map(|v| find(&mut parent, v)).collect())
}

fn non_loop_edges(g: &DecoratedGraph) -> Vec<usize> {
    (0..g.n_edges()).filter(|&k| !g.edges()[k].is_self_loop()).collect()
}

/// All spanning trees as sorted edge-index lists, in lexicographic order.
pub fn spanning_trees(g: &DecoratedGraph) -> Result<Vec<Vec<usize>>> {
    require_connected(g)?;
    let size = g.n_vertices().saturating_sub(1);
    let mut out = Vec::new();
    for_each_subset(&non_loop_edges(g), size, &mut |s| {
        if forest_labels(g, s).is_some() {
            out.push(s.to_vec());
        }
    });
    Ok(out)
}

/// det M(t) for the based graph matrix (LU factorization).
pub fn kirchhoff_det(g: &DecoratedGraph, t: &SchwingerVector, base: usize) -> Result<f64> {
    let m = graph_matrix(g, t, base)?;
    if m.matrix.nrows() == 0 {
        return Ok(1.0);
    }
    Ok(m.matrix.lu().determinant())
}

/// P(t) = sum over spanning trees of the product of t_e over edges not in the tree.
pub fn tree_polynomial(g: &DecoratedGraph, t: &SchwingerVector) -> Result<f64> {
    check_len(g, t)?;
    let trees = spanning_trees(g)?;
    Ok(tree_polynomial_from(&trees, t))
}

/// P(t) with the empty-sum convention: 0 for a disconnected graph.
pub fn tree_polynomial_or_zero(g: &DecoratedGraph, t: &SchwingerVector) -> Result<f64> {
    if !g.is_connected() {
        check_len(g, t)?;
        return Ok(0.0);
    }
    tree_polynomial(g, t)
}

pub(crate) fn tree_polynomial_from(trees: &[Vec<usize>], t: &SchwingerVector) -> f64 {
    let mut s = 0.0;
    for tree in trees {
        // product over the complement, computed directly to avoid dividing
        let mut p = 1.0;
        let mut it = tree.iter().peekable();
        for (k, &te) in t.as_slice().iter().enumerate() {
            if it.peek() == Some(&&k) {
                it.next();
            } else {
                p *= te;
            }
        }
        s += p;
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CutSet {
    pub edges: Vec<usize>,
    pub side1: Vec<usize>,
    pub side2: Vec<usize>,
}

/// Edge sets C such that removing C leaves exactly two trees, one containing
/// `seeds1` and the other `seeds2`.
pub fn cuts(g: &DecoratedGraph, seeds1: &[usize], seeds2: &[usize]) -> Result<Vec<CutSet>> {
    for &v in seeds1.iter().chain(seeds2) {
        if v >= g.n_vertices() {
            return Err(Error::InvalidVertexIndex(v));
        }
    }
    if seeds1.iter().any(|v| seeds2.contains(v)) {
        return Err(Error::SeedsOverlap);
    }
    let n = g.n_vertices();
    if n < 2 || seeds1.is_empty() || seeds2.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for_each_subset(&non_loop_edges(g), n - 2, &mut |forest| {
        let Some(label) = forest_labels(g, forest) else { return };
        let r1 = label[seeds1[0]];
        let r2 = label[seeds2[0]];
        if r1 == r2 || seeds1.iter().any(|&v| label[v] != r1) || seeds2.iter().any(|&v| label[v] != r2) {
            return;
        }
        let edges: Vec<usize> = (0..g.n_edges()).filter(|k| !forest.contains(k)).collect();
        let side1 = (0..n).filter(|&v| label[v] == r1).collect();
        let side2 = (0..n).filter(|&v| label[v] == r2).collect();
        out.push(CutSet { edges, side1, side2 });
    });
    Ok(out)
}

/// Inverse of M(t) from the cut formula: A_ij = sum_{C in Cut({v_i, v_j}, {base})} prod_{e in C} t_e / P(t).
pub fn inverse_via_cuts(g: &DecoratedGraph, t: &SchwingerVector, base: usize) -> Result<DMatrix<f64>> {
    let m = graph_matrix(g, t, base)?;
    let p = tree_polynomial(g, t)?;
    let n = m.rows.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let seeds: Vec<usize> = if i == j { vec![m.rows[i]] } else { vec![m.rows[i], m.rows[j]] };
            let s: f64 = cuts(g, &seeds, &[base])?
                .iter()
                .map(|c| c.edges.iter().map(|&e| t.as_slice()[e]).product::<f64>())
                .sum();
            a[(i, j)] = s / p;
            a[(j, i)] = s / p;
        }
    }
    Ok(a)
}

/// (sum_i rho_{v(i),e} A_{ij}) / t_e with A = M^{-1} from the cut formula;
/// `j` indexes the non-base vertices in increasing order.
pub fn edge_coeff(g: &DecoratedGraph, t: &SchwingerVector, base: usize, e: usize, j: usize) -> Result<f64> {
    let a = inverse_via_cuts(g, t, base)?;
    edge_coeff_from(g, t, base, &a, e, j)
}

fn edge_coeff_from(
    g: &DecoratedGraph,
    t: &SchwingerVector,
    base: usize,
    a: &DMatrix<f64>,
    e: usize,
    j: usize,
) -> Result<f64> {
    let edge = *g.edge(e)?;
    if j >= a.ncols() {
        return Err(Error::InvalidVertexIndex(j));
    }
    let row = |v: usize| if v < base { Some(v) } else if v > base { Some(v - 1) } else { None };
    let mut s = 0.0;
    if let Some(i) = row(edge.head) {
        s += a[(i, j)];
    }
    if let Some(i) = row(edge.tail) {
        s -= a[(i, j)];
    }
    Ok(s / t.as_slice()[e])
}

/// max over edges e and columns j of |edge_coeff|.
pub fn edge_coeff_bound(g: &DecoratedGraph, t: &SchwingerVector, base: usize) -> Result<f64> {
    let a = inverse_via_cuts(g, t, base)?;
    let mut best: f64 = 0.0;
    for e in 0..g.n_edges() {
        for j in 0..a.ncols() {
            best = best.max(edge_coeff_from(g, t, base, &a, e, j)?.abs());
        }
    }
    Ok(best)
}
