//! Decorated directed multigraphs.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub head: usize,
    pub tail: usize,
    /// Number of extra holomorphic derivatives on this edge's propagator.
    pub n: u32,
}

impl Edge {
    pub fn is_self_loop(&self) -> bool {
        self.head == self.tail
    }
}

/// Vertices are addressed by position; names are kept for I/O.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoratedGraph {
    names: Vec<String>,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphClass {
    pub connected: bool,
    pub self_loop_edges: Vec<usize>,
    pub multi_edge_pairs: Vec<(usize, usize)>,
    pub simple: bool,
}

/// Edge record of the JSON graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub head: String,
    pub tail: String,
    pub n: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

pub fn build_graph<S: AsRef<str>>(vertices: &[S], edges: &[(S, S, i64)]) -> Result<DecoratedGraph> {
    let mut index = HashMap::new();
    for (i, v) in vertices.iter().enumerate() {
        if index.insert(v.as_ref().to_string(), i).is_some() {
            return Err(Error::DuplicateVertex(v.as_ref().to_string()));
        }
    }
    let lookup = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    };
    let mut out = Vec::with_capacity(edges.len());
    for (k, (h, t, n)) in edges.iter().enumerate() {
        let head = lookup(h.as_ref())?;
        let tail = lookup(t.as_ref())?;
        if *n < 0 || *n > u32::MAX as i64 {
            return Err(Error::NegativeDecoration { edge: k, n: *n });
        }
        out.push(Edge { head, tail, n: *n as u32 });
    }
    Ok(DecoratedGraph {
        names: vertices.iter().map(|v| v.as_ref().to_string()).collect(),
        edges: out,
    })
}

impl DecoratedGraph {
    /// Graph on vertices named `v0..v{n-1}` from index triples.
    pub fn from_indices(n_vertices: usize, edges: &[(usize, usize, u32)]) -> Result<Self> {
        let mut out = Vec::with_capacity(edges.len());
        for &(head, tail, n) in edges {
            for v in [head, tail] {
                if v >= n_vertices {
                    return Err(Error::InvalidVertexIndex(v));
                }
            }
            out.push(Edge { head, tail, n });
        }
        Ok(DecoratedGraph {
            names: (0..n_vertices).map(|i| format!("v{i}")).collect(),
            edges: out,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Result<&Edge> {
        self.edges.get(e).ok_or(Error::InvalidEdgeIndex(e))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    /// Sum of n_e + 2 over edges: the modular weight of the graph integral.
    pub fn weight(&self) -> u32 {
        self.edges.iter().map(|e| e.n + 2).sum()
    }

    pub fn is_undecorated(&self) -> bool {
        self.edges.iter().all(|e| e.n == 0)
    }

    pub fn contract_edge(&self, e: usize) -> Result<DecoratedGraph> {
        let edge = *self.edge(e)?;
        if edge.is_self_loop() {
            return Err(Error::SelfLoopContraction(e));
        }
        let keep = edge.head.min(edge.tail);
        let gone = edge.head.max(edge.tail);
        let relabel = |v: usize| {
            let v = if v == gone { keep } else { v };
            if v > gone {
                v - 1
            } else {
                v
            }
        };
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != e)
            .map(|(_, x)| Edge { head: relabel(x.head), tail: relabel(x.tail), n: x.n })
            .collect();
        let mut names = self.names.clone();
        names.remove(gone);
        Ok(DecoratedGraph { names, edges })
    }

    pub fn delete_edge(&self, e: usize) -> Result<DecoratedGraph> {
        self.edge(e)?;
        let mut edges = self.edges.clone();
        edges.remove(e);
        Ok(DecoratedGraph { names: self.names.clone(), edges })
    }

    /// Same graph with edge `e` pointing the other way.
    pub fn reverse_edge(&self, e: usize) -> Result<DecoratedGraph> {
        self.edge(e)?;
        let mut g = self.clone();
        let x = &mut g.edges[e];
        std::mem::swap(&mut x.head, &mut x.tail);
        Ok(g)
    }

    /// Relabel vertices: old vertex `v` becomes `perm[v]`. Edge order is kept.
    pub fn permute_vertices(&self, perm: &[usize]) -> Result<DecoratedGraph> {
        let n = self.n_vertices();
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(Error::InvalidVertexIndex(perm.len()));
        }
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidVertexIndex(p));
            }
            seen[p] = true;
        }
        let mut names = vec![String::new(); n];
        for (v, &p) in perm.iter().enumerate() {
            names[p] = self.names[v].clone();
        }
        let edges = self
            .edges
            .iter()
            .map(|x| Edge { head: perm[x.head], tail: perm[x.tail], n: x.n })
            .collect();
        Ok(DecoratedGraph { names, edges })
    }

    /// Disjoint union; vertex names of `other` get a suffix if they clash.
    pub fn disjoint_union(&self, other: &DecoratedGraph) -> DecoratedGraph {
        let off = self.n_vertices();
        let mut names = self.names.clone();
        for name in &other.names {
            let mut candidate = name.clone();
            while names.contains(&candidate) {
                candidate.push('\'');
            }
            names.push(candidate);
        }
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|x| Edge { head: x.head + off, tail: x.tail + off, n: x.n }));
        DecoratedGraph { names, edges }
    }

    /// Component label per vertex, numbered in order of first vertex.
    pub fn component_labels(&self) -> (Vec<usize>, usize) {
        let n = self.n_vertices();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let a = find(&mut parent, e.head);
            let b = find(&mut parent, e.tail);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut root_label = HashMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            let l = *root_label.entry(r).or_insert_with(|| {
                next += 1;
                next - 1
            });
            label[v] = l;
        }
        (label, next)
    }

    pub fn n_components(&self) -> usize {
        self.component_labels().1
    }

    pub fn is_connected(&self) -> bool {
        self.n_components() <= 1
    }

    /// Connected components as subgraphs, each with the vertex map back to `self`.
    pub fn components(&self) -> Vec<(DecoratedGraph, Vec<usize>)> {
        let (label, count) = self.component_labels();
        let mut out = Vec::with_capacity(count);
        for c in 0..count {
            let verts: Vec<usize> = (0..self.n_vertices()).filter(|&v| label[v] == c).collect();
            let mut local = vec![usize::MAX; self.n_vertices()];
            for (i, &v) in verts.iter().enumerate() {
                local[v] = i;
            }
            let edges = self
                .edges
                .iter()
                .filter(|x| label[x.head] == c)
                .map(|x| Edge { head: local[x.head], tail: local[x.tail], n: x.n })
                .collect();
            let names = verts.iter().map(|&v| self.names[v].clone()).collect();
            out.push((DecoratedGraph { names, edges }, verts));
        }
        out
    }

    /// True if removing edge `e` increases the number of components.
    pub fn is_bridge(&self, e: usize) -> Result<bool> {
        let before = self.n_components();
        let after = self.delete_edge(e)?.n_components();
        Ok(after > before)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.head == v) as usize + (e.tail == v) as usize)
            .sum()
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            vertices: self.names.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    head: self.names[e.head].clone(),
                    tail: self.names[e.tail].clone(),
                    n: e.n as i64,
                })
                .collect(),
        }
    }

    pub fn from_file(f: &GraphFile) -> Result<DecoratedGraph> {
        let edges: Vec<(&str, &str, i64)> =
            f.edges.iter().map(|e| (e.head.as_str(), e.tail.as_str(), e.n)).collect();
        let verts: Vec<&str> = f.vertices.iter().map(|s| s.as_str()).collect();
        build_graph(&verts, &edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("graph serialization")
    }

    pub fn from_json(text: &str) -> Result<DecoratedGraph> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        DecoratedGraph::from_file(&file).map_err(|e| match e {
            Error::UnknownVertex(v) => Error::Parse(format!("edge endpoint refers to undeclared vertex `{v}`")),
            Error::NegativeDecoration { edge, n } => {
                Error::Parse(format!("edges[{edge}].n: decoration must be a non-negative integer, got {n}"))
            }
            Error::DuplicateVertex(v) => Error::Parse(format!("vertices: duplicate name `{v}`")),
            other => other,
        })
    }
}

pub fn classify(g: &DecoratedGraph) -> GraphClass {
    let self_loop_edges: Vec<usize> =
        (0..g.n_edges()).filter(|&k| g.edges[k].is_self_loop()).collect();
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for e in g.edges.iter().filter(|e| !e.is_self_loop()) {
        *counts.entry((e.head.min(e.tail), e.head.max(e.tail))).or_default() += 1;
    }
    let multi_edge_pairs: Vec<(usize, usize)> =
        counts.into_iter().filter(|&(_, c)| c >= 2).map(|(p, _)| p).collect();
    let simple = self_loop_edges.is_empty() && multi_edge_pairs.is_empty();
    GraphClass { connected: g.is_connected(), self_loop_edges, multi_edge_pairs, simple }
}

pub fn first_betti(g: &DecoratedGraph) -> i64 {
    g.n_edges() as i64 - g.n_vertices() as i64 + g.n_components() as i64
}

/// Named constructors for graphs that come up constantly.
pub mod families {
    use super::DecoratedGraph;

    pub fn edgeless(n: usize) -> DecoratedGraph {
        DecoratedGraph::from_indices(n, &[]).unwrap()
    }

    pub fn single_edge(n: u32) -> DecoratedGraph {
        DecoratedGraph::from_indices(2, &[(0, 1, n)]).unwrap()
    }

    pub fn self_loop(n: u32) -> DecoratedGraph {
        DecoratedGraph::from_indices(1, &[(0, 0, n)]).unwrap()
    }

    /// Two vertices joined by parallel edges with the given decorations.
    pub fn banana(decorations: &[u32]) -> DecoratedGraph {
        let edges: Vec<_> = decorations.iter().map(|&n| (0, 1, n)).collect();
        DecoratedGraph::from_indices(2, &edges).unwrap()
    }

    pub fn cycle(k: usize) -> DecoratedGraph {
        let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k, 0)).collect();
        DecoratedGraph::from_indices(k, &edges).unwrap()
    }

    pub fn triangle() -> DecoratedGraph {
        cycle(3)
    }

    pub fn path(n_vertices: usize) -> DecoratedGraph {
        let edges: Vec<_> = (0..n_vertices.saturating_sub(1)).map(|i| (i, i + 1, 0)).collect();
        DecoratedGraph::from_indices(n_vertices, &edges).unwrap()
    }

    /// Centre vertex 0 joined to `k` leaves.
    pub fn star(k: usize) -> DecoratedGraph {
        let edges: Vec<_> = (1..=k).map(|i| (0, i, 0)).collect();
        DecoratedGraph::from_indices(k + 1, &edges).unwrap()
    }

    pub fn complete(k: usize) -> DecoratedGraph {
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                edges.push((i, j, 0));
            }
        }
        DecoratedGraph::from_indices(k, &edges).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;

    #[test]
    fn build_and_classify() {
        let g = build_graph(&["a", "b"], &[("a", "b", 0)]).unwrap();
        assert_eq!((g.n_vertices(), g.n_edges()), (2, 1));
        assert!(classify(&g).simple);

        let tri = build_graph(&["a", "b", "c"], &[("a", "b", 0), ("b", "c", 0), ("c", "a", 0)]).unwrap();
        let c = classify(&tri);
        assert!(c.simple && c.connected);

        assert_eq!(
            build_graph(&["a"], &[("a", "z", 0)]),
            Err(Error::UnknownVertex("z".into()))
        );
        assert!(matches!(
            build_graph(&["a", "b"], &[("a", "b", -2)]),
            Err(Error::NegativeDecoration { .. })
        ));
        assert!(matches!(build_graph(&["a", "a"], &[]), Err(Error::DuplicateVertex(_))));
    }

    #[test]
    fn contraction_examples() {
        let g = single_edge(0).contract_edge(0).unwrap();
        assert_eq!((g.n_vertices(), g.n_edges()), (1, 0));

        let b = triangle().contract_edge(1).unwrap();
        assert_eq!((b.n_vertices(), b.n_edges()), (2, 2));
        assert_eq!(classify(&b).multi_edge_pairs, vec![(0, 1)]);

        let l = banana(&[0, 0]).contract_edge(0).unwrap();
        assert_eq!((l.n_vertices(), l.n_edges()), (1, 1));
        assert_eq!(classify(&l).self_loop_edges, vec![0]);
        assert_eq!(l.contract_edge(0), Err(Error::SelfLoopContraction(0)));
    }

    #[test]
    fn contraction_keeps_lower_label() {
        let g = build_graph(&["a", "b", "c"], &[("c", "a", 1), ("b", "c", 2)]).unwrap();
        let h = g.contract_edge(0).unwrap();
        assert_eq!(h.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(h.edges(), &[Edge { head: 1, tail: 0, n: 2 }]);
    }

    #[test]
    fn deletion_examples() {
        let g = single_edge(0).delete_edge(0).unwrap();
        assert_eq!((g.n_vertices(), g.n_edges(), g.n_components()), (2, 0, 2));
        let p = triangle().delete_edge(2).unwrap();
        assert_eq!(first_betti(&p), 0);
        assert!(p.is_connected());
        let s = banana(&[0, 0]).delete_edge(0).unwrap();
        assert_eq!(s.n_edges(), 1);
        assert_eq!(triangle().delete_edge(7), Err(Error::InvalidEdgeIndex(7)));
    }

    #[test]
    fn classify_examples() {
        let c = classify(&banana(&[0, 0]));
        assert!(c.connected && !c.simple);
        assert_eq!(classify(&self_loop(0)).self_loop_edges, vec![0]);
        assert!(!classify(&edgeless(2)).connected);
    }

    #[test]
    fn betti_examples() {
        assert_eq!(first_betti(&path(4)), 0);
        assert_eq!(first_betti(&star(3)), 0);
        assert_eq!(first_betti(&triangle()), 1);
        assert_eq!(first_betti(&banana(&[0, 0])), 1);
        assert_eq!(first_betti(&complete(4)), 3);
    }

    #[test]
    fn components_split() {
        let g = triangle().disjoint_union(&single_edge(1));
        let comps = g.components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[1].0.edges(), &[Edge { head: 0, tail: 1, n: 1 }]);
        assert_eq!(comps[1].1, vec![3, 4]);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"vertices":["a","b","c"],"edges":[{"head":"a","tail":"b","n":0},{"head":"b","tail":"c","n":2}]}"#;
        let g = DecoratedGraph::from_json(text).unwrap();
        let back = serde_json::to_string(&g.to_file()).unwrap();
        assert_eq!(back, text);
    }

    #[test]
    fn json_errors() {
        let neg = r#"{"vertices":["a","b"],"edges":[{"head":"a","tail":"b","n":-1}]}"#;
        match DecoratedGraph::from_json(neg) {
            Err(Error::Parse(msg)) => assert!(msg.contains("edges[0].n")),
            other => panic!("{other:?}"),
        }
        let dangling = r#"{"vertices":["a"],"edges":[{"head":"a","tail":"q","n":0}]}"#;
        match DecoratedGraph::from_json(dangling) {
            Err(Error::Parse(msg)) => assert!(msg.contains("`q`")),
            other => panic!("{other:?}"),
        }
        let broken = "{\"vertices\": [\"a\"],\n \"edges\": [{\"head\": 1}]}";
        match DecoratedGraph::from_json(broken) {
            Err(Error::Parse(msg)) => assert!(msg.contains("line 2")),
            other => panic!("{other:?}"),
        }
    }
}
