#![allow(dead_code)]

use ellint::graph::DecoratedGraph;
use ellint::polynomials::SchwingerVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every connected loop-free multigraph on 2..=max_v vertices with 1..=max_e edges,
/// as multisets of vertex pairs; orientation alternates with the edge index.
pub fn small_multigraphs(max_v: usize, max_e: usize) -> Vec<DecoratedGraph> {
    let mut out = Vec::new();
    for v in 2..=max_v {
        let pairs: Vec<(usize, usize)> = (0..v).flat_map(|a| (a + 1..v).map(move |b| (a, b))).collect();
        for e in 1..=max_e {
            let mut counts = vec![0usize; pairs.len()];
            multisets(&pairs, e, 0, &mut counts, &mut |c| {
                let mut edges = Vec::new();
                for (k, &m) in c.iter().enumerate() {
                    for _ in 0..m {
                        let (a, b) = pairs[k];
                        let (h, t) = if edges.len() % 2 == 0 { (a, b) } else { (b, a) };
                        edges.push((h, t, 0));
                    }
                }
                let g = DecoratedGraph::from_indices(v, &edges).unwrap();
                if g.is_connected() {
                    out.push(g);
                }
            });
        }
    }
    out
}

fn multisets<F: FnMut(&[usize])>(pairs: &[(usize, usize)], left: usize, k: usize, c: &mut Vec<usize>, f: &mut F) {
    if k == pairs.len() {
        if left == 0 {
            f(c);
        }
        return;
    }
    for m in 0..=left {
        c[k] = m;
        multisets(pairs, left - m, k + 1, c, f);
    }
    c[k] = 0;
}

/// Random connected loop-free multigraph: a random spanning tree plus extra edges.
pub fn random_connected(r: &mut ChaCha8Rng, v: usize, extra: usize) -> DecoratedGraph {
    let mut edges = Vec::new();
    for w in 1..v {
        let u = r.gen_range(0..w);
        edges.push(if r.gen_bool(0.5) { (u, w, 0) } else { (w, u, 0) });
    }
    for _ in 0..extra {
        let a = r.gen_range(0..v);
        let mut b = r.gen_range(0..v - 1);
        if b >= a {
            b += 1;
        }
        edges.push((a, b, 0));
    }
    DecoratedGraph::from_indices(v, &edges).unwrap()
}

pub fn random_t(r: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> SchwingerVector {
    SchwingerVector::new((0..n).map(|_| r.gen_range(lo..hi)).collect()).unwrap()
}
