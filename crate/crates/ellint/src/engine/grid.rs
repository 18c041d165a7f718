//! Regulated evaluation on a periodic trapezoid grid in torus coordinates (a, b).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::graph::DecoratedGraph;
use crate::modular::{reduce_to_fundamental_domain, ModularPoint, SumControl};
use crate::propagator::{PropagatorKernel, RegularizationWindow};

const MAX_GRID: usize = 2048;
const MAX_TRIANGLE_WORK: f64 = 4e10;

type Table = Vec<Complex64>;

struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn transpose(&self, data: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                data.swap(i * n + j, j * n + i);
            }
        }
    }

    fn apply(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        fft.process(data);
        self.transpose(data);
        fft.process(data);
        self.transpose(data);
    }

    fn forward(&self, t: &[Complex64]) -> Table {
        let mut d = t.to_vec();
        self.apply(&mut d, &self.fwd);
        d
    }

    /// Cyclic convolution sum_y B(x - y) u(y), given the transform of B.
    fn conv(&self, b_hat: &[Complex64], u: &[Complex64]) -> Table {
        let mut d = u.to_vec();
        self.apply(&mut d, &self.fwd);
        for (x, b) in d.iter_mut().zip(b_hat) {
            *x *= b;
        }
        self.apply(&mut d, &self.inv);
        let s = 1.0 / (self.n * self.n) as f64;
        d.iter_mut().for_each(|x| *x *= s);
        d
    }
}

fn flip(t: &[Complex64], n: usize) -> Table {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[((n - i) % n) * n + (n - j) % n] = t[i * n + j];
        }
    }
    out
}

fn mean(t: &[Complex64]) -> Complex64 {
    t.iter().sum::<Complex64>() / t.len() as f64
}

/// Grid size resolving the narrowest Gaussian, exp(-eps k^2 / d) at the first aliased momentum.
pub(crate) fn auto_grid(tau: ModularPoint, eps_min: f64, max_degree: usize, tol: f64) -> usize {
    let (reduced, _) = reduce_to_fundamental_domain(tau);
    let shortest = (tau.im / reduced.im).sqrt();
    let kmin = shortest / tau.im;
    let x = (-(tol * 1e-6).ln()).max(20.0);
    let n = ((x * max_degree.max(1) as f64 / eps_min).sqrt() / (2.0 * PI * kmin)).ceil() as usize;
    let n = n.max(16);
    n + n % 2
}

/// Pinned-vertex value of a connected, loop-free graph for each window, on an n x n grid.
pub(crate) fn regulated_component(
    g: &DecoratedGraph,
    tau: ModularPoint,
    windows: &[RegularizationWindow],
    n: usize,
    sums: &SumControl,
) -> Result<Vec<Complex64>> {
    let v = g.n_vertices();
    let free = v.saturating_sub(1);
    if free == 0 {
        return Ok(vec![Complex64::new(1.0, 0.0); windows.len()]);
    }
    if free > 3 {
        return Err(Error::QuadratureBudgetExceeded(format!(
            "{} real dimensions after pinning, at most 6 supported",
            2 * free
        )));
    }
    if n > MAX_GRID {
        return Err(Error::QuadratureBudgetExceeded(format!("grid {n} exceeds {MAX_GRID}")));
    }
    if free == 3 && (n as f64).powi(4) * (2.0 * (n as f64).log2()) > MAX_TRIANGLE_WORK {
        return Err(Error::QuadratureBudgetExceeded(format!("grid {n} too large for three free vertices")));
    }
    let fft = Fft2::new(n);
    let mut decorations: Vec<u32> = g.edges().iter().map(|e| e.n).collect();
    decorations.sort_unstable();
    decorations.dedup();
    let points: Vec<Complex64> = (0..n * n)
        .map(|idx| (idx / n) as f64 / n as f64 + (idx % n) as f64 / n as f64 * tau.tau())
        .collect();
    let mut out = Vec::with_capacity(windows.len());
    for w in windows {
        let tables: Vec<(u32, Table)> = decorations
            .iter()
            .map(|&m| {
                let k = PropagatorKernel::new(tau, *w, m, sums);
                (m, points.par_iter().map(|&z| k.eval(z)).collect())
            })
            .collect();
        let table = |m: u32| &tables.iter().find(|(d, _)| *d == m).unwrap().1;
        out.push(contract(g, n, &fft, &table)?);
    }
    Ok(out)
}

fn contract<'a>(
    g: &DecoratedGraph,
    n: usize,
    fft: &Fft2,
    table: &dyn Fn(u32) -> &'a Table,
) -> Result<Complex64> {
    let pinned = g.n_vertices() - 1;
    let free = pinned;
    let one = Complex64::new(1.0, 0.0);
    let mut unary: Vec<Table> = vec![vec![one; n * n]; free];
    // pair[u][v] for u < v, as a function of z_u - z_v
    let mut pair: Vec<Vec<Option<Table>>> = vec![vec![None; free]; free];
    for e in g.edges() {
        let t = table(e.n);
        let (h, tl) = (e.head, e.tail);
        if tl == pinned {
            unary[h].iter_mut().zip(t).for_each(|(x, y)| *x *= y);
        } else if h == pinned {
            unary[tl].iter_mut().zip(flip(t, n)).for_each(|(x, y)| *x *= y);
        } else {
            let (u, w, oriented) = if h < tl { (h, tl, t.clone()) } else { (tl, h, flip(t, n)) };
            match &mut pair[u][w] {
                Some(p) => p.iter_mut().zip(oriented).for_each(|(x, y)| *x *= y),
                slot => *slot = Some(oriented),
            }
        }
    }
    match free {
        1 => Ok(mean(&unary[0])),
        2 => Ok(two_vertex(&unary[0], &unary[1], pair[0][1].as_ref(), n, fft)),
        _ => {
            let adj = |a: usize, b: usize| pair[a.min(b)][a.max(b)].is_some();
            let nbrs = |c: usize| (0..3).filter(|&b| b != c && adj(b, c)).count();
            if let Some(c) = (0..3).rev().find(|&c| nbrs(c) <= 1) {
                let rest: Vec<usize> = (0..3).filter(|&x| x != c).collect();
                let (a, b) = (rest[0], rest[1]);
                let ab = pair[a][b].as_ref();
                if nbrs(c) == 0 {
                    return Ok(mean(&unary[c]) * two_vertex(&unary[a], &unary[b], ab, n, fft));
                }
                let m = if adj(a, c) { a } else { b };
                // B(z_m - z_c)
                let b_mc = if m < c {
                    pair[m][c].clone().unwrap()
                } else {
                    flip(pair[c][m].as_ref().unwrap(), n)
                };
                let folded = fft.conv(&fft.forward(&b_mc), &unary[c]);
                let scale = 1.0 / (n * n) as f64;
                let mut um = unary[m].clone();
                um.iter_mut().zip(folded).for_each(|(x, y)| *x *= y * scale);
                let (ua, ub) = if m == a { (&um, &unary[b]) } else { (&unary[a], &um) };
                return Ok(two_vertex(ua, ub, ab, n, fft));
            }
            Ok(triangle(&unary, &pair, n, fft))
        }
    }
}

fn two_vertex(u0: &[Complex64], u1: &[Complex64], b: Option<&Table>, n: usize, fft: &Fft2) -> Complex64 {
    match b {
        None => mean(u0) * mean(u1),
        Some(b) => {
            let c = fft.conv(&fft.forward(b), u1);
            let s: Complex64 = u0.iter().zip(&c).map(|(x, y)| x * y).sum();
            s / ((n * n) as f64).powi(2)
        }
    }
}

fn triangle(unary: &[Table], pair: &[Vec<Option<Table>>], n: usize, fft: &Fft2) -> Complex64 {
    let b01 = pair[0][1].as_ref().unwrap();
    let b02 = pair[0][2].as_ref().unwrap();
    let b12_hat = fft.forward(pair[1][2].as_ref().unwrap());
    let nn = n * n;
    let rows: Vec<Complex64> = (0..nn)
        .into_par_iter()
        .map(|x| {
            let (xi, xj) = (x / n, x % n);
            let shifted = |b: &Table, u: &Table| -> Table {
                (0..nn)
                    .map(|y| {
                        let (yi, yj) = (y / n, y % n);
                        b[((xi + n - yi) % n) * n + (xj + n - yj) % n] * u[y]
                    })
                    .collect()
            };
            let vb = shifted(b01, &unary[1]);
            let vc = shifted(b02, &unary[2]);
            let c = fft.conv(&b12_hat, &vc);
            unary[0][x] * vb.iter().zip(&c).map(|(p, q)| p * q).sum::<Complex64>()
        })
        .collect();
    rows.iter().sum::<Complex64>() / (nn as f64).powi(3)
}
