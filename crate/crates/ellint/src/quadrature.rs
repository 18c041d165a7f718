//! One- and multi-dimensional quadrature rules and extrapolation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Fixed-order Gauss-Legendre on [a, b].
pub fn integrate_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let s = f(c - h * XGK[j]) + f(c + h * XGK[j]);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
    pub evals: usize,
}

struct Seg {
    a: f64,
    b: f64,
    v: f64,
    e: f64,
}

impl PartialEq for Seg {
    fn eq(&self, o: &Self) -> bool {
        self.e == o.e
    }
}
impl Eq for Seg {}
impl PartialOrd for Seg {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Seg {
    fn cmp(&self, o: &Self) -> Ordering {
        self.e.total_cmp(&o.e)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) integration.
pub fn adaptive_gk15<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<Estimate> {
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Seg { a, b, v, e });
    let (mut total, mut err, mut evals) = (v, e, 15);
    while !(err <= abs_tol.max(rel_tol * total.abs())) {
        if evals + 30 > max_evals || !total.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "1-D adaptive rule hit {max_evals} evaluations with error {err:.3e}"
            )));
        }
        let s = heap.pop().unwrap();
        let m = 0.5 * (s.a + s.b);
        let (v1, e1) = gk15(&mut f, s.a, m);
        let (v2, e2) = gk15(&mut f, m, s.b);
        evals += 30;
        total += v1 + v2 - s.v;
        err += e1 + e2 - s.e;
        heap.push(Seg { a: s.a, b: m, v: v1, e: e1 });
        heap.push(Seg { a: m, b: s.b, v: v2, e: e2 });
    }
    // re-sum to shed accumulated rounding from the running updates
    let total: f64 = heap.iter().map(|s| s.v).sum();
    let err: f64 = heap.iter().map(|s| s.e).sum();
    Ok(Estimate { value: total, err, evals })
}

struct Boxed {
    lo: Vec<f64>,
    hi: Vec<f64>,
    v: f64,
    e: f64,
    split: usize,
}

impl PartialEq for Boxed {
    fn eq(&self, o: &Self) -> bool {
        self.e == o.e
    }
}
impl Eq for Boxed {}
impl PartialOrd for Boxed {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Boxed {
    fn cmp(&self, o: &Self) -> Ordering {
        self.e.total_cmp(&o.e)
    }
}

fn genz_malik_rule<F: FnMut(&[f64]) -> f64>(f: &mut F, lo: &[f64], hi: &[f64]) -> (f64, f64, usize, usize) {
    let d = lo.len();
    let df = d as f64;
    let l2 = (9.0f64 / 70.0).sqrt();
    let l3 = (9.0f64 / 10.0).sqrt();
    let l4 = (9.0f64 / 10.0).sqrt();
    let l5 = (9.0f64 / 19.0).sqrt();
    let w1 = (12824.0 - 9120.0 * df + 400.0 * df * df) / 19683.0;
    let w2 = 980.0 / 6561.0;
    let w3 = (1820.0 - 400.0 * df) / 19683.0;
    let w4 = 200.0 / 19683.0;
    let w5 = 6859.0 / 19683.0 / 2f64.powi(d as i32);
    let v1 = (729.0 - 950.0 * df + 50.0 * df * df) / 729.0;
    let v2 = 245.0 / 486.0;
    let v3 = (265.0 - 100.0 * df) / 1458.0;
    let v4 = 25.0 / 729.0;

    let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let h: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let vol: f64 = h.iter().map(|x| 2.0 * x).product();
    let mut x = c.clone();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let f0 = eval(&x, &mut evals);
    let (mut s2, mut s3, mut s4, mut s5) = (0.0, 0.0, 0.0, 0.0);
    let mut split = 0;
    let mut best = -1.0;
    for i in 0..d {
        x[i] = c[i] - l2 * h[i];
        let a = eval(&x, &mut evals);
        x[i] = c[i] + l2 * h[i];
        let b = eval(&x, &mut evals);
        x[i] = c[i] - l3 * h[i];
        let a3 = eval(&x, &mut evals);
        x[i] = c[i] + l3 * h[i];
        let b3 = eval(&x, &mut evals);
        x[i] = c[i];
        s2 += a + b;
        s3 += a3 + b3;
        let diff = ((a + b - 2.0 * f0) - (l2 * l2 / (l3 * l3)) * (a3 + b3 - 2.0 * f0)).abs();
        if diff > best * (1.0 + 1e-12) {
            best = diff;
            split = i;
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            for (si, sj) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                x[i] = c[i] + si * l4 * h[i];
                x[j] = c[j] + sj * l4 * h[j];
                s4 += eval(&x, &mut evals);
            }
            x[i] = c[i];
            x[j] = c[j];
        }
    }
    for mask in 0..(1usize << d) {
        for i in 0..d {
            let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            x[i] = c[i] + s * l5 * h[i];
        }
        s5 += eval(&x, &mut evals);
    }
    let r7 = vol * (w1 * f0 + w2 * s2 + w3 * s3 + w4 * s4 + w5 * s5);
    let r5 = vol * (v1 * f0 + v2 * s2 + v3 * s3 + v4 * s4);
    (r7, (r7 - r5).abs(), split, evals)
}

/// Adaptive cubature over a box with the Genz-Malik degree-7/5 embedded rule.
/// One-dimensional boxes are delegated to [`adaptive_gk15`].
pub fn adaptive_cubature<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<Estimate> {
    assert_eq!(lo.len(), hi.len());
    let d = lo.len();
    if d == 0 {
        return Ok(Estimate { value: f(&[]), err: 0.0, evals: 1 });
    }
    if d == 1 {
        return adaptive_gk15(|x| f(&[x]), lo[0], hi[0], abs_tol, rel_tol, max_evals);
    }
    let (v, e, split, n) = genz_malik_rule(&mut f, lo, hi);
    let mut evals = n;
    let mut heap = BinaryHeap::new();
    heap.push(Boxed { lo: lo.to_vec(), hi: hi.to_vec(), v, e, split });
    let (mut total, mut err) = (v, e);
    while !(err <= abs_tol.max(rel_tol * total.abs())) {
        if evals + 2 * n > max_evals || !total.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "cubature hit {max_evals} evaluations with error {err:.3e}"
            )));
        }
        let b = heap.pop().unwrap();
        let mid = 0.5 * (b.lo[b.split] + b.hi[b.split]);
        let mut hi1 = b.hi.clone();
        hi1[b.split] = mid;
        let mut lo2 = b.lo.clone();
        lo2[b.split] = mid;
        let (v1, e1, s1, _) = genz_malik_rule(&mut f, &b.lo, &hi1);
        let (v2, e2, s2, _) = genz_malik_rule(&mut f, &lo2, &b.hi);
        evals += 2 * n;
        total += v1 + v2 - b.v;
        err += e1 + e2 - b.e;
        heap.push(Boxed { lo: b.lo, hi: hi1, v: v1, e: e1, split: s1 });
        heap.push(Boxed { lo: lo2, hi: b.hi, v: v2, e: e2, split: s2 });
    }
    let total: f64 = heap.iter().map(|b| b.v).sum();
    let err: f64 = heap.iter().map(|b| b.e).sum();
    Ok(Estimate { value: total, err, evals })
}

/// Value at `x0` of the polynomial through the points `(xs, ys)` (Neville).
pub fn neville<T>(xs: &[f64], ys: &[T], x0: f64) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Sub<Output = T> + std::ops::Add<Output = T>,
{
    let mut p: Vec<T> = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            let (xi, xj) = (xs[i], xs[i + m]);
            p[i] = (p[i] * (x0 - xj) - p[i + 1] * (x0 - xi)) * (1.0 / (xi - xj));
        }
    }
    p[0]
}
