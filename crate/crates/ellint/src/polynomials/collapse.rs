use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{a_constant, RationalConstant};
use crate::error::{Error, Result};
use crate::graph::DecoratedGraph;
use crate::quadrature::gauss_legendre;

const MAX_ORDER: u32 = 8;

/// Polynomial in (z1, conj z1, z2, conj z2) times the bumps (1 - |z1|^2/R^2)^4 (1 - |z2|^2/R^2)^4.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatTestFunction {
    pub radius: f64,
    /// (coefficient, [deg z1, deg conj z1, deg z2, deg conj z2])
    pub monomials: Vec<(Complex64, [u32; 4])>,
}

fn falling(p: u32, m: u32) -> f64 {
    if m > p {
        return 0.0;
    }
    (p - m + 1..=p).map(|x| x as f64).product()
}

fn binom(n: u32, k: u32) -> f64 {
    falling(n, k) / falling(k, k)
}

impl FlatTestFunction {
    pub fn new(radius: f64, monomials: Vec<(Complex64, [u32; 4])>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidControl(format!("bump radius must be positive, got {radius}")));
        }
        Ok(FlatTestFunction { radius, monomials })
    }

    /// z2^3 times unit bumps.
    pub fn standard() -> Self {
        FlatTestFunction { radius: 1.0, monomials: vec![(Complex64::new(1.0, 0.0), [0, 0, 3, 0])] }
    }

    pub fn zero() -> Self {
        FlatTestFunction { radius: 1.0, monomials: Vec::new() }
    }

    /// d^n/dz^n of z^p conj(z)^q (1 - |z|^2/R^2)^4.
    fn factor(&self, n: u32, p: u32, q: u32, z: Complex64) -> Complex64 {
        let s = 1.0 - z.norm_sqr() / (self.radius * self.radius);
        if s <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let zb = z.conj();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=n.min(4) {
            let m = n - j;
            if m > p {
                continue;
            }
            // d^j of the bump: 4!/(4-j)! s^{4-j} (-conj z / R^2)^j
            let bump = falling(4, j) * s.powi(4 - j as i32) * (-zb / (self.radius * self.radius)).powi(j as i32);
            acc += binom(n, j) * falling(p, m) * z.powi((p - m) as i32) * zb.powi(q as i32) * bump;
        }
        acc
    }

    pub fn eval(&self, z1: Complex64, z2: Complex64) -> Complex64 {
        self.derivative(0, 0, z1, z2).expect("order 0")
    }

    /// d^{n1}/dz1^{n1} d^{n2}/dz2^{n2} of the test function.
    pub fn derivative(&self, n1: u32, n2: u32, z1: Complex64, z2: Complex64) -> Result<Complex64> {
        if n1 + n2 > MAX_ORDER {
            return Err(Error::Unsupported(format!("derivative order {} exceeds {MAX_ORDER}", n1 + n2)));
        }
        Ok(self
            .monomials
            .iter()
            .map(|(c, [p1, q1, p2, q2])| c * self.factor(n1, *p1, *q1, z1) * self.factor(n2, *p2, *q2, z2))
            .sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseReport {
    /// (eps, left-hand side) along the schedule.
    pub lhs: Vec<(f64, Complex64)>,
    pub rhs: Complex64,
    pub constant: RationalConstant,
    pub order: u32,
    pub residual: f64,
}

/// d^n/dz^n of int_eps^L dt/(4 pi t) (conj z/4t)^2 e^{-|z|^2/4t}, flat space.
fn flat_propagator(z: Complex64, n: u32, eps: f64, l: f64) -> Complex64 {
    crate::propagator::windowed_moment(z, n + 2, eps, l)
}

/// d^n/dz^n of (1/4 pi eps)(conj z/4 eps) e^{-|z|^2/4 eps}.
fn flat_u(z: Complex64, n: u32, eps: f64) -> Complex64 {
    let k = n as i32 + 1;
    (-z.conj() / (4.0 * eps)).powi(k) * (-1.0) * (-z.norm_sqr() / (4.0 * eps)).exp() / (4.0 * PI * eps)
}

fn polar_nodes(r_lo: f64, r_hi: f64, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (r_lo + r_hi), 0.5 * (r_hi - r_lo));
    x.iter().zip(&w).map(|(x, w)| (c + h * x, w * h)).collect()
}

/// Compares the collapsed two-vertex integral with U on edge 0 against
/// A(n0; n1..nk)/(4 pi)^k int d^2z (d_1^N Phi)(z, z).
pub fn flat_collapse_check(
    g: &DecoratedGraph,
    phi: &FlatTestFunction,
    schedule: &[f64],
    l: f64,
) -> Result<CollapseReport> {
    if g.n_vertices() != 2 || g.n_edges() == 0 {
        return Err(Error::WrongShape(format!(
            "need 2 vertices and at least one edge, got {} and {}",
            g.n_vertices(),
            g.n_edges()
        )));
    }
    if g.edges().iter().any(|e| e.is_self_loop()) {
        return Err(Error::WrongShape("self-loop present".into()));
    }
    if g.edges()[0].head != 0 {
        return Err(Error::WrongShape("edge 0 must point into vertex 0".into()));
    }
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] >= w[0]) || schedule.iter().any(|&e| !(e > 0.0 && e < l)) {
        return Err(Error::InvalidControl("schedule must be strictly decreasing within (0, L)".into()));
    }
    let n0 = g.edges()[0].n;
    let rest: Vec<u32> = g.edges()[1..].iter().map(|e| e.n).collect();
    let order = n0 + 1 + rest.iter().map(|n| n + 2).sum::<u32>();
    if order > MAX_ORDER {
        return Err(Error::Unsupported(format!("collapse derivative order {order} exceeds {MAX_ORDER}")));
    }
    let constant = a_constant(n0, &rest)?;
    // d_z acting on the Gaussians brings down -conj z per derivative; reversed edges add (-1)^n
    let mut sign = if (n0 + rest.iter().sum::<u32>()) % 2 == 0 { 1.0 } else { -1.0 };
    for e in &g.edges()[1..] {
        if e.head != 0 && e.n % 2 == 1 {
            sign = -sign;
        }
    }
    let r = phi.radius;

    // right-hand side: polar quadrature over the support
    let mut diag = Complex64::new(0.0, 0.0);
    let n_th = 4 * (order as usize + 16);
    for (rho, w) in polar_nodes(0.0, r, 48) {
        let mut ring = Complex64::new(0.0, 0.0);
        for j in 0..n_th {
            let z = Complex64::from_polar(rho, 2.0 * PI * j as f64 / n_th as f64);
            ring += phi.derivative(order, 0, z, z)?;
        }
        diag += ring * (2.0 * PI / n_th as f64) * rho * w;
    }
    let rhs = sign * constant.to_f64() / (4.0 * PI).powi(rest.len() as i32) * diag;

    let mut lhs = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        // inner z nodes: the U kernel confines |z| to a few sqrt(eps)
        let zmax = (4.0 * eps * 50.0).sqrt();
        let n_phi = 2 * (order as usize + 24);
        let mut inner: Vec<(Complex64, Complex64)> = Vec::new();
        for panel in 0..4 {
            let (a, b) = (zmax * panel as f64 / 4.0, zmax * (panel + 1) as f64 / 4.0);
            for (rho, w) in polar_nodes(a, b, 24) {
                for j in 0..n_phi {
                    let z = Complex64::from_polar(rho, 2.0 * PI * j as f64 / n_phi as f64);
                    let mut k = flat_u(z, n0, eps);
                    for e in &g.edges()[1..] {
                        let ze = if e.head == 0 { z } else { -z };
                        k *= flat_propagator(ze, e.n, eps, l);
                    }
                    inner.push((z, k * rho * w * (2.0 * PI / n_phi as f64)));
                }
            }
        }
        // outer y over the support of the second bump; the kink of the first
        // bump at |y + z| = R is smeared over zmax, so it gets its own panel
        let edges = [0.0, (r - zmax).max(0.5 * r), r];
        let n_y = 96;
        let mut total = Complex64::new(0.0, 0.0);
        for s in 0..2 {
            for (rho, w) in polar_nodes(edges[s], edges[s + 1], 48) {
                for j in 0..n_y {
                    let y = Complex64::from_polar(rho, 2.0 * PI * j as f64 / n_y as f64);
                    let h: Complex64 = inner.iter().map(|(z, k)| k * phi.eval(y + z, y)).sum();
                    total += h * rho * w * (2.0 * PI / n_y as f64);
                }
            }
        }
        lhs.push((eps, total));
    }
    let residual = (lhs.last().unwrap().1 - rhs).norm();
    Ok(CollapseReport { lhs, rhs, constant, order, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::banana;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vanishes_outside_radius() {
        let phi = FlatTestFunction::new(0.7, vec![(c(1.0, 0.5), [1, 2, 0, 1])]).unwrap();
        assert_eq!(phi.eval(c(0.8, 0.0), c(0.1, 0.0)), c(0.0, 0.0));
        assert_eq!(phi.eval(c(0.1, 0.0), c(0.0, -0.71)), c(0.0, 0.0));
        assert!(phi.eval(c(0.1, 0.2), c(0.0, -0.3)).norm() > 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let phi = FlatTestFunction::new(1.2, vec![(c(1.0, 0.0), [2, 1, 0, 1]), (c(-0.5, 0.3), [0, 0, 3, 0])]).unwrap();
        let z1 = c(0.21, -0.33);
        let z2 = c(-0.4, 0.17);
        let h = 1e-5;
        // d/dz = (d/dx - i d/dy)/2
        let dz = |f: &dyn Fn(Complex64) -> Complex64, z: Complex64| {
            let dx = (f(z + h) - f(z - h)) / (2.0 * h);
            let dy = (f(z + c(0.0, h)) - f(z - c(0.0, h))) / (2.0 * h);
            0.5 * (dx - c(0.0, 1.0) * dy)
        };
        for n1 in 0..4 {
            let exact = phi.derivative(n1 + 1, 0, z1, z2).unwrap();
            let fd = dz(&|z| phi.derivative(n1, 0, z, z2).unwrap(), z1);
            assert!((exact - fd).norm() < 1e-6, "n1={n1}: {exact} {fd}");
        }
        let exact = phi.derivative(1, 2, z1, z2).unwrap();
        let fd = dz(&|z| phi.derivative(1, 1, z1, z).unwrap(), z2);
        assert!((exact - fd).norm() < 1e-6);
        assert!(phi.derivative(5, 4, z1, z2).is_err());
    }

    #[test]
    fn zero_function_gives_zero() {
        let r = flat_collapse_check(&banana(&[0, 0]), &FlatTestFunction::zero(), &[1e-3], 1.0).unwrap();
        assert_eq!(r.rhs, c(0.0, 0.0));
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn single_u_edge() {
        let phi = FlatTestFunction::new(1.0, vec![(c(1.0, 0.0), [0, 0, 1, 0])]).unwrap();
        let r = flat_collapse_check(&banana(&[0]), &phi, &[1e-3, 1e-4], 1.0).unwrap();
        assert_eq!(r.order, 1);
        assert_eq!(r.constant.to_string(), "1/1");
        assert!(r.rhs.norm() > 1e-3);
        assert!(r.residual < 1e-2 * r.rhs.norm(), "{r:?}");
    }

    #[test]
    fn wrong_shapes() {
        let g = crate::graph::families::triangle();
        assert!(matches!(
            flat_collapse_check(&g, &FlatTestFunction::standard(), &[1e-3], 1.0),
            Err(Error::WrongShape(_))
        ));
    }
}
