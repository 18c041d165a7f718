//! Direct quadrature of the closed-form limit over the centred period cell, with a
//! symmetric disk excised around the diagonal.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::DecoratedGraph;
use crate::modular::{reduce_to_fundamental_domain, ModularPoint, SumControl};
use crate::propagator::bcov_limit;
use crate::quadrature::gauss_legendre;

const CIRCLE_POINTS: usize = 64;
const COARSE: usize = 32;
const FINE: usize = 64;

struct Cell {
    w1: Complex64,
    w2: Complex64,
}

impl Cell {
    fn new(tau: ModularPoint) -> Self {
        let (_, g) = reduce_to_fundamental_domain(tau);
        let t = tau.tau();
        Cell { w1: g.c as f64 * t + g.d as f64, w2: g.a as f64 * t + g.b as f64 }
    }

    /// Distance from 0 to the boundary of {s w1 + t w2 : |s|, |t| <= 1/2} along angle phi.
    fn reach(&self, phi: f64) -> f64 {
        let u = Complex64::from_polar(1.0, phi);
        // u = alpha w1 + beta w2 with real alpha, beta
        let det = self.w1.re * self.w2.im - self.w1.im * self.w2.re;
        let alpha = (u.re * self.w2.im - u.im * self.w2.re) / det;
        let beta = (self.w1.re * u.im - self.w1.im * u.re) / det;
        0.5 / alpha.abs().max(beta.abs())
    }

    fn corner_angles(&self) -> Vec<f64> {
        let mut a: Vec<f64> = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
            .iter()
            .map(|&(s, t)| {
                let z = 0.5 * (s * self.w1 + t * self.w2);
                z.arg().rem_euclid(2.0 * PI)
            })
            .collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        a
    }
}

/// Value and error estimate of a one-free-vertex component (pinned vertex 1).
pub(crate) fn excised_component(
    g: &DecoratedGraph,
    tau: ModularPoint,
    radius: f64,
    sums: &SumControl,
) -> Result<(Complex64, f64)> {
    match g.n_vertices() {
        1 => return Ok((Complex64::new(1.0, 0.0), 0.0)),
        2 => {}
        v => {
            return Err(Error::MethodUnsupported(format!(
                "excised quadrature handles one free vertex, component has {}",
                v - 1
            )))
        }
    }
    let signs: Vec<(u32, f64)> = g
        .edges()
        .iter()
        .map(|e| (e.n, if e.head == 0 { 1.0 } else { -1.0 }))
        .collect();
    let f = |z: Complex64| -> Result<Complex64> {
        let mut p = Complex64::new(1.0, 0.0);
        for &(n, s) in &signs {
            p *= bcov_limit(s * z, tau, n, sums)?;
        }
        Ok(p)
    };
    let cell = Cell::new(tau);
    let r = radius * cell.w1.norm();
    if r >= cell.reach(cell.w1.arg() + 0.5 * PI).min(cell.reach(cell.w2.arg() + 0.5 * PI)) {
        return Err(Error::InvalidControl(format!("excision radius {radius} does not fit in the cell")));
    }
    let ring: Vec<Complex64> = (0..CIRCLE_POINTS)
        .into_par_iter()
        .map(|j| f(Complex64::from_polar(r, 2.0 * PI * j as f64 / CIRCLE_POINTS as f64)))
        .collect::<Result<_>>()?;
    let disk = PI * r * r * ring.iter().sum::<Complex64>() / CIRCLE_POINTS as f64;

    let corners = cell.corner_angles();
    let outside = |m: usize| -> Result<Complex64> {
        let (x, w) = gauss_legendre(m);
        let mut nodes = Vec::with_capacity(4 * m * m);
        for s in 0..4 {
            let lo = corners[s];
            let hi = if s == 3 { corners[0] + 2.0 * PI } else { corners[s + 1] };
            let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (xp, wp) in x.iter().zip(&w) {
                let phi = c + h * xp;
                let top = cell.reach(phi);
                let (rc, rh) = (0.5 * (top + r), 0.5 * (top - r));
                for (xr, wr) in x.iter().zip(&w) {
                    let rho = rc + rh * xr;
                    nodes.push((Complex64::from_polar(rho, phi), wp * h * wr * rh * rho));
                }
            }
        }
        let vals: Vec<Complex64> =
            nodes.par_iter().map(|&(z, wt)| f(z).map(|v| v * wt)).collect::<Result<_>>()?;
        Ok(vals.iter().sum())
    };
    let coarse = outside(COARSE)?;
    let fine = outside(FINE)?;
    let value = (disk + fine) / tau.im;
    let err = (fine - coarse).norm() / tau.im + 1e-12 * value.norm().max(1e-300);
    Ok((value, err))
}
