use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{graph_integral, ser_complex, JsonComplex, QuadratureControl};
use crate::error::{Error, Result};
use crate::graph::{classify, DecoratedGraph};
use crate::modular::{ModularGroupElement, ModularPoint};

const I: Complex64 = Complex64::new(0.0, 1.0);
const FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModularityReport {
    #[serde(serialize_with = "ser_complex")]
    pub transformed: Complex64,
    /// (C tau + D)^weight W(tau).
    #[serde(serialize_with = "ser_complex")]
    pub expected: Complex64,
    pub weight: u32,
    pub residual: f64,
    /// Quadrature error propagated into the residual.
    pub err: f64,
}

/// |W(gamma tau) - (C tau + D)^w W(tau)| / max(|W(tau)|, 1e-12).
pub fn modularity_check(
    g: &DecoratedGraph,
    tau: ModularPoint,
    gamma: ModularGroupElement,
    ctl: &QuadratureControl,
) -> Result<ModularityReport> {
    let moved = gamma.act(tau);
    let (a, b) = rayon::join(|| graph_integral(g, moved, ctl), || graph_integral(g, tau, ctl));
    let (a, b) = (a?, b?);
    let w = g.weight();
    let f = gamma.factor(tau.tau()).powi(w as i32);
    let expected = f * b.value;
    let denom = b.value.norm().max(FLOOR);
    Ok(ModularityReport {
        transformed: a.value,
        expected,
        weight: w,
        residual: (a.value - expected).norm() / denom,
        err: (a.err + f.norm() * b.err) / denom,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DbarEstimate {
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex64,
    pub err: f64,
}

/// d/d(conj tau) = (d/dx + i d/dy)/2 by central differences at h and h/2, Richardson-combined.
pub fn wirtinger_dbar<F>(f: F, tau: ModularPoint, h: f64) -> Result<DbarEstimate>
where
    F: Fn(ModularPoint) -> Result<Complex64> + Sync,
{
    if !(h > 0.0) || h >= tau.im / 10.0 {
        return Err(Error::StepTooLarge { h, im: tau.im });
    }
    let t = tau.tau();
    let shifts: Vec<Complex64> = [h, 0.5 * h]
        .iter()
        .flat_map(|&s| [Complex64::new(s, 0.0), Complex64::new(-s, 0.0), I * s, -I * s])
        .collect();
    let vals: Vec<Complex64> = shifts
        .par_iter()
        .map(|d| ModularPoint::from_complex(t + d).and_then(&f))
        .collect::<Result<_>>()?;
    let d = |v: &[Complex64], s: f64| 0.5 * ((v[0] - v[1]) / (2.0 * s) + I * (v[2] - v[3]) / (2.0 * s));
    let coarse = d(&vals[0..4], h);
    let fine = d(&vals[4..8], 0.5 * h);
    let value = (4.0 * fine - coarse) / 3.0;
    Ok(DbarEstimate { value, err: (fine - coarse).norm() / 3.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyReport {
    #[serde(serialize_with = "ser_complex")]
    pub lhs: Complex64,
    pub lhs_err: f64,
    /// (i/8y^2) sum_e (W_{G/e} - W_{G\e}).
    #[serde(serialize_with = "ser_complex")]
    pub rhs: Complex64,
    pub rhs_err: f64,
    /// |lhs - rhs| / max(|rhs|, 1e-12).
    pub residual: f64,
    /// Residual against the opposite sign, -rhs.
    pub residual_opposite_sign: f64,
}

/// Compares d/d(conj tau) W_G with (i/8y^2) sum over edges of W_{G/e} - W_{G\e}.
pub fn anomaly_check(g: &DecoratedGraph, tau: ModularPoint, ctl: &QuadratureControl, h: f64) -> Result<AnomalyReport> {
    if !classify(g).simple {
        return Err(Error::NotSimple);
    }
    if !g.is_undecorated() {
        return Err(Error::Decorated);
    }
    let dbar = wirtinger_dbar(|t| graph_integral(g, t, ctl).map(|r| r.value), tau, h)?;
    let terms: Vec<(Complex64, f64)> = (0..g.n_edges())
        .into_par_iter()
        .map(|e| -> Result<(Complex64, f64)> {
            let c = graph_integral(&g.contract_edge(e)?, tau, ctl)?;
            let d = graph_integral(&g.delete_edge(e)?, tau, ctl)?;
            Ok((c.value - d.value, c.err + d.err))
        })
        .collect::<Result<_>>()?;
    let pref = I / (8.0 * tau.im * tau.im);
    let rhs = pref * terms.iter().map(|t| t.0).sum::<Complex64>();
    let rhs_err = pref.norm() * terms.iter().map(|t| t.1).sum::<f64>();
    // quadrature errors enter the difference quotient at most like err/h
    let quad = graph_integral(g, tau, ctl)?.err / h;
    let denom = rhs.norm().max(FLOOR);
    Ok(AnomalyReport {
        lhs: dbar.value,
        lhs_err: dbar.err + quad,
        rhs,
        rhs_err,
        residual: (dbar.value - rhs).norm() / denom,
        residual_opposite_sign: (dbar.value + rhs).norm() / denom,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImTauFit {
    pub center: ModularPoint,
    /// coefficients[j][l] multiplies (tau - center)^l / y^j.
    pub coefficients: Vec<Vec<JsonComplex>>,
    pub residual: f64,
    pub condition: f64,
}

impl ImTauFit {
    pub fn coefficient(&self, j: usize, l: usize) -> Complex64 {
        let c = self.coefficients[j][l];
        Complex64::new(c.re, c.im)
    }
}

/// Least-squares fit of W = sum_{j <= order} sum_{l <= degree} a_{jl} (tau - center)^l y^{-j}.
///
/// The holomorphic coefficients are Taylor-expanded about the centre, which needs sample
/// points spread in both directions once degree > 0.
pub fn imtau_fit(
    g: &DecoratedGraph,
    points: &[ModularPoint],
    ctl: &QuadratureControl,
    order: usize,
    degree: usize,
) -> Result<ImTauFit> {
    let cols = (order + 1) * (degree + 1);
    if points.len() < cols {
        return Err(Error::IllConditionedFit(f64::INFINITY));
    }
    let center = {
        let s: Complex64 = points.iter().map(|p| p.tau()).sum::<Complex64>() / points.len() as f64;
        ModularPoint::from_complex(s)?
    };
    let values: Vec<Complex64> = points
        .par_iter()
        .map(|&p| graph_integral(g, p, ctl).map(|r| r.value))
        .collect::<Result<_>>()?;
    let spread = points.iter().map(|p| (p.tau() - center.tau()).norm()).fold(0.0, f64::max).max(1e-300);
    let design = DMatrix::from_fn(points.len(), cols, |r, c| {
        let (j, l) = (c / (degree + 1), c % (degree + 1));
        let u = (points[r].tau() - center.tau()) / spread;
        u.powi(l as i32) * (center.im / points[r].im).powi(j as i32)
    });
    let rhs = DVector::from_vec(values.clone());
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < 1e10) {
        return Err(Error::IllConditionedFit(condition));
    }
    let sol = svd.solve(&rhs, 0.0).map_err(|e| Error::QuadratureFailure(e.to_string()))?;
    let fitted = &design * &sol;
    let residual = (fitted - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let coefficients = (0..=order)
        .map(|j| {
            (0..=degree)
                .map(|l| {
                    let z = sol[j * (degree + 1) + l] * center.im.powi(j as i32) / spread.powi(l as i32);
                    JsonComplex::from(z)
                })
                .collect()
        })
        .collect();
    Ok(ImTauFit { center, coefficients, residual, condition })
}
