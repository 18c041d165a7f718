//! Heat kernel and the regularized propagator on the torus C/(Z + tau Z).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{
    e2_star, eisenstein, weierstrass_p, zeta_even, ModularGroupElement, ModularPoint, SumControl,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coefficient of E_2^* in the eps -> 0, L -> infinity propagator, as measured by
/// [`fit_e2star_coefficient`].
pub const E2STAR_COEFF: f64 = PI / 12.0;

/// The two printed candidates for [`E2STAR_COEFF`].
pub const E2STAR_CANDIDATES: [(&str, f64); 2] = [("pi/12", PI / 12.0), ("1/(12 pi)", 1.0 / (12.0 * PI))];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationWindow {
    pub eps: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

impl RegularizationWindow {
    pub fn new(eps: f64, l: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < l && l.is_finite()) {
            return Err(Error::InvalidWindow { eps, l });
        }
        Ok(RegularizationWindow { eps, l })
    }
}

/// A point of the torus in lattice coordinates, z = a + b tau with a, b in [0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    pub a: f64,
    pub b: f64,
}

impl TorusPoint {
    pub fn from_complex(z: Complex64, tau: ModularPoint) -> Self {
        let b = z.im / tau.im;
        let a = z.re - b * tau.re;
        let wrap = |x: f64| {
            let r = x.rem_euclid(1.0);
            if r >= 1.0 {
                0.0
            } else {
                r
            }
        };
        TorusPoint { a: wrap(a), b: wrap(b) }
    }

    pub fn to_complex(&self, tau: ModularPoint) -> Complex64 {
        self.a + self.b * tau.tau()
    }
}

/// Representative of z mod the lattice with |Im z| <= Im tau/2 and |Re z - (b tau).re| <= 1/2.
pub(crate) fn centered(z: Complex64, tau: ModularPoint) -> Complex64 {
    let nb = (z.im / tau.im).round();
    let z = z - nb * tau.tau();
    z - z.re.round()
}

/// Visit every lattice point lambda with |w0 + lambda| <= r.
fn for_lattice_within<F: FnMut(Complex64)>(w0: Complex64, r: f64, tau: ModularPoint, mut f: F) {
    let t = tau.tau();
    let n_lo = ((-r - w0.im) / t.im).ceil() as i64;
    let n_hi = ((r - w0.im) / t.im).floor() as i64;
    for n in n_lo..=n_hi {
        let y = w0.im + n as f64 * t.im;
        let h2 = r * r - y * y;
        if h2 < 0.0 {
            continue;
        }
        let h = h2.sqrt();
        let x0 = w0.re + n as f64 * t.re;
        let m_lo = (-h - x0).ceil() as i64;
        let m_hi = (h - x0).floor() as i64;
        for m in m_lo..=m_hi {
            f(Complex64::new(x0 + m as f64, y));
        }
    }
}

/// Visit dual momenta k = 2 pi (alpha + i (beta - alpha tau1)/tau2) with 0 < |k| <= kmax,
/// passing (k, alpha, beta).
fn for_dual_within<F: FnMut(Complex64, i64, i64)>(kmax: f64, tau: ModularPoint, mut f: F) {
    let (t1, t2) = (tau.re, tau.im);
    let amax = (kmax / (2.0 * PI)).floor() as i64;
    for alpha in -amax..=amax {
        let kx = 2.0 * PI * alpha as f64;
        let h2 = kmax * kmax - kx * kx;
        if h2 < 0.0 {
            continue;
        }
        let h = h2.sqrt() * t2 / (2.0 * PI);
        let c = alpha as f64 * t1;
        for beta in ((c - h).ceil() as i64)..=((c + h).floor() as i64) {
            if alpha == 0 && beta == 0 {
                continue;
            }
            let ky = 2.0 * PI * (beta as f64 - c) / t2;
            f(Complex64::new(kx, ky), alpha, beta);
        }
    }
}

fn trunc_exponent(ctl: &SumControl) -> f64 {
    -(ctl.tol * 1e-3).max(1e-300).ln()
}

/// Heat kernel K_t(z) on the torus with the flat metric.
pub fn heat_kernel(z: Complex64, tau: ModularPoint, t: f64, ctl: &SumControl) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonpositiveTime(t));
    }
    let zr = centered(z, tau);
    let x = trunc_exponent(ctl) + 5.0;
    if t < tau.im * tau.im / 4.0 {
        let r = (4.0 * t * x).sqrt();
        let mut s = 0.0;
        for_lattice_within(zr, r, tau, |w| s += (-w.norm_sqr() / (4.0 * t)).exp());
        Ok(s / (4.0 * PI * t))
    } else {
        let kmax = (x / t).sqrt();
        let p = TorusPoint::from_complex(zr, tau);
        let mut s = 1.0;
        for_dual_within(kmax, tau, |k, a, b| {
            s += (-t * k.norm_sqr()).exp() * (2.0 * PI * (a as f64 * p.a + b as f64 * p.b)).cos();
        });
        Ok(s / tau.im)
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Integral over t in [lo, hi] of dt/(4 pi t) (-conj(w)/(4t))^k exp(-|w|^2/(4t)).
pub(crate) fn windowed_moment(w: Complex64, k: u32, lo: f64, hi: f64) -> Complex64 {
    let r2 = w.norm_sqr();
    if r2 == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let kf = k as f64;
    let x_lo = r2 / (4.0 * lo);
    if x_lo <= 2.0 {
        // expand the exponential: lo^{-k} sum_j (-x_lo)^j/j! (1 - (lo/hi)^{k+j})/(k+j)
        let rho = lo / hi;
        let mut s = 0.0;
        let mut c = 1.0;
        for j in 0..200 {
            let e = kf + j as f64;
            let term = c * (1.0 - rho.powf(e)) / e;
            s += term;
            if term.abs() <= 1e-17 * s.abs() && j > 2 {
                break;
            }
            c *= -x_lo / (j as f64 + 1.0);
        }
        let scale = (4.0 * lo).powi(-(k as i32)) / (4.0 * PI);
        return (-w.conj()).powi(k as i32) * (s * scale);
    }
    let x_hi = r2 / (4.0 * hi);
    // Q(k, x) = e^{-x} sum_{j<k} x^j/j!
    let q = |x: f64| {
        let mut s = 0.0;
        let mut c = 1.0;
        for j in 0..k {
            s += c;
            c *= x / (j as f64 + 1.0);
        }
        (-x).exp() * s
    };
    let diff = q(x_hi) - q(x_lo);
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * factorial(k - 1) * diff / (4.0 * PI * w.powi(k as i32))
}

/// Precomputed pieces of d^m P_{eps,L} for one (tau, window, m); evaluates at many z.
#[derive(Debug, Clone)]
pub struct PropagatorKernel {
    tau: ModularPoint,
    window: RegularizationWindow,
    m: u32,
    split: f64,
    direct_radius: f64,
    dual: Vec<(i64, i64, Complex64)>,
}

impl PropagatorKernel {
    pub fn new(tau: ModularPoint, window: RegularizationWindow, m: u32, ctl: &SumControl) -> Self {
        let k = m + 2;
        let split = (tau.im / (4.0 * PI)).clamp(window.eps, window.l);
        let x = trunc_exponent(ctl) + 3.0 * k as f64 + 10.0;
        let direct_radius = (4.0 * split * x).sqrt();
        let mut dual = Vec::new();
        if window.l > split {
            let kmax = (x / split).sqrt();
            for_dual_within(kmax, tau, |kv, a, b| {
                let k2 = kv.norm_sqr();
                let reg = (-split * k2).exp() - (-window.l * k2).exp();
                let c = (0.5 * I * kv.conj()).powi(k as i32) * (reg / (k2 * tau.im));
                if c.norm() > 0.0 {
                    dual.push((a, b, c));
                }
            });
        }
        PropagatorKernel { tau, window, m, split, direct_radius, dual }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let zr = centered(z, self.tau);
        let k = self.m + 2;
        let mut s = Complex64::new(0.0, 0.0);
        if self.split > self.window.eps {
            let (lo, hi) = (self.window.eps, self.split);
            for_lattice_within(zr, self.direct_radius, self.tau, |w| s += windowed_moment(w, k, lo, hi));
        }
        if !self.dual.is_empty() {
            let p = TorusPoint::from_complex(zr, self.tau);
            for &(a, b, c) in &self.dual {
                let ph = 2.0 * PI * (a as f64 * p.a + b as f64 * p.b);
                s += c * Complex64::new(ph.cos(), ph.sin());
            }
        }
        s
    }
}

/// d^m/dz^m of the propagator P_{eps,L}(z), smooth for eps > 0.
pub fn bcov_propagator(
    z: Complex64,
    tau: ModularPoint,
    window: RegularizationWindow,
    m: u32,
    ctl: &SumControl,
) -> Complex64 {
    PropagatorKernel::new(tau, window, m, ctl).eval(z)
}

/// The eps -> 0, L -> infinity limit: (1/4pi) d^m wp(z) + [m = 0] c_* E_2^*.
pub fn bcov_limit(z: Complex64, tau: ModularPoint, m: u32, ctl: &SumControl) -> Result<Complex64> {
    let mut v = weierstrass_p(z, tau, m, ctl)? / (4.0 * PI);
    if m == 0 {
        v += E2STAR_COEFF * e2_star(tau, ctl);
    }
    Ok(v)
}

/// Residual of the SL(2,Z) transformation law of d^m P_{eps,L}.
pub fn transform_check(
    z: Complex64,
    tau: ModularPoint,
    gamma: ModularGroupElement,
    window: RegularizationWindow,
    m: u32,
    ctl: &SumControl,
) -> Result<f64> {
    let c = gamma.factor(tau.tau());
    let s = c.norm_sqr();
    let lhs = bcov_propagator(z, gamma.act(tau), window, m, ctl);
    let scaled = RegularizationWindow::new(s * window.eps, s * window.l)?;
    let rhs = c.powi(m as i32 + 2) * bcov_propagator(c * z, tau, scaled, m, ctl);
    Ok((lhs - rhs).norm())
}

/// |sum_n (4 pi L)^{-1/2} e^{-(a-n)^2/4L} - sum_m e^{-4 pi^2 m^2 L} cos(2 pi m a)|.
pub fn poisson_theta_check(a: f64, l: f64) -> f64 {
    let x = 40.0;
    let nmax = (a.abs() + (4.0 * l * x).sqrt()).ceil() as i64 + 1;
    let lhs: f64 = (-nmax..=nmax)
        .map(|n| (-(a - n as f64).powi(2) / (4.0 * l)).exp())
        .sum::<f64>()
        / (4.0 * PI * l).sqrt();
    let mmax = (x / (4.0 * PI * PI * l)).sqrt().ceil() as i64 + 1;
    let rhs: f64 = 1.0
        + 2.0
            * (1..=mmax)
                .map(|m| (-4.0 * PI * PI * (m * m) as f64 * l).exp() * (2.0 * PI * m as f64 * a).cos())
                .sum::<f64>();
    (lhs - rhs).abs()
}

/// Closed-form value of a self-loop with n derivatives.
pub fn self_loop_value(n: u32, tau: ModularPoint, ctl: &SumControl) -> Complex64 {
    if n == 0 {
        E2STAR_COEFF * e2_star(tau, ctl)
    } else if n % 2 == 1 {
        Complex64::new(0.0, 0.0)
    } else {
        let z = zeta_even(n + 2).expect("even argument");
        factorial(n + 1) * z / (2.0 * PI) * eisenstein(n as i64 + 2, tau, ctl).expect("even weight")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientFit {
    pub coefficient: Complex64,
    pub residual: f64,
    /// Name of the closest printed candidate, if within 1e-4.
    pub matched: Option<&'static str>,
}

/// Least-squares fit of bcov_propagator(z, tau, window, 0) - wp(z)/4pi = c E_2^*(tau).
pub fn fit_e2star_coefficient(
    samples: &[(Complex64, ModularPoint)],
    window: RegularizationWindow,
    ctl: &SumControl,
) -> Result<CoefficientFit> {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    let mut rows = Vec::new();
    for &(z, tau) in samples {
        let r = bcov_propagator(z, tau, window, 0, ctl) - weierstrass_p(z, tau, 0, ctl)? / (4.0 * PI);
        let e = e2_star(tau, ctl);
        num += e.conj() * r;
        den += e.norm_sqr();
        rows.push((r, e));
    }
    if den < 1e-20 {
        return Err(Error::IllConditionedFit(f64::INFINITY));
    }
    let c = num / den;
    let residual = rows.iter().map(|(r, e)| (r - c * e).norm()).fold(0.0, f64::max);
    let matched = E2STAR_CANDIDATES
        .iter()
        .find(|(_, v)| (c - v).norm() < 1e-4)
        .map(|(name, _)| *name);
    Ok(CoefficientFit { coefficient: c, residual, matched })
}
