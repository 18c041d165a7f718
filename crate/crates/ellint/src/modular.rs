//! Eisenstein series, the Weierstrass function and SL(2,Z) on the upper half-plane.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularPoint {
    pub re: f64,
    pub im: f64,
}

impl ModularPoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() || im <= 0.0 {
            return Err(Error::InvalidModularPoint(format!("{re}+{im}i")));
        }
        Ok(ModularPoint { re, im })
    }

    pub fn from_complex(tau: Complex64) -> Result<Self> {
        Self::new(tau.re, tau.im)
    }

    pub fn i() -> Self {
        ModularPoint { re: 0.0, im: 1.0 }
    }

    pub fn tau(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// q = exp(2 pi i tau).
    pub fn q(&self) -> Complex64 {
        (2.0 * PI * I * self.tau()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModularGroupElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl ModularGroupElement {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a * d - b * c;
        if det != 1 {
            return Err(Error::NotUnimodular(det));
        }
        Ok(ModularGroupElement { a, b, c, d })
    }

    pub const IDENTITY: Self = ModularGroupElement { a: 1, b: 0, c: 0, d: 1 };
    pub const S: Self = ModularGroupElement { a: 0, b: -1, c: 1, d: 0 };
    pub const T: Self = ModularGroupElement { a: 1, b: 1, c: 0, d: 1 };

    pub fn t_pow(n: i64) -> Self {
        ModularGroupElement { a: 1, b: n, c: 0, d: 1 }
    }

    /// Matrix product `self * other`, i.e. act with `other` first.
    pub fn compose(&self, o: &Self) -> Self {
        ModularGroupElement {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Self {
        ModularGroupElement { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Automorphy factor C tau + D.
    pub fn factor(&self, tau: Complex64) -> Complex64 {
        self.c as f64 * tau + self.d as f64
    }

    pub fn act_complex(&self, tau: Complex64) -> Complex64 {
        (self.a as f64 * tau + self.b as f64) / self.factor(tau)
    }

    pub fn act(&self, tau: ModularPoint) -> ModularPoint {
        let t = self.act_complex(tau.tau());
        // Im(gamma tau) = Im tau / |c tau + d|^2 is computed directly to keep it positive
        ModularPoint { re: t.re, im: tau.im / self.factor(tau.tau()).norm_sqr() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumControl {
    pub q_terms: usize,
    pub lattice_radius: usize,
    pub tol: f64,
}

impl Default for SumControl {
    fn default() -> Self {
        SumControl { q_terms: 64, lattice_radius: 60, tol: 1e-10 }
    }
}

impl SumControl {
    pub fn validate(&self) -> Result<()> {
        if self.q_terms < 1 || self.lattice_radius < 1 || !(self.tol > 0.0) {
            return Err(Error::InvalidControl(format!("{self:?}")));
        }
        Ok(())
    }

    /// Relative truncation target: a few digits below `tol`.
    fn cut(&self) -> f64 {
        (self.tol * 1e-3).max(1e-300)
    }
}

/// Bernoulli number B_n (B_1 = -1/2).
pub fn bernoulli(n: usize) -> BigRational {
    let mut b: Vec<BigRational> = Vec::with_capacity(n + 1);
    b.push(BigRational::one());
    for m in 1..=n {
        // sum_{k<=m} C(m+1,k) B_k = 0
        let mut acc = BigRational::zero();
        let mut binom = BigInt::one();
        for (k, bk) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bk;
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b.pop().unwrap()
}

fn factorial_f64(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// zeta(m) for even m >= 2 from Bernoulli numbers.
pub fn zeta_even(m: u32) -> Result<f64> {
    if m < 2 || m % 2 == 1 {
        return Err(Error::Unsupported(format!("zeta_even requires even m >= 2, got {m}")));
    }
    let b = bernoulli(m as usize).to_f64().unwrap();
    let sign = if (m / 2) % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * b * (2.0 * PI).powi(m as i32) / (2.0 * factorial_f64(m)))
}

/// Normalized Eisenstein series E_k(tau) by its q-expansion.
pub fn eisenstein(k: i64, tau: ModularPoint, ctl: &SumControl) -> Result<Complex64> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::OddWeight(k));
    }
    let bk = bernoulli(k as usize).to_f64().unwrap();
    let coeff = -2.0 * k as f64 / bk;
    let q = tau.q();
    let aq = q.norm();
    let mut qn = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::zero();
    let cap = 1_000_000usize;
    for n in 1..=cap {
        qn *= q;
        let nf = n as f64;
        sum += nf.powi(k as i32 - 1) * qn / (1.0 - qn);
        if n >= ctl.q_terms {
            let next = nf + 1.0;
            let ratio = ((next + 1.0) / next).powi(k as i32 - 1) * aq;
            if ratio < 1.0 {
                let bound = next.powi(k as i32 - 1) * aq.powf(next) / ((1.0 - aq) * (1.0 - ratio));
                if coeff.abs() * bound < ctl.cut() {
                    break;
                }
            }
        }
    }
    Ok(1.0 + coeff * sum)
}

/// E_2^* = E_2 - 3/(pi Im tau).
pub fn e2_star(tau: ModularPoint, ctl: &SumControl) -> Complex64 {
    eisenstein(2, tau, ctl).expect("weight 2 is valid") - 3.0 / (PI * tau.im)
}

fn expm1_c(z: Complex64) -> Complex64 {
    let s = (0.5 * z.im).sin();
    Complex64::new(z.re.exp_m1() * z.im.cos() - 2.0 * s * s, z.re.exp() * z.im.sin())
}

/// Eulerian polynomial coefficients A(n, k), k = 0..n-1.
fn eulerian(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for m in 2..=n {
        let mut next = vec![0.0; m];
        for k in 0..m {
            let a = if k < row.len() { (k + 1) as f64 * row[k] } else { 0.0 };
            let b = if k >= 1 && k - 1 < row.len() { (m - k) as f64 * row[k - 1] } else { 0.0 };
            next[k] = a + b;
        }
        row = next;
    }
    row
}

/// (w d/dw)^d [w/(1-w)^2], given w and 1-w separately for accuracy near w = 1.
fn r_d(w: Complex64, one_minus_w: Complex64, eul: &[f64]) -> Complex64 {
    let d = eul.len() - 1;
    let mut poly = Complex64::zero();
    for c in eul.iter().rev() {
        poly = poly * w + c;
    }
    w * poly / one_minus_w.powi(d as i32 + 2)
}

/// Split z = a + b tau with the integer parts removed so that |Im z| <= Im tau / 2.
fn reduce_z(z: Complex64, tau: ModularPoint) -> Complex64 {
    let nb = (z.im / tau.im).round();
    let z = z - nb * tau.tau();
    z - z.re.round()
}

/// d-th z-derivative of the Weierstrass function, by q-expansion.
pub fn weierstrass_p(z: Complex64, tau: ModularPoint, deriv: u32, ctl: &SumControl) -> Result<Complex64> {
    let zr = reduce_z(z, tau);
    if zr.norm() < 1e-13 * (1.0 + tau.tau().norm()) {
        return Err(Error::PoleAtLatticePoint);
    }
    let d = deriv as usize;
    let eul = eulerian(d + 1);
    let x = 2.0 * PI * I * zr;
    let u = x.exp();
    let uinv = (-x).exp();
    let q = tau.q();
    let aq = q.norm();
    let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
    let mut sum = r_d(u, -expm1_c(x), &eul);
    let mut qn = Complex64::new(1.0, 0.0);
    let umax = u.norm().max(uinv.norm());
    let scale = factorial_f64(d as u32 + 1) * 4.0;
    for n in 1..100_000 {
        qn *= q;
        let w1 = qn * u;
        let w2 = qn * uinv;
        sum += r_d(w1, 1.0 - w1, &eul) + sign * r_d(w2, 1.0 - w2, &eul);
        let wmax = aq.powi(n) * umax;
        if wmax * scale / (1.0 - wmax).powi(d as i32 + 2) < ctl.cut() * sum.norm().max(1.0) {
            break;
        }
    }
    let pref = (2.0 * PI * I).powi(2 + d as i32);
    let mut val = pref * sum;
    if d == 0 {
        val += pref * eisenstein(2, tau, ctl)? / 12.0;
    }
    Ok(val)
}

fn tail_fit(ms: &[f64], sums: &[Complex64]) -> Complex64 {
    let powers = [0, 2, 3, 4];
    let a = DMatrix::from_fn(ms.len(), powers.len(), |r, c| ms[r].powi(-(powers[c] as i32)));
    let lu = a.lu();
    let re = lu.solve(&DVector::from_iterator(sums.len(), sums.iter().map(|s| s.re))).unwrap();
    let im = lu.solve(&DVector::from_iterator(sums.len(), sums.iter().map(|s| s.im))).unwrap();
    Complex64::new(re[0], im[0])
}

/// Symmetric box sums over |m|,|n| <= M for four doubling M, then fitted to
/// c0 + c2/M^2 + c3/M^3 + c4/M^4 and returned at M = infinity.
fn box_extrapolated<F: Fn(Complex64) -> Complex64>(tau: ModularPoint, ctl: &SumControl, term: F) -> Complex64 {
    let m0 = ctl.lattice_radius.div_ceil(4).max(4) as i64;
    let ms: Vec<i64> = (0..4).map(|j| m0 << j).collect();
    let t = tau.tau();
    let mut acc = Complex64::zero();
    let mut sums = Vec::with_capacity(4);
    let mut next = 0;
    for r in 1..=*ms.last().unwrap() {
        let mut shell = Complex64::zero();
        for n in -r..=r {
            let step = if n.abs() == r { 1 } else { 2 * r };
            let mut m = -r;
            while m <= r {
                shell += term(m as f64 + n as f64 * t);
                m += step;
            }
        }
        acc += shell;
        if r == ms[next] {
            sums.push(acc);
            next += 1;
        }
    }
    let msf: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
    tail_fit(&msf, &sums)
}

/// Lattice-sum evaluation of the d-th derivative of the Weierstrass function.
/// Slow; kept as an independent check on [`weierstrass_p`].
pub fn weierstrass_p_lattice(z: Complex64, tau: ModularPoint, deriv: u32, ctl: &SumControl) -> Result<Complex64> {
    let zr = reduce_z(z, tau);
    if zr.norm() < 1e-13 * (1.0 + tau.tau().norm()) {
        return Err(Error::PoleAtLatticePoint);
    }
    let d = deriv as i32;
    let coef = if d % 2 == 0 { 1.0 } else { -1.0 } * factorial_f64(deriv + 1);
    let rest = if d == 0 {
        box_extrapolated(tau, ctl, |lam| 1.0 / (zr - lam).powi(2) - 1.0 / (lam * lam))
    } else {
        box_extrapolated(tau, ctl, |lam| coef / (zr - lam).powi(d + 2))
    };
    Ok(rest + coef / zr.powi(d + 2))
}

/// E_k from the lattice sum sum' (m + n tau)^{-k} / (2 zeta(k)), k >= 4 even.
pub fn eisenstein_lattice(k: i64, tau: ModularPoint, ctl: &SumControl) -> Result<Complex64> {
    if k < 4 || k % 2 != 0 {
        return Err(Error::Unsupported(format!("lattice Eisenstein sum needs even k >= 4, got {k}")));
    }
    let g = box_extrapolated(tau, ctl, |lam| lam.powi(-(k as i32)));
    Ok(g / (2.0 * zeta_even(k as u32)?))
}

/// Move tau into the standard fundamental domain; returns (tau', gamma) with gamma tau = tau'.
pub fn reduce_to_fundamental_domain(tau: ModularPoint) -> (ModularPoint, ModularGroupElement) {
    let mut g = ModularGroupElement::IDENTITY;
    let mut t = tau.tau();
    for _ in 0..10_000 {
        let n = t.re.round();
        if n != 0.0 {
            t -= n;
            g = ModularGroupElement::t_pow(-(n as i64)).compose(&g);
        }
        if t.norm_sqr() < 1.0 - 1e-15 {
            t = -1.0 / t;
            g = ModularGroupElement::S.compose(&g);
        } else {
            break;
        }
    }
    let out = g.act(tau);
    (out, g)
}
