use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

const MAX_ARITY: usize = 64;

/// Exact rational in lowest terms with positive denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalConstant(pub BigRational);

impl RationalConstant {
    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        RationalConstant(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }
}

impl fmt::Display for RationalConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for RationalConstant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// A(n0; n1..nk) = int_{[0,1]^k} prod u_i^{n_i+1} du / (1 + sum u_i)^{sum_j (n_j + 2)}, exactly.
///
/// Writes 1/(1+s)^S as a Laplace integral, does each u_i integral as a truncated
/// exponential, and collects the products by number of truncated factors.
pub fn a_constant(n0: u32, ns: &[u32]) -> Result<RationalConstant> {
    let k = ns.len();
    if k > MAX_ARITY {
        return Err(Error::UnsupportedArity { got: k, max: MAX_ARITY });
    }
    if k == 0 {
        return Ok(RationalConstant(BigRational::one()));
    }
    let a: Vec<usize> = ns.iter().map(|&n| n as usize + 1).collect();
    let s: usize = n0 as usize + 2 + ns.iter().map(|&n| n as usize + 2).sum::<usize>();
    // by_size[m] = elementary symmetric polynomial of degree m in the truncated exponentials
    let mut by_size: Vec<Vec<BigRational>> = vec![vec![BigRational::one()]];
    for &ai in &a {
        let e: Vec<BigRational> =
            (0..=ai).map(|j| BigRational::new(BigInt::one(), factorial(j))).collect();
        let mut next = by_size.clone();
        next.push(vec![BigRational::zero()]);
        for m in 1..next.len() {
            let add = poly_mul(&by_size[m - 1], &e);
            let slot = &mut next[m];
            if slot.len() < add.len() {
                slot.resize(add.len(), BigRational::zero());
            }
            for (x, y) in slot.iter_mut().zip(add) {
                *x += y;
            }
        }
        by_size = next;
    }
    let mut total = BigRational::zero();
    for (m, poly) in by_size.iter().enumerate() {
        let base = BigInt::from(m + 1);
        let mut part = BigRational::zero();
        for (p, c) in poly.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let q = n0 as usize + 1 + p;
            let denom = num_traits::pow(base.clone(), q + 1);
            part += c * BigRational::new(factorial(q), denom);
        }
        if m % 2 == 1 {
            total -= part;
        } else {
            total += part;
        }
    }
    let pref: BigInt = a.iter().map(|&x| factorial(x)).product();
    let value = total * BigRational::new(pref, factorial(s - 1));
    debug_assert!(value.is_positive());
    Ok(RationalConstant(value))
}

/// Tensor Gauss-Legendre evaluation of the same integral, for k <= 3.
pub fn a_constant_numeric(n0: u32, ns: &[u32], nodes: usize) -> Result<f64> {
    let k = ns.len();
    if k > 3 {
        return Err(Error::UnsupportedArity { got: k, max: 3 });
    }
    let s: i32 = n0 as i32 + 2 + ns.iter().map(|&n| n as i32 + 2).sum::<i32>();
    let (x, w) = gauss_legendre(nodes);
    let u: Vec<f64> = x.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let w: Vec<f64> = w.iter().map(|w| 0.5 * w).collect();
    let mut idx = vec![0usize; k];
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        let mut num = 1.0;
        let mut sum = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            weight *= w[i];
            num *= u[i].powi(ns[d] as i32 + 1);
            sum += u[i];
        }
        total += weight * num / sum.powi(s);
        let mut d = 0;
        while d < k {
            idx[d] += 1;
            if idx[d] < nodes {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == k {
            break;
        }
    }
    Ok(total)
}
