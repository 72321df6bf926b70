//! Base exponential families and their mean-derivative structure.
//!
//! Two families are supported: the normal with a fixed standard deviation
//! `sigma0`, and the binomial with `n` trials parameterized by its mean
//! `mu = n p`. For both, `q_j(x; mu) = f^(j)(x; mu) / f(x; mu)` is a
//! polynomial of degree `j` in `x`.
//!
//! Normal: with `u = x - mu`, the ratios satisfy
//! `q_{j+1}(u) = q_j(u) u / sigma0^2 - q_j'(u)`, which gives
//! `q_j(u) = He_j(u / sigma0) / sigma0^j` (probabilists' Hermite).
//!
//! Binomial: writing the mass function as `mu^x (n - mu)^(n - x)` times a
//! constant and applying Leibniz' rule,
//!
//! ```text
//! q_j(x) = sum_i C(j,i) (-1)^(j-i) (x)_i (n-x)_(j-i) / (mu^i (n-mu)^(j-i))
//! ```
//!
//! with `(a)_k` the falling factorial.
//!
//! Fifth derivatives bound the Taylor remainder of an order-four local
//! mixture. For the normal family `f^(5)(x; m) = He_5(u/s) phi(u/s) / s^6`.
//! [`printed_normal_fifth_derivative`] keeps the alternative closed form
//! with `y = (x - m) / s^2` in both the polynomial and the exponent; it
//! agrees with the true derivative only at `s = 1` (the exponent decays
//! like `exp(-u^2 / 2 s^6)`), so the bound below is computed from the
//! true derivative.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{
    abs, binomial, exp, falling, floor, ln_binomial, log, powi, LN_SQRT_2PI, SQRT_2PI,
};
use crate::poly::Poly;

/// Largest trial count for which binomial `q_j` coefficients are expanded
/// in exact integer arithmetic.
pub const EXACT_BINOMIAL_LIMIT: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseFamily {
    /// Normal with fixed standard deviation.
    NormalFixedVar { sigma0: f64 },
    /// Binomial with `n` trials, parameterized by its mean in `(0, n)`.
    Binomial { n: u32 },
}

impl BaseFamily {
    pub fn normal(sigma0: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::Argument("sigma0 must be positive and finite"));
        }
        Ok(BaseFamily::NormalFixedVar { sigma0 })
    }

    pub fn binomial(n: u32) -> Result<Self> {
        if n < 6 {
            return Err(Error::Argument("binomial family needs n >= 6"));
        }
        Ok(BaseFamily::Binomial { n })
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, BaseFamily::Binomial { .. })
    }

    pub fn check_mean(&self, mu: f64) -> Result<()> {
        match *self {
            BaseFamily::NormalFixedVar { .. } if mu.is_finite() => Ok(()),
            BaseFamily::NormalFixedVar { .. } => Err(Error::Domain("mean must be finite")),
            BaseFamily::Binomial { n } => {
                if mu > 0.0 && mu < n as f64 {
                    Ok(())
                } else {
                    Err(Error::Domain("binomial mean must lie strictly inside (0, n)"))
                }
            }
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            BaseFamily::NormalFixedVar { .. } => x.is_finite(),
            BaseFamily::Binomial { n } => x >= 0.0 && x <= n as f64 && floor(x) == x,
        }
    }

    pub fn check_observation(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain("observation outside the sample space"))
        }
    }

    /// Sample points of a discrete family, `0..=n`.
    pub fn support(&self) -> Option<impl Iterator<Item = f64>> {
        match *self {
            BaseFamily::Binomial { n } => Some((0..=n).map(|x| x as f64)),
            BaseFamily::NormalFixedVar { .. } => None,
        }
    }

    /// `ln f(x; mu)` without argument validation.
    pub fn ln_density_unchecked(&self, x: f64, mu: f64) -> f64 {
        match *self {
            BaseFamily::NormalFixedVar { sigma0 } => {
                let z = (x - mu) / sigma0;
                -0.5 * z * z - LN_SQRT_2PI - log(sigma0)
            }
            BaseFamily::Binomial { n } => {
                let nf = n as f64;
                let p = mu / nf;
                let k = x as u64;
                ln_binomial(n as u64, k) + x * log(p) + (nf - x) * log(1.0 - p)
            }
        }
    }

    /// `f(x; mu)` without argument validation.
    pub fn density_unchecked(&self, x: f64, mu: f64) -> f64 {
        match *self {
            BaseFamily::NormalFixedVar { sigma0 } => {
                let z = (x - mu) / sigma0;
                exp(-0.5 * z * z) / (SQRT_2PI * sigma0)
            }
            BaseFamily::Binomial { n } => {
                let p = mu / n as f64;
                let k = x as u32;
                binomial(n as u64, k as u64) * powi(p, k) * powi(1.0 - p, n - k)
            }
        }
    }

    /// `(q_1(x), ..., q_5(x))` at mean `mu`, evaluated in a numerically
    /// stable form rather than from monomial coefficients.
    pub fn q_values(&self, x: f64, mu: f64) -> [f64; 5] {
        let mut q = [0.0; 5];
        match *self {
            BaseFamily::NormalFixedVar { sigma0 } => {
                let z = (x - mu) / sigma0;
                let (mut h_prev, mut h) = (1.0, z);
                let mut scale = 1.0 / sigma0;
                q[0] = h * scale;
                for j in 1..5 {
                    let next = z * h - j as f64 * h_prev;
                    h_prev = h;
                    h = next;
                    scale /= sigma0;
                    q[j] = h * scale;
                }
            }
            BaseFamily::Binomial { n } => {
                let nf = n as f64;
                let a = 1.0 / mu;
                let b = -1.0 / (nf - mu);
                for j in 1..=5u32 {
                    let mut s = 0.0;
                    for i in 0..=j {
                        s += binomial(j as u64, i as u64)
                            * falling(x, i)
                            * falling(nf - x, j - i)
                            * powi(a, i)
                            * powi(b, j - i);
                    }
                    q[(j - 1) as usize] = s;
                }
            }
        }
        q
    }
}

/// `f(x; mu)` with domain checks.
pub fn density(family: &BaseFamily, x: f64, mu: f64) -> Result<f64> {
    family.check_mean(mu)?;
    family.check_observation(x)?;
    Ok(family.density_unchecked(x, mu))
}

/// `q_j(x; mu0)` as explicit polynomial coefficients.
///
/// Normal coefficients are in powers of `x - mu0`; binomial ones in powers
/// of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QPolynomial {
    pub order: usize,
    pub anchor: f64,
    pub centered: bool,
    pub poly: Poly,
}

impl QPolynomial {
    pub fn coefficients(&self) -> &[f64] {
        &self.poly.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.centered {
            self.poly.eval(x - self.anchor)
        } else {
            self.poly.eval(x)
        }
    }
}

pub fn q_polynomial(family: &BaseFamily, mu: f64, j: usize) -> Result<QPolynomial> {
    if !(1..=5).contains(&j) {
        return Err(Error::Argument("derivative order must be in 1..=5"));
    }
    family.check_mean(mu)?;
    let poly = match *family {
        BaseFamily::NormalFixedVar { sigma0 } => {
            let s2 = sigma0 * sigma0;
            let mut q = Poly::constant(1.0);
            for _ in 0..j {
                q = q.shift_mul_add(1.0 / s2, &q.derivative().scale(-1.0));
            }
            q
        }
        BaseFamily::Binomial { n } => {
            if n <= EXACT_BINOMIAL_LIMIT {
                binomial_q_coeffs::<i128>(n, mu, j)
            } else {
                binomial_q_coeffs::<f64>(n, mu, j)
            }
        }
    };
    let mut coeffs = poly.coeffs;
    coeffs.resize(j + 1, 0.0);
    Ok(QPolynomial {
        order: j,
        anchor: mu,
        centered: !family.is_discrete(),
        poly: Poly::new(coeffs),
    })
}

trait Coef: Copy + core::ops::Add<Output = Self> + core::ops::Mul<Output = Self> {
    fn int(v: i64) -> Self;
    fn to_f64(self) -> f64;
}

impl Coef for i128 {
    fn int(v: i64) -> Self {
        v as i128
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Coef for f64 {
    fn int(v: i64) -> Self {
        v as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Coefficients of `prod (c0 + c1 x)`.
fn linear_product<T: Coef>(factors: impl Iterator<Item = (i64, i64)>) -> Vec<T> {
    let mut out = vec![T::int(1)];
    for (c0, c1) in factors {
        let mut next = vec![T::int(0); out.len() + 1];
        for (k, &a) in out.iter().enumerate() {
            next[k] = next[k] + a * T::int(c0);
            next[k + 1] = next[k + 1] + a * T::int(c1);
        }
        out = next;
    }
    out
}

fn binomial_q_coeffs<T: Coef>(n: u32, mu: f64, j: usize) -> Poly {
    let nf = n as f64;
    let mut coeffs = vec![0.0; j + 1];
    for i in 0..=j {
        // (x)_i (n - x)_(j - i) has integer coefficients.
        let left = (0..i as i64).map(|k| (-k, 1));
        let right = (0..(j - i) as i64).map(|k| (n as i64 - k, -1));
        let ints: Vec<T> = linear_product(left.chain(right));
        let sign = if (j - i).is_multiple_of(2) { 1.0 } else { -1.0 };
        let w = sign * binomial(j as u64, i as u64)
            / (powi(mu, i as u32) * powi(nf - mu, (j - i) as u32));
        for (k, c) in ints.into_iter().enumerate() {
            coeffs[k] += w * c.to_f64();
        }
    }
    Poly::new(coeffs)
}

/// True fifth mean-derivative of the normal density with standard
/// deviation `sigma`.
pub fn normal_fifth_derivative(x: f64, m: f64, sigma: f64) -> f64 {
    let z = (x - m) / sigma;
    let he5 = ((z * z - 10.0) * z * z + 15.0) * z;
    he5 * exp(-0.5 * z * z) / (SQRT_2PI * powi(sigma, 6))
}

/// The closed form with `y = (x - m) / sigma^2` substituted throughout.
/// Equal to [`normal_fifth_derivative`] only when `sigma = 1`.
pub fn printed_normal_fifth_derivative(x: f64, m: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let y = (x - m) / s2;
    let poly = powi(y, 5) - 10.0 * powi(y, 3) / s2 + 15.0 * y / (s2 * s2);
    poly * exp(-y * y / (2.0 * s2)) / (SQRT_2PI * sigma)
}

const BOUND_GRID: usize = 4096;

/// `sup |f^(5)(x; m)|` over all `x, m` for the normal family.
///
/// Dense grid over `u = x - m` followed by golden-section polishing around
/// the best cell. Deterministic.
pub fn normal_fifth_derivative_bound(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Argument("sigma must be positive and finite"));
    }
    let half = 8.0 * sigma * (1.0f64).max(1.0 / (sigma * sigma));
    let g = |u: f64| abs(normal_fifth_derivative(u, 0.0, sigma));
    let step = 2.0 * half / (BOUND_GRID - 1) as f64;
    let (best, _) = (0..BOUND_GRID)
        .map(|k| (k, g(-half + step * k as f64)))
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let centre = -half + step * best as f64;
    let (_, polished) = crate::math::golden_max(g, centre - step, centre + step, 1e-14);
    Ok(polished.max(g(centre)))
}

/// Bounds on the binomial fifth-derivative ratio at mean `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialEnvelope {
    pub n: u32,
    pub m: f64,
    /// Strict lower bound on `q_5(x; n, m)` over `x = 0..=n`.
    pub lower: f64,
    /// Strict upper bound on `q_5(x; n, m)` over `x = 0..=n`.
    pub upper: f64,
    /// Mode of the mass function, `floor(m (n + 1) / n)`.
    pub x_star: u32,
}

impl BinomialEnvelope {
    /// Closed-form sign rule: the upper bound dominates in magnitude exactly
    /// when `m <= n / 2` (with equality of magnitudes at `m = n / 2`).
    pub fn upper_dominates(&self) -> bool {
        self.m <= self.n as f64 / 2.0
    }

    pub fn magnitude(&self) -> f64 {
        self.upper.max(abs(self.lower))
    }

    /// `max |f^(5)(x; m)|` over `x`, bounded by `p(x*) max(|L|, U)`.
    pub fn derivative_bound(&self) -> f64 {
        let fam = BaseFamily::Binomial { n: self.n };
        fam.density_unchecked(self.x_star as f64, self.m) * self.magnitude()
    }
}

pub fn binomial_remainder_envelope(n: u32, m: f64) -> Result<BinomialEnvelope> {
    if n < 6 {
        return Err(Error::Argument("binomial envelope needs n >= 6"));
    }
    let nf = n as f64;
    if !(m > 0.0 && m < nf) {
        return Err(Error::Domain("envelope mean must lie strictly inside (0, n)"));
    }
    // gamma(0) = 0! 5! C(n, n - 5)
    let gamma0 = 120.0 * binomial(n as u64, 5);
    let nm5 = powi(nf - m, 5);
    let lower = -gamma0 / (nm5 * powi(m, 4))
        * (5.0 * powi(nf, 4) + 10.0 * nf * nf * m * m + powi(m, 4));
    let upper = gamma0 / (nm5 * powi(m, 5))
        * (powi(nf, 5) + 10.0 * powi(nf, 3) * m * m + 5.0 * nf * powi(m, 4) - powi(m, 5));
    let x_star = (floor(m * (nf + 1.0) / nf) as u32).min(n);
    Ok(BinomialEnvelope {
        n,
        m,
        lower,
        upper,
        x_star,
    })
}

const ENVELOPE_GRID: usize = 1024;

/// `max_m p(x*; n, m) max(|L|, U)` over a 1024-point grid on `[lo, hi]`.
pub fn binomial_fifth_derivative_bound(n: u32, lo: f64, hi: f64) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::Argument("empty mean interval"));
    }
    let count = if hi > lo { ENVELOPE_GRID } else { 1 };
    let mut best = 0.0f64;
    for k in 0..count {
        let m = if count == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (count - 1) as f64
        };
        best = best.max(binomial_remainder_envelope(n, m)?.derivative_bound());
    }
    Ok(best)
}

/// Fifth-derivative bound for the family over means in `[lo, hi]`.
pub fn fifth_derivative_bound(family: &BaseFamily, lo: f64, hi: f64) -> Result<f64> {
    match *family {
        BaseFamily::NormalFixedVar { sigma0 } => normal_fifth_derivative_bound(sigma0),
        BaseFamily::Binomial { n } => binomial_fifth_derivative_bound(n, lo, hi),
    }
}
