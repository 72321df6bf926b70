//! Dense univariate polynomials and closed-form real roots up to degree three.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math::{abs, acos, cbrt, cos, sqrt};

/// Coefficients in increasing degree: `c[0] + c[1] t + c[2] t^2 + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Poly { coeffs: vec![c] }
    }

    /// Largest index with a nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly {
            coeffs: self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (i + 1) as f64)
                .collect(),
        }
    }

    /// `self * t * s + other`, used by derivative recurrences.
    pub fn shift_mul_add(&self, s: f64, other: &Poly) -> Poly {
        let len = (self.coeffs.len() + 1).max(other.coeffs.len());
        let mut out = vec![0.0; len];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i + 1] += c * s;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly { coeffs: out }
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }
}

/// Up to three real roots, ascending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Roots {
    values: [f64; 3],
    len: usize,
}

impl Roots {
    fn from_slice(r: &[f64]) -> Self {
        let mut values = [0.0; 3];
        values[..r.len()].copy_from_slice(r);
        values[..r.len()].sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
        Roots { values, len: r.len() }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Real roots of `a t^2 + b t + c` with `a != 0`.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Roots {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Roots::from_slice(&[]);
    }
    if disc == 0.0 {
        return Roots::from_slice(&[-b / (2.0 * a)]);
    }
    // Avoid cancellation between -b and the square root.
    let q = -0.5 * (b + b.signum() * sqrt(disc));
    if q == 0.0 {
        return Roots::from_slice(&[0.0]);
    }
    Roots::from_slice(&[q / a, c / q])
}

/// Real roots of `a t^3 + b t^2 + c t + d` with `a != 0`.
///
/// Cardano for a single real root, the trigonometric form when all three
/// are real; each root then gets one Newton step.
pub fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Roots {
    let (b, c, d) = (b / a, c / a, d / a);
    // t = s - b/3 turns the monic cubic into s^3 + p s + q.
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);

    let mut buf = [0.0; 3];
    let n = if p == 0.0 && q == 0.0 {
        buf[0] = 0.0;
        1
    } else if disc > 0.0 {
        let s = sqrt(disc);
        buf[0] = cbrt(-q / 2.0 + s) + cbrt(-q / 2.0 - s);
        1
    } else {
        // p < 0 here.
        let m = 2.0 * sqrt(-p / 3.0);
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = acos(arg) / 3.0;
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = m * cos(theta - 2.0 * PI * k as f64 / 3.0);
        }
        3
    };

    for r in buf[..n].iter_mut() {
        let t = *r - shift;
        let f = ((t + b) * t + c) * t + d;
        let df = (3.0 * t + 2.0 * b) * t + c;
        let t = if df != 0.0 && abs(f / df) < 1.0 + abs(t) {
            t - f / df
        } else {
            t
        };
        *r = t;
    }
    Roots::from_slice(&buf[..n])
}
