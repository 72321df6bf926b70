//! Order-four local mixture models and the geometry of their parameter space.
//!
//! For fixed `mu0` the admissible coefficients form the convex set
//!
//! ```text
//! Lambda(mu0) = { lambda : P(x) = 1 + sum_j lambda_j q_j(x; mu0) >= 0 for all x }
//! ```
//!
//! an intersection of the half-spaces bounded by the hyperplanes
//! `1 + <lambda, q(x)> = 0`, one per sample point. For the normal family
//! `P` is a quartic in `x` and membership reduces to the sign of its leading
//! coefficient and its values at the real roots of the cubic `P'`. For the
//! binomial family there are only `n + 1` half-spaces and they are checked
//! one by one.
//!
//! Moments of a normal LMM (any `sigma0`) follow from
//! `int x^k f^(j) dx = d^j/dmu^j E[X^k]`:
//!
//! ```text
//! mean     = mu0 + l1
//! variance = sigma0^2 + 2 l2 - l1^2
//! third    = 6 l3 + 2 l1^3 - 6 l1 l2
//! ```
//!
//! The third central moment does not depend on `sigma0`.

use crate::error::{Error, Result};
use crate::expfam::BaseFamily;
use crate::math::abs;
use crate::poly::cubic_roots;

pub type Lambda = [f64; 4];

/// `|min P| <= BOUNDARY_TOL` is reported as a boundary point.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Polynomial coefficients below this magnitude are treated as zero.
pub const DEGREE_TOL: f64 = 1e-14;
/// Directions that stay feasible this far are reported as unbounded.
pub const STEP_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Interior,
    Boundary,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Argmin {
    At(f64),
    /// `P` decreases without bound along the sample space.
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub status: FeasibilityStatus,
    /// Infimum of `P` over the sample space, `-inf` when unbounded.
    pub min_value: f64,
    pub argmin: Argmin,
    /// `min_value` when interior, 0 otherwise.
    pub margin: f64,
}

impl FeasibilityReport {
    fn from_min(min_value: f64, argmin: Argmin) -> Self {
        let status = if min_value > BOUNDARY_TOL {
            FeasibilityStatus::Interior
        } else if min_value >= -BOUNDARY_TOL {
            FeasibilityStatus::Boundary
        } else {
            FeasibilityStatus::Infeasible
        };
        FeasibilityReport {
            status,
            min_value,
            argmin,
            margin: if status == FeasibilityStatus::Interior { min_value } else { 0.0 },
        }
    }

    fn unbounded() -> Self {
        Self::from_min(f64::NEG_INFINITY, Argmin::Unbounded)
    }

    pub fn is_feasible(&self) -> bool {
        self.status != FeasibilityStatus::Infeasible
    }
}

/// `P(x) = 1 + sum_j lambda_j q_j(x; mu0)`.
pub fn positivity(family: &BaseFamily, mu0: f64, lambda: &Lambda, x: f64) -> f64 {
    let q = family.q_values(x, mu0);
    1.0 + lambda[0] * q[0] + lambda[1] * q[1] + lambda[2] * q[2] + lambda[3] * q[3]
}

/// Coefficients of `P` in powers of `z = (x - mu0) / sigma0`.
fn normal_standardized_coeffs(sigma0: f64, lambda: &Lambda) -> [f64; 5] {
    let t1 = lambda[0] / sigma0;
    let t2 = lambda[1] / (sigma0 * sigma0);
    let t3 = lambda[2] / (sigma0 * sigma0 * sigma0);
    let t4 = lambda[3] / (sigma0 * sigma0 * sigma0 * sigma0);
    [1.0 - t2 + 3.0 * t4, t1 - 3.0 * t3, t2 - 6.0 * t4, t3, t4]
}

fn eval5(c: &[f64; 5], z: f64) -> f64 {
    (((c[4] * z + c[3]) * z + c[2]) * z + c[1]) * z + c[0]
}

pub fn feasibility(family: &BaseFamily, mu0: f64, lambda: &Lambda) -> Result<FeasibilityReport> {
    family.check_mean(mu0)?;
    Ok(feasibility_unchecked(family, mu0, lambda))
}

pub(crate) fn feasibility_unchecked(family: &BaseFamily, mu0: f64, lambda: &Lambda) -> FeasibilityReport {
    match *family {
        BaseFamily::NormalFixedVar { sigma0 } => {
            let c = normal_standardized_coeffs(sigma0, lambda);
            let at = |z: f64| Argmin::At(mu0 + sigma0 * z);
            if abs(c[4]) > DEGREE_TOL {
                if c[4] < 0.0 {
                    return FeasibilityReport::unbounded();
                }
                let roots = cubic_roots(4.0 * c[4], 3.0 * c[3], 2.0 * c[2], c[1]);
                let (z, v) = roots
                    .as_slice()
                    .iter()
                    .map(|&z| (z, eval5(&c, z)))
                    .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                FeasibilityReport::from_min(v, at(z))
            } else if abs(c[3]) > DEGREE_TOL {
                FeasibilityReport::unbounded()
            } else if abs(c[2]) > DEGREE_TOL {
                if c[2] < 0.0 {
                    return FeasibilityReport::unbounded();
                }
                let z = -c[1] / (2.0 * c[2]);
                FeasibilityReport::from_min(c[0] - c[1] * c[1] / (4.0 * c[2]), at(z))
            } else if abs(c[1]) > DEGREE_TOL {
                FeasibilityReport::unbounded()
            } else {
                FeasibilityReport::from_min(c[0], at(0.0))
            }
        }
        BaseFamily::Binomial { n } => {
            let (x, v) = (0..=n)
                .map(|x| (x as f64, positivity(family, mu0, lambda, x as f64)))
                .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            FeasibilityReport::from_min(v, Argmin::At(x))
        }
    }
}

/// Affine coefficients `(1, q_1(x), ..., q_4(x))` of the hyperplane in
/// lambda-space on which the LMM density vanishes at `x`.
pub fn boundary_hyperplane(family: &BaseFamily, mu0: f64, x: f64) -> Result<[f64; 5]> {
    family.check_mean(mu0)?;
    family.check_observation(x)?;
    let q = family.q_values(x, mu0);
    Ok([1.0, q[0], q[1], q[2], q[3]])
}

fn axpy(from: &Lambda, t: f64, d: &Lambda) -> Lambda {
    [
        from[0] + t * d[0],
        from[1] + t * d[1],
        from[2] + t * d[2],
        from[3] + t * d[3],
    ]
}

/// `sup { t >= 0 : from + t direction` is in the closed parameter space `}`.
///
/// Bracket doubling then bisection; `+inf` once `t` exceeds [`STEP_CAP`].
pub fn max_feasible_step(
    family: &BaseFamily,
    mu0: f64,
    from: &Lambda,
    direction: &Lambda,
) -> Result<f64> {
    let start = feasibility(family, mu0, from)?;
    if start.status != FeasibilityStatus::Interior {
        return Err(Error::NotInterior {
            min_value: start.min_value,
        });
    }
    let ok = |t: f64| feasibility_unchecked(family, mu0, &axpy(from, t, direction)).is_feasible();
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ok(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > STEP_CAP {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.max(1e-3) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// A validated local mixture model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lmm {
    family: BaseFamily,
    mu0: f64,
    lambda: Lambda,
}

impl Lmm {
    /// Fails with [`Error::ConstraintViolation`] unless `lambda` is in the
    /// closed parameter space.
    pub fn new(family: BaseFamily, mu0: f64, lambda: Lambda) -> Result<Self> {
        let report = feasibility(&family, mu0, &lambda)?;
        if !report.is_feasible() {
            return Err(Error::ConstraintViolation {
                min_value: report.min_value,
            });
        }
        Ok(Lmm { family, mu0, lambda })
    }

    pub fn base(family: BaseFamily, mu0: f64) -> Result<Self> {
        Self::new(family, mu0, [0.0; 4])
    }

    pub fn family(&self) -> &BaseFamily {
        &self.family
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn lambda(&self) -> &Lambda {
        &self.lambda
    }

    pub fn positivity(&self, x: f64) -> f64 {
        positivity(&self.family, self.mu0, &self.lambda, x)
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        self.family.check_observation(x)?;
        Ok(self.density_unchecked(x))
    }

    /// Boundary points may evaluate `P` a hair below zero; that is clamped.
    pub fn density_unchecked(&self, x: f64) -> f64 {
        self.family.density_unchecked(x, self.mu0) * self.positivity(x).max(0.0)
    }

    pub fn ln_density_unchecked(&self, x: f64) -> f64 {
        let p = self.positivity(x);
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.family.ln_density_unchecked(x, self.mu0) + crate::math::log(p)
    }

    pub fn feasibility(&self) -> FeasibilityReport {
        feasibility_unchecked(&self.family, self.mu0, &self.lambda)
    }
}

pub fn lmm_density(model: &Lmm, x: f64) -> Result<f64> {
    model.density(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub third_central: f64,
}

pub fn normal_moments(lambda: &Lambda, mu0: f64, sigma0: f64) -> Moments {
    let [l1, l2, l3, _] = *lambda;
    Moments {
        mean: mu0 + l1,
        variance: sigma0 * sigma0 + 2.0 * l2 - l1 * l1,
        third_central: 6.0 * l3 + 2.0 * l1 * l1 * l1 - 6.0 * l1 * l2,
    }
}
