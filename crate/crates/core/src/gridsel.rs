//! Support-point grids.
//!
//! Around an anchor `mu0`, any mixing distribution `Q` supported on
//! `[mu0 - eps1, mu0 + eps2]` is approximated by the LMM whose coefficients
//! are the `Q`-averaged Taylor coefficients,
//! `lambda_j = E_Q[(mu - mu0)^j] / j!`. The pointwise error is the averaged
//! fifth-order remainder, so with `M >= sup |f^(5)|`
//!
//! ```text
//! sup_x |E_Q f(x; mu) - g(x; lambda)| <= E_Q|mu - mu0|^5 M / 120 <= eps^5 M / 120.
//! ```
//!
//! Grid spacing is chosen from the budget `(eps1 + eps2) eps^5 M / 120 <= delta`,
//! i.e. `eps = (60 delta / M)^(1/6)` for symmetric intervals. That budget is
//! at least the mass-weighted bound only when `eps1 + eps2 >= 1`; for
//! narrower intervals a mixing distribution concentrated near an endpoint can
//! exceed it. [`LocalApproxReport`] therefore carries both bounds.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expfam::{fifth_derivative_bound, BaseFamily};
use crate::lmm::{feasibility_unchecked, FeasibilityStatus, Lambda};
use crate::math::{abs, factorial, pow, powi};

/// Hard cap on the number of support points a grid may have.
pub const MAX_GRID_POINTS: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceBudget {
    pub delta: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
}

impl ToleranceBudget {
    pub fn new(delta: f64, epsilon1: f64, epsilon2: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Argument("delta must be positive"));
        }
        if !(epsilon1 > 0.0 && epsilon2 > 0.0) {
            return Err(Error::Argument("interval half-widths must be positive"));
        }
        Ok(ToleranceBudget {
            delta,
            epsilon1,
            epsilon2,
        })
    }

    pub fn symmetric(delta: f64, epsilon: f64) -> Result<Self> {
        Self::new(delta, epsilon, epsilon)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon1.max(self.epsilon2)
    }

    /// `(eps1 + eps2) eps^5 M / 120`.
    pub fn remainder_bound(&self, m: f64) -> f64 {
        interval_bound(self.epsilon1, self.epsilon2, m)
    }

    pub fn is_met(&self, m: f64) -> bool {
        self.remainder_bound(m) <= self.delta * (1.0 + 1e-12)
    }
}

/// `(eps1 + eps2) max(eps1, eps2)^5 M / 120`.
pub fn interval_bound(epsilon1: f64, epsilon2: f64, m: f64) -> f64 {
    (epsilon1 + epsilon2) * powi(epsilon1.max(epsilon2), 5) * m / 120.0
}

fn invert(delta: f64, m: f64) -> f64 {
    pow(60.0 * delta / m, 1.0 / 6.0)
}

fn check_region(family: &BaseFamily, lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::Argument("mean region must be a finite interval lo <= hi"));
    }
    family.check_mean(lo)?;
    family.check_mean(hi)
}

/// Largest symmetric half-width `eps` with `2 eps^6 M / 120 <= delta`, where
/// `M` bounds the fifth mean-derivative over the region.
pub fn epsilon_for_delta(family: &BaseFamily, region: (f64, f64), delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Argument("delta must be positive"));
    }
    check_region(family, region.0, region.1)?;
    let m = fifth_derivative_bound(family, region.0, region.1)?;
    Ok(invert(delta, m))
}

/// One cell of a grid: anchor `mu` and its covering interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridInterval {
    pub mu: f64,
    pub lo: f64,
    pub hi: f64,
    /// Fifth-derivative bound used for this cell.
    pub derivative_bound: f64,
}

impl GridInterval {
    pub fn budget(&self, delta: f64) -> Result<ToleranceBudget> {
        ToleranceBudget::new(delta, self.mu - self.lo, self.hi - self.mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub family: BaseFamily,
    pub range: (f64, f64),
    /// `None` for user-supplied grids.
    pub delta: Option<f64>,
    pub intervals: Vec<GridInterval>,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        self.intervals.iter().map(|c| c.mu).collect()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// A user-chosen grid. Cells meet at midpoints between neighbours; the
    /// outer cells are mirrored around their anchors.
    pub fn from_points(family: BaseFamily, points: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Argument("grid needs at least one point"));
        }
        for w in points.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Argument("grid points must be strictly increasing"));
            }
        }
        for &p in points {
            family.check_mean(p)?;
        }
        let mut intervals = Vec::with_capacity(points.len());
        for (i, &mu) in points.iter().enumerate() {
            let left = if i > 0 { 0.5 * (points[i - 1] + mu) } else { f64::NAN };
            let right = if i + 1 < points.len() { 0.5 * (mu + points[i + 1]) } else { f64::NAN };
            let (lo, hi) = match (left.is_nan(), right.is_nan()) {
                (true, true) => (mu, mu),
                (true, false) => (2.0 * mu - right, right),
                (false, true) => (left, 2.0 * mu - left),
                (false, false) => (left, right),
            };
            intervals.push(GridInterval {
                mu,
                lo,
                hi,
                derivative_bound: f64::NAN,
            });
        }
        Ok(GridSpec {
            family,
            range: (points[0], points[points.len() - 1]),
            delta: None,
            intervals,
        })
    }
}

/// Greedy left-to-right cover of `range` by cells of half-width `eps(delta)`.
pub fn build_grid(family: &BaseFamily, range: (f64, f64), delta: f64) -> Result<GridSpec> {
    let (a, b) = range;
    let eps_global = epsilon_for_delta(family, range, delta)?;
    let width = b - a;
    if width / (2.0 * eps_global) > MAX_GRID_POINTS {
        return Err(Error::Resource {
            points: width / (2.0 * eps_global),
        });
    }

    let mut intervals = Vec::new();
    match *family {
        BaseFamily::NormalFixedVar { .. } => {
            let m = fifth_derivative_bound(family, a, b)?;
            let eps = eps_global;
            if width == 0.0 {
                intervals.push(GridInterval {
                    mu: a,
                    lo: a - eps,
                    hi: a + eps,
                    derivative_bound: m,
                });
            } else {
                let count = libm::ceil(width / (2.0 * eps)) as usize;
                for l in 0..count {
                    let mu = a + eps + 2.0 * eps * l as f64;
                    intervals.push(GridInterval {
                        mu,
                        lo: mu - eps,
                        hi: mu + eps,
                        derivative_bound: m,
                    });
                }
            }
        }
        BaseFamily::Binomial { .. } => {
            if width == 0.0 {
                let m = fifth_derivative_bound(family, a, a)?;
                let eps = invert(delta, m);
                intervals.push(GridInterval {
                    mu: a,
                    lo: a - eps,
                    hi: a + eps,
                    derivative_bound: m,
                });
            } else {
                // The bound depends on the cell, so each cell's width is
                // refined once against its own bound.
                let mut c = a;
                while c < b {
                    let end0 = (c + 2.0 * eps_global).min(b);
                    let eps0 = invert(delta, fifth_derivative_bound(family, c, end0)?);
                    let end1 = (c + 2.0 * eps0).min(b);
                    let m1 = fifth_derivative_bound(family, c, end1)?;
                    let eps1 = invert(delta, m1);
                    let eps = eps0.min(eps1);
                    // [c, hi] lies inside [c, end1], so m1 covers it.
                    let hi = (c + 2.0 * eps).min(b);
                    let m = m1;
                    intervals.push(GridInterval {
                        mu: 0.5 * (c + hi),
                        lo: c,
                        hi,
                        derivative_bound: m,
                    });
                    if intervals.len() as f64 > MAX_GRID_POINTS {
                        return Err(Error::Resource {
                            points: intervals.len() as f64,
                        });
                    }
                    c = hi;
                }
            }
        }
    }
    Ok(GridSpec {
        family: *family,
        range,
        delta: Some(delta),
        intervals,
    })
}

/// Outcome of comparing a small-support mixture with its induced LMM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalApproxReport {
    /// `max_x |sum_k w_k f(x; mu_k) - g(x; lambda)|` over the probe points.
    pub sup_error: f64,
    pub lambda: Lambda,
    pub feasibility: FeasibilityStatus,
    /// `sum_k w_k |mu_k - mu0|^5`.
    pub fifth_abs_moment: f64,
}

impl LocalApproxReport {
    /// `E_Q|mu - mu0|^5 M / 120`, valid for any mixing distribution.
    pub fn moment_bound(&self, m: f64) -> f64 {
        self.fifth_abs_moment * m / 120.0
    }
}

/// Compare a discrete mixing distribution `(weight, mean)` on
/// `[mu0 - eps1, mu0 + eps2]` against the LMM at `mu0` with averaged Taylor
/// coefficients, on the probe points `x_grid`.
pub fn verify_local_approx(
    family: &BaseFamily,
    mu0: f64,
    interval: (f64, f64),
    mixing: &[(f64, f64)],
    x_grid: &[f64],
) -> Result<LocalApproxReport> {
    family.check_mean(mu0)?;
    let (eps1, eps2) = interval;
    if !(eps1 >= 0.0 && eps2 >= 0.0) {
        return Err(Error::Argument("interval half-widths must be nonnegative"));
    }
    if mixing.is_empty() {
        return Err(Error::Argument("mixing distribution is empty"));
    }
    let total: f64 = mixing.iter().map(|&(w, _)| w).sum();
    if mixing.iter().any(|&(w, _)| !(w >= 0.0)) || abs(total - 1.0) > 1e-9 {
        return Err(Error::Argument("mixing weights must be nonnegative and sum to one"));
    }
    let tol = 1e-12 * (1.0 + abs(mu0));
    for &(_, m) in mixing {
        if m < mu0 - eps1 - tol || m > mu0 + eps2 + tol {
            return Err(Error::Argument("mixing mass outside the interval"));
        }
        family.check_mean(m)?;
    }
    for &x in x_grid {
        family.check_observation(x)?;
    }

    let mut lambda = [0.0; 4];
    let mut fifth = 0.0;
    for &(w, m) in mixing {
        let d = m - mu0;
        for (j, l) in lambda.iter_mut().enumerate() {
            *l += w * powi(d, j as u32 + 1) / factorial(j as u32 + 1);
        }
        fifth += w * powi(abs(d), 5);
    }

    let mut sup_error = 0.0f64;
    for &x in x_grid {
        let mix: f64 = mixing
            .iter()
            .map(|&(w, m)| w * family.density_unchecked(x, m))
            .sum();
        // Unclamped: lambda need not be feasible here.
        let g = family.density_unchecked(x, mu0) * crate::lmm::positivity(family, mu0, &lambda, x);
        sup_error = sup_error.max(abs(mix - g));
    }
    Ok(LocalApproxReport {
        sup_error,
        lambda,
        feasibility: feasibility_unchecked(family, mu0, &lambda).status,
        fifth_abs_moment: fifth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::normal_fifth_derivative_bound;
    use alloc::vec;
    use proptest::prelude::*;

    fn std_normal() -> BaseFamily {
        BaseFamily::normal(1.0).unwrap()
    }

    fn line(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn epsilon_inverts_the_budget() {
        let m = normal_fifth_derivative_bound(1.0).unwrap();
        let eps = epsilon_for_delta(&std_normal(), (0.0, 1.0), 1e-3).unwrap();
        assert!((eps - pow(0.06 / m, 1.0 / 6.0)).abs() < 1e-15);
        let b = ToleranceBudget::symmetric(1e-3, eps).unwrap();
        assert!((b.remainder_bound(m) - 1e-3).abs() < 1e-15);
        let eps64 = epsilon_for_delta(&std_normal(), (0.0, 1.0), 64e-3).unwrap();
        assert!((eps64 / eps - 2.0).abs() < 1e-12);
    }

    #[test]
    fn epsilon_rejects_bad_input() {
        assert!(matches!(
            epsilon_for_delta(&std_normal(), (0.0, 1.0), 0.0),
            Err(Error::Argument(_))
        ));
        let bin = BaseFamily::binomial(20).unwrap();
        assert!(matches!(
            epsilon_for_delta(&bin, (0.0, 5.0), 1e-3),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            epsilon_for_delta(&bin, (15.0, 20.0), 1e-3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn unit_half_width_cover() {
        // delta chosen so that eps = 0.5 exactly.
        let m = normal_fifth_derivative_bound(1.0).unwrap();
        let delta = pow(0.5, 6.0) * m / 60.0;
        let g = build_grid(&std_normal(), (0.0, 4.0), delta).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 4);
        for (p, w) in pts.iter().zip([0.5, 1.5, 2.5, 3.5]) {
            assert!((p - w).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_width_range_gives_one_point() {
        let g = build_grid(&std_normal(), (2.0, 2.0), 1e-3).unwrap();
        assert_eq!(g.points(), vec![2.0]);
        let bin = BaseFamily::binomial(20).unwrap();
        let g = build_grid(&bin, (10.0, 10.0), 1e-4).unwrap();
        assert_eq!(g.points(), vec![10.0]);
    }

    #[test]
    fn tiny_delta_is_a_resource_error() {
        let err = build_grid(&std_normal(), (0.0, 1e6), 1e-30).unwrap_err();
        assert!(matches!(err, Error::Resource { .. }));
    }

    #[test]
    fn user_grid_override() {
        let pts = [3.6, 4.2, 4.8, 5.4, 6.0, 6.6, 7.0];
        let g = GridSpec::from_points(BaseFamily::normal(0.5).unwrap(), &pts).unwrap();
        assert_eq!(g.points(), pts.to_vec());
        for w in g.intervals.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
        }
        assert!(GridSpec::from_points(std_normal(), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn point_mass_has_no_error() {
        let r = verify_local_approx(&std_normal(), 0.3, (0.2, 0.2), &[(1.0, 0.3)], &line(-5.0, 5.0, 101))
            .unwrap();
        assert_eq!(r.sup_error, 0.0);
        assert_eq!(r.lambda, [0.0; 4]);
    }

    #[test]
    fn symmetric_uniform_mixing_within_bound() {
        let atoms: Vec<(f64, f64)> = (0..7).map(|k| (1.0 / 7.0, -0.3 + 0.1 * k as f64)).collect();
        let r = verify_local_approx(&std_normal(), 0.0, (0.3, 0.3), &atoms, &line(-12.0, 12.0, 4001))
            .unwrap();
        let m = normal_fifth_derivative_bound(1.0).unwrap();
        assert!(r.sup_error <= 2.0 * pow(0.3, 6.0) * m / 120.0);
        assert_eq!(r.feasibility, FeasibilityStatus::Interior);
    }

    #[test]
    fn binomial_two_atoms_within_bound() {
        let fam = BaseFamily::binomial(20).unwrap();
        let xs: Vec<f64> = (0..=20).map(|x| x as f64).collect();
        let r = verify_local_approx(&fam, 10.0, (0.2, 0.2), &[(0.5, 9.8), (0.5, 10.2)], &xs).unwrap();
        let m = fifth_derivative_bound(&fam, 9.8, 10.2).unwrap();
        assert!(r.sup_error <= interval_bound(0.2, 0.2, m));
        assert!(r.sup_error <= r.moment_bound(m));
    }

    #[test]
    fn endpoint_mass_can_exceed_the_interval_budget() {
        // eps1 + eps2 < 1: all mass at one end.
        let eps = 0.2;
        let m = normal_fifth_derivative_bound(1.0).unwrap();
        let r = verify_local_approx(&std_normal(), 0.0, (eps, eps), &[(1.0, eps)], &line(-12.0, 12.0, 20001))
            .unwrap();
        assert!(r.sup_error > interval_bound(eps, eps, m));
        assert!(r.sup_error <= r.moment_bound(m));
    }

    #[test]
    fn mass_outside_interval_is_rejected() {
        let err = verify_local_approx(&std_normal(), 0.0, (0.1, 0.1), &[(1.0, 0.5)], &[0.0]);
        assert!(matches!(err, Err(Error::Argument(_))));
        let err = verify_local_approx(&std_normal(), 0.0, (0.1, 0.1), &[(0.7, 0.0)], &[0.0]);
        assert!(matches!(err, Err(Error::Argument(_))));
    }

    fn assert_cover(g: &GridSpec) {
        let (a, b) = g.range;
        assert!(g.intervals[0].lo <= a + 1e-12);
        assert!(g.intervals.last().unwrap().hi >= b - 1e-12);
        for w in g.intervals.windows(2) {
            assert!((w[0].hi - w[1].lo).abs() < 1e-12);
        }
        for c in &g.intervals {
            assert!(c.lo <= c.mu && c.mu <= c.hi);
            let budget = c.budget(g.delta.unwrap()).unwrap();
            assert!(budget.is_met(c.derivative_bound));
        }
    }

    proptest! {
        #[test]
        fn normal_cover_and_monotonicity(
            a in -10.0f64..10.0, w in 0.01f64..20.0, ld in -6.0f64..-1.0, sigma in 0.3f64..3.0
        ) {
            let fam = BaseFamily::normal(sigma).unwrap();
            let delta = libm::pow(10.0, ld);
            let g1 = build_grid(&fam, (a, a + w), delta).unwrap();
            let g2 = build_grid(&fam, (a, a + w), 2.0 * delta).unwrap();
            assert_cover(&g1);
            prop_assert!(g2.len() <= g1.len());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn binomial_cover_and_monotonicity(
            n in 10u32..60, lo in 0.2f64..0.4, hi in 0.5f64..0.8, ld in -5.0f64..-2.0
        ) {
            let fam = BaseFamily::binomial(n).unwrap();
            let range = (lo * n as f64, hi * n as f64);
            let delta = libm::pow(10.0, ld);
            let g1 = build_grid(&fam, range, delta).unwrap();
            let g2 = build_grid(&fam, range, 4.0 * delta).unwrap();
            assert_cover(&g1);
            prop_assert!(g2.len() <= g1.len());
        }
    }
}
