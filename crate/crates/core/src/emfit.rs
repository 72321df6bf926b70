//! Fitting a discrete mixture of LMMs on a fixed grid of anchors.
//!
//! Each outer iteration:
//!
//! 1. computes responsibilities and sets `rho_l` to the mean responsibility;
//! 2. if some `rho_l < gamma`, drops those components, renormalizes `rho`
//!    and returns to 1 without touching any `lambda`;
//! 3. otherwise hard-assigns every observation to its most responsible
//!    component (ties to the smallest index) and maximizes each component's
//!    log-likelihood over its own observations.
//!
//! A component left with no observations in step 3 is dropped as well. The
//! fit stops once the relative change in the mixture log-likelihood falls
//! below `tol` in an iteration without pruning. Because step 3 uses hard
//! assignments the log-likelihood need not increase monotonically.
//!
//! Per-component maximization is over the convex set of feasible `lambda`.
//! The log-likelihood is `sum_i ln P(x_i)` up to a constant, concave in
//! `lambda`. Each step tries gradient, Newton, and Newton projected onto the
//! nearest active constraint, never moving more than 99% of the way to the
//! boundary, with Armijo backtracking; the best improving candidate wins.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expfam::BaseFamily;
use crate::lmm::{feasibility_unchecked, max_feasible_step, Argmin, FeasibilityStatus, Lambda, Lmm};
use crate::math::{abs, exp, log, log_sum_exp, sqrt};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub rho: f64,
    pub lmm: Lmm,
}

impl Component {
    pub fn mu(&self) -> f64 {
        self.lmm.mu0()
    }

    pub fn family(&self) -> &BaseFamily {
        self.lmm.family()
    }

    pub fn lambda(&self) -> &Lambda {
        self.lmm.lambda()
    }
}

/// Proportions sum to one, anchors strictly increase, every `lambda` is feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    components: Vec<Component>,
}

const RHO_SUM_TOL: f64 = 1e-12;

impl MixtureModel {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Argument("mixture needs at least one component"));
        }
        if components.iter().any(|c| !(c.rho >= 0.0 && c.rho <= 1.0)) {
            return Err(Error::Argument("proportions must lie in [0, 1]"));
        }
        let total: f64 = components.iter().map(|c| c.rho).sum();
        if abs(total - 1.0) > RHO_SUM_TOL {
            return Err(Error::Argument("proportions must sum to one"));
        }
        for w in components.windows(2) {
            if !(w[1].mu() > w[0].mu()) {
                return Err(Error::Argument("component means must be strictly increasing"));
            }
        }
        Ok(MixtureModel { components })
    }

    /// Uniform proportions and `lambda = 0` at each `(family, mu)`.
    pub fn uniform(anchors: &[(BaseFamily, f64)]) -> Result<Self> {
        let rho = 1.0 / anchors.len() as f64;
        let components = anchors
            .iter()
            .map(|&(family, mu)| {
                Ok(Component {
                    rho,
                    lmm: Lmm::base(family, mu)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `h(x) = sum_l rho_l g_l(x)`.
    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.rho * c.lmm.density_unchecked(x))
            .sum()
    }

    fn check_data(&self, data: &[f64]) -> Result<()> {
        for &x in data {
            for c in &self.components {
                c.family().check_observation(x)?;
            }
        }
        Ok(())
    }

    /// `ln rho_l + ln g_l(x)` for every component.
    fn weighted_ln_densities(&self, x: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.components.iter().map(|c| log(c.rho) + c.lmm.ln_density_unchecked(x)));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            tol: 1e-9,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub inner: InnerConfig,
    /// Unused by the fit, which has no randomness; kept for reproducible configs.
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            gamma: 0.15,
            tol: 1e-8,
            max_iter: 500,
            inner: InnerConfig::default(),
            seed: 0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Argument("gamma must lie in (0, 1)"));
        }
        if !(self.tol > 0.0) || !(self.inner.tol > 0.0) {
            return Err(Error::Argument("tolerances must be positive"));
        }
        if self.max_iter == 0 || self.inner.max_iter == 0 {
            return Err(Error::Argument("iteration limits must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneReason {
    /// Proportion fell below `gamma`.
    Threshold,
    /// No observation was assigned to the component.
    EmptyClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneEvent {
    /// Outer iteration, counting from 1.
    pub iteration: usize,
    /// Indices into the model as it was just before this event.
    pub indices: Vec<usize>,
    pub mus: Vec<f64>,
    pub reason: PruneReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: MixtureModel,
    pub order: usize,
    /// Initial log-likelihood followed by one value per completed iteration.
    pub loglik_trace: Vec<f64>,
    pub pruning_history: Vec<PruneEvent>,
    /// Final hard assignment of each observation.
    pub assignments: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
}

impl FitReport {
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("trace starts with the initial value")
    }
}

/// Row-stochastic matrix `w[i][l]`.
pub fn responsibilities(model: &MixtureModel, data: &[f64]) -> Result<Vec<Vec<f64>>> {
    model.check_data(data)?;
    let mut buf = Vec::with_capacity(model.len());
    let mut rows = Vec::with_capacity(data.len());
    for (index, &x) in data.iter().enumerate() {
        model.weighted_ln_densities(x, &mut buf);
        let total = log_sum_exp(&buf);
        if total == f64::NEG_INFINITY {
            return Err(Error::DegenerateObservation { index, value: x });
        }
        rows.push(buf.iter().map(|&v| exp(v - total)).collect());
    }
    Ok(rows)
}

/// `rho_l = (1/n) sum_i w[i][l]`.
pub fn update_proportions(w: &[Vec<f64>]) -> Vec<f64> {
    let n = w.len();
    let k = w.first().map_or(0, Vec::len);
    let mut rho = vec![0.0; k];
    for row in w {
        for (r, &v) in rho.iter_mut().zip(row) {
            *r += v;
        }
    }
    for r in &mut rho {
        *r /= n as f64;
    }
    rho
}

fn with_proportions(model: &MixtureModel, rho: &[f64]) -> Result<MixtureModel> {
    if rho.len() != model.len() {
        return Err(Error::Argument("proportion vector does not match the model"));
    }
    let total: f64 = rho.iter().sum();
    let components = model
        .components
        .iter()
        .zip(rho)
        .map(|(c, &r)| Component { rho: r / total, lmm: c.lmm })
        .collect();
    MixtureModel::new(components)
}

fn drop_components(model: &MixtureModel, rho: &[f64], drop: &[bool]) -> Result<MixtureModel> {
    let keep: Vec<usize> = (0..model.len()).filter(|&l| !drop[l]).collect();
    if keep.is_empty() {
        return Err(Error::FitFailure("every component was pruned; use a smaller gamma"));
    }
    let total: f64 = keep.iter().map(|&l| rho[l]).sum();
    let components = keep
        .iter()
        .map(|&l| Component {
            rho: rho[l] / total,
            lmm: model.components[l].lmm,
        })
        .collect();
    MixtureModel::new(components)
}

/// Drops every component with `rho_l < gamma` and renormalizes the rest.
/// Returns the new model and the dropped indices.
pub fn prune(model: &MixtureModel, rho: &[f64], gamma: f64) -> Result<(MixtureModel, Vec<usize>)> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Argument("gamma must lie in (0, 1)"));
    }
    if rho.len() != model.len() {
        return Err(Error::Argument("proportion vector does not match the model"));
    }
    let drop: Vec<bool> = rho.iter().map(|&r| r < gamma).collect();
    let pruned = (0..rho.len()).filter(|&l| drop[l]).collect();
    Ok((drop_components(model, rho, &drop)?, pruned))
}

/// Index of the largest entry of each row; ties go to the smallest index.
pub fn classify(w: &[Vec<f64>]) -> Vec<usize> {
    w.iter()
        .map(|row| {
            let mut best = 0;
            for (l, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = l;
                }
            }
            best
        })
        .collect()
}

/// `sum_i ln h(x_i)`.
pub fn loglik(model: &MixtureModel, data: &[f64]) -> Result<f64> {
    model.check_data(data)?;
    let mut buf = Vec::with_capacity(model.len());
    let mut total = 0.0;
    for (index, &x) in data.iter().enumerate() {
        model.weighted_ln_densities(x, &mut buf);
        let v = log_sum_exp(&buf);
        if v == f64::NEG_INFINITY {
            return Err(Error::DegenerateObservation { index, value: x });
        }
        total += v;
    }
    Ok(total)
}

/// `sum_i ln g(x_i; lambda)` for a single LMM.
pub fn component_loglik(family: &BaseFamily, mu: f64, data: &[f64], lambda: &Lambda) -> Result<f64> {
    let lmm = Lmm::new(*family, mu, *lambda)?;
    let mut total = 0.0;
    for &x in data {
        family.check_observation(x)?;
        total += lmm.ln_density_unchecked(x);
    }
    Ok(total)
}

/// Concave part of the component log-likelihood, with cached `q_j(x_i)`.
struct Objective<'a> {
    family: &'a BaseFamily,
    mu: f64,
    q: Vec<[f64; 4]>,
}

impl Objective<'_> {
    fn value(&self, lambda: &Lambda) -> f64 {
        let mut s = 0.0;
        for q in &self.q {
            let p = 1.0 + dot(lambda, q);
            if !(p > 0.0) {
                return f64::NEG_INFINITY;
            }
            s += log(p);
        }
        s
    }

    /// Gradient and the positive semidefinite matrix `sum q q^T / P^2`.
    fn derivatives(&self, lambda: &Lambda) -> ([f64; 4], [[f64; 4]; 4]) {
        let mut g = [0.0; 4];
        let mut a = [[0.0; 4]; 4];
        for q in &self.q {
            let p = 1.0 + dot(lambda, q);
            for j in 0..4 {
                g[j] += q[j] / p;
                for k in 0..4 {
                    a[j][k] += q[j] * q[k] / (p * p);
                }
            }
        }
        (g, a)
    }

    fn is_interior(&self, lambda: &Lambda) -> bool {
        feasibility_unchecked(self.family, self.mu, lambda).status == FeasibilityStatus::Interior
    }
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

fn step(from: &Lambda, t: f64, d: &[f64; 4]) -> Lambda {
    [
        from[0] + t * d[0],
        from[1] + t * d[1],
        from[2] + t * d[2],
        from[3] + t * d[3],
    ]
}

/// Solves `(a + ridge I) x = b` by Cholesky; `None` if not positive definite.
fn solve_spd(a: &[[f64; 4]; 4], b: &[f64; 4]) -> Option<[f64; 4]> {
    let trace = a[0][0] + a[1][1] + a[2][2] + a[3][3];
    let ridge = 1e-12 * trace;
    let mut l = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut s = a[i][j] + if i == j { ridge } else { 0.0 };
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i][i] = sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = [0.0; 4];
    for i in 0..4 {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [0.0; 4];
    for i in (0..4).rev() {
        let mut s = y[i];
        for k in i + 1..4 {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const STEP_FRACTION: f64 = 0.99;
const MAX_BACKTRACK: usize = 60;

/// Capped Armijo line search from `lambda` along `d`.
fn line_search(obj: &Objective<'_>, lambda: &Lambda, f0: f64, grad: &[f64; 4], d: &[f64; 4]) -> Option<(Lambda, f64)> {
    let slope = dot(grad, d);
    if !(slope > 0.0) {
        return None;
    }
    let cap = max_feasible_step(obj.family, obj.mu, lambda, d).ok()?;
    let mut t = if cap.is_finite() { (STEP_FRACTION * cap).min(1.0) } else { 1.0 };
    for _ in 0..MAX_BACKTRACK {
        let trial = step(lambda, t, d);
        let f = obj.value(&trial);
        if f >= f0 + ARMIJO * t * slope && obj.is_interior(&trial) {
            return Some((trial, f));
        }
        t *= SHRINK;
    }
    None
}

/// Maximizes the log-likelihood of one LMM over its feasible set, starting
/// from an interior `lambda_init`. The result is interior and no worse than
/// the start.
pub fn component_mle(
    family: &BaseFamily,
    mu: f64,
    data: &[f64],
    lambda_init: &Lambda,
    inner: &InnerConfig,
) -> Result<Lambda> {
    if data.is_empty() {
        return Err(Error::Argument("component has no observations"));
    }
    family.check_mean(mu)?;
    let start = feasibility_unchecked(family, mu, lambda_init);
    if start.status != FeasibilityStatus::Interior {
        return Err(Error::NotInterior {
            min_value: start.min_value,
        });
    }
    let mut q = Vec::with_capacity(data.len());
    for &x in data {
        family.check_observation(x)?;
        let v = family.q_values(x, mu);
        q.push([v[0], v[1], v[2], v[3]]);
    }
    let obj = Objective { family, mu, q };

    let mut lambda = *lambda_init;
    let mut f = obj.value(&lambda);
    if !f.is_finite() {
        return Err(Error::NonFinite("component log-likelihood at the initial lambda"));
    }
    for _ in 0..inner.max_iter {
        let (grad, a) = obj.derivatives(&lambda);
        if sqrt(dot(&grad, &grad)) < inner.tol {
            break;
        }
        let mut directions: Vec<[f64; 4]> = vec![grad];
        if let Some(newton) = solve_spd(&a, &grad) {
            directions.push(newton);
            if let Argmin::At(x) = feasibility_unchecked(family, mu, &lambda).argmin {
                let v = family.q_values(x, mu);
                let n = [v[0], v[1], v[2], v[3]];
                let nn = dot(&n, &n);
                if nn > 0.0 {
                    let c = dot(&newton, &n) / nn;
                    directions.push(step(&newton, -c, &n));
                }
            }
        }
        let best = directions
            .iter()
            .filter_map(|d| line_search(&obj, &lambda, f, &grad, d))
            .fold(None::<(Lambda, f64)>, |acc, cand| match acc {
                Some(a) if a.1 >= cand.1 => Some(a),
                _ => Some(cand),
            });
        let Some((next, f_next)) = best else { break };
        let change = f_next - f;
        lambda = next;
        f = f_next;
        if change < inner.tol * (1.0 + abs(f)) {
            break;
        }
    }
    Ok(lambda)
}

/// Runs the pruning fit from `init`.
pub fn fit(data: &[f64], init: MixtureModel, config: &EmConfig) -> Result<FitReport> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Argument("no observations"));
    }
    let mut model = init;
    let mut trace = vec![loglik(&model, data)?];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        let mut pruned = false;

        // Steps 1 and 2.
        let w = loop {
            let w = responsibilities(&model, data)?;
            let rho = update_proportions(&w);
            if rho.iter().any(|&r| r < config.gamma) {
                let (next, indices) = prune(&model, &rho, config.gamma)?;
                history.push(PruneEvent {
                    iteration: iterations,
                    mus: indices.iter().map(|&l| model.components[l].mu()).collect(),
                    indices,
                    reason: PruneReason::Threshold,
                });
                model = next;
                pruned = true;
                continue;
            }
            model = with_proportions(&model, &rho)?;
            break w;
        };

        // Step 3.
        let labels = classify(&w);
        let mut classes: Vec<Vec<f64>> = vec![Vec::new(); model.len()];
        for (&x, &l) in data.iter().zip(&labels) {
            classes[l].push(x);
        }
        let empty: Vec<bool> = classes.iter().map(Vec::is_empty).collect();
        if empty.iter().any(|&e| e) {
            let indices: Vec<usize> = (0..model.len()).filter(|&l| empty[l]).collect();
            history.push(PruneEvent {
                iteration: iterations,
                mus: indices.iter().map(|&l| model.components[l].mu()).collect(),
                indices,
                reason: PruneReason::EmptyClass,
            });
            let rho: Vec<f64> = model.components.iter().map(|c| c.rho).collect();
            model = drop_components(&model, &rho, &empty)?;
            classes.retain(|c| !c.is_empty());
            pruned = true;
        }
        let mut components = Vec::with_capacity(model.len());
        for (c, class) in model.components.iter().zip(&classes) {
            let lambda = component_mle(c.family(), c.mu(), class, c.lambda(), &config.inner)?;
            components.push(Component {
                rho: c.rho,
                lmm: Lmm::new(*c.family(), c.mu(), lambda)?,
            });
        }
        model = MixtureModel::new(components)?;

        let ll = loglik(&model, data)?;
        let prev = *trace.last().expect("nonempty");
        trace.push(ll);
        if !pruned && abs(ll - prev) < config.tol * abs(prev) {
            converged = true;
            break;
        }
    }

    let assignments = classify(&responsibilities(&model, data)?);
    Ok(FitReport {
        order: model.len(),
        model,
        loglik_trace: trace,
        pruning_history: history,
        assignments,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmm::feasibility;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};
    use std::vec::Vec;

    fn std_normal() -> BaseFamily {
        BaseFamily::normal(1.0).unwrap()
    }

    fn normal_sample(seed: u64, parts: &[(usize, f64, f64)]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for &(n, m, s) in parts {
            let d = Normal::new(m, s).unwrap();
            out.extend((0..n).map(|_| d.sample(&mut rng)));
        }
        out
    }

    fn two(mus: (f64, f64), rho: (f64, f64)) -> MixtureModel {
        MixtureModel::new(vec![
            Component { rho: rho.0, lmm: Lmm::base(std_normal(), mus.0).unwrap() },
            Component { rho: rho.1, lmm: Lmm::base(std_normal(), mus.1).unwrap() },
        ])
        .unwrap()
    }

    #[test]
    fn model_validation() {
        let fam = std_normal();
        let c = |rho, mu| Component { rho, lmm: Lmm::base(fam, mu).unwrap() };
        assert!(MixtureModel::new(vec![c(0.5, 0.0), c(0.4, 1.0)]).is_err());
        assert!(MixtureModel::new(vec![c(0.5, 1.0), c(0.5, 0.0)]).is_err());
        assert!(MixtureModel::new(vec![]).is_err());
        assert!(MixtureModel::new(vec![c(0.5, 0.0), c(0.5, 1.0)]).is_ok());
    }

    #[test]
    fn responsibilities_examples() {
        let data = [-1.0, 0.0, 2.5];
        // Same anchor twice is not a valid model, so compare a lone component.
        let one = MixtureModel::uniform(&[(std_normal(), 0.0)]).unwrap();
        for row in responsibilities(&one, &data).unwrap() {
            assert_eq!(row, vec![1.0]);
        }
        let w = responsibilities(&two((0.0, 10.0), (0.5, 0.5)), &[0.0]).unwrap();
        let want = exp(-50.0);
        assert!((w[0][1] - want).abs() < 1e-12 * want);
        assert!((w[0][0] - 1.0).abs() < 1e-15);
        assert!((want - 1.928_749_847_963_918e-22).abs() < 1e-34);
    }

    #[test]
    fn symmetric_point_splits_evenly() {
        let w = responsibilities(&two((-1.0, 1.0), (0.5, 0.5)), &[0.0]).unwrap();
        assert_eq!(w[0][0], w[0][1]);
        assert_eq!(classify(&w), vec![0]);
    }

    #[test]
    fn degenerate_observation_is_reported() {
        // lambda = (0, 1, 0, 0) gives P(z) = z^2, which vanishes at the anchor.
        let lmm = Lmm::new(std_normal(), 0.0, [0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(lmm.positivity(0.0), 0.0);
        let model = MixtureModel::new(vec![Component { rho: 1.0, lmm }]).unwrap();
        let err = responsibilities(&model, &[3.0, 0.0]).unwrap_err();
        assert_eq!(err, Error::DegenerateObservation { index: 1, value: 0.0 });
        assert!(matches!(loglik(&model, &[0.0]), Err(Error::DegenerateObservation { .. })));
    }

    #[test]
    fn proportion_update_examples() {
        assert_eq!(update_proportions(&[vec![0.5, 0.5], vec![0.5, 0.5]]), vec![0.5, 0.5]);
        let w = [vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(update_proportions(&w), vec![0.75, 0.25]);
    }

    #[test]
    fn prune_examples() {
        let m = two((0.0, 3.0), (0.9, 0.1));
        let (p, idx) = prune(&m, &[0.9, 0.1], 0.15).unwrap();
        assert_eq!(idx, vec![1]);
        assert_eq!(p.len(), 1);
        assert_eq!(p.components()[0].rho, 1.0);
        let m = two((0.0, 3.0), (0.5, 0.5));
        let (p, idx) = prune(&m, &[0.5, 0.5], 0.15).unwrap();
        assert!(idx.is_empty());
        assert_eq!(p, m);
        assert!(matches!(prune(&m, &[0.1, 0.1], 0.15), Err(Error::FitFailure(_))));
        assert!(prune(&m, &[0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&[vec![0.6, 0.4], vec![0.5, 0.5], vec![0.2, 0.8]]), vec![0, 0, 1]);
    }

    #[test]
    fn separated_clusters_are_recovered() {
        let data = normal_sample(11, &[(30, 0.0, 1.0), (70, 8.0, 1.0)]);
        let labels = classify(&responsibilities(&two((0.0, 8.0), (0.3, 0.7)), &data).unwrap());
        for (i, (&x, &l)) in data.iter().zip(&labels).enumerate() {
            let truth = usize::from(i >= 30);
            if (x - 4.0).abs() > 1.0 {
                assert_eq!(l, truth, "x = {x}");
            }
        }
    }

    #[test]
    fn loglik_identities() {
        let data = normal_sample(3, &[(50, 0.5, 1.2)]);
        let one = MixtureModel::uniform(&[(std_normal(), 0.2)]).unwrap();
        let base: f64 = data.iter().map(|&x| std_normal().ln_density_unchecked(x, 0.2)).sum();
        assert!((loglik(&one, &data).unwrap() - base).abs() < 1e-10);

        // Splitting a component's weight over a near-duplicate anchor changes
        // nothing in the limit; with the exact same lambda at a shifted anchor
        // the comparison is against the explicit sum.
        let m = two((-1.0, 1.0), (0.3, 0.7));
        let direct: f64 = data
            .iter()
            .map(|&x| log(0.3 * std_normal().density_unchecked(x, -1.0) + 0.7 * std_normal().density_unchecked(x, 1.0)))
            .sum();
        assert!((loglik(&m, &data).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn mle_on_base_family_data_stays_near_zero() {
        let data = normal_sample(5, &[(4000, 0.0, 1.0)]);
        let inner = InnerConfig::default();
        let lam = component_mle(&std_normal(), 0.0, &data, &[0.0; 4], &inner).unwrap();
        let size = sqrt(dot(&lam, &lam));
        assert!(size < 5.0 / sqrt(4000.0), "{lam:?}");
        let l0 = component_loglik(&std_normal(), 0.0, &data, &[0.0; 4]).unwrap();
        let l1 = component_loglik(&std_normal(), 0.0, &data, &lam).unwrap();
        assert!(l1 >= l0);
    }

    #[test]
    fn mle_single_observation_beats_random_search() {
        let fam = std_normal();
        let lam = component_mle(&fam, 0.0, &[0.0], &[0.0; 4], &InnerConfig::default()).unwrap();
        assert!(feasibility(&fam, 0.0, &lam).unwrap().min_value >= 0.0);
        let best = component_loglik(&fam, 0.0, &[0.0], &lam).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut hits = 0;
        for _ in 0..10_000 {
            let cand: Lambda = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
            if feasibility(&fam, 0.0, &cand).unwrap().is_feasible() {
                hits += 1;
                let v = component_loglik(&fam, 0.0, &[0.0], &cand).unwrap();
                assert!(v <= best + 1e-6, "{cand:?} {v} > {best}");
            }
        }
        assert!(hits > 50);
    }

    #[test]
    fn mle_ascends_from_interior_starts() {
        let data = normal_sample(8, &[(40, 0.3, 0.7), (20, -1.0, 0.5)]);
        let fam = std_normal();
        for init in [[0.0; 4], [0.1, 0.05, 0.0, 0.02], [-0.2, 0.1, 0.01, 0.03]] {
            let l0 = component_loglik(&fam, 0.0, &data, &init).unwrap();
            let lam = component_mle(&fam, 0.0, &data, &init, &InnerConfig::default()).unwrap();
            let l1 = component_loglik(&fam, 0.0, &data, &lam).unwrap();
            assert!(l1 >= l0);
            assert_eq!(feasibility(&fam, 0.0, &lam).unwrap().status, FeasibilityStatus::Interior);
        }
    }

    #[test]
    fn mle_binomial() {
        let fam = BaseFamily::binomial(20).unwrap();
        let data: Vec<f64> = [6, 8, 9, 10, 10, 11, 12, 14, 15, 9, 10].iter().map(|&x| x as f64).collect();
        let lam = component_mle(&fam, 10.0, &data, &[0.0; 4], &InnerConfig::default()).unwrap();
        let l0 = component_loglik(&fam, 10.0, &data, &[0.0; 4]).unwrap();
        let l1 = component_loglik(&fam, 10.0, &data, &lam).unwrap();
        assert!(l1 > l0);
    }

    #[test]
    fn mle_rejects_boundary_start() {
        let err = component_mle(&std_normal(), 0.0, &[0.0], &[0.0, 0.0, 0.0, 1.0 / 6.0], &InnerConfig::default());
        assert!(matches!(err, Err(Error::NotInterior { .. })));
    }

    fn grid_model(points: &[f64], sigma: f64) -> MixtureModel {
        let fam = BaseFamily::normal(sigma).unwrap();
        let anchors: Vec<_> = points.iter().map(|&m| (fam, m)).collect();
        MixtureModel::uniform(&anchors).unwrap()
    }

    #[test]
    fn single_component_fit() {
        let data = normal_sample(21, &[(300, 0.0, 1.0)]);
        let r = fit(&data, grid_model(&[0.0], 1.0), &EmConfig::default()).unwrap();
        assert_eq!(r.order, 1);
        assert!(r.converged);
        assert!(sqrt(dot(r.model.components()[0].lambda(), r.model.components()[0].lambda())) < 0.3);
        assert_eq!(r.loglik(), loglik(&r.model, &data).unwrap());
    }

    #[test]
    fn two_cluster_fit_prunes_the_middle() {
        let data = normal_sample(4, &[(60, 0.0, 0.6), (40, 5.0, 0.6)]);
        let r = fit(&data, grid_model(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 0.6), &EmConfig::default()).unwrap();
        assert_eq!(r.order, 2, "{:?}", r.model);
        let mus: Vec<f64> = r.model.components().iter().map(Component::mu).collect();
        assert!((mus[0] - 0.0).abs() < 1.01 && (mus[1] - 5.0).abs() < 1.01);
        assert!(!r.pruning_history.is_empty());
        assert!(r.loglik() >= r.loglik_trace[0]);
        for c in r.model.components() {
            assert!(c.lmm.feasibility().is_feasible());
        }
        let total: f64 = r.model.components().iter().map(|c| c.rho).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_is_deterministic() {
        let data = normal_sample(6, &[(80, -1.0, 0.8), (50, 2.0, 0.5)]);
        let m = grid_model(&[-2.0, -1.0, 0.0, 1.0, 2.0], 0.6);
        let a = fit(&data, m.clone(), &EmConfig::default()).unwrap();
        let b = fit(&data, m, &EmConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn order_does_not_grow_with_gamma() {
        let data = normal_sample(2, &[(70, 0.0, 0.5), (40, 2.5, 0.5), (30, 5.0, 0.5)]);
        let points = [0.0, 0.8, 1.6, 2.4, 3.2, 4.0, 4.8];
        let mut last = usize::MAX;
        for gamma in [0.05, 0.1, 0.15, 0.2, 0.25] {
            let cfg = EmConfig { gamma, ..EmConfig::default() };
            let r = fit(&data, grid_model(&points, 0.5), &cfg).unwrap();
            assert!(r.order <= last, "gamma {gamma}: {} > {last}", r.order);
            last = r.order;
        }
        let cfg = EmConfig { gamma: 0.45, ..EmConfig::default() };
        assert!(matches!(fit(&data, grid_model(&points, 0.5), &cfg), Err(Error::FitFailure(_))));
    }

    #[test]
    fn bad_config_is_rejected() {
        let m = grid_model(&[0.0], 1.0);
        for gamma in [0.0, 1.0, -0.5] {
            let cfg = EmConfig { gamma, ..EmConfig::default() };
            assert!(fit(&[0.0], m.clone(), &cfg).is_err());
        }
        assert!(fit(&[], m, &EmConfig::default()).is_err());
    }

    /// A feasible lambda a random fraction of the way to the boundary along `dir`.
    fn along(fam: &BaseFamily, dir: [f64; 4], frac: f64) -> Lambda {
        let t = max_feasible_step(fam, 0.0, &[0.0; 4], &dir).unwrap();
        // Rays that leave almost at once are dominated by degree-cutoff noise.
        let t = if !t.is_finite() || t < 1e-6 { 0.0 } else { t };
        step(&[0.0; 4], frac * t, &dir)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn loglik_is_quasi_concave_on_segments(
            d1 in prop::array::uniform4(-1.0f64..1.0), d2 in prop::array::uniform4(-1.0f64..1.0),
            f1 in 0.0f64..0.95, f2 in 0.0f64..0.95, seed in 0u64..1000
        ) {
            let fam = std_normal();
            let data = normal_sample(seed, &[(25, 0.2, 1.1)]);
            let a = along(&fam, d1, f1);
            let b = along(&fam, d2, f2);
            let mid: Lambda = core::array::from_fn(|j| 0.5 * (a[j] + b[j]));
            let la = component_loglik(&fam, 0.0, &data, &a).unwrap();
            let lb = component_loglik(&fam, 0.0, &data, &b).unwrap();
            let lm = component_loglik(&fam, 0.0, &data, &mid).unwrap();
            prop_assert!(lm >= la.min(lb) - 1e-9);
        }

        #[test]
        fn mle_never_descends(
            d in prop::array::uniform4(-1.0f64..1.0), frac in 0.0f64..0.9, seed in 0u64..1000,
            shift in -1.0f64..1.0, spread in 0.4f64..1.6
        ) {
            let fam = std_normal();
            let data = normal_sample(seed, &[(30, shift, spread)]);
            let init = along(&fam, d, frac);
            prop_assume!(feasibility(&fam, 0.0, &init).unwrap().status == FeasibilityStatus::Interior);
            let l0 = component_loglik(&fam, 0.0, &data, &init).unwrap();
            prop_assume!(l0.is_finite());
            let lam = component_mle(&fam, 0.0, &data, &init, &InnerConfig::default()).unwrap();
            prop_assert!(component_loglik(&fam, 0.0, &data, &lam).unwrap() >= l0);
            prop_assert_eq!(feasibility(&fam, 0.0, &lam).unwrap().status, FeasibilityStatus::Interior);
        }
    }
}
