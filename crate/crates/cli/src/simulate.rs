//! Seeded samples from finite normal mixtures, and fitting them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use locmix_core::emfit::{fit, FitReport, MixtureModel};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::kv::{KvMap, KvWriter};

/// Normal mixture `sum_k w_k N(m_k, s_k^2)` and how to sample it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, sds: Vec<f64>, n: usize, seed: u64) -> Result<Self, CliError> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != sds.len() {
            return Err(CliError::Config("weights, means and sds must have equal nonzero length".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(CliError::Config("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CliError::Config(format!("weights sum to {total}, not 1")));
        }
        if sds.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(CliError::Config("sds must be finite and nonnegative".into()));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(CliError::Config("means must be finite".into()));
        }
        if n == 0 {
            return Err(CliError::Config("sample size must be positive".into()));
        }
        Ok(SimSpec { weights, means, sds, n, seed })
    }

    /// Keys `weights`, `means`, `sds`, `n`, `seed`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let map = KvMap::parse(text, true)?;
        let list = |k: &str| map.list(k)?.ok_or_else(|| CliError::Config(format!("missing key {k:?}")));
        let n = map.usize("n")?.ok_or_else(|| CliError::Config("missing key \"n\"".into()))?;
        let seed = map.usize("seed")?.unwrap_or(0) as u64;
        Self::new(list("weights")?, list("means")?, list("sds")?, n, seed)
    }

    /// Each draw takes one uniform for the component then one standard
    /// normal, so specs sharing a seed share their random numbers.
    pub fn sample(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let u: f64 = rng.random();
            let mut k = 0;
            let mut acc = self.weights[0];
            while u >= acc && k + 1 < self.weights.len() {
                k += 1;
                acc += self.weights[k];
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            out.push(self.means[k] + self.sds[k] * z);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub spec: SimSpec,
    /// Sorted sample.
    pub sample: Vec<f64>,
    pub fit: FitReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub runs: Vec<SimRun>,
    /// `max |h_a - h_b|` over the pooled sample range, for two specs.
    pub sup_difference: Option<f64>,
}

pub const COMPARISON_POINTS: usize = 2001;

fn sup_difference(a: &MixtureModel, b: &MixtureModel, lo: f64, hi: f64) -> f64 {
    (0..COMPARISON_POINTS)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / (COMPARISON_POINTS - 1) as f64;
            (a.density(x) - b.density(x)).abs()
        })
        .fold(0.0, f64::max)
}

pub fn run_study(specs: &[SimSpec], config: &RunConfig) -> Result<Study, CliError> {
    if specs.is_empty() || specs.len() > 2 {
        return Err(CliError::Config("simulate takes one or two specs".into()));
    }
    let mut runs = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut sample = spec.sample();
        let fit = fit(&sample, config.initial_model()?, &config.em)?;
        sample.sort_by(f64::total_cmp);
        runs.push(SimRun { spec: spec.clone(), sample, fit });
    }
    let sup_difference = if let [a, b] = runs.as_slice() {
        let lo = a.sample[0].min(b.sample[0]);
        let hi = a.sample[a.sample.len() - 1].max(b.sample[b.sample.len() - 1]);
        Some(sup_difference(&a.fit.model, &b.fit.model, lo, hi))
    } else {
        None
    };
    Ok(Study { runs, sup_difference })
}

impl Study {
    pub fn summary(&self) -> String {
        let mut w = KvWriter::new();
        w.put("specs", self.runs.len().to_string());
        for (k, r) in self.runs.iter().enumerate() {
            let comps = r.fit.model.components();
            w.put(&format!("spec.{k}.components"), r.spec.weights.len().to_string())
                .put(&format!("spec.{k}.n"), r.spec.n.to_string())
                .put(&format!("spec.{k}.seed"), r.spec.seed.to_string())
                .put(&format!("fit.{k}.order"), r.fit.order.to_string())
                .put(&format!("fit.{k}.converged"), r.fit.converged.to_string())
                .put_list(&format!("fit.{k}.mu"), &comps.iter().map(|c| c.mu()).collect::<Vec<_>>())
                .put_list(&format!("fit.{k}.rho"), &comps.iter().map(|c| c.rho).collect::<Vec<_>>())
                .put_f64(&format!("fit.{k}.loglik"), r.fit.loglik());
        }
        if let Some(d) = self.sup_difference {
            w.put("same_order", (self.runs[0].fit.order == self.runs[1].fit.order).to_string())
                .put_f64("sup_density_difference", d);
        }
        w.finish()
    }

    /// Tab-separated sorted samples side by side, one row per rank.
    pub fn qq_table(&self) -> String {
        let rows = self.runs.iter().map(|r| r.sample.len()).max().unwrap_or(0);
        let mut s = String::new();
        for i in 0..rows {
            let cells: Vec<String> = self
                .runs
                .iter()
                .map(|r| r.sample.get(i).map_or(String::new(), |&x| crate::kv::fmt_f64(x)))
                .collect();
            s.push_str(&cells.join("\t"));
            s.push('\n');
        }
        s
    }
}
