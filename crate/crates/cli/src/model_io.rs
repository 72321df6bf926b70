//! Machine-readable fit results.

use locmix_core::emfit::{Component, FitReport, MixtureModel, PruneReason};
use locmix_core::{BaseFamily, Lmm};

use crate::error::CliError;
use crate::kv::{fmt_list, parse_list, KvMap, KvWriter};

pub const FORMAT: &str = "locmix-model 1";

fn reason_name(r: PruneReason) -> &'static str {
    match r {
        PruneReason::Threshold => "threshold",
        PruneReason::EmptyClass => "empty-class",
    }
}

fn join_usize(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn write_components(w: &mut KvWriter, model: &MixtureModel) -> Result<(), CliError> {
    let comps = model.components();
    match comps[0].family() {
        BaseFamily::NormalFixedVar { .. } => {
            let mut sigmas = Vec::with_capacity(comps.len());
            for c in comps {
                match *c.family() {
                    BaseFamily::NormalFixedVar { sigma0 } => sigmas.push(sigma0),
                    _ => return Err(CliError::Config("mixed families cannot be saved".into())),
                }
            }
            w.put("family", "normal").put_list("sigma", &sigmas);
        }
        BaseFamily::Binomial { n } => {
            if comps.iter().any(|c| c.family() != comps[0].family()) {
                return Err(CliError::Config("mixed families cannot be saved".into()));
            }
            w.put("family", "binomial").put("trials", n.to_string());
        }
    }
    w.put("order", comps.len().to_string());
    w.put_list("mu", &comps.iter().map(Component::mu).collect::<Vec<_>>());
    w.put_list("rho", &comps.iter().map(|c| c.rho).collect::<Vec<_>>());
    for (l, c) in comps.iter().enumerate() {
        w.put_list(&format!("lambda.{l}"), c.lambda());
    }
    Ok(())
}

pub fn write_model(model: &MixtureModel) -> Result<String, CliError> {
    let mut w = KvWriter::new();
    w.put("format", FORMAT);
    write_components(&mut w, model)?;
    Ok(w.finish())
}

pub fn write_fit(report: &FitReport, observations: usize) -> Result<String, CliError> {
    let mut w = KvWriter::new();
    w.put("format", FORMAT);
    write_components(&mut w, &report.model)?;
    w.put_f64("loglik", report.loglik())
        .put("converged", report.converged.to_string())
        .put("iterations", report.iterations.to_string())
        .put("observations", observations.to_string())
        .put_list("loglik_trace", &report.loglik_trace);
    for (k, e) in report.pruning_history.iter().enumerate() {
        w.put(&format!("prune.{k}.iteration"), e.iteration.to_string())
            .put(&format!("prune.{k}.reason"), reason_name(e.reason))
            .put(&format!("prune.{k}.index"), join_usize(&e.indices))
            .put(&format!("prune.{k}.mu"), fmt_list(&e.mus));
    }
    w.put("assignments", join_usize(&report.assignments));
    Ok(w.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: MixtureModel,
    /// Log-likelihood recorded by the fit, if present.
    pub loglik: Option<f64>,
}

pub fn read_model(text: &str) -> Result<SavedModel, CliError> {
    let map = KvMap::parse(text, false)?;
    if map.require("format")? != FORMAT {
        return Err(CliError::Config(format!("unsupported model format, expected {FORMAT:?}")));
    }
    let mu = parse_list("mu", map.require("mu")?)?;
    let rho = parse_list("rho", map.require("rho")?)?;
    if rho.len() != mu.len() {
        return Err(CliError::Config("mu and rho lengths differ".into()));
    }
    let families: Vec<BaseFamily> = match map.require("family")? {
        "normal" => {
            let sigmas = parse_list("sigma", map.require("sigma")?)?;
            if sigmas.len() != mu.len() {
                return Err(CliError::Config("sigma and mu lengths differ".into()));
            }
            sigmas
                .iter()
                .map(|&s| BaseFamily::normal(s).map_err(CliError::from))
                .collect::<Result<_, _>>()?
        }
        "binomial" => {
            let n: u32 = map
                .require("trials")?
                .parse()
                .map_err(|_| CliError::Config("trials: not an integer".into()))?;
            vec![BaseFamily::binomial(n)?; mu.len()]
        }
        other => return Err(CliError::Config(format!("unknown family {other:?}"))),
    };
    let mut components = Vec::with_capacity(mu.len());
    for (l, (&m, &r)) in mu.iter().zip(&rho).enumerate() {
        let key = format!("lambda.{l}");
        let v = parse_list(&key, map.require(&key)?)?;
        let lambda: [f64; 4] = v
            .try_into()
            .map_err(|_| CliError::Config(format!("{key}: expected four values")))?;
        components.push(Component {
            rho: r,
            lmm: Lmm::new(families[l], m, lambda)?,
        });
    }
    Ok(SavedModel {
        model: MixtureModel::new(components)?,
        loglik: map.f64("loglik")?,
    })
}
