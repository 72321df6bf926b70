//! Subcommands. Each returns the process exit code on success.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use locmix_core::emfit::{fit, loglik};
use locmix_core::expfam::binomial_remainder_envelope;
use locmix_core::gridsel::GridSpec;
use locmix_core::lmm::{feasibility, Argmin};
use locmix_core::{BaseFamily, FeasibilityStatus};

use crate::config::RunConfig;
use crate::data::read_observations;
use crate::error::{read_file, write_file, CliError};
use crate::kv::{fmt_f64, parse_list, KvWriter};
use crate::model_io::{read_model, write_fit};
use crate::report::render;
use crate::simulate::{run_study, SimSpec};

#[derive(Debug, Parser)]
#[command(name = "locmix", version, about = "Fit discrete mixtures of local mixture models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a mixture on a fixed grid, pruning weak components.
    Fit(FitCmd),
    /// Tabulate a saved mixture and its components.
    Density(DensityCmd),
    /// Build a support-point grid from a tolerance.
    Grid(GridCmd),
    /// Sample normal mixtures and fit them.
    Simulate(SimulateCmd),
    /// Classify a coefficient vector as interior, boundary or infeasible.
    Check(CheckCmd),
}

/// Settings shared with the config file; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Key-value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    /// Scalar or comma-separated per-component sds.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Binomial number of trials.
    #[arg(long)]
    pub trials: Option<u32>,
    /// Explicit comma-separated support points.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Mean range `lo,hi` for a generated grid.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub inner_tol: Option<f64>,
    #[arg(long)]
    pub inner_max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut push = |k: &'static str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k, val));
            }
        };
        push("family", self.family.clone());
        push("sigma", self.sigma.clone());
        push("trials", self.trials.map(|x| x.to_string()));
        push("grid", self.grid.clone());
        push("range", self.range.clone());
        push("delta", self.delta.map(|x| x.to_string()));
        push("gamma", self.gamma.map(|x| x.to_string()));
        push("tol", self.tol.map(|x| x.to_string()));
        push("max_iter", self.max_iter.map(|x| x.to_string()));
        push("inner_tol", self.inner_tol.map(|x| x.to_string()));
        push("inner_max_iter", self.inner_max_iter.map(|x| x.to_string()));
        push("seed", self.seed.map(|x| x.to_string()));
        v
    }

    pub fn load(&self, extra: &[(&'static str, String)]) -> Result<RunConfig, CliError> {
        let mut o = self.overrides();
        o.extend_from_slice(extra);
        RunConfig::load(self.config.as_deref(), &o)
    }
}

#[derive(Debug, Args)]
pub struct FitCmd {
    /// Observation file; overrides `input` from the config.
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Machine-readable model file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Human-readable report (default: stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityCmd {
    /// Model file written by `fit --out`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    /// Number of rows for continuous families.
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Also report the log-likelihood of these observations on stderr.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridCmd {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateCmd {
    /// One or two SimSpec files.
    #[arg(long = "spec", required = true, num_args = 1)]
    pub specs: Vec<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Summary (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sorted samples side by side, for QQ plots.
    #[arg(long)]
    pub qq: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckCmd {
    #[arg(long, default_value = "normal")]
    pub family: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu0: f64,
    /// Four comma-separated coefficients.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Fit(c) => cmd_fit(&c),
        Command::Density(c) => cmd_density(&c),
        Command::Grid(c) => cmd_grid(&c),
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Check(c) => cmd_check(&c),
    }
}

pub fn cmd_fit(c: &FitCmd) -> Result<u8, CliError> {
    let extra: Vec<_> = c
        .input
        .iter()
        .map(|p| ("input", p.to_string_lossy().into_owned()))
        .collect();
    let config = c.config.load(&extra)?;
    let input = config
        .input
        .clone()
        .ok_or_else(|| CliError::Config("no input file".into()))?;
    let data = read_observations(&input)?;
    let report = fit(&data, config.initial_model()?, &config.em)?;
    if let Some(out) = &c.out {
        write_file(out, &write_fit(&report, data.len())?)?;
    }
    emit(c.report.as_deref(), &render(&report, data.len()))?;
    Ok(if report.converged { 0 } else { 2 })
}

pub fn cmd_density(c: &DensityCmd) -> Result<u8, CliError> {
    let saved = read_model(&read_file(&c.model)?).map_err(|e| e.in_file(&c.model))?;
    let model = saved.model;
    let comps = model.components();
    let xs: Vec<f64> = match *comps[0].family() {
        BaseFamily::Binomial { n } => {
            let lo = c.from.unwrap_or(0.0);
            let hi = c.to.unwrap_or(n as f64);
            for x in [lo, hi] {
                comps[0].family().check_observation(x)?;
            }
            (lo as u32..=hi as u32).map(f64::from).collect()
        }
        BaseFamily::NormalFixedVar { .. } => {
            let spread = comps
                .iter()
                .map(|c| match *c.family() {
                    BaseFamily::NormalFixedVar { sigma0 } => sigma0,
                    BaseFamily::Binomial { .. } => 0.0,
                })
                .fold(0.0, f64::max);
            let lo = c.from.unwrap_or(comps[0].mu() - 5.0 * spread);
            let hi = c.to.unwrap_or(comps[comps.len() - 1].mu() + 5.0 * spread);
            if !(hi > lo) || c.points < 2 {
                return Err(CliError::Config("need from < to and at least two points".into()));
            }
            (0..c.points)
                .map(|k| lo + (hi - lo) * k as f64 / (c.points - 1) as f64)
                .collect()
        }
    };
    let mut out = String::new();
    for x in xs {
        let g: Vec<f64> = comps.iter().map(|c| c.lmm.density(x)).collect::<Result<_, _>>()?;
        let h: f64 = comps.iter().zip(&g).map(|(c, g)| c.rho * g).sum();
        out.push_str(&fmt_f64(x));
        out.push('\t');
        out.push_str(&fmt_f64(h));
        for v in g {
            out.push('\t');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    emit(c.out.as_deref(), &out)?;
    if let Some(path) = &c.data {
        let data = read_observations(path)?;
        eprintln!("loglik\t{}", fmt_f64(loglik(&model, &data)?));
    }
    Ok(0)
}

/// Checks `L < q5 < U` at every support point for the cell's ends and anchor.
fn envelope_holds(n: u32, grid: &GridSpec) -> Result<bool, CliError> {
    let fam = BaseFamily::binomial(n)?;
    for cell in &grid.intervals {
        for m in [cell.lo, cell.mu, cell.hi] {
            if !(m > 0.0 && m < n as f64) {
                continue;
            }
            let env = binomial_remainder_envelope(n, m)?;
            for x in 0..=n {
                let q5 = fam.q_values(f64::from(x), m)[4];
                if !(env.lower < q5 && q5 < env.upper) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

pub fn cmd_grid(c: &GridCmd) -> Result<u8, CliError> {
    let config = c.config.load(&[])?;
    let grid = config.grid_spec()?;
    let mut w = KvWriter::new();
    match grid.family {
        BaseFamily::NormalFixedVar { sigma0 } => {
            w.put("family", "normal").put_f64("sigma", sigma0);
        }
        BaseFamily::Binomial { n } => {
            w.put("family", "binomial").put("trials", n.to_string());
        }
    }
    if let Some(d) = grid.delta {
        w.put_f64("delta", d);
    }
    w.put_list("range", &[grid.range.0, grid.range.1])
        .put("count", grid.len().to_string())
        .put_list("points", &grid.points());
    for (k, cell) in grid.intervals.iter().enumerate() {
        w.put_list(
            &format!("interval.{k}"),
            &[cell.lo, cell.mu, cell.hi, cell.mu - cell.lo, cell.hi - cell.mu, cell.derivative_bound],
        );
    }
    if let BaseFamily::Binomial { n } = grid.family {
        let ok = envelope_holds(n, &grid)?;
        w.put("envelope_check", if ok { "pass" } else { "fail" });
    }
    emit(c.out.as_deref(), &w.finish())?;
    Ok(0)
}

pub fn cmd_simulate(c: &SimulateCmd) -> Result<u8, CliError> {
    let specs = c
        .specs
        .iter()
        .map(|p| SimSpec::parse(&read_file(p)?).map_err(|e| e.in_file(p)))
        .collect::<Result<Vec<_>, _>>()?;
    let config = c.config.load(&[])?;
    let study = run_study(&specs, &config)?;
    if let Some(qq) = &c.qq {
        write_file(qq, &study.qq_table())?;
    }
    emit(c.out.as_deref(), &study.summary())?;
    Ok(0)
}

pub fn cmd_check(c: &CheckCmd) -> Result<u8, CliError> {
    let family = match c.family.as_str() {
        "normal" => BaseFamily::normal(c.sigma)?,
        "binomial" => BaseFamily::binomial(
            c.trials
                .ok_or_else(|| CliError::Config("binomial family needs --trials".into()))?,
        )?,
        other => return Err(CliError::Config(format!("unknown family {other:?}"))),
    };
    let lambda: [f64; 4] = parse_list("lambda", &c.lambda)?
        .try_into()
        .map_err(|_| CliError::Config("lambda needs four values".into()))?;
    let r = feasibility(&family, c.mu0, &lambda)?;
    let (status, code) = match r.status {
        FeasibilityStatus::Interior => ("interior", 0),
        FeasibilityStatus::Boundary => ("boundary", 3),
        FeasibilityStatus::Infeasible => ("infeasible", 4),
    };
    let argmin = match r.argmin {
        Argmin::At(x) => fmt_f64(x),
        Argmin::Unbounded => "unbounded".into(),
    };
    let mut w = KvWriter::new();
    w.put("status", status)
        .put_f64("min_value", r.min_value)
        .put("argmin", argmin)
        .put_f64("margin", r.margin);
    print!("{}", w.finish());
    Ok(code)
}
