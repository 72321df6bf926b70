//! Human-readable fit report.

use std::fmt::Write as _;

use locmix_core::emfit::{FitReport, PruneReason};
use locmix_core::BaseFamily;

fn family_label(f: &BaseFamily) -> String {
    match *f {
        BaseFamily::NormalFixedVar { sigma0 } => format!("normal(sd {sigma0})"),
        BaseFamily::Binomial { n } => format!("binomial(n {n})"),
    }
}

pub fn render(report: &FitReport, observations: usize) -> String {
    let mut s = String::new();
    let comps = report.model.components();
    let _ = writeln!(s, "observations: {observations}");
    let _ = writeln!(s, "order: {}", report.order);
    let _ = writeln!(
        s,
        "converged: {} after {} iterations",
        if report.converged { "yes" } else { "no" },
        report.iterations
    );
    let _ = writeln!(s, "log-likelihood: {:.10}", report.loglik());
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>3}  {:>10}  {:>8}  {:>14}  {:>12} {:>12} {:>12} {:>12}  {:>11}",
        "l", "mu", "rho", "family", "lambda1", "lambda2", "lambda3", "lambda4", "min P"
    );
    for (l, c) in comps.iter().enumerate() {
        let lam = c.lambda();
        let _ = writeln!(
            s,
            "{:>3}  {:>10.4}  {:>8.4}  {:>14}  {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}  {:>11.4e}",
            l,
            c.mu(),
            c.rho,
            family_label(c.family()),
            lam[0],
            lam[1],
            lam[2],
            lam[3],
            c.lmm.feasibility().min_value
        );
    }
    let _ = writeln!(s);
    if report.pruning_history.is_empty() {
        let _ = writeln!(s, "pruning: none");
    } else {
        let _ = writeln!(s, "pruning:");
        for e in &report.pruning_history {
            let mus: Vec<String> = e.mus.iter().map(|m| format!("{m}")).collect();
            let why = match e.reason {
                PruneReason::Threshold => "proportion below gamma",
                PruneReason::EmptyClass => "empty class",
            };
            let _ = writeln!(s, "  iteration {}: mu {} ({why})", e.iteration, mus.join(", "));
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "log-likelihood trace:");
    for (k, v) in report.loglik_trace.iter().enumerate() {
        let _ = writeln!(s, "  {k:>4}  {v:.10}");
    }
    s
}
