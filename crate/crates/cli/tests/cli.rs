use std::path::Path;
use std::process::{Command, Output};

use locmix::kv::{parse_f64, KvMap};
use locmix_core::expfam::{density, normal_fifth_derivative_bound};
use locmix_core::BaseFamily;

fn locmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locmix")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn two_cluster_data() -> String {
    let mut s = String::from("# two clusters\n");
    for k in 0..60 {
        let t = (k as f64 + 0.5) / 60.0;
        s.push_str(&format!("{}\n", -2.0 + 1.2 * (t - 0.5)));
        s.push_str(&format!("{}\n", 2.0 + 1.2 * (t - 0.5)));
    }
    s
}

fn table(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .map(|l| l.split('\t').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn fit_writes_report_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "data.txt", &two_cluster_data());
    let model = dir.path().join("model.kv");
    let o = locmix(&["fit", &data, "--grid", "-2,0,2", "--out", model.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("order: 2"), "{report}");
    let saved = KvMap::parse(&std::fs::read_to_string(&model).unwrap(), false).unwrap();
    assert_eq!(saved.get("format"), Some("locmix-model 1"));
    assert_eq!(saved.get("order"), Some("2"));
}

#[test]
fn fit_reports_nonconvergence_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "data.txt", &two_cluster_data());
    let o = locmix(&["fit", &data, "--grid", "-2,0,2", "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn fit_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.txt", "# nothing\n\n");
    let o = locmix(&["fit", &empty, "--grid", "0,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no observations"), "{}", stderr(&o));

    let bad = write(dir.path(), "bad.txt", "1.0\n2.0\nabc\n");
    let o = locmix(&["fit", &bad, "--grid", "0,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = locmix(&["fit", &dir.path().join("absent.txt").to_string_lossy(), "--grid", "0,1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "data.txt", &two_cluster_data());
    let cfg = write(dir.path(), "run.cfg", "grid = -2,0,2\ngamma = 0.15\ninput = data.txt\n");
    let o = locmix(&["fit", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("order: 2"));
    // A single anchor leaves nothing to prune.
    let o = locmix(&["fit", "--config", &cfg, "--grid", "0"]);
    assert!(stdout(&o).contains("order: 1"), "{}", stdout(&o));
    let bad = write(dir.path(), "bad.cfg", "grid = 0,1\ncolour = red\n");
    assert_eq!(locmix(&["fit", "--config", &bad]).status.code(), Some(1));
}

fn fitted_model(dir: &Path) -> (String, String) {
    let data = write(dir, "data.txt", &two_cluster_data());
    let model = dir.join("model.kv").to_string_lossy().into_owned();
    let o = locmix(&["fit", &data, "--grid", "-2,0,2", "--out", &model]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    (data, model)
}

#[test]
fn density_rows_are_consistent_and_integrate_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let (_, model) = fitted_model(dir.path());
    let saved = KvMap::parse(&std::fs::read_to_string(&model).unwrap(), false).unwrap();
    let rho: Vec<f64> = saved.list("rho").unwrap().unwrap();
    let o = locmix(&["density", "--model", &model, "--from", "-12", "--to", "12", "--points", "4801"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = table(&stdout(&o));
    assert_eq!(rows.len(), 4801);
    for r in &rows {
        let h: f64 = rho.iter().zip(&r[2..]).map(|(p, g)| p * g).sum();
        assert!((h - r[1]).abs() <= 1e-12, "{r:?}");
    }
    let area: f64 = rows
        .windows(2)
        .map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[0][1] + w[1][1]))
        .sum();
    assert!((area - 1.0).abs() < 1e-4, "{area}");
}

#[test]
fn density_of_unadjusted_component_is_the_base_density() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "m.kv",
        "format\tlocmix-model 1\nfamily\tnormal\nsigma\t1.5\norder\t1\nmu\t0.3\nrho\t1\nlambda.0\t0,0,0,0\n",
    );
    let o = locmix(&["density", "--model", &model, "--from", "-4", "--to", "4", "--points", "33"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fam = BaseFamily::normal(1.5).unwrap();
    for r in table(&stdout(&o)) {
        assert!((r[1] - density(&fam, r[0], 0.3).unwrap()).abs() < 1e-15);
    }
}

#[test]
fn binomial_density_is_on_the_support() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(
        dir.path(),
        "m.kv",
        "format\tlocmix-model 1\nfamily\tbinomial\ntrials\t10\norder\t1\nmu\t4\nrho\t1\nlambda.0\t0.1,0,0,0\n",
    );
    let o = locmix(&["density", "--model", &model]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = table(&stdout(&o));
    assert_eq!(rows.len(), 11);
    let total: f64 = rows.iter().map(|r| r[1]).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let o = locmix(&["density", "--model", &model, "--from", "0", "--to", "11"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn saved_model_reproduces_loglik() {
    let dir = tempfile::tempdir().unwrap();
    let (data, model) = fitted_model(dir.path());
    let saved = KvMap::parse(&std::fs::read_to_string(&model).unwrap(), false).unwrap();
    let stored = saved.f64("loglik").unwrap().unwrap();
    let o = locmix(&["density", "--model", &model, "--data", &data, "--points", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let err = stderr(&o);
    let line = err.lines().find(|l| l.starts_with("loglik\t")).unwrap();
    let again = parse_f64("loglik", &line[7..]).unwrap();
    assert!((again - stored).abs() <= 1e-12 * stored.abs().max(1.0), "{again} {stored}");
}

#[test]
fn grid_unit_half_width_cover() {
    let m = normal_fifth_derivative_bound(1.0).unwrap();
    let delta = 0.5f64.powi(6) * m / 60.0;
    let o = locmix(&["grid", "--range", "0,4", "--delta", &format!("{delta:e}")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let kv = KvMap::parse(&stdout(&o), false).unwrap();
    assert_eq!(kv.get("count"), Some("4"));
    let pts = kv.list("points").unwrap().unwrap();
    for (p, want) in pts.iter().zip([0.5, 1.5, 2.5, 3.5]) {
        assert!((p - want).abs() < 1e-9, "{pts:?}");
    }

    let o = locmix(&["grid", "--range", "0,4", "--delta", &format!("{:e}", 64.0 * delta)]);
    let kv = KvMap::parse(&stdout(&o), false).unwrap();
    let cell = kv.list("interval.0").unwrap().unwrap();
    assert!((cell[3] - 1.0).abs() < 1e-9, "{cell:?}");
    assert_eq!(kv.get("count"), Some("2"));
}

#[test]
fn binomial_grid_reports_envelope_check() {
    let o = locmix(&["grid", "--family", "binomial", "--trials", "20", "--range", "8,12", "--delta", "1e-4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let kv = KvMap::parse(&stdout(&o), false).unwrap();
    assert_eq!(kv.get("envelope_check"), Some("pass"));
    let pts = kv.list("points").unwrap().unwrap();
    assert!(pts.windows(2).all(|w| w[0] < w[1]));
    assert!(pts[0] >= 8.0 && pts[pts.len() - 1] <= 12.0);
}

#[test]
fn grid_rejects_bad_tolerance() {
    assert_eq!(locmix(&["grid", "--range", "0,4", "--delta", "0"]).status.code(), Some(1));
    assert_eq!(locmix(&["grid", "--range", "0,1e9", "--delta", "1e-9"]).status.code(), Some(1));
}

#[test]
fn simulate_is_seeded_and_recovers_a_point_mass() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "one.sim", "weights = 1\nmeans = 0.4\nsds = 1\nn = 400\nseed = 11\n");
    let args = ["simulate", "--spec", &spec, "--grid", "-2,0.4,3"];
    let a = locmix(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = locmix(&args);
    assert_eq!(a.stdout, b.stdout);
    let kv = KvMap::parse(&stdout(&a), false).unwrap();
    assert_eq!(kv.get("fit.0.order"), Some("1"));

    let bad = write(dir.path(), "bad.sim", "weights = 0.5,0.4\nmeans = 0,1\nsds = 1,1\nn = 10\n");
    let o = locmix(&["simulate", "--spec", &bad, "--grid", "0,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sum"), "{}", stderr(&o));
}

#[test]
fn simulate_pair_writes_qq_table() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let dir = tempfile::tempdir().unwrap();
    let qq = dir.path().join("qq.tsv");
    let o = locmix(&[
        "simulate",
        "--spec",
        fixtures.join("example1_five.sim").to_str().unwrap(),
        "--spec",
        fixtures.join("example1_ten.sim").to_str().unwrap(),
        "--config",
        fixtures.join("example1.cfg").to_str().unwrap(),
        "--qq",
        qq.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let kv = KvMap::parse(&stdout(&o), false).unwrap();
    assert_eq!(kv.get("same_order"), Some("true"));
    let rows = table(&std::fs::read_to_string(&qq).unwrap());
    assert_eq!(rows.len(), 500);
    assert!(rows.iter().all(|r| r.len() == 2));
}

#[test]
fn check_exit_codes() {
    for (lambda, code, status) in [
        ("0,0,0,0.1", 0, "interior"),
        ("0,0,0,0.16666666666666666", 3, "boundary"),
        ("0,0,0,-0.01", 4, "infeasible"),
    ] {
        let o = locmix(&["check", "--mu0", "0", "--lambda", lambda]);
        assert_eq!(o.status.code(), Some(code), "{lambda}: {}", stderr(&o));
        let kv = KvMap::parse(&stdout(&o), false).unwrap();
        assert_eq!(kv.get("status"), Some(status));
    }
    let o = locmix(&["check", "--mu0", "0", "--lambda", "0,0,0,-0.01"]);
    let kv = KvMap::parse(&stdout(&o), false).unwrap();
    assert_eq!(kv.get("argmin"), Some("unbounded"));
    assert_eq!(locmix(&["check", "--mu0", "0", "--lambda", "1,2"]).status.code(), Some(1));
}
