use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nldiff::snapshot;
use tempfile::TempDir;

const SMALL: &str = r#"
[kernel]
family = "epanechnikov"
support_radius = 1.0
dimension = 1

[grid]
dimension = 1
points_per_axis = 2048
half_length = 64.0

[family]
kind = "power_law"
A = 1.0
alpha = 0.5
N = 1

[run]
p = 5.0
dt = 0.1
t_end = 16.0
snapshot_times = [1.0, 2.0, 4.0, 8.0, 16.0]
ball_radii = [4.0]

[compare]
k_ladder = [2.0, 4.0, 8.0]
windows = [2.0]
target_points = 256

[barrier]
t_list = [1.0, 4.0]
w_time = 2.0
"#;

struct Setup {
    dir: TempDir,
    config: PathBuf,
}

fn setup(text: &str) -> Setup {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(&config, text).unwrap();
    Setup { dir, config }
}

fn nldiff(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nldiff"));
    cmd.args(args).env_remove("NLDF_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn run_in(s: &Setup, sub: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", s.config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    nldiff(&args, &[])
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "stdout: {}\nstderr: {}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# nldiff "));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn negative_dt_exits_with_config_error() {
    let s = setup(SMALL);
    let out = s.dir.path().join("out");
    let o = run_in(&s, "simulate", &out, &["--override", "run.dt=-0.1"]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("run.dt"), "{stderr}");
    assert!(!out.exists());
}

#[test]
fn missing_config_and_unknown_keys_are_config_errors() {
    let o = nldiff(&["kernel"], &[]);
    assert_eq!(o.status.code(), Some(1));
    let s = setup(&format!("{SMALL}\n[extra]\nx = 1\n"));
    let o = run_in(&s, "kernel", &s.dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn kernel_table_and_summary() {
    let s = setup(SMALL);
    let out = s.dir.path().join("out");
    let o = run_in(&s, "kernel", &out, &[]);
    assert_ok(&o);
    let rows = csv_rows(&out.join("kernel.csv"));
    assert_eq!(rows[0], ["r", "J"]);
    assert_eq!(rows.len(), 258);
    // Epanechnikov in 1D: 𝔞 = R_J^2 / 10
    let stdout = String::from_utf8_lossy(&o.stdout);
    let a: f64 = stdout.lines().find_map(|l| l.strip_prefix("diffusivity ")).unwrap().parse().unwrap();
    assert!((a - 0.1).abs() < 1e-12, "{stdout}");
}

#[test]
fn simulate_writes_snapshots_and_ledgers() {
    let s = setup(SMALL);
    let out = s.dir.path().join("out");
    assert_ok(&run_in(&s, "simulate", &out, &[]));
    for t in ["1", "2", "4", "8", "16"] {
        let f = snapshot::load(&out.join(format!("u_t{t}.nldf"))).unwrap();
        assert_eq!(f.time(), t.parse::<f64>().unwrap());
    }
    let ledger = csv_rows(&out.join("ledger.csv"));
    assert_eq!(ledger[0], ["t", "mass", "sup", "absorbed_mass", "mass_residual"]);
    assert_eq!(ledger.len(), 6);
    assert_eq!(csv_rows(&out.join("ball.csv")).len(), 6);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let s = setup(SMALL);
    let (a, b) = (s.dir.path().join("a"), s.dir.path().join("b"));
    for dir in [&a, &b] {
        assert_ok(&run_in(&s, "simulate", dir, &[]));
        assert_ok(&run_in(&s, "compare", dir, &[]));
    }
    assert!(nldiff_cli::acceptance::differing_files(&a, &b).unwrap().is_empty());
}

#[test]
fn environment_overrides_the_out_flag() {
    let s = setup(SMALL);
    let (flag, env) = (s.dir.path().join("flag"), s.dir.path().join("env"));
    let o = nldiff(
        &["kernel", "--config", s.config.to_str().unwrap(), "--out", flag.to_str().unwrap()],
        &[("NLDF_OUT", &env)],
    );
    assert_ok(&o);
    assert!(env.join("kernel.csv").exists());
    assert!(!flag.exists());
}

#[test]
fn compare_emits_positive_convergence_metrics() {
    let s = setup(SMALL);
    let out = s.dir.path().join("out");
    assert_ok(&run_in(&s, "compare", &out, &[]));
    let rows = csv_rows(&out.join("convergence.csv"));
    assert_eq!(rows[0], ["t", "k", "R", "metric"]);
    let metrics: Vec<f64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(metrics.len(), 3);
    assert!(metrics.iter().all(|m| *m > 0.0));
    assert!(metrics[2] < metrics[0]);
    for k in ["2", "4", "8"] {
        let f = snapshot::load(&out.join(format!("uk_k{k}.nldf"))).unwrap();
        assert_eq!(f.time(), 1.0);
        assert_eq!(f.grid().half_length(), 8.0);
    }
    assert_eq!(csv_rows(&out.join("rescale.csv")).len(), 4);
    assert_eq!(csv_rows(&out.join("rates.csv"))[0], ["R", "t_start", "t_end", "exponent", "r_squared", "n_points"]);
}

#[test]
fn analysis_subcommands_produce_their_tables() {
    let s = setup(SMALL);
    let out = s.dir.path().join("out");
    for (sub, file) in [
        ("w-table", "w_table.csv"),
        ("rates", "rates.csv"),
        ("mass-audit", "mass_audit.csv"),
        ("barrier", "barrier.csv"),
        ("rescale", "rescale.csv"),
        ("limit", "limit_ledger.csv"),
    ] {
        assert_ok(&run_in(&s, sub, &out, &[]));
        assert!(csv_rows(&out.join(file)).len() > 1, "{sub}");
    }
    assert_ok(&run_in(&s, "w-snapshot", &out, &[]));
    for name in ["w_t2.nldf", "grad_w0_t2.nldf", "dw_dt_t2.nldf"] {
        snapshot::load(&out.join(name)).unwrap();
    }
    let rates = csv_rows(&out.join("rates.csv"));
    assert_eq!(rates[1][0], "sup");
}

#[test]
fn limit_flags_override_the_datum() {
    let s = setup(SMALL);
    let out = s.dir.path().join("out");
    let o = run_in(&s, "limit", &out, &["--datum", "point_source", "--mass", "2"]);
    assert_ok(&o);
    let rows = csv_rows(&out.join("limit_ledger.csv"));
    let first_mass: f64 = rows[1][1].parse().unwrap();
    // c0 = 1 at the critical exponent: the point source loses mass from the start
    assert!(first_mass < 2.0 && first_mass > 0.0, "{first_mass}");
}

#[test]
fn verify_all_subset_and_determinism() {
    let dir = TempDir::new().unwrap();
    let o = nldiff(&["verify-all", "--only", "1,11", "--out", dir.path().to_str().unwrap()], &[]);
    assert_ok(&o);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS  1 ")), "{stdout}");
    assert!(stdout.lines().any(|l| l.starts_with("PASS 11 ")), "{stdout}");
    let summary = csv_rows(&dir.path().join("verify").join("summary.csv"));
    assert_eq!(summary.len(), 3);
}

#[test]
fn verify_all_rejects_unknown_criteria() {
    let dir = TempDir::new().unwrap();
    let o = nldiff(&["verify-all", "--only", "12", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
}
