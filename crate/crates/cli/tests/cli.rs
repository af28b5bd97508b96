use std::path::Path;
use std::process::{Command, Output};

use nagstab_core::hardfn::{build_hard_function, format, ConstructionResult, HardFnParams};

fn nagstab(args: &[&str]) -> Output {
    nagstab_env(args, &[])
}

fn nagstab_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nagstab"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn config_line(o: &Output) -> String {
    stdout(o).lines().find(|l| l.starts_with("# config:")).unwrap().to_string()
}

fn statuses(o: &Output) -> Vec<String> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("check_name"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{},{}", strip_seed(f[0]), f[1])
        })
        .collect()
}

// seeded sub-checks carry their seed in the name
fn strip_seed(name: &str) -> &str {
    match name.rfind("/seed") {
        Some(i) => &name[..i],
        None => name,
    }
}

#[test]
fn construct_runs_and_reports_checks() {
    let o = nagstab(&["construct", "--G", "1", "--beta", "1", "--eta", "0.5", "--eps", "1e-5"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("check_name,status,observed,required"));
    assert!(s.contains("consistency/phase1/interval,pass"));
}

#[test]
fn usage_errors_exit_with_two() {
    let o = nagstab(&["construct", "--eta", "2", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("eta <= 1/beta"));
    assert_eq!(nagstab(&["construct", "--warp", "1"]).status.code(), Some(2));
    assert_eq!(nagstab(&["construct", "--eta", "fast"]).status.code(), Some(2));
    assert_eq!(nagstab(&["teleport"]).status.code(), Some(2));
    assert_eq!(nagstab(&["uniform", "--n", "2000000"]).status.code(), Some(2));
    assert_eq!(nagstab(&["figure2", "--preset", "0.3"]).status.code(), Some(2));
}

#[test]
fn flags_beat_environment_beat_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep\nseed = 42\ntrials = 2\nT = 20\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = nagstab(&["quadnorm", "--config", c]);
    assert!(config_line(&o).contains("seed=42"), "{}", config_line(&o));
    let o = nagstab(&["quadnorm", "--config", c, "--seed", "7"]);
    assert!(config_line(&o).contains("seed=7"));
    let o = nagstab_env(&["quadnorm", "--config", c], &[("NAGSTAB_SEED", "5")]);
    assert!(config_line(&o).contains("seed=5"));
    let o = nagstab_env(&["quadnorm", "--config", c, "--seed", "7"], &[("NAGSTAB_SEED", "5")]);
    assert!(config_line(&o).contains("seed=7"));
    assert_eq!(o.status.code(), Some(0));

    std::fs::write(&cfg, "seed = 1\nwarp = 3\n").unwrap();
    let o = nagstab(&["quadnorm", "--config", c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warp"));
}

fn corrupted_fixture(path: &Path) {
    let cr = build_hard_function(HardFnParams::new(1.0, 1.0, 0.5, 1e-6).unwrap()).unwrap();
    let mut ivs = cr.phase_intervals.clone();
    ivs[1].a *= 1.0 + 1e-9;
    let bad = ConstructionResult::from_parts(cr.params, ivs).unwrap();
    std::fs::write(path, format::to_text(&bad)).unwrap();
}

#[test]
fn corrupted_fixture_names_the_consistency_check() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.txt");
    let o = nagstab(&["construct", "--out", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = nagstab(&["verify", "--input", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let bad = dir.path().join("bad.txt");
    corrupted_fixture(&bad);
    let o = nagstab(&["verify-all", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("consistency/phase2/interval,fail"), "{}", stdout(&o));
}

#[test]
fn figure2_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = nagstab(&["figure2", "--preset", "0.1", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());

    let text = String::from_utf8(text).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let checkpoints: Vec<usize> = rows.iter().filter(|r| r[5] == "1").map(|r| r[0].parse().unwrap()).collect();
    assert!(checkpoints.len() >= 5);
    assert!(checkpoints.windows(2).all(|w| w[1] - w[0] == 100));
    for r in rows.iter().filter(|r| r[5] == "1") {
        let (dx, lower, floor): (f64, f64, f64) = (r[1].parse().unwrap(), r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!(dx.abs() >= lower.min(floor));
    }

    let empty = dir.path().join("empty.csv");
    let o = nagstab(&["figure2", "--preset", "0.5", "--T", "0", "--out", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&empty).unwrap(), "t,dx,log10_abs_dx,lower_bound,floor,checkpoint\n");
}

#[test]
fn quadnorm_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = nagstab(&["quadnorm", "--trials", "10", "--T", "100", "--seed", "3", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_to_string(&a).unwrap(), "k,gamma_k,a_k\n");
}

#[test]
fn verify_outcomes_do_not_depend_on_the_seed() {
    let base = nagstab(&["verify", "--trials", "10", "--T", "50", "--seed", "0"]);
    let mut reference = statuses(&base);
    reference.sort();
    assert!(!reference.is_empty());
    for seed in ["1", "2", "3", "4"] {
        let o = nagstab(&["verify", "--trials", "10", "--T", "50", "--seed", seed]);
        assert_eq!(o.status.code(), base.status.code());
        let mut got = statuses(&o);
        got.sort();
        assert_eq!(got, reference, "seed {seed}");
    }
}

#[test]
fn other_commands_pass() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gap.csv");
    let export = dir.path().join("scenario.txt");
    let o = nagstab(&[
        "uniform",
        "--n",
        "10",
        "--out",
        csv.to_str().unwrap(),
        "--export",
        export.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(std::fs::read_to_string(&export).unwrap().contains("eps = "));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("t,gap,"));
    let o = nagstab(&["variants", "--variant", "variant2", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = nagstab(&["diverge", "--eta", "0.25", "--eps", "1e-4", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("t,dx,dy,dm,dgrad,lower_bound,floor"));
}
