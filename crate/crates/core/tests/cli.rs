use std::path::{Path, PathBuf};
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_retrofit");

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/case_study.toml")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str], out: &Path) -> i32 {
    let status = Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    status.status.code().unwrap_or(-1)
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn assert_close_tables(actual: &Path, expected: &Path) {
    let a = rows(actual);
    let e = rows(expected);
    assert_eq!(a.len(), e.len(), "{}", actual.display());
    for (ra, re) in a.iter().zip(&e) {
        assert_eq!(ra.len(), re.len());
        for (x, y) in ra.iter().zip(re) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(u), Ok(v)) if u.is_finite() && v.is_finite() => {
                    let tol = 1e-9 * u.abs().max(v.abs()).max(1e-12);
                    assert!((u - v).abs() <= tol, "{x} vs {y} in {}", actual.display());
                }
                _ => assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn solve_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let code = run(&["solve", "--config", cfg.to_str().unwrap(), "--grid", "w=0:400000:5"], dir.path());
    assert_eq!(code, 0);
    assert_close_tables(&dir.path().join("constants.csv"), &golden("constants.csv"));
    assert_close_tables(&dir.path().join("solve.csv"), &golden("solve.csv"));
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("solve.json").exists());
}

#[test]
fn subsidy_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let grid = "w=100000:300000:3,carbon=20:60:3";
    let code = run(&["subsidy", "--config", cfg.to_str().unwrap(), "--grid", grid], dir.path());
    assert_eq!(code, 0);
    assert_close_tables(&dir.path().join("subsidy.csv"), &golden("subsidy.csv"));
}

#[test]
fn statics_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    assert_eq!(run(&["statics", "--config", cfg.to_str().unwrap()], dir.path()), 0);
    assert_close_tables(&dir.path().join("statics.csv"), &golden("statics.csv"));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--config", cfg.to_str().unwrap(), "--n-paths", "3", "--seed", "7"];
    assert_eq!(run(&args, a.path()), 0);
    assert_eq!(run(&args, b.path()), 0);
    for f in ["simulate.csv", "simulate_summary.csv", "manifest.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn seed_changes_the_manifest_hash() {
    let cfg = config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = ["simulate", "--config", cfg.to_str().unwrap(), "--n-paths", "2"];
    assert_eq!(run(&[&base[..], &["--seed", "1"]].concat(), a.path()), 0);
    assert_eq!(run(&[&base[..], &["--seed", "2"]].concat(), b.path()), 0);
    let x = std::fs::read_to_string(a.path().join("simulate.csv")).unwrap();
    let y = std::fs::read_to_string(b.path().join("simulate.csv")).unwrap();
    assert_ne!(x.lines().next(), y.lines().next());
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "bogus_key = 1\n").unwrap();
    assert_eq!(run(&["solve", "--config", bad.to_str().unwrap()], &dir.path().join("o")), 2);
}

#[test]
fn malformed_grid_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config();
    let code = run(&["solve", "--config", cfg.to_str().unwrap(), "--grid", "w=1:2"], dir.path());
    assert_eq!(code, 2);
}

#[test]
fn impatient_household_exits_with_patience_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config()).unwrap().replace("delta = 0.03", "delta = 0.2");
    let p = dir.path().join("impatient.toml");
    std::fs::write(&p, text).unwrap();
    assert_eq!(run(&["solve", "--config", p.to_str().unwrap()], &dir.path().join("o")), 3);
    assert_eq!(run(&["validate", "--config", p.to_str().unwrap()], &dir.path().join("v")), 3);
    assert!(dir.path().join("v/validate.csv").exists());
}

#[test]
fn diffuse_on_a_small_population() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "[overrides]\nn_agents = 200\n").unwrap();
    let out = dir.path().join("o");
    assert_eq!(run(&["diffuse", "--config", cfg.to_str().unwrap(), "--subsidized"], &out), 0);
    let pop = rows(&out.join("population.csv"));
    assert_eq!(pop.len(), 201);
    let curve = rows(&out.join("diffuse.csv"));
    let share = curve[0].iter().position(|h| h == "E_S_subsidized").unwrap();
    let s: Vec<f64> = curve[1..].iter().map(|r| r[share].parse().unwrap()).collect();
    assert!(s.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}
