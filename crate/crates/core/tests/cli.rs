use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn brownring(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brownring"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn header_lines(text: &str) -> Vec<&str> {
    text.lines().take_while(|l| l.starts_with('#')).collect()
}

#[test]
fn sample_esd_is_deterministic_with_header() {
    let a = tempfile::tempdir().unwrap();
    let args = ["sample-esd", "--dim", "40", "--summands", "2", "--seed", "9"];
    let out = brownring(&args, a.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ks_vs_limit"));
    let names = ["singular_values.csv", "eigenvalues.csv"];
    let first: Vec<String> = names
        .iter()
        .map(|n| fs::read_to_string(a.path().join(n)).unwrap())
        .collect();
    assert_eq!(brownring(&args, a.path()).status.code(), Some(0));
    for (name, x) in names.iter().zip(&first) {
        let y = fs::read_to_string(a.path().join(name)).unwrap();
        assert_eq!(x, &y);
        let head = header_lines(x);
        assert_eq!(head.len(), 3);
        assert!(head[0].starts_with("# brownring "));
        assert!(head[1].starts_with("# config: {") && head[1].contains("\"dim\":40"));
        assert_eq!(head[2], "# seed: 9");
    }
    let c = tempfile::tempdir().unwrap();
    brownring(
        &["sample-esd", "--dim", "40", "--summands", "2", "--seed", "10"],
        c.path(),
    );
    let z = fs::read_to_string(c.path().join("singular_values.csv")).unwrap();
    assert_ne!(first[0].lines().nth(4), z.lines().nth(4));
}

#[test]
fn single_unitary_gives_unit_singular_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = brownring(&["sample-esd", "--dim", "16", "--summands", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("singular_values.csv")).unwrap();
    let values: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 16);
    assert!(values.iter().all(|x| (x - 1.0).abs() < 1e-12));
}

#[test]
fn limit_density_matches_reference_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = brownring(
        &["limit-density", "--summands", "3", "--grid", "2001", "--svg"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let edge = 2.0 * 2f64.sqrt();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let x: f64 = cols[0].parse().unwrap();
        if cols[2].is_empty() || (x.abs() - edge).abs() < 0.05 {
            continue;
        }
        let (d, r): (f64, f64) = (cols[1].parse().unwrap(), cols[2].parse().unwrap());
        assert!((d - r).abs() < 1e-2, "x = {x}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("density_report.json")).unwrap()).unwrap();
    assert!(report["tool"].as_str().unwrap().starts_with("brownring"));
    assert!(dir.path().join("density.svg").exists());
}

#[test]
fn brown_profile_is_accurate() {
    let dir = tempfile::tempdir().unwrap();
    let out = brownring(&["brown", "--summands", "2", "--grid", "12"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("brown.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "r,potential,density,h_d_reference,rel_error");
    assert_eq!(rows.len(), 13);
    for row in &rows[1..] {
        let rel: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(rel < 0.05);
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["sample-esd", "--dim", "0", "--summands", "2"][..],
        &["sample-esd", "--dim", "4", "--summands", "2", "--unitary-count", "3"],
        &["brown", "--summands", "2", "--grid", "0"],
        &["brown", "--summands", "1"],
        &["limit-density", "--summands", "2", "--eta", "-1"],
        &["no-such-command"],
    ] {
        assert_eq!(brownring(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn strict_renormalization_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let lax = brownring(&["limit-density", "--summands", "2", "--grid", "41"], dir.path());
    assert_eq!(lax.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&lax.stderr).contains("warning"));
    let strict = brownring(
        &["limit-density", "--summands", "2", "--grid", "41", "--strict"],
        dir.path(),
    );
    assert_eq!(strict.status.code(), Some(3));
}

#[test]
fn verify_default_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = brownring(&["verify", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 3);
}
