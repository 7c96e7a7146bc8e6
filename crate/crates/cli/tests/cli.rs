use std::path::Path;
use std::process::{Command, Output};

fn turboeq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_turboeq"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

const QUICK: &str = "scenario = \"scenario1\"
equalizers = [\"mstar:4\", \"rs:1\"]
ebno_db = [6.0]
min_errors = 0
max_blocks = 1
allow_few_errors = true
seed = 3
";

#[test]
fn lists_builtin_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let out = turboeq(&["scenario", "list"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("scenario1") && text.contains("scenario2"));
}

#[test]
fn sweep_writes_csv_and_honors_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("quick.toml"), QUICK).unwrap();
    let out = turboeq(
        &["sweep", "quick.toml", "--seed", "11", "--threads", "1", "--out", "a.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("scenario,algorithm,budget,ebno_db,iteration,bit_errors,bits,frames,frame_errors,seed")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 6);
    assert!(rows.iter().all(|r| r.ends_with(",11")));
    assert!(rows[0].starts_with("scenario1,mstar,4,6.0,1,"));
    assert!(rows[6].starts_with("scenario1,rs,2,6.0,1,"));

    let again = turboeq(&["sweep", "quick.toml", "--seed", "11", "--out", "b.csv"], dir.path());
    assert!(again.status.success());
    assert_eq!(csv, std::fs::read_to_string(dir.path().join("b.csv")).unwrap());
}

#[test]
fn sweep_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("quick.toml"), QUICK).unwrap();
    let out = turboeq(&["sweep", "quick.toml", "--out", "-"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("scenario,algorithm,"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("typo.toml", format!("{QUICK}max_block = 3\n")),
        ("floor.toml", QUICK.replace("allow_few_errors = true\n", "")),
        ("budget.toml", QUICK.replace("mstar:4", "mstar:0")),
        ("scenario.toml", QUICK.replace("scenario1", "scenario9")),
    ];
    for (name, text) in &cases {
        std::fs::write(dir.path().join(name), text).unwrap();
        let out = turboeq(&["sweep", name], dir.path());
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(!out.stderr.is_empty());
    }
    let missing = turboeq(&["sweep", "missing.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("quick.toml"), QUICK).unwrap();
    let out = turboeq(&["sweep", "quick.toml", "--out", "no/such/dir/out.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = turboeq(&["verify"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.contains("[PASS] fault_injection"));
    assert!(!text.contains("[FAIL]"));
}
