//! End-to-end checks of the command-line interface: exit codes, artifact
//! files, and byte-level determinism across reruns.

use std::path::Path;
use std::process::Command;

fn isac() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isac"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn mc_validate_small_grid_exits_cleanly() {
    let dir = std::env::temp_dir().join(format!("isac-cli-mc-{}", std::process::id()));
    let out = isac()
        .args([
            "mc-validate",
            "--grid-min-db=-5",
            "--grid-max-db=0",
            "--grid-step-db=5",
            "--l=8",
            "--trials=20000",
            "--seed=3",
            "--out",
        ])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(read(&dir, "mc-validate.csv")).unwrap();
    assert!(csv.contains("# max_abs_z="));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn approx_qq_reruns_are_byte_identical() {
    let dir = std::env::temp_dir().join(format!("isac-cli-qq-{}", std::process::id()));
    let run = || {
        let out = isac()
            .args([
                "approx-qq",
                "--grid-min-db=-20",
                "--grid-max-db=-10",
                "--grid-step-db=5",
                "--l=16,128",
                "--seed=11",
                "--out",
            ])
            .arg(&dir)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        read(&dir, "approx-qq.csv")
    };
    let first = run();
    let second = run();
    assert_eq!(first, second);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn solve_writes_summary_and_iterates() {
    let dir = std::env::temp_dir().join(format!("isac-cli-solve-{}", std::process::id()));
    let dump = dir.join("iterates.ldjson");
    let out = isac()
        .args(["solve", "--gamma0-db=4", "--seed=3", "--out"])
        .arg(&dir)
        .arg("--dump-iterates")
        .arg(&dump)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&read(&dir, "solve.json")).unwrap();
    let pd = summary["proposed"]["p_d"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&pd));
    assert!(summary["diagnostics"]["converged"].as_bool().unwrap());
    // Every iterate line is standalone JSON.
    let lines = String::from_utf8(read(&dir, "iterates.ldjson")).unwrap();
    for line in lines.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(rec["rank_residual"].as_f64().unwrap() < 1e-6);
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn scenario_file_overrides_are_honored() {
    let dir = std::env::temp_dir().join(format!("isac-cli-scn-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let scenario = dir.join("scenario.json");
    std::fs::write(
        &scenario,
        r#"{"m_t": 4, "m_r": 4, "l": 64, "gamma_0_db": 0.0}"#,
    )
    .unwrap();
    let out = isac()
        .args(["solve", "--seed=5", "--out"])
        .arg(&dir)
        .arg("--scenario")
        .arg(&scenario)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"unknown_field": 1}"#).unwrap();
    let out = isac()
        .args(["solve", "--out"])
        .arg(&dir)
        .arg("--scenario")
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn infeasible_threshold_fails_with_message() {
    let dir = std::env::temp_dir().join(format!("isac-cli-inf-{}", std::process::id()));
    let out = isac()
        .args(["solve", "--gamma0-db=40", "--seed=2", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
    let _ = std::fs::remove_dir_all(&dir);
}
