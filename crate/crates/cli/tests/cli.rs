//! End-to-end runs of the binary.

use std::path::Path;
use std::process::{Command, Output};

use amdi_qkd::config::{parse_str, preamble_config};
use amdi_qkd::table::SCAN_COLUMNS;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amdi-qkd")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8(bytes.to_vec()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn header(table: &str) -> Vec<String> {
    table.lines().find(|l| !l.starts_with('#')).unwrap().split(',').map(String::from).collect()
}

fn rows(table: &str) -> Vec<Vec<String>> {
    table.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["scan", "--help"]).status.code(), Some(0));
    assert_eq!(run(&["plot"]).status.code(), Some(1));
    let bad = run(&["scan", "--detector", "spad"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(text(&bad.stderr).contains("spad"));
}

#[test]
fn config_errors_exit_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "a.cfg", "eta=0.9\n\nwavelength=1550\n");
    let out = run(&["scan", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("line 3: unknown key `wavelength`"), "{}", text(&out.stderr));

    let range = write(dir.path(), "b.cfg", "eta=1.5\n");
    let out = run(&["scan", "--config", &range]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("`eta` out of range"));

    let out = run(&["scan", "--from", "10", "--to", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("`to_km`"));

    let out = run(&["scan", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["scan", "--variant", "verbatim", "--detector", "threshold"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("verbatim"));
}

#[test]
fn scan_table_layout_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "# caption values\np_dark=2e-10\neta=0.93\nr=0.8\nfrom_km=0\nto_km=20\nstep_km=5\n",
    );
    let out_path = dir.path().join("scan.csv");
    let out = run(&["scan", "--config", &cfg, "--detector", "threshold", "--output", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(out.stdout.is_empty());
    let table = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(header(&table), SCAN_COLUMNS);
    let rows = rows(&table);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.len() == SCAN_COLUMNS.len() && r.last().unwrap() == "ok"));
    assert_eq!(rows[4][0], "20");
    assert!(table.lines().any(|l| l.starts_with("## generated_unix_s=")));

    // The echoed parameters rebuild the effective configuration.
    let echoed = preamble_config(&table).unwrap();
    let mut expected = parse_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    expected.params.detector = amdi_core::DetectorKind::Threshold;
    expected.output = Some(out_path.clone());
    assert_eq!(echoed, expected);
}

#[test]
fn stdout_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let a = run(&["scan", "--to", "3", "--no-timestamp"]);
    run(&["scan", "--to", "3", "--no-timestamp", "--output", path.to_str().unwrap()]);
    let file = std::fs::read_to_string(&path).unwrap();
    let strip = |t: &str| t.lines().filter(|l| !l.starts_with("# output=")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&text(&a.stdout)), strip(&file));
    assert!(!text(&a.stdout).contains("generated_unix_s"));
}

#[test]
fn rates_past_the_cutoff_are_exact_zeros() {
    let out = run(&["scan", "--from", "1000", "--to", "1010", "--step", "10", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let t = text(&out.stdout);
    let h = header(&t);
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    for r in rows(&t) {
        assert_eq!(r[col("r_secret_per_pulse")], "0");
        assert_eq!(r[col("r_secret_per_second")], "0");
        assert_ne!(r[col("r_sifted")], "0");
    }
    assert!(t.contains("## cutoff_km=none"));
}

#[test]
fn oracle_backend_scans() {
    let out = run(&["scan", "--backend", "oracle", "--to", "50", "--step", "25", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let closed = run(&["scan", "--to", "50", "--step", "25", "--no-timestamp"]);
    let (a, b) = (rows(&text(&out.stdout)), rows(&text(&closed.stdout)));
    for (ra, rb) in a.iter().zip(&b) {
        for k in 2..13 {
            let (x, y): (f64, f64) = (ra[k].parse().unwrap(), rb[k].parse().unwrap());
            assert!((x - y).abs() <= 1e-8 * x.abs().max(y.abs()), "column {k}: {x} vs {y}");
        }
    }
}

#[test]
fn compare_has_both_detectors_and_differences() {
    let out = run(&["compare", "--to", "100", "--step", "50", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let t = text(&out.stdout);
    let h = header(&t);
    assert_eq!(h.len(), 2 + 2 * 12 + 3);
    for c in ["pnr_qber", "threshold_qber", "rel_diff_r_sifted", "diff_qber"] {
        assert!(h.iter().any(|x| x == c), "{c}");
    }
    assert_eq!(rows(&t).len(), 3);
    assert!(t.contains("## cutoff_km_pnr=100 cutoff_km_threshold=100"));
}

#[test]
fn verify_fails_for_the_transcribed_sums() {
    let out = run(&["verify", "--variant", "verbatim", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(2));
    let t = text(&out.stdout);
    assert!(t.contains("## verification=fail"));
    assert!(t.contains("FAIL"));
    assert!(t.contains("## rate-form verdict"));
}
