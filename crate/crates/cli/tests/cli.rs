use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_panelcurve"))
}

fn core_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn fixture() -> PathBuf {
    core_dir().join("fixtures/panel_seed42.csv")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn run_matches_golden_report() {
    let out = run(&["run", fixture().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let golden = std::fs::read(core_dir().join("tests/golden/report_seed42.txt")).unwrap();
    assert_eq!(out.stdout, golden);
}

#[test]
fn simulate_is_deterministic_and_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("panel.csv");
    let out = run(&["simulate", "--seed", "42", "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(fixture()).unwrap()
    );
    let again = run(&[
        "simulate",
        "--seed",
        "7",
        "--entities",
        "3",
        "--periods",
        "20",
    ]);
    let twice = run(&[
        "simulate",
        "--seed",
        "7",
        "--entities",
        "3",
        "--periods",
        "20",
    ]);
    assert_eq!(again.stdout, twice.stdout);
    assert_eq!(
        String::from_utf8(again.stdout).unwrap().lines().count(),
        1 + 3 * 20
    );
}

#[test]
fn saved_json_report_re_renders() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let fixture = fixture();
    let args = ["run", fixture.to_str().unwrap(), "--no-unit-root"];
    let out = bin()
        .args(args)
        .args(["--format", "json", "-o", json.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let direct = bin().args(args).output().unwrap();
    let rendered = run(&["report", json.to_str().unwrap()]);
    assert_eq!(code(&rendered), 0);
    assert_eq!(rendered.stdout, direct.stdout);
    let back = run(&["report", json.to_str().unwrap(), "--format", "json"]);
    assert_eq!(back.stdout, std::fs::read(&json).unwrap());
}

#[test]
fn subcommands_print_their_sections() {
    let f = fixture();
    let est = String::from_utf8(run(&["estimate", f.to_str().unwrap()]).stdout).unwrap();
    let spec = String::from_utf8(run(&["spectest", f.to_str().unwrap()]).stdout).unwrap();
    assert!(est.contains("Fixed"));
    assert!(spec.contains("Hausman"));
    assert!(!spec.contains("ADF"));
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.csv");
    run(&[
        "simulate",
        "--entities",
        "2",
        "--periods",
        "40",
        "-o",
        small.to_str().unwrap(),
    ]);
    let ur = run(&["unitroot", small.to_str().unwrap()]);
    assert_eq!(code(&ur), 0);
    assert!(String::from_utf8(ur.stdout).unwrap().contains("C02"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let f = fixture();
    assert_eq!(
        code(&run(&["run", f.to_str().unwrap(), "--level", "0.7"])),
        2
    );
    assert_eq!(code(&run(&["run"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "no_such_key = 1\n").unwrap();
    assert_eq!(
        code(&run(&[
            "run",
            f.to_str().unwrap(),
            "--config",
            config.to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn data_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "entity,period,cpi,expected_cpi,unemployment,gdp_growth\nA,2000Q1,abc,1,5,1\n",
    )
    .unwrap();
    assert_eq!(code(&run(&["run", bad.to_str().unwrap()])), 3);
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&run(&["run", missing.to_str().unwrap()])), 3);
}

#[test]
fn numerical_errors_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.csv");
    let mut text = String::from("entity,period,cpi,expected_cpi,unemployment,gdp_growth\n");
    for (k, e) in ["A", "B", "C"].iter().enumerate() {
        for i in 0..8 {
            let v = (i * 7 + k * 3) % 5;
            let g = if v == 0 { -1.0 } else { 1.0 };
            text.push_str(&format!(
                "{e},{}Q{},{},0.0{v},{},{g}\n",
                2000 + i / 4,
                i % 4 + 1,
                100 + i * 2 + v,
                5 + v
            ));
        }
    }
    std::fs::write(&short, text).unwrap();
    let out = run(&["unitroot", short.to_str().unwrap()]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}
