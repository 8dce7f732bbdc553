//! Acceptance criteria, one line of output each.
//!
//! Criteria 1 to 10 are the randomized suites of `idealcast::selftest`;
//! criterion 11 drives the binary. Lines go straight to stderr so they show
//! without `--nocapture`.

use std::io::Write;
use std::path::Path;
use std::process::Command;

use idealcast::selftest::{self, DEFAULT_SEED, SUITE_COUNT};

fn report(id: u8, title: &str, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let line = if detail.is_empty() {
        format!("criterion {id:>2} {title}: {verdict}\n")
    } else {
        format!("criterion {id:>2} {title}: {verdict} ({detail})\n")
    };
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn idealcast(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_idealcast"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

/// Returns (round trip ok, determinism ok, selftest exit code).
fn cli_contract() -> (bool, bool, i32) {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("d.json");
    std::fs::write(
        &input,
        r#"{"atoms": [{"x": 0.30000000000000004, "p": 0.1}, {"x": -1e-310, "p": 0.2},
                      {"x": 123456.789, "p": 0.3}, {"x": 0.30000000000000004, "p": 0.4}]}"#,
    )
    .unwrap();
    let (_, first) = idealcast(&["functional", "--dist", input.to_str().unwrap(), "--op", "canonical"]);
    let echo = dir.path().join("echo.json");
    std::fs::write(&echo, &first).unwrap();
    let (code, second) = idealcast(&["functional", "--dist", echo.to_str().unwrap(), "--op", "canonical"]);
    let original = idealcast::io::parse_distribution(&std::fs::read_to_string(&input).unwrap()).unwrap();
    let reread = idealcast::io::parse_distribution(std::str::from_utf8(&first).unwrap()).unwrap();
    let bitwise = original
        .atoms()
        .zip(reread.atoms())
        .all(|((a, p), (b, q))| a.to_bits() == b.to_bits() && p.to_bits() == q.to_bits())
        && original.len() == reread.len();
    let round_trip = code == 0 && first == second && bitwise;

    let requests: Vec<Vec<String>> = vec![
        vec!["functional".into(), "--dist".into(), fixture("u4.json"), "--op".into(), "moments".into()],
        vec![
            "score".into(), "--rule".into(), "crps".into(),
            "--forecasts".into(), fixture("point_forecasts.json"),
            "--forecasts".into(), fixture("coin_forecasts.json"),
            "--obs".into(), fixture("obs.csv"), "--output".into(), "csv".into(),
        ],
        vec!["covar".into(), "--bivariate".into(), fixture("pairs.csv"), "--beta".into(), "0.4".into(), "--alpha".into(), "0.5".into()],
        vec!["predict".into(), "--space".into(), fixture("sp4.json"), "--functional".into(), "expectile".into(), "--tau".into(), "0.3".into()],
        vec!["selftest".into(), "--suite".into(), "8".into()],
    ];
    let deterministic = requests.iter().all(|r| {
        let args: Vec<&str> = r.iter().map(String::as_str).collect();
        let (c1, a) = idealcast(&args);
        let (c2, b) = idealcast(&args);
        c1 == 0 && c2 == 0 && a == b
    });

    let (selftest_code, _) = idealcast(&["selftest"]);
    (round_trip, deterministic, selftest_code)
}

#[test]
fn acceptance() {
    let titles = [
        "quantile characterization",
        "crps representation equivalence",
        "expected shortfall as entropy",
        "expectile consistency",
        "variance as entropy",
        "covar kernel validity and independence collapse",
        "order-sensitivity grid characterization",
        "ideal forecast optimality and measurability",
        "propriety of crps and log score",
        "integrated-quantile crps convergence",
    ];
    let mut failed = Vec::new();
    for id in 1..=SUITE_COUNT {
        let r = selftest::run_suite(id, DEFAULT_SEED);
        let detail = if r.detail.is_empty() {
            format!("{} cases", r.cases)
        } else {
            format!("{} cases, {} failures; {}", r.cases, r.failures, r.detail)
        };
        report(id, titles[usize::from(id) - 1], r.passed(), &detail);
        if !r.passed() {
            failed.push(id);
        }
    }

    let (round_trip, deterministic, code) = cli_contract();
    let passed = round_trip && deterministic && code == 0;
    report(
        11,
        "cli contract",
        passed,
        &format!("round trip {round_trip}, determinism {deterministic}, selftest exit {code}"),
    );
    if !passed {
        failed.push(11);
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
