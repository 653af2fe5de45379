//! End-to-end checks of the binary's contract: exit codes, output schemas,
//! flag/config precedence, and the STORBID_TOL override.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn storbid(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_storbid"));
    cmd.args(args);
    cmd
}

fn run_ok(args: &[&str]) -> Output {
    let out = storbid(args).output().expect("spawn storbid");
    assert!(
        out.status.success(),
        "storbid {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn schedule_defaults_solve_the_bundled_day() {
    let out = run_ok(&["schedule"]);
    let json = stdout_json(&out);
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["kind"], "schedule");
    assert_eq!(json["role"], "taker");
    assert_eq!(json["certified"], true);
    assert_eq!(json["profile"]["discharge_mwh"].as_array().unwrap().len(), 24);
    assert!(json["forecast_profit_usd"].as_f64().unwrap() > 0.0);
}

#[test]
fn schedule_csv_round_trips_through_the_observation_parser() {
    let out = run_ok(&["schedule", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("interval,p_mwh,b_mwh,soc_mwh,price\n"));
    assert_eq!(text.lines().count(), 25);
}

#[test]
fn schedule_dump_program_emits_the_canonical_layout() {
    let out = run_ok(&["schedule", "--dump-program"]);
    let json = stdout_json(&out);
    assert_eq!(json["kind"], "canonical-program");
    // 24 intervals, blocks [p | b | q | e].
    assert_eq!(json["num_vars"], 96);
    assert_eq!(json["equalities"].as_array().unwrap().len(), 48);
}

#[test]
fn policy_prints_the_closed_form_tuple() {
    let out = run_ok(&["policy", "--l1", "50", "--l2", "20", "--eta", "0.9", "--pbar", "2.5"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "(2.025, 0, 0, 2.5)\n");

    let out = run_ok(&["policy", "--l1", "-15", "--l2", "-10"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "(0, 0, 0, 0)\n");
}

#[test]
fn simulate_level_zero_reports_no_maker_column() {
    let out = run_ok(&["simulate", "--level", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).expect("one scenario row");
    assert!(row.starts_with("no-market-power"), "{row}");
    assert!(row.trim_end().ends_with("--"), "{row}");
}

#[test]
fn simulate_writes_scenario_files_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    let run1 = run_ok(&["simulate", "--out-dir", out1.to_str().unwrap()]);
    let run2 = run_ok(&["simulate", "--out-dir", out2.to_str().unwrap()]);
    assert_eq!(run1.stdout, run2.stdout);

    for name in [
        "no-market-power.json",
        "no-market-power_tidy.csv",
        "low-market-power.json",
        "low-market-power_tidy.csv",
        "high-market-power.json",
        "high-market-power_tidy.csv",
        "summary.json",
    ] {
        let a = std::fs::read(out1.join(name)).unwrap_or_else(|_| panic!("missing {name}"));
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }

    let tidy = std::fs::read_to_string(out1.join("no-market-power_tidy.csv")).unwrap();
    assert!(tidy.starts_with("interval,competitive,nominal,realized,p_taker,b_taker,withheld\n"));
    let tidy = std::fs::read_to_string(out1.join("high-market-power_tidy.csv")).unwrap();
    assert!(tidy
        .starts_with("interval,competitive,nominal,realized,p_taker,b_taker,p_maker,b_maker,withheld\n"));
}

fn fixture_window_args(window: &Value) -> Vec<String> {
    let spec = &window["spec"];
    vec![
        "--pbar".into(),
        spec["power_cap_mw"].to_string(),
        "--energy".into(),
        spec["energy_cap_mwh"].to_string(),
        "--eta".into(),
        spec["efficiency"].to_string(),
        "--soc-init".into(),
        spec["soc_init_mwh"].to_string(),
        "--period-length".into(),
        window["period_length"].to_string(),
        "--observations".into(),
    ]
}

#[test]
fn audit_exit_codes_separate_taker_and_maker_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    run_ok(&["fixtures", "--out-dir", fx.to_str().unwrap()]);
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(fx.join("manifest.json")).unwrap()).unwrap();
    let entry = &manifest["catalogue"][0];

    for (side, expect_code, expect_class) in [
        ("taker", 0, "not-evidently-exercising"),
        ("maker", 3, "not-certified"),
    ] {
        let mut args: Vec<String> = vec!["audit".into()];
        args.extend(fixture_window_args(&entry[side]));
        args.push(fx.join(entry[side]["file"].as_str().unwrap()).to_str().unwrap().into());
        let out = storbid(&args.iter().map(String::as_str).collect::<Vec<_>>())
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(expect_code), "{side}");
        let json: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(json["classification"], expect_class, "{side}");
    }
}

#[test]
fn fixtures_random_windows_depend_only_on_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    run_ok(&["fixtures", "--out-dir", a.to_str().unwrap(), "--random", "2", "--seed", "9"]);
    run_ok(&["fixtures", "--out-dir", b.to_str().unwrap(), "--random", "2", "--seed", "9"]);
    run_ok(&["fixtures", "--out-dir", c.to_str().unwrap(), "--random", "2", "--seed", "10"]);
    let read = |dir: &Path| std::fs::read(dir.join("random_taker_000.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn bidcurve_reports_the_withholding_gap() {
    let out = run_ok(&["bidcurve", "--alpha", "2"]);
    let json = stdout_json(&out);
    let taker_price = json["taker"]["clearing"]["price_usd_per_mwh"].as_f64().unwrap();
    let maker_price = json["maker"]["clearing"]["price_usd_per_mwh"].as_f64().unwrap();
    assert!(maker_price > taker_price);
    assert!(json["equivalent_withholding_mwh"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[storage]\nefficiency = 1.0\n").unwrap();

    // eta = 1 from config: a 50/20 day has no conversion loss, so the
    // schedule discharges the full cap at the peak.
    let prices = dir.path().join("p.csv");
    std::fs::write(
        &prices,
        "timestamp,price_usd_per_mwh\n2018-01-15T00:00:00,50\n2018-01-15T01:00:00,20\n",
    )
    .unwrap();
    let out = run_ok(&[
        "schedule",
        "--config",
        config.to_str().unwrap(),
        "--prices",
        prices.to_str().unwrap(),
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["profile"]["discharge_mwh"][0].as_f64().unwrap(), 2.5);

    let out = run_ok(&[
        "schedule",
        "--config",
        config.to_str().unwrap(),
        "--prices",
        prices.to_str().unwrap(),
        "--eta",
        "0.9",
    ]);
    let json = stdout_json(&out);
    assert!((json["profile"]["discharge_mwh"][0].as_f64().unwrap() - 2.025).abs() < 1e-9);
}

#[test]
fn usage_and_computation_errors_use_distinct_codes() {
    let out = storbid(&["schedule", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = storbid(&["audit"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let out = storbid(&["schedule"])
        .env("STORBID_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn price_parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let prices = dir.path().join("bad.csv");
    std::fs::write(
        &prices,
        "timestamp,price_usd_per_mwh\n2018-01-15T00:00:00,50\n2018-01-15T01:00:00,oops\n",
    )
    .unwrap();
    let out = storbid(&["schedule", "--prices", prices.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}
