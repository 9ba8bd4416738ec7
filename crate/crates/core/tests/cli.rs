use std::process::{Command, Output};

use ion_zigzag::cli::{render, Artifact, CurveOutput, ModesOutput, NcritOutput, OracleOutput, OutputFormat};
use ion_zigzag::critical_curve;
use ion_zigzag::measurements::{synthetic_records, write_measurements, AnalysisReport, SyntheticPlan};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn zigzag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ion-zigzag"))
        .args(args)
        .env_remove("ION_ZIGZAG_OUTPUT_FORMAT")
        .output()
        .expect("spawn ion-zigzag")
}

fn stdout_of(args: &[&str]) -> String {
    let out = zigzag(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn measurement_file() -> tempfile::NamedTempFile {
    let curve = critical_curve(3, 10).unwrap();
    let records = synthetic_records(&curve, &SyntheticPlan::default(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    write_measurements(file.reopen().unwrap(), &records).unwrap();
    file
}

#[test]
fn alphacrit_prints_five_twelfths() {
    let text = stdout_of(&["alphacrit", "--n", "3"]);
    assert!(text.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["alpha_crit", "0.416667"]), "{text}");
}

#[test]
fn curve_fit_table() {
    let text = stdout_of(&["curve", "--from", "3", "--to", "10", "--fit"]);
    let rows = text
        .lines()
        .filter(|l| l.split_whitespace().next().is_some_and(|t| t.parse::<usize>().is_ok()))
        .count();
    assert_eq!(rows, 8);

    let json = stdout_of(&["-f", "json", "curve", "--from", "3", "--to", "10", "--fit"]);
    let parsed: CurveOutput = serde_json::from_str(&json).unwrap();
    let fit = parsed.fit.unwrap();
    assert!((fit.c - 2.94).abs() <= 0.07, "c = {}", fit.c);
    assert!((fit.beta + 1.80).abs() <= 0.01, "beta = {}", fit.beta);
}

#[test]
fn ncrit_example() {
    let json = stdout_of(&["--output-format", "json", "ncrit", "--nu-z", "80e3", "--nu-r", "700e3", "--fit-range", "2:100"]);
    let out: NcritOutput = serde_json::from_str(&json).unwrap();
    assert!((out.n_crit - 21.0).abs() < 0.5, "{}", out.n_crit);
    assert_eq!(out.n_crit_floor, out.n_crit.floor() as u64);
    assert_eq!(out.n_exact, Some(20));
    let table = stdout_of(&["ncrit", "--nu-z", "80e3", "--nu-r", "700e3", "--fit-range", "2:100"]);
    assert!(table.contains("floor 20"), "{table}");
}

fn assert_round_trip<T>(args: &[&str], wrap: impl Fn(T) -> Artifact)
where
    T: serde::de::DeserializeOwned,
{
    let json = stdout_of(args);
    let typed: T = serde_json::from_str(&json).unwrap();
    assert_eq!(render(&wrap(typed), OutputFormat::Json).unwrap(), json, "{args:?}");
}

#[test]
fn json_round_trips_byte_for_byte() {
    assert_round_trip(&["-f", "json", "curve", "--from", "2", "--to", "12", "--fit"], Artifact::Curve);
    assert_round_trip(&["-f", "json", "modes", "--n", "5", "--alpha", "0.1"], Artifact::Modes);
    assert_round_trip(&["-f", "json", "ncrit", "--nu-z", "150e3", "--nu-r", "1.2e6"], Artifact::Ncrit);
    assert_round_trip(&["-f", "json", "oracle", "--n", "4"], Artifact::Oracle);
    let file = measurement_file();
    let path = file.path().to_str().unwrap();
    assert_round_trip::<AnalysisReport>(&["-f", "json", "analyze", "--input", path], Artifact::Analyze);
}

#[test]
fn oracle_matches_alphacrit() {
    for n in [2, 5, 8] {
        let arg = n.to_string();
        let out: OracleOutput = serde_json::from_str(&stdout_of(&["-f", "json", "oracle", "--n", &arg])).unwrap();
        assert!(out.relative_difference.abs() <= 1e-5, "N={n}: {}", out.relative_difference);
    }
}

#[test]
fn runs_are_bit_identical() {
    for args in [
        &["-f", "csv", "curve", "--from", "2", "--to", "30", "--fit"][..],
        &["-f", "json", "modes", "--n", "7"][..],
    ] {
        assert_eq!(stdout_of(args), stdout_of(args));
    }
    let file = measurement_file();
    let path = file.path().to_str().unwrap();
    assert_eq!(stdout_of(&["analyze", "--input", path]), stdout_of(&["analyze", "--input", path]));
}

#[test]
fn output_file_and_env_format() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("modes.json");
    let out = zigzag(&["-f", "json", "-o", target.to_str().unwrap(), "modes", "--n", "4"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written: ModesOutput = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(written.eigenvalues.len(), 4);

    let out = Command::new(env!("CARGO_BIN_EXE_ion-zigzag"))
        .args(["alphacrit", "--n", "2"])
        .env("ION_ZIGZAG_OUTPUT_FORMAT", "csv")
        .output()
        .unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("n_ions,"));
}

#[test]
fn exit_codes() {
    let usage = zigzag(&["transmogrify"]);
    assert_eq!(usage.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&usage.stderr).contains("Usage"));

    let missing = zigzag(&["alphacrit"]);
    assert_eq!(missing.status.code(), Some(2));

    let domain = zigzag(&["alphacrit", "--n", "1"]);
    assert_eq!(domain.status.code(), Some(1));
    let message = String::from_utf8_lossy(&domain.stderr);
    assert_eq!(message.lines().count(), 1, "{message}");
    assert!(message.contains("n_ions"), "{message}");

    let alpha = zigzag(&["modes", "--n", "3", "--alpha", "-1"]);
    assert_eq!(alpha.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&alpha.stderr).contains("alpha"));

    let unreadable = zigzag(&["analyze", "--input", "/nonexistent/records.csv"]);
    assert_eq!(unreadable.status.code(), Some(1));
}

#[test]
fn malformed_measurements_name_the_line() {
    let file = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(
        file.path(),
        "n_ions,nu_r_hz,nu_r_err_hz,nu_z_hz,nu_z_err_hz,label\n4,5e5,1e4,2e5,1.5e3,a\n5,5e5,-1,2e5,1.5e3,b\n",
    )
    .unwrap();
    let out = zigzag(&["analyze", "--input", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let message = String::from_utf8_lossy(&out.stderr);
    assert!(message.contains('3') && message.contains("nu_r_err"), "{message}");
}
