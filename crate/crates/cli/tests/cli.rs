//! End-to-end tests of the binary: exit codes, output shape, stdin input,
//! overrides, and fixture/builder agreement.

use std::io::Write;
use std::process::{Command, Output, Stdio};

use defring::presentation::{
    build_neumann_augmented, build_wingberg, parse_presentation, FreeGenSpec, PlaceKind, PlaceSpec,
    WingbergConfig,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_defring"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().expect("binary finishes")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}.dsl", env!("CARGO_MANIFEST_DIR"))
}

fn tame_config() -> WingbergConfig {
    WingbergConfig {
        p: 5,
        prec: 3,
        deg: 8,
        chi1_exp: 0,
        chi2_exp: 3,
        free: vec![],
        places: vec![
            PlaceSpec {
                name: "w".into(),
                kind: PlaceKind::Tame,
                q: 5,
                q_prime: 1,
                distinguished: true,
                chi_t: None,
                chi_s: None,
            },
            PlaceSpec {
                name: "v1".into(),
                kind: PlaceKind::Tame,
                q: 25,
                q_prime: 5,
                distinguished: false,
                chi_t: None,
                chi_s: None,
            },
        ],
    }
}

#[test]
fn compute_regular_fixture_reports_zero_ideal() {
    let out = run(&["compute", &fixture_path("cyclotomic_regular")]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("p = 5, precision N = 3, degree cap D = 8"));
    assert!(text.contains("R = Z_5[[Y_1, Y_2]]"));
    assert!(text.contains("I = (0)"));
}

#[test]
fn compute_tame_fixture_prints_both_generators() {
    let out = run(&["compute", &fixture_path("wingberg_tame")]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("[r_w, family B] 5 - Y_3 + Y_4"));
    assert!(text.contains("[r_v1, family B] 25*Y_2 - 5*Y_2*Y_3 + 5*Y_2*Y_4"));
}

#[test]
fn malformed_input_exits_2_with_location() {
    let bad = "p 5 prec 3 deg 8\nchi1 omega^0 chi2 omega^3\ngen x block=Xinf chi=bogus\n";
    let out = run_with_stdin(&["compute", "-"], bad);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("line 3"), "missing location: {err}");
}

#[test]
fn degenerate_characters_exit_3() {
    let bad = "p 5 prec 3 deg 8\nchi1 omega^0 chi2 omega^2\n\
               gen t block=Xinf chi=omega^2 pinned\n\
               gen gamma block=Gamma chi=trivial pi=gamma\n";
    let out = run_with_stdin(&["compute", "-"], bad);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("coincide up to sign"));
}

#[test]
fn missing_file_exits_1() {
    let out = run(&["compute", "/nonexistent/input.dsl"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_passes_and_drop_gen_reaches_exit_4() {
    let out = run(&["verify", &fixture_path("wingberg_tame")]);
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("verification passed"));

    // drop a generator at the wider window where the gap is visible
    let out = run(&[
        "verify",
        &fixture_path("wingberg_tame"),
        "--prec",
        "4",
        "--deg",
        "10",
        "--drop-gen",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let text = stdout_of(&out);
    assert!(text.contains("relation `r_w` entry (1,2): NOT in the ideal"));
}

#[test]
fn verify_json_reports_entries() {
    let out = run(&["verify", &fixture_path("wingberg_tame"), "--json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["p"], 5);
    let checks = doc["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 8); // 2 relations x 4 entries
    assert!(checks
        .iter()
        .any(|c| c["outcome"] == "exact_match" && c["relation"] == "r_w"));
}

#[test]
fn compare_reports_kernel_variables() {
    let dir = tempfile::tempdir().unwrap();
    let gs = dir.path().join("gs.dsl");
    let g = dir.path().join("g.dsl");
    std::fs::copy(fixture_path("cyclotomic_691"), &gs).unwrap();
    std::fs::write(
        &g,
        "p 691 prec 3 deg 8\nchi1 omega^0 chi2 omega^11\n\
         gen x_11 block=Xinf chi=omega^11 commutes_pinned\n\
         gen x_679 block=Xinf chi=omega^679 pinned\n\
         gen gamma block=Gamma chi=trivial pi=gamma\n",
    )
    .unwrap();
    let out = run(&["compare", gs.to_str().unwrap(), g.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("kernel variables: {Y_3}"));
    assert!(text.contains("at least 2"));
}

#[test]
fn fox_prints_the_tame_column() {
    let out = run(&["fox", &fixture_path("wingberg_tame")]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("d r_v1 / d t_v1 = 25 - 5*T - 10*T^2 - 10*T^3 - 5*T^4 - T^5"));
    assert!(text.contains("d r_w / d t_w = 5 - T"));
}

#[test]
fn fixture_output_feeds_compute_via_stdin() {
    let text = stdout_of(&run(&["fixture", "cyclotomic_regular"]));
    let out = run_with_stdin(&["compute", "-"], &text);
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("I = (0)"));
}

#[test]
fn unknown_fixture_exits_2_listing_names() {
    let out = run(&["fixture", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("wingberg_wild"));
}

#[test]
fn fixtures_match_their_builders() {
    let tame = parse_presentation(&stdout_of(&run(&["fixture", "wingberg_tame"]))).unwrap();
    assert_eq!(tame, build_wingberg(&tame_config()).unwrap());

    let mut wild_cfg = tame_config();
    wild_cfg.places[1] = PlaceSpec {
        name: "v1".into(),
        kind: PlaceKind::Wild { n_v: 2 },
        q: 5,
        q_prime: 1,
        distinguished: false,
        chi_t: None,
        chi_s: None,
    };
    let wild = parse_presentation(&stdout_of(&run(&["fixture", "wingberg_wild"]))).unwrap();
    assert_eq!(wild, build_wingberg(&wild_cfg).unwrap());

    let augmented =
        parse_presentation(&stdout_of(&run(&["fixture", "cyclotomic_augmented"]))).unwrap();
    let base = build_wingberg(&tame_config()).unwrap();
    let built = build_neumann_augmented(
        &base,
        &[
            FreeGenSpec {
                name: "t_q1".into(),
                chi_exp: 1,
                commutes_pinned: false,
            },
            FreeGenSpec {
                name: "t_q2".into(),
                chi_exp: 3,
                commutes_pinned: true,
            },
        ],
    )
    .unwrap();
    assert_eq!(augmented, built);
}

#[test]
fn json_output_is_deterministic_and_well_formed() {
    let a = stdout_of(&run(&["compute", &fixture_path("wingberg_tame"), "--json"]));
    let b = stdout_of(&run(&["compute", &fixture_path("wingberg_tame"), "--json"]));
    assert_eq!(a, b, "repeated runs must be byte-identical");
    let doc: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(doc["p"], 5);
    assert_eq!(doc["prec"], 3);
    assert_eq!(doc["deg"], 8);
    assert_eq!(doc["d_prime"], 4);
    assert_eq!(doc["ideal"].as_array().unwrap().len(), 2);
}

#[test]
fn out_flag_writes_file_and_overrides_change_the_window() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ring.txt");
    let out = run(&[
        "compute",
        &fixture_path("wingberg_tame"),
        "--deg",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout_of(&out).is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.contains("degree cap D = 4"));
    // degree-4 truncation: no degree-5 monomial survives
    assert!(!written.contains("Y_4^5"));
}
