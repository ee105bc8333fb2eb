use std::path::PathBuf;
use std::process::{Command, Output};

use pdlkit::atm::{encode_accepts, AtmSpec};
use pdlkit::calculus::{check, CheckOptions, Derivation, System};
use pdlkit::cutelim::{random_cut_derivation, GenConfig};
use pdlkit::expansion::decide_bcne;
use pdlkit::formula::parse_formula;
use pdlkit::qbf::{decide_bdne_via, Via};
use serde_json::Value;

fn pdlkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdlkit")).args(args).env_remove("PDLKIT_BOUNDS").output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    pdlkit(args).status.code().unwrap()
}

fn stdout(args: &[&str]) -> String {
    String::from_utf8(pdlkit(args).stdout).unwrap().trim().to_string()
}

fn json(args: &[&str]) -> Value {
    let mut a = vec!["--json"];
    a.extend_from_slice(args);
    serde_json::from_str(&stdout(&a)).unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name).to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("pdlkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn prove_exit_codes() {
    assert_eq!(code(&["prove", "--system", "seq00", "x, ~x"]), 0);
    assert_eq!(code(&["prove", "[p]x"]), 1);
    assert_eq!(code(&["prove", "--system", "seq1", "x, ~x"]), 2);
    assert_eq!(code(&["prove", "x & "]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
    let v = json(&["prove", "x | [p]y", "--emit-trace"]);
    assert_eq!(v["verdict"], "refuted");
    assert_eq!(v["trace"], "v.g1.F");
}

#[test]
fn emitted_derivation_checks() {
    let out = scratch("proof.json");
    let p = out.to_str().unwrap();
    assert_eq!(code(&["prove", "[p](x & y), <p>~x | <p>~y", "--emit-derivation", p]), 0);
    assert_eq!(code(&["check", p, "--system", "seq00"]), 0);
    assert_eq!(json(&["check", p, "--system", "seq00"])["valid"], true);
}

#[test]
fn text_commands() {
    assert_eq!(stdout(&["ordinal", "<p*>x"]), "w + 1");
    assert_eq!(stdout(&["negate", "[p](x | ~y)"]), "<p>(~x & y)");
    assert_eq!(stdout(&["parse", "<p;q+r*>x"]), "<p;q+r*>x");
    assert_eq!(json(&["parse", "x, [p]y"])["kind"], "sequent");
    assert_eq!(stdout(&["expand", "<p*>x | ~x", "--k", "2"]), "x, <p>x, <p><p>x, ~x");
}

#[test]
fn bcne_parity() {
    for s in ["<p*>(x | <p>x) | ~x", "<p*>x | ~x", "<p*>(x | <p>x) | y", "<p*>([p](x | ~x)) | y"] {
        let lib = decide_bcne(&parse_formula(s).unwrap()).unwrap();
        assert_eq!(code(&["decide-bcne", s]), if lib { 0 } else { 1 }, "{s}");
        assert_eq!(json(&["decide-bcne", s])["valid"], lib);
    }
    let tree = scratch("refutation.json");
    assert_eq!(code(&["decide-bcne", "<p*>(x | <p>x) | y", "--emit-refutation", tree.to_str().unwrap()]), 1);
    let t: Value = serde_json::from_str(&std::fs::read_to_string(&tree).unwrap()).unwrap();
    assert!(t["label"].is_array());
}

#[test]
fn bdne_parity_across_routes() {
    for s in ["<p*>((x & [p]y) | (~x & <p>~y)) | z", "<p*>((x & [p]y) | (~x & <p>~y)) | x", "<p*>([p]x | <p>~x) | ~y"] {
        let g = parse_formula(s).unwrap();
        for via in ["f", "expansion", "qbf"] {
            let lib = decide_bdne_via(&g, via.parse::<Via>().unwrap()).unwrap();
            assert_eq!(code(&["decide-bdne", s, "--via", via]), if lib { 0 } else { 1 }, "{s} via {via}");
        }
    }
    let q = scratch("out.qdimacs");
    assert!(code(&["decide-bdne", "<p*>([p]x | <p>~x) | ~y", "--emit-qdimacs", q.to_str().unwrap()]) <= 1);
    assert!(std::fs::read_to_string(&q).unwrap().contains("p cnf"));
}

#[test]
fn bounds_from_environment() {
    let run = |b: &str| {
        Command::new(env!("CARGO_BIN_EXE_pdlkit"))
            .args(["emit-qbf", "--qdimacs", "<p*>((x & [p]y) | (~x & <p>~y)) | z"])
            .env("PDLKIT_BOUNDS", b)
            .output()
            .unwrap()
            .status
            .code()
            .unwrap()
    };
    assert_eq!(run("clause_budget=1"), 3);
    assert_eq!(run("clause_budget=100000"), 0);
    assert_eq!(run("clause_budget=0"), 2);
    assert_eq!(run("nonsense"), 2);
}

#[test]
fn countermodels() {
    let v = json(&["countermodel", "[p]x, <p>y"]);
    assert_eq!(v["countermodel"], true);
    assert_eq!(code(&["countermodel", "[p]x, <p>~x"]), 1);
}

#[test]
fn atm_encoding_matches_library() {
    let path = fixture("atm_parity.json");
    let m = AtmSpec::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap().compile().unwrap();
    assert_eq!(stdout(&["encode-atm", &path]), encode_accepts(&m, false).to_string());
    assert_eq!(stdout(&["encode-atm", &path, "--repair-endmarkers"]), encode_accepts(&m, true).to_string());
    let neg = stdout(&["encode-atm", &path, "--negate", "--repair-endmarkers"]);
    assert!(neg.starts_with("<Next*>"), "{}", &neg[..40]);
}

#[test]
fn d2_fixture_checks() {
    assert_eq!(code(&["check", &fixture("d2.json"), "--system", "seq00"]), 0);
}

#[test]
fn cutelim_round_trip() {
    let d = random_cut_derivation(7, &GenConfig::default()).unwrap();
    assert!(!d.is_cut_free());
    let input = scratch("cut.json");
    let output = scratch("cutfree.json");
    std::fs::write(&input, d.to_json()).unwrap();
    let v = json(&["cutelim", input.to_str().unwrap(), "-o", output.to_str().unwrap(), "--trace"]);
    assert!(v["trace"].as_array().is_some_and(|t| !t.is_empty()));
    let e = Derivation::from_json(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert!(e.is_cut_free());
    assert_eq!(e.sequent.0, d.sequent.0);
    assert!(check(&CheckOptions::new(System::Seq0), &e).is_valid());
    let text = stdout(&["cutelim", input.to_str().unwrap(), "--trace"]);
    assert!(text.lines().any(|l| l.starts_with("R0: rho")));
    assert_eq!(code(&["cutelim", &fixture("atm_parity.json")]), 2);
}
