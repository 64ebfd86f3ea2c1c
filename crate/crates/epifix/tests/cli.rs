use std::io::Write as _;
use std::path::PathBuf;
use std::process::Command;

use epifix::bundled;
use epifix::cli::run;
use epifix::formats;
use epifix_core::lnu::{interpret, parse_nu, ConditionRegistry};
use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace { dir: tempfile::tempdir().unwrap() };
        ws.file("fig1_left.game", bundled::FIG1_LEFT);
        ws.file("fig1_right.game", bundled::FIG1_RIGHT);
        ws.file("fig2.game", bundled::FIG2);
        ws.file("THM-MAIN.prf", bundled::THM_MAIN);
        ws.file("THM-IMP.prf", bundled::THM_IMP);
        ws
    }

    fn file(&self, name: &str, text: &str) -> String {
        let path = self.dir.path().join(name);
        std::fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
        path.to_str().unwrap().to_string()
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_string()
    }

    fn run(&self, args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("epifix".to_string()).chain(args.iter().map(|a| {
            if a.ends_with(".game") || a.ends_with(".prf") || a.ends_with(".model") || a.ends_with(".cond") {
                self.path(a)
            } else {
                a.to_string()
            }
        }));
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }
}

const DL_MODEL: &str = "states: w1\nplays 1: w1=D\nplays 2: w1=L\npossible 1: w1={w1}\npossible 2: w1={w1}\n";

#[test]
fn eliminate_trace_on_fig1_right() {
    let ws = Workspace::new();
    let (code, out, _) = ws.run(&["eliminate", "fig1_right.game", "lsd", "--trace"]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "stage 0: {1: U D; 2: L R}\nstage 1: {1: U; 2: L R}\nstage 2: {1: U; 2: L}\nstage 3: {1: U; 2: L}\n\
         closure_ordinal: 2\nsurvivors: 1: U / 2: L\n"
    );
}

#[test]
fn eliminate_leaves_fig1_left_intact() {
    let ws = Workspace::new();
    let (code, out, _) = ws.run(&["eliminate", "fig1_left.game", "lsd"]);
    assert_eq!((code, out.as_str()), (0, "survivors: 1: L R / 2: L R\n"));
}

#[test]
fn eliminate_reads_a_condition_file() {
    let ws = Workspace::new();
    ws.file("br.cond", "# best response\ncondition br: exists z . (C(z) and forall y . o >= y @ z)\n");
    let (code, out, _) = ws.run(&["eliminate", "fig2.game", "br.cond"]);
    assert_eq!(code, 0);
    let (_, builtin, _) = ws.run(&["eliminate", "fig2.game", "gbr"]);
    assert_eq!(out, builtin);
    let (code, out, _) = ws.run(&["--conditions", "br.cond", "eliminate", "fig2.game", "br", "--json"]);
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["condition"], "br");
    assert_eq!(json["survivors"], serde_json::json!([["U"], ["L"]]));
}

#[test]
fn eliminate_errors_exit_two() {
    let ws = Workspace::new();
    let (code, _, err) = ws.run(&["eliminate", "missing.game", "lsd"]);
    assert_eq!(code, 2);
    assert!(err.contains("missing.game"), "{err}");
    let (code, _, err) = ws.run(&["eliminate", "fig2.game", "nosuch"]);
    assert_eq!(code, 2);
    assert!(err.contains("nosuch"), "{err}");
    ws.file("bad.game", "players: 2\nstrategies 1: U D\nstrategies 2: L R\npayoff U L : 1 1\n");
    let (code, _, err) = ws.run(&["eliminate", "bad.game", "lsd"]);
    assert_eq!(code, 2);
    assert!(err.contains("missing payoff"), "{err}");
}

#[test]
fn evaluate_single_state_model() {
    let ws = Workspace::new();
    ws.file("dl.model", DL_MODEL);
    assert_eq!(ws.run(&["evaluate", "dl.model", "fig1_right.game", "rat(gsd,1)"]).1, "{}\n");
    assert_eq!(ws.run(&["evaluate", "dl.model", "fig1_right.game", "rat(lsd,1)"]).1, "{w1}\n");
    let (code, out, _) =
        ws.run(&["evaluate", "dl.model", "fig1_right.game", "forall X . ([1] X -> O(gsd,1) X)", "--json"]);
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["states"], serde_json::json!([]));
}

#[test]
fn evaluate_common_belief_matches_iteration() {
    let ws = Workspace::new();
    let text = "states: a b\nplays 1: a=U b=D\nplays 2: a=L b=R\npossible 1: a={a,b} b={a,b}\npossible 2: a={a,b} b={a,b}\n";
    ws.file("full.model", text);
    let (code, out, _) = ws.run(&["evaluate", "full.model", "fig1_right.game", "CB rat(lsd)"]);
    assert_eq!(code, 0);
    let g = formats::parse_game(bundled::FIG1_RIGHT).unwrap();
    let m = formats::parse_model(text, &g).unwrap();
    let reg = ConditionRegistry::with_builtins();
    let base = interpret(&m, &reg, &parse_nu("rat(lsd)").unwrap(), m.omega()).unwrap();
    let expected = m.common_belief_iterative(base).cb;
    assert_eq!(out, format!("{}\n", formats::show_event(&m, expected)));
}

#[test]
fn evaluate_rejects_bad_input() {
    let ws = Workspace::new();
    ws.file("dl.model", DL_MODEL);
    assert_eq!(ws.run(&["evaluate", "dl.model", "fig1_right.game", "rat(gsd"]).0, 2);
    assert_eq!(ws.run(&["evaluate", "dl.model", "fig1_right.game", "rat(nope)"]).0, 2);
    assert_eq!(ws.run(&["evaluate", "dl.model", "fig1_right.game", "rat(gsd,3)"]).0, 2);
    ws.file("empty.model", "states:\n");
    let (code, _, err) = ws.run(&["evaluate", "empty.model", "fig1_right.game", "rat(gsd)"]);
    assert_eq!(code, 2);
    assert!(err.contains("Ω must be non-empty"), "{err}");
}

#[test]
fn check_valid_theorems() {
    let ws = Workspace::new();
    let main = "rat(gbr) and CB rat(gbr) -> nu X . O(gbr) X";
    let imp = "rat(gbr) and CB rat(gbr) -> nu X . O(lsd) X";
    let (code, out, _) = ws.run(&["check-valid", "fig2.game", main, "--exhaustive", "2"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("VALID-ON-CORPUS"), "{out}");
    let (code, out, _) = ws.run(&["check-valid", "fig1_right.game", imp, "--exhaustive", "2"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("VALID-ON-CORPUS"), "{out}");
    let (code, _, _) =
        ws.run(&["check-valid", "fig1_right.game", imp, "--random", "300", "4", "--seed", "3"]);
    assert_eq!(code, 0);
}

#[test]
fn check_valid_prints_a_countermodel_that_reloads() {
    let ws = Workspace::new();
    let (code, out, _) = ws.run(&["check-valid", "fig1_right.game", "rat(gbr)", "--exhaustive", "2"]);
    assert_eq!(code, 1);
    let body = out.split_once('\n').unwrap().1;
    assert!(out.starts_with("COUNTERMODEL"), "{out}");
    let g = formats::parse_game(bundled::FIG1_RIGHT).unwrap();
    let m = formats::parse_model(body, &g).unwrap();
    let reg = ConditionRegistry::with_builtins();
    let holds = interpret(&m, &reg, &parse_nu("rat(gbr)").unwrap(), m.omega()).unwrap();
    assert_ne!(holds, m.omega());
    assert!(body.contains(&format!("# holds at {}", formats::show_event(&m, holds))));
}

#[test]
fn check_valid_output_is_deterministic() {
    let ws = Workspace::new();
    let args =
        ["check-valid", "fig2.game", "rat(lsd) -> rat(gsd)", "--random", "500", "3", "--seed", "9", "--json"];
    let first = ws.run(&args);
    assert_eq!(first.0, 1);
    assert_eq!(first, ws.run(&args));
    let json: serde_json::Value = serde_json::from_str(&first.1).unwrap();
    assert_eq!(json["valid_on_corpus"], false);
}

#[test]
fn check_valid_needs_exactly_one_budget() {
    let ws = Workspace::new();
    assert_eq!(ws.run(&["check-valid", "fig2.game", "rat(gbr)"]).0, 2);
    assert_eq!(
        ws.run(&["check-valid", "fig2.game", "rat(gbr)", "--exhaustive", "1", "--random", "3", "1"]).0,
        2
    );
    assert_eq!(ws.run(&["check-valid", "fig2.game", "rat(gbr)", "--exhaustive", "1", "--seed", "1"]).0, 2);
}

#[test]
fn check_proof_bundled_scripts() {
    let ws = Workspace::new();
    let (code, out, _) = ws.run(&["check-proof", "THM-MAIN.prf"]);
    assert_eq!((code, out.as_str()), (0, "OK rat(gbr) and CB rat(gbr) -> nu X . O(gbr) X\n"));
    let (code, out, _) = ws.run(&["check-proof", "THM-IMP.prf"]);
    assert_eq!(code, 0);
    assert!(out.ends_with("OK rat(gbr) and CB rat(gbr) -> nu X . O(lsd) X\n"), "{out}");
}

#[test]
fn check_proof_reports_the_mutated_line() {
    let ws = Workspace::new();
    let mutated = bundled::THM_MAIN.replace("; nuInd 5", "; nuInd 4");
    ws.file("bad.prf", &mutated);
    let (code, out, _) = ws.run(&["check-proof", "bad.prf"]);
    assert_eq!(code, 1);
    assert!(out.starts_with("FAIL line 6:"), "{out}");
    let (_, out, _) = ws.run(&["check-proof", "bad.prf", "--json"]);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["ok"], false);
    assert_eq!(json["failure"]["line"], 6);
}

#[test]
fn check_proof_refuses_a_false_lemma() {
    let ws = Workspace::new();
    let script =
        bundled::THM_IMP.replace("lemma gbr_implies_lsd: gbr -> lsd", "lemma gbr_implies_lsd: lsd -> gsd");
    ws.file("bad.prf", &script);
    let (code, out, _) = ws.run(&["check-proof", "bad.prf"]);
    assert_eq!(code, 1);
    assert!(out.starts_with("LEMMA REFUSED gbr_implies_lsd"), "{out}");
}

#[test]
fn analyze_condition_reports() {
    let ws = Workspace::new();
    let (code, out, _) = ws.run(&["analyze-condition", "lsd"]);
    assert_eq!(code, 0);
    assert!(out.contains("positive: false") && out.contains("closed: true"), "{out}");
    let (_, out, _) = ws.run(&["analyze-condition", "exists z . (C(z) and o >= y @ z)", "--json"]);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["closed"], false);
    assert_eq!(json["context_safe"], true);
    let (_, out, _) = ws.run(&["analyze-condition", "C(o)", "--json"]);
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["context_safe"], false);
    assert_eq!(ws.run(&["analyze-condition", "C(o"]).0, 2);
}

#[test]
fn usage_and_help() {
    let ws = Workspace::new();
    assert_eq!(ws.run(&[]).0, 2);
    assert_eq!(ws.run(&["frobnicate"]).0, 2);
    let (code, out, _) = ws.run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("check-proof"));
}

#[test]
fn binary_exit_codes() {
    let ws = Workspace::new();
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_epifix"));
    let status = |args: &[&str]| Command::new(&bin).args(args).output().unwrap();
    let ok = status(&["check-proof", &ws.path("THM-MAIN.prf")]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&ok.stdout).lines().next(),
        Some("OK rat(gbr) and CB rat(gbr) -> nu X . O(gbr) X")
    );
    let negative = status(&["check-valid", &ws.path("fig1_right.game"), "rat(gbr)", "--exhaustive", "1"]);
    assert_eq!(negative.status.code(), Some(1));
    let missing = status(&["eliminate", &ws.path("missing.game"), "lsd"]);
    assert_eq!(missing.status.code(), Some(2));
}
