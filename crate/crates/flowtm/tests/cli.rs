use std::path::PathBuf;
use std::process::{Command, Output};

use flowtm::corpus::CORPUS;
use flowtm_core::Mode;
use serde_json::Value;

fn flowtm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowtm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn corpus_file(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "corpus", &format!("{name}.mtir")]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

#[test]
fn constrained_mode_verifies_flag_handoff() {
    let out = flowtm(&["analyze", &corpus_file("flag_handoff"), "--mode=fsc"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verified 1/1"));
}

#[test]
fn flow_insensitive_mode_reports_false_alarm() {
    let out = flowtm(&["analyze", &corpus_file("flag_handoff"), "--mode=fi"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verified 0/1"));
}

#[test]
fn missing_file_is_an_input_error() {
    let out = flowtm(&["analyze", "missing.mtir"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn syntax_error_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.mtir");
    std::fs::write(&path, "thread main() { int x = ; }").unwrap();
    let out = flowtm(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syntax error"));
}

#[test]
fn bad_flags_are_usage_errors() {
    for args in [
        &["analyze", "x.mtir", "--mode=zz"][..],
        &["analyze", "x.mtir", "--parallel=0"],
        &["analyze", "x.mtir", "--format=xml"],
        &["bench", "--family=nope", "--sizes=2"],
        &["frobnicate"],
    ] {
        let out = flowtm(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn exit_status_matches_sidecars() {
    for p in CORPUS {
        for (mode, (verified, total)) in p.expected() {
            let out = flowtm(&["analyze", &corpus_file(p.name), &format!("--mode={mode}")]);
            let want = if verified == total { 0 } else { 1 };
            assert_eq!(out.status.code(), Some(want), "{} {mode}", p.name);
        }
    }
}

fn check_schema(v: &Value, with_envs: bool) {
    let obj = v.as_object().expect("object");
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    let want: &[&str] = if with_envs {
        &["assertions", "envs", "stats"]
    } else {
        &["assertions", "stats"]
    };
    assert_eq!(keys, want);
    for a in obj["assertions"].as_array().expect("assertions array") {
        let a = a.as_object().expect("assertion object");
        assert_eq!(a.len(), 3);
        assert!(a["thread"].is_string());
        assert!(a["line"].as_u64().is_some_and(|l| l > 0));
        assert!(matches!(a["status"].as_str(), Some("verified" | "unproven")));
    }
    let stats = obj["stats"].as_object().expect("stats object");
    let mut names: Vec<&str> = stats.keys().map(String::as_str).collect();
    names.sort_unstable();
    assert_eq!(
        names,
        [
            "clusters",
            "combos",
            "infeasible",
            "outer_iters",
            "pruned_loads",
            "runs",
            "wall_ms"
        ]
    );
    for (k, val) in stats {
        if k == "wall_ms" {
            assert!(val.as_f64().is_some_and(|t| t >= 0.0));
        } else {
            assert!(val.as_u64().is_some(), "{k}");
        }
    }
    if with_envs {
        assert!(obj["envs"]
            .as_object()
            .expect("envs map")
            .values()
            .all(Value::is_string));
    }
}

#[test]
fn json_reports_follow_schema() {
    for p in CORPUS {
        for mode in Mode::ALL {
            for envs in [false, true] {
                let mut args = vec![
                    "analyze".to_string(),
                    corpus_file(p.name),
                    format!("--mode={mode}"),
                    "--format=json".into(),
                ];
                if envs {
                    args.push("--dump-envs".into());
                }
                let args: Vec<&str> = args.iter().map(String::as_str).collect();
                let out = flowtm(&args);
                let v: Value = serde_json::from_slice(&out.stdout).expect("valid json");
                check_schema(&v, envs);
                let (verified, total) = p.expected()[&mode];
                let statuses = v["assertions"].as_array().unwrap();
                assert_eq!(statuses.len(), total, "{} {mode}", p.name);
                assert_eq!(statuses.iter().filter(|a| a["status"] == "verified").count(), verified);
            }
        }
    }
}

fn without_wall_time(mut v: Value) -> Value {
    v["stats"].as_object_mut().unwrap().remove("wall_ms");
    v
}

#[test]
fn parallel_runs_match_serial_runs() {
    for p in CORPUS {
        for mode in Mode::ALL {
            let run = |workers: &str| {
                let out = flowtm(&[
                    "analyze",
                    &corpus_file(p.name),
                    &format!("--mode={mode}"),
                    "--format=json",
                    "--dump-envs",
                    &format!("--parallel={workers}"),
                ]);
                (
                    out.status.code(),
                    without_wall_time(serde_json::from_slice(&out.stdout).unwrap()),
                )
            };
            assert_eq!(run("1"), run("4"), "{} {mode}", p.name);
        }
    }
}

#[test]
fn dumps_go_to_stderr() {
    let out = flowtm(&["analyze", &corpus_file("flag_handoff"), "--dump-facts", "--dump-pdg"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("MHB(t1.4, t1.5)"));
    assert!(err.contains("digraph"));
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bench_prints_one_row_per_size_and_mode() {
    let out = flowtm(&["bench", "--sizes=2,4,8", "--repeat=1", "--seed=3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("threads,mode,time_ms,verified,total"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert_eq!(r.len(), 5);
        assert!(r[2].parse::<f64>().is_ok());
    }
}

#[test]
fn corpus_command_prints_sources() {
    let out = flowtm(&["corpus"]);
    let names: Vec<String> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(str::to_string)
        .collect();
    assert_eq!(names.len(), CORPUS.len());
    let out = flowtm(&["corpus", "loop_reader"]);
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        flowtm::corpus::get("loop_reader").unwrap().source
    );
    assert_eq!(flowtm(&["corpus", "nope"]).status.code(), Some(2));
}
