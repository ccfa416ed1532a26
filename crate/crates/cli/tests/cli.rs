use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_truthdiscover")).args(args).output().expect("spawn truthdiscover")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn resolve_table1_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["resolve", "--input", s(&fixture("table1.nt")), "--policy", "host", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let decisions = fs::read_to_string(out.join("decisions.jsonl")).unwrap();
    assert_eq!(decisions.lines().count(), 2);
    for line in decisions.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["entity", "predicate", "chosen", "objects", "iterations", "converged"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["method"], "truthdiscover");
    }
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,mean_delta_tau,max_delta_tau\n"));
    assert_eq!(fs::read_to_string(out.join("source_trust.tsv")).unwrap().lines().count(), 4);
    // nothing but the three outputs is left behind
    assert_eq!(fs::read_dir(&out).unwrap().count(), 3);
}

#[test]
fn no_inputs_is_a_usage_error() {
    let o = run(&["resolve"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--input"));
    assert_eq!(run(&["resolve", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn prior_ranks_star_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["prior", "--input", s(&fixture("star.nt")), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = fs::read(dir.path().join("prior.tsv")).unwrap();
    let rows: Vec<Vec<String>> = String::from_utf8(first.clone())
        .unwrap()
        .lines()
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    // the hub only links out; each leaf receives a third of its belief
    let leaf = 0.15 + 0.85 * 0.15 / 3.0;
    assert_eq!(rows[3][0], "dbpedia.org");
    assert!((rows[3][1].parse::<f64>().unwrap() - 0.15).abs() < 1e-12);
    assert_eq!(rows[3][2], "0");
    for r in &rows[..3] {
        assert!((r[1].parse::<f64>().unwrap() - leaf).abs() < 1e-12);
        assert_eq!(r[2], "1");
    }
    let sbg = fs::read_to_string(dir.path().join("sbg.tsv")).unwrap();
    assert_eq!(sbg.lines().count(), 3);

    let again = run(&["prior", "--input", s(&fixture("star.nt")), "--out", s(dir.path())]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("prior.tsv")).unwrap(), first);
}

#[test]
fn prior_on_empty_graph_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["prior", "--input", s(&fixture("same_host.nt")), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty"));
    // resolve falls back to neutral priors on the same input
    let o = run(&["resolve", "--input", s(&fixture("same_host.nt")), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, format!("[run]\ninputs = [\"{}\"]\n[prior]\ndamping = 0.5\n", s(&fixture("star.nt")))).unwrap();
    let prior = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["prior", "--out", s(&out)];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read_to_string(out.join("prior.tsv")).unwrap()
    };
    let from_file = prior("file", &["--config", s(&cfg)]);
    let overridden = prior("flag", &["--config", s(&cfg), "--damping", "0.9"]);
    let flag_only = prior("plain", &["--input", s(&fixture("star.nt")), "--damping", "0.9"]);
    let default = prior("default", &["--input", s(&fixture("star.nt"))]);
    assert!(from_file.contains("\t0.5\t"), "{from_file}");
    assert_eq!(overridden, flag_only);
    assert_ne!(overridden, from_file);
    assert_ne!(default, from_file);

    fs::write(&cfg, "[prior]\ndampnig = 0.5\n").unwrap();
    let o = run(&["prior", "--config", s(&cfg), "--input", s(&fixture("star.nt"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn lenient_parsing_warns_and_strict_fails() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.nt");
    let mut text = fs::read_to_string(fixture("table1.nt")).unwrap();
    text.push_str("not a triple\n");
    fs::write(&input, text).unwrap();
    let out = dir.path().join("out");
    let o = run(&["resolve", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains(&format!("WARN {}:13 ", input.display())), "{}", stderr(&o));
    let o = run(&["resolve", "--strict", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gzipped_input_matches_plain() {
    use std::io::Write;
    let dir = tempfile::tempdir().unwrap();
    let gz = dir.path().join("table1.nt.gz");
    let mut enc = flate2::write::GzEncoder::new(fs::File::create(&gz).unwrap(), flate2::Compression::default());
    enc.write_all(&fs::read(fixture("table1.nt")).unwrap()).unwrap();
    enc.finish().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["resolve", "--input", s(&fixture("table1.nt")), "--out", s(&a)]).status.code(), Some(0));
    assert_eq!(run(&["resolve", "--input", s(&gz), "--out", s(&b)]).status.code(), Some(0));
    assert_eq!(fs::read(a.join("decisions.jsonl")).unwrap(), fs::read(b.join("decisions.jsonl")).unwrap());
}

#[test]
fn synth_is_reproducible_and_eval_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["synth", "--seed", "4", "--entities", "60", "--out", s(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["corpus.nt", "gold.tsv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }

    let ev = dir.path().join("eval");
    let o = run(&["eval", "--input", s(&a.join("corpus.nt")), "--gold", s(&a.join("gold.tsv")), "--out", s(&ev)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("truthdiscover") && table.contains("vote") && table.contains("truthfinder"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(ev.join("report.json")).unwrap()).unwrap();
    let methods = report["runs"][0]["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 3);
    let trace = methods[0]["trace_path"].as_str().unwrap();
    assert!(ev.join(trace).exists());

    let o = run(&["eval", "--input", s(&a.join("corpus.nt")), "--out", s(&ev)]);
    assert_eq!(o.status.code(), Some(1), "gold is required for file inputs");
}

#[test]
fn baseline_writes_method_records() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["vote", "truthfinder"] {
        let o = run(&["baseline", "--method", method, "--input", s(&fixture("table1.nt")), "--out", s(dir.path())]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = fs::read_to_string(dir.path().join(format!("baseline-{method}.jsonl"))).unwrap();
        assert_eq!(text.lines().count(), 2);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["method"], method);
        }
    }
    assert_eq!(run(&["baseline", "--method", "oracle", "--input", s(&fixture("table1.nt"))]).status.code(), Some(1));
}

#[test]
fn noiseless_majorities_are_recovered_by_counting_methods() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("noiseless.toml");
    fs::write(&cfg, "[synth]\nn_entities = 60\nreliability_range = [1.0, 1.0]\nsupporters = [3, 6]\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["eval", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    for m in report["runs"][0]["methods"].as_array().unwrap() {
        if m["method"] != "truthdiscover" {
            assert_eq!(m["accuracy"], 1.0, "{m}");
        }
    }
}
