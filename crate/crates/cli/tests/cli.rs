use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use infostream::{binomial_cascade, white_noise, CascadeSpec};

fn infostream(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infostream")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_series(path: &Path, values: &[f64]) {
    let mut text = String::from("date,value\n");
    let start = chrono::NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
    for (i, v) in values.iter().enumerate() {
        text.push_str(&format!("{},{v}\n", start + chrono::Days::new(i as u64)));
    }
    fs::write(path, text).unwrap();
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SPEC: &str = r#"
days = 200
background = 10.0
seed = 3

[[subtopics]]
name = "A"
keyword = "alpha"
intensity = 20.0
overlap = { partner = "B", fraction = 0.3 }

[[subtopics]]
name = "B"
keyword = "beta"
intensity = 8.0
"#;

fn simulate(dir: &Path) -> PathBuf {
    let spec = dir.join("spec.toml");
    fs::write(&spec, SPEC).unwrap();
    let out = dir.join("sim");
    let o = infostream(&["simulate", "--spec", s(&spec), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn decompose_reports_generator_truth() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path());
    let out = dir.path().join("dec");
    let o = infostream(&[
        "decompose",
        "--corpus",
        s(&sim.join("corpus.jsonl")),
        "--topics",
        s(&sim.join("topics.json")),
        "--totals",
        s(&sim.join("totals.csv")),
        "--k-prime",
        "2",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let truth = json(&sim.join("truth.json"));
    let summary = json(&out.join("summary.json"));
    let n: u64 = truth["main"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
    let unmatched: u64 = truth["other"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(summary["documents"].as_u64().unwrap(), n);
    for c in summary["coefficients"].as_array().unwrap() {
        let name = c["name"].as_str().unwrap();
        let want: u64 = truth["subtopics"][name].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
        assert_eq!(c["docs"].as_u64().unwrap(), want);
        assert_eq!(c["fraction"].as_f64().unwrap(), want as f64 / n as f64);
    }
    // k' = K: the reduced stream is everything that matched anything
    let rs = &summary["reduced_stream"];
    assert_eq!(rs["coverage"].as_f64().unwrap(), (n - unmatched) as f64 / n as f64);
    assert_eq!(summary["config"]["threshold"].as_f64().unwrap(), 0.8);

    let contributions = fs::read_to_string(out.join("contributions.csv")).unwrap();
    assert!(contributions.starts_with("topic,documents,percent\nA,"));
    let counts = fs::read_to_string(out.join("counts/a.csv")).unwrap();
    assert_eq!(counts.lines().count(), 201);
    assert!(out.join("series/main.csv").exists() && out.join("share/b.csv").exists());
}

#[test]
fn rates_without_totals_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path());
    let out = dir.path().join("dec");
    let (corpus, topics) = (sim.join("corpus.jsonl"), sim.join("topics.json"));
    let args = ["decompose", "--corpus", s(&corpus), "--topics", s(&topics), "--out", s(&out)];
    let o = infostream(&args);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--totals"));
    assert!(!out.exists());

    let mut counts = args.to_vec();
    counts.extend(["--normalize", "counts"]);
    assert!(infostream(&counts).status.success());
    let series = fs::read_to_string(out.join("series/a.csv")).unwrap();
    assert_eq!(series, fs::read_to_string(out.join("counts/a.csv")).unwrap());
}

#[test]
fn malformed_corpus_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    fs::write(&corpus, "{\"id\":\"1\",\"date\":\"2016-01-01\",\"text\":\"x\"}\n{\"id\":\"2\",\"date\":\"bad\",\"text\":\"y\"}\n").unwrap();
    let topics = dir.path().join("t.toml");
    fs::write(&topics, "[[topics]]\nname = \"x\"\nkeywords = [\"x\"]\n").unwrap();
    let out = dir.path().join("out");
    let o = infostream(&["decompose", "--corpus", s(&corpus), "--topics", s(&topics), "--normalize", "counts", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn spectrum_rows_and_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cascade = dir.path().join("cascade.csv");
    write_series(&cascade, &binomial_cascade(CascadeSpec::new(0.75, 10).unwrap()));
    let zeros = dir.path().join("zeros.csv");
    write_series(&zeros, &[0.0; 300]);
    let out = dir.path().join("spec");
    let o = infostream(&["spectrum", s(&cascade), s(&zeros), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("cascade.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("q,h,tau,alpha,f,fit_residual"));
    assert_eq!(lines.count(), 20);
    let report = json(&out.join("cascade.json"));
    assert_eq!(report["verdict"]["status"], "ok");
    assert!(report["width"].as_f64().unwrap() > 1.0);

    assert!(!out.join("zeros.csv").exists());
    let verdict = json(&out.join("zeros.json"));
    assert_eq!(verdict["verdict"]["status"], "insufficient_data");
    assert_eq!(verdict["verdict"]["reason"], "too_many_zeros");
    assert!(verdict["spectrum"].is_null());
}

#[test]
fn spectrum_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    write_series(&input, &white_noise(3000, 9));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(infostream(&["spectrum", s(&input), "--out", s(&a)]).status.success());
    assert!(infostream(&["spectrum", s(&input), "--out", s(&b), "--threads", "1"]).status.success());
    for f in ["x.csv", "x.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn degenerate_segments_exit_three_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    // a constant stretch gives a linear profile, so some segments have zero residual
    let mut x = vec![1.0; 200];
    x.extend(white_noise(300, 1));
    write_series(&input, &x);
    let out = dir.path().join("out");
    let o = infostream(&["spectrum", s(&input), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());

    // positive q alone tolerates them
    let o = infostream(&["spectrum", s(&input), "--q-min", "0.5", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json(&out.join("flat.json"))["degenerate_segments"].as_u64().unwrap() > 0);
}

#[test]
fn compare_ranks_copy_first_and_verdicts_last() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series");
    fs::create_dir(&series).unwrap();
    let main: Vec<f64> = binomial_cascade(CascadeSpec::new(0.7, 11).unwrap());
    write_series(&series.join("main.csv"), &main);
    write_series(&series.join("copy.csv"), &main.iter().map(|v| 4.0 * v).collect::<Vec<_>>());
    write_series(&series.join("noise.csv"), &white_noise(2048, 2));
    write_series(&series.join("empty.csv"), &[0.0; 50]);
    let spec = dir.path().join("spec");
    assert!(infostream(&["spectrum", s(&series), "--out", s(&spec)]).status.success());

    let out = dir.path().join("rank");
    let o = infostream(&["compare", "--main", s(&spec.join("main.json")), "--subtopics", s(&spec), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("ranking.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "topic,distance,valid");
    assert_eq!(lines[1], "copy,0.000,true");
    assert!(lines[2].starts_with("noise,"));
    assert_eq!(lines[3], "empty,,false");
    let raw = json(&out.join("ranking.json"));
    assert!(raw["rows"][2]["distance"].is_null());

    // a spectrum on another q grid is rejected by name
    let odd = dir.path().join("odd");
    assert!(infostream(&["spectrum", s(&series.join("noise.csv")), "--q-max", "3", "--out", s(&odd)]).status.success());
    fs::copy(odd.join("noise.json"), spec.join("other_grid.json")).unwrap();
    let out2 = dir.path().join("rank2");
    let o = infostream(&["compare", "--main", s(&spec.join("main.json")), "--subtopics", s(&spec), "--out", s(&out2)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("other_grid.json"));
    assert!(!out2.exists());
}

#[test]
fn flags_beat_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    write_series(&input, &white_noise(1000, 4));
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "detrend_order = 2\nq_step = 1.0\n").unwrap();
    let out = dir.path().join("out");
    let o = infostream(&["spectrum", s(&input), "--config", s(&cfg), "--detrend-order", "3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("x.json"));
    assert_eq!(report["config"]["detrend_order"], 3);
    assert_eq!(report["config"]["q_step"], 1.0);
    assert_eq!(report["spectrum"]["q"].as_array().unwrap().len(), 10);
}

#[test]
fn simulate_seed_flag_changes_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"days": 30, "background": 5.0, "seed": 1, "subtopics": [{"name": "A", "keyword": "alpha", "intensity": 3.0}]}"#).unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(infostream(&["simulate", "--spec", s(&spec), "--out", s(&a)]).status.success());
    assert!(infostream(&["simulate", "--spec", s(&spec), "--out", s(&b)]).status.success());
    assert!(infostream(&["simulate", "--spec", s(&spec), "--seed", "2", "--out", s(&c)]).status.success());
    let read = |d: &Path| fs::read(d.join("corpus.jsonl")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(json(&c.join("truth.json"))["spec"]["seed"], 2);
    let totals = fs::read_to_string(a.join("totals.csv")).unwrap();
    assert!(totals.starts_with("date,count\n2016-05-01,"));
}

#[test]
fn bad_flags_exit_two() {
    assert_eq!(infostream(&["spectrum", "x.csv", "--detrend-order", "7"]).status.code(), Some(2));
    assert_eq!(infostream(&["spectrum", "/nonexistent/x.csv"]).status.code(), Some(2));
    assert_eq!(infostream(&["bogus"]).status.code(), Some(2));
}
