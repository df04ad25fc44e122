use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn edurec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edurec"))
        .args(args)
        .env_remove("EDUREC_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn p(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

const SMALL: &[&str] = &[
    "--students", "120", "--courses", "80", "--teachers", "30", "--schools", "6", "--categories", "5",
    "--majors", "4", "--min-courses", "27", "--max-courses", "40",
];

fn generate(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["generate"];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", p(dir)]);
    edurec(&args)
}

fn kind_counts(nodes: &Path) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for line in std::fs::read_to_string(nodes).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        *m.entry(v["kind"].as_str().unwrap().to_owned()).or_insert(0) += 1;
    }
    m
}

fn output_hashes(manifest: &Path) -> Vec<(String, String)> {
    let m = read_json(manifest);
    m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| {
            let path = Path::new(a["path"].as_str().unwrap()).file_name().unwrap().to_string_lossy().into_owned();
            (path, a["sha256"].as_str().unwrap().to_owned())
        })
        .collect()
}

#[test]
fn generate_counts_and_determinism() {
    let t = TempDir::new().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    let o = generate(&a, &["--seed", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&generate(&b, &["--seed", "1"])), 0);
    for f in ["nodes.jsonl", "edges.jsonl", "manifest.json", "counts.json"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    let counts = kind_counts(&a.join("nodes.jsonl"));
    assert_eq!(counts["Student"], 120);
    assert_eq!(counts["Course"], 80);
    assert_eq!(counts["Teacher"], 30);
    assert_eq!(counts["School"], 6);
    assert_eq!(counts["Category"], 5);
    assert_eq!(counts["Major"], 4);
    assert_eq!(output_hashes(&a.join("manifest.json")), output_hashes(&b.join("manifest.json")));

    let m = read_json(&a.join("manifest.json"));
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["command"], "generate");
    assert_eq!(m["seed"], 1);
    assert_eq!(m["config"]["students"], 120);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn invalid_flags_exit_2() {
    let t = TempDir::new().unwrap();
    let o = generate(t.path(), &["--pref-strength", "1.5"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--pref-strength"), "{}", stderr(&o));
    assert_eq!(code(&edurec(&["generate", "--bogus"])), 2);
    assert_eq!(code(&edurec(&["generate", "--students", "ten", "--out", p(t.path())])), 2);
    assert_eq!(code(&generate(t.path(), &["--min-courses", "50", "--max-courses", "10"])), 2);
}

#[test]
fn seed_precedence() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("run.toml");
    std::fs::write(&cfg, "seed = 7\n[generate]\nstudents = 60\n").unwrap();
    let run = |out: &str, seed_flag: Option<&str>, config: bool, env: Option<&str>| -> Value {
        let dir = t.path().join(out);
        let mut c = Command::new(env!("CARGO_BIN_EXE_edurec"));
        c.arg("generate").args(&SMALL[2..]).env_remove("EDUREC_SEED");
        if let Some(s) = seed_flag {
            c.args(["--seed", s]);
        }
        if config {
            c.arg("--config").arg(&cfg);
        }
        if let Some(e) = env {
            c.env("EDUREC_SEED", e);
        }
        let o = c.arg("--out").arg(&dir).output().unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        read_json(&dir.join("manifest.json"))
    };
    assert_eq!(run("d", None, false, None)["seed"], 0);
    assert_eq!(run("e", None, false, Some("5"))["seed"], 5);
    let m = run("c", None, true, Some("5"));
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["students"], 60);
    assert_eq!(run("f", Some("9"), true, Some("5"))["seed"], 9);

    std::fs::write(&cfg, "[generate]\nstudnets = 60\n").unwrap();
    let o = edurec(&["generate", "--config", cfg.to_str().unwrap(), "--out", p(t.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("studnets"));
}

#[test]
fn analyze_grid_and_single() {
    let t = TempDir::new().unwrap();
    let g = t.path().join("g");
    let o = edurec(&[
        "generate", "--students", "1000", "--courses", "300", "--teachers", "30", "--schools", "6", "--categories",
        "5", "--majors", "4", "--seed", "2", "--coupling", "1.0", "--out", p(&g),
    ]);
    assert_eq!(code(&o), 0);
    let all = t.path().join("all");
    let o = edurec(&["analyze", "--in", p(&g), "--seed", "2", "--out", p(&all)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut n = 0;
    for d in ["school", "category", "teacher"] {
        for s in ["FF", "FT", "TF", "TT"] {
            let r = read_json(&all.join(format!("association_{d}_{s}.json")));
            assert_eq!(r["schema_version"], 1);
            assert_eq!(r["dimension"], d);
            assert_eq!(r["scenario"], s);
            let p = r["p"].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&p));
            n += 1;
        }
        let svg = std::fs::read_to_string(all.join(format!("scatter_{d}.svg"))).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let circles = doc.descendants().filter(|n| n.has_tag_name("circle")).count();
        let rows = std::fs::read_to_string(all.join(format!("features_{d}.csv"))).unwrap().lines().count() - 1;
        assert_eq!(circles, rows);
    }
    assert_eq!(n, 12);
    let grid = read_json(&all.join("association_grid.json"));
    assert!(grid["grid"]["teacher"]["TF"]["p"].is_number());

    let one = t.path().join("one");
    let o = edurec(&["analyze", "--in", p(&g), "--dim", "school", "--scenario", "FT", "--out", p(&one)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = read_json(&one.join("association.json"));
    assert_eq!(r["components"].as_array().unwrap().len(), 1);
    assert_eq!(r["pearson"].as_object().unwrap().len(), 1);
    assert!(one.join("features.csv").is_file() && one.join("scatter.svg").is_file());

    let again = t.path().join("again");
    edurec(&["analyze", "--in", p(&g), "--seed", "2", "--out", p(&again)]);
    assert_eq!(output_hashes(&all.join("manifest.json")), output_hashes(&again.join("manifest.json")));

    assert_eq!(code(&edurec(&["analyze", "--in", p(&g), "--dim", "colour", "--out", p(&one)])), 2);
}

#[test]
fn io_and_schema_failures() {
    let t = TempDir::new().unwrap();
    let missing = t.path().join("nope");
    assert_eq!(code(&edurec(&["analyze", "--in", p(&missing), "--out", p(t.path())])), 3);

    let g = t.path().join("g");
    assert_eq!(code(&generate(&g, &["--seed", "4"])), 0);
    let edges = g.join("edges.jsonl");
    let mut text = std::fs::read_to_string(&edges).unwrap();
    text.push_str("{\"kind\":\"Learn\",\"head\":\"student:0\",\"tail\":\"course:99999\"}\nnot json\n");
    std::fs::write(&edges, text).unwrap();
    let o = edurec(&["analyze", "--in", p(&g), "--dim", "school", "--scenario", "TT", "--out", p(&t.path().join("a"))]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let o = edurec(&[
        "analyze", "--in", p(&g), "--dim", "school", "--scenario", "TT", "--max-violations", "2", "--out",
        p(&t.path().join("b")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

/// Hand-built graph: `pairs` are (student, course) Learn edges; every course
/// sits in category `cat:{course / split}`.
fn write_graph(dir: &Path, students: &[&str], courses: usize, split: usize, pairs: &[(String, String)]) {
    std::fs::create_dir_all(dir).unwrap();
    let mut nodes = String::new();
    let mut edges = String::new();
    writeln!(nodes, r#"{{"id":"career:student","kind":"Career","attrs":{{"name":"student"}}}}"#).unwrap();
    writeln!(nodes, r#"{{"id":"teacher:0","kind":"Teacher","attrs":{{"name":"T","id":"T0","career":"Lecturer"}}}}"#).unwrap();
    for c in 0..courses.div_ceil(split) {
        writeln!(nodes, r#"{{"id":"category:{c}","kind":"Category","attrs":{{"name":"cat {c}"}}}}"#).unwrap();
    }
    for c in 0..courses {
        writeln!(nodes, r#"{{"id":"course:{c}","kind":"Course","attrs":{{"name":"c","id":"C{c}","url":"u","num":1}}}}"#)
            .unwrap();
        writeln!(edges, r#"{{"kind":"Belong","head":"course:{c}","tail":"category:{}"}}"#, c / split).unwrap();
        writeln!(edges, r#"{{"kind":"Teach","head":"teacher:0","tail":"course:{c}"}}"#).unwrap();
    }
    for (i, s) in students.iter().enumerate() {
        writeln!(
            nodes,
            r#"{{"id":"{s}","kind":"Student","attrs":{{"name":"s","id":"U{i}","url":"u","learning_time":{}.5,"response":1,"likes":{}}}}}"#,
            10 + i,
            i % 4
        )
        .unwrap();
        writeln!(edges, r#"{{"kind":"WorkIn","head":"{s}","tail":"career:student"}}"#).unwrap();
    }
    for (s, c) in pairs {
        writeln!(edges, r#"{{"kind":"Learn","head":"{s}","tail":"{c}"}}"#).unwrap();
    }
    std::fs::write(dir.join("nodes.jsonl"), nodes).unwrap();
    std::fs::write(dir.join("edges.jsonl"), edges).unwrap();
}

#[test]
fn train_recommend_and_model_mismatch() {
    let t = TempDir::new().unwrap();
    let g = t.path().join("g");
    let mut pairs: Vec<(String, String)> = (0..3).map(|c| ("student:full".into(), format!("course:{c}"))).collect();
    pairs.push(("student:one".into(), "course:0".into()));
    write_graph(&g, &["student:full", "student:one"], 3, 3, &pairs);

    let m = t.path().join("m");
    let o = edurec(&["train", "--in", p(&g), "--epochs", "30", "--seed", "3", "--out", p(&m)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let curve = std::fs::read_to_string(m.join("loss_curve.csv")).unwrap();
    let losses: Vec<f64> = curve.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(losses.len(), 30);
    assert!(losses.last().unwrap() <= losses.first().unwrap());

    let model = m.join("model.json");
    let r = t.path().join("r");
    let o = edurec(&["recommend", "--in", p(&g), "--model", p(&model), "--top-n", "5", "--out", p(&r)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let recs = read_json(&r.join("recommendations.json"));
    assert_eq!(recs["schema_version"], 1);
    let by_student: BTreeMap<String, usize> = recs["recommendations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| (x["student"].as_str().unwrap().to_owned(), x["courses"].as_array().unwrap().len()))
        .collect();
    assert_eq!(by_student["student:full"], 0);
    assert_eq!(by_student["student:one"], 2);

    let mut ck = read_json(&model);
    ck["w1"].as_array_mut().unwrap().pop();
    let bad = t.path().join("bad.json");
    std::fs::write(&bad, ck.to_string()).unwrap();
    let o = edurec(&["recommend", "--in", p(&g), "--model", p(&bad), "--out", p(&r)]);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
    let mut ck = read_json(&model);
    ck["in_dim"] = Value::from(3);
    std::fs::write(&bad, ck.to_string()).unwrap();
    assert_eq!(code(&edurec(&["recommend", "--in", p(&g), "--model", p(&bad), "--out", p(&r)])), 5);
    let gone = t.path().join("gone.json");
    assert_eq!(code(&edurec(&["recommend", "--in", p(&g), "--model", p(&gone), "--out", p(&r)])), 3);
}

#[test]
fn eight_student_cluster_makes_two_groups() {
    let t = TempDir::new().unwrap();
    let g = t.path().join("g");
    let students: Vec<String> = (0..10).map(|i| format!("student:{i}")).collect();
    let ids: Vec<&str> = students.iter().map(String::as_str).collect();
    let mut pairs = Vec::new();
    // eight focused students, two spread over two categories
    for s in &students[..8] {
        pairs.extend((0..30).map(|c| (s.clone(), format!("course:{c}"))));
    }
    for s in &students[8..] {
        pairs.extend((0..15).chain(30..42).map(|c| (s.clone(), format!("course:{c}"))));
    }
    write_graph(&g, &ids, 42, 30, &pairs);

    let m = t.path().join("m");
    assert_eq!(code(&edurec(&["train", "--in", p(&g), "--epochs", "5", "--out", p(&m)])), 0);
    let out = t.path().join("groups");
    let o = edurec(&[
        "group", "--in", p(&g), "--model", p(&m.join("model.json")), "--group-size", "4", "--k", "2", "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = read_json(&out.join("groups.json"));
    assert_eq!(doc["schema_version"], 1);
    let groups = doc["groups"].as_array().unwrap();
    let mut per_cluster: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for gr in groups {
        per_cluster
            .entry(gr["cluster"].as_u64().unwrap())
            .or_default()
            .push(gr["members"].as_array().unwrap().len());
    }
    let mut shapes: Vec<Vec<usize>> = per_cluster.into_values().collect();
    shapes.sort();
    assert_eq!(shapes, vec![vec![2], vec![4, 4]]);
    assert_eq!(doc["total_members"], 10);

    let o = edurec(&["group", "--in", p(&g), "--model", p(&m.join("model.json")), "--group-size", "1", "--out", p(&out)]);
    assert_eq!(code(&o), 2);

    // every student works as `student`
    let o = edurec(&["cohort", "--in", p(&g), "--career", "other", "--k", "2", "--out", p(&t.path().join("c"))]);
    assert_eq!(code(&o), 6, "{}", stderr(&o));
}

#[test]
fn cohort_trio() {
    let t = TempDir::new().unwrap();
    let g = t.path().join("g");
    let o = edurec(&[
        "generate", "--students", "600", "--courses", "150", "--teachers", "40", "--schools", "8", "--categories",
        "6", "--majors", "4", "--min-courses", "20", "--max-courses", "40", "--seed", "5", "--out", p(&g),
    ]);
    assert_eq!(code(&o), 0);
    let c = t.path().join("c");
    let o = edurec(&["cohort", "--in", p(&g), "--seed", "5", "--out", p(&c)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut total = 0;
    for career in ["student", "professional", "other"] {
        let r = read_json(&c.join(format!("association_{career}.json")));
        assert_eq!(r["cohort"], career);
        total += r["n"].as_u64().unwrap();
    }
    let eligible = {
        let edges = std::fs::read_to_string(g.join("edges.jsonl")).unwrap();
        let mut per: BTreeMap<String, usize> = BTreeMap::new();
        for l in edges.lines() {
            let v: Value = serde_json::from_str(l).unwrap();
            if v["kind"] == "Learn" {
                *per.entry(v["head"].as_str().unwrap().to_owned()).or_insert(0) += 1;
            }
        }
        per.values().filter(|&&n| n >= 27).count() as u64
    };
    assert_eq!(total, eligible);
    let manifests = std::fs::read_dir(&c).unwrap().filter(|e| e.as_ref().unwrap().file_name() == "manifest.json").count();
    assert_eq!(manifests, 1);

    let o = edurec(&["cohort", "--in", p(&g), "--career", "astronaut", "--out", p(&c)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn graphml_input() {
    let t = TempDir::new().unwrap();
    let g = t.path().join("g");
    assert_eq!(code(&generate(&g, &["--seed", "8", "--graphml"])), 0);
    let a = t.path().join("a");
    let b = t.path().join("b");
    let gml = g.join("graph.graphml");
    edurec(&["analyze", "--in", p(&gml), "--dim", "teacher", "--scenario", "TF", "--out", p(&a)]);
    edurec(&["analyze", "--in", p(&g), "--dim", "teacher", "--scenario", "TF", "--out", p(&b)]);
    assert_eq!(
        std::fs::read(a.join("association.json")).unwrap(),
        std::fs::read(b.join("association.json")).unwrap()
    );
}

#[test]
fn failed_cells_are_reported_not_fatal() {
    // this graph leaves a near-empty engagement cluster in some cells,
    // tripping the expected-count floor
    let t = TempDir::new().unwrap();
    let g = t.path().join("g");
    let o = edurec(&[
        "generate", "--students", "400", "--courses", "120", "--teachers", "30", "--schools", "6", "--categories",
        "5", "--majors", "4", "--seed", "2", "--coupling", "1.0", "--out", p(&g),
    ]);
    assert_eq!(code(&o), 0);
    let a = t.path().join("a");
    let o = edurec(&["analyze", "--in", p(&g), "--seed", "2", "--out", p(&a)]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let m = read_json(&a.join("manifest.json"));
    let warnings = m["warnings"].as_array().unwrap();
    assert!(!warnings.is_empty());
    let grid = read_json(&a.join("association_grid.json"));
    let mut ok = 0;
    let mut errors = 0;
    for (d, row) in grid["grid"].as_object().unwrap() {
        for (s, cell) in row.as_object().unwrap() {
            let file = a.join(format!("association_{d}_{s}.json"));
            if cell.get("error").is_some() {
                errors += 1;
                assert!(!file.exists());
            } else {
                ok += 1;
                assert!(file.is_file());
            }
        }
    }
    assert_eq!(ok + errors, 12);
    assert_eq!(errors, warnings.len());
}

#[test]
fn failed_cohort_keeps_the_others() {
    // the small `other` cohort trips the expected-count floor on this graph
    let t = TempDir::new().unwrap();
    let g = t.path().join("g");
    let o = edurec(&["generate", "--students", "2000", "--coupling", "1.0", "--seed", "7", "--out", p(&g)]);
    assert_eq!(code(&o), 0);
    let c = t.path().join("c");
    let o = edurec(&["cohort", "--in", p(&g), "--out", p(&c)]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let failed = read_json(&c.join("association_other.json"));
    assert!(failed["error"].as_str().unwrap().contains("expected count"));
    for career in ["student", "professional"] {
        let r = read_json(&c.join(format!("association_{career}.json")));
        assert_eq!(r["cohort"], career);
        assert!(r["p"].is_number());
    }
    let m = read_json(&c.join("manifest.json"));
    assert_eq!(m["warnings"].as_array().unwrap().len(), 1);

    let o = edurec(&["cohort", "--in", p(&g), "--career", "other", "--out", p(&t.path().join("d"))]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(!t.path().join("d").join("association_other.json").exists());
}
