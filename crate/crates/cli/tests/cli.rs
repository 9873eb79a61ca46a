use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use connprof_core::store::{Artifact, Project};
use connprof_core::{assemble_profile, defaults, RelationChoice, TextDocument};
use connprof_service::{ComparisonView, ReportView, ScreenView};
use serde_json::{json, Value};
use tempfile::TempDir;

fn connprof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_connprof"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_owned()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap().flatten() {
            let path = e.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn synthesize_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let recipe = dir.path().join("recipe.json");
    fs::write(
        &recipe,
        r#"{"documents": [{"id": "A", "sentences": 4}, {"id": "B", "sentences": 4}],
            "group_sizes": [3, 2], "mode": "full", "think_time_ms": 1500}"#,
    )
    .unwrap();
    let mut runs = Vec::new();
    for run in ["one", "two"] {
        let project = dir.path().join(run);
        let record = dir.path().join(format!("{run}.jsonl"));
        let o = connprof(&["synthesize", "--project", p(&project), "--recipe", p(&recipe), "--seed", "9", "--record", p(&record)]);
        assert!(o.status.success(), "{}", stdout(&o));
        assert!(stdout(&o).contains("synthesized 5 sessions"));
        runs.push((tree_bytes(&project), fs::read(&record).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0].0.keys().filter(|k| k.starts_with("profiles")).count(), 5);

    let other = dir.path().join("three");
    connprof(&["synthesize", "--project", p(&other), "--recipe", p(&recipe), "--seed", "10"]);
    assert_ne!(tree_bytes(&other), runs[0].0);

    let again = connprof(&["synthesize", "--project", p(&dir.path().join("one")), "--recipe", p(&recipe), "--seed", "9"]);
    assert_eq!(again.status.code(), Some(1));
}

#[test]
fn table_matches_json() {
    let dir = TempDir::new().unwrap();
    let project = dir.path().join("pj");
    assert!(connprof(&["synthesize", "--project", p(&project), "--seed", "3"]).status.success());
    for extra in [&[][..], &["--docs", "A,B", "--docs", "C,D", "--pooled"][..]] {
        let mut args = vec!["report", "--project", p(&project), "--precision", "3"];
        args.extend_from_slice(extra);
        let table = stdout(&connprof(&args));
        args.extend(["--format", "json"]);
        let views: Vec<ReportView> = serde_json::from_str(&stdout(&connprof(&args))).unwrap();

        let lines: Vec<&str> = table.lines().collect();
        let header: Vec<String> = views.iter().map(|v| v.label.clone()).collect();
        assert!(header.iter().all(|h| lines[0].contains(h.as_str())));
        for (row, get) in [("mean(cat)", 0), ("mean(con)", 1)] {
            let cells: Vec<f64> = lines
                .iter()
                .find(|l| l.starts_with(row))
                .unwrap()
                .split_whitespace()
                .skip(1)
                .map(|c| c.parse().unwrap())
                .collect();
            assert_eq!(cells.len(), views.len());
            for (c, v) in cells.iter().zip(&views) {
                let x = if get == 0 { v.mean_cat } else { v.mean_con };
                assert!((c - x).abs() <= 0.0005 + 1e-12, "{row}: {c} vs {x}");
            }
        }
    }
}

#[test]
fn report_and_compare_errors() {
    let dir = TempDir::new().unwrap();
    let project = dir.path().join("pj");
    assert!(connprof(&["synthesize", "--project", p(&project), "--seed", "1"]).status.success());
    assert_eq!(connprof(&["report", "--project", p(&project), "--docs", "Z"]).status.code(), Some(1));
    assert_eq!(connprof(&["report", "--project", p(&dir.path().join("none"))]).status.code(), Some(1));
    assert_eq!(connprof(&["report", "--project", p(&project), "--granularity", "word"]).status.code(), Some(2));

    let o = connprof(&["compare", "--project", p(&project), "--group-a", "A", "--group-b", "A", "--format", "json"]);
    let c: ComparisonView = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(c.agreement, 1.0);
}

fn profiles_project(dir: &Path, agree: usize) -> std::path::PathBuf {
    let root = dir.join(format!("agree{agree}"));
    let project = Project::open_or_create(&root).unwrap();
    let inv = defaults::inventory();
    project.put_artifact(&Artifact::Inventory(inv.clone())).unwrap();
    let a_modes = ["however", "so", "also", "first", "then", "that_is", "for_example", "still"];
    let b_other = ["also", "then", "that_is", "for_example", "still", "first", "however", "so"];
    for (doc_id, modes) in [
        ("a", a_modes.to_vec()),
        ("b", (0..8).map(|i| if i < agree { a_modes[i] } else { b_other[i] }).collect()),
    ] {
        let doc = TextDocument::new(doc_id, "en", (1..=9).map(|i| format!("S{i}.")), Some("g".into()));
        project.put_artifact(&Artifact::Document(doc.clone())).unwrap();
        for e in 0..3 {
            let choices: Vec<RelationChoice> = modes
                .iter()
                .enumerate()
                .map(|(i, m)| RelationChoice {
                    pair_index: i as u32 + 2,
                    conjunct_id: m.to_string(),
                    category_id: String::new(),
                })
                .collect();
            let profile = assemble_profile(&doc, &inv, &choices, &format!("{doc_id}{e}")).unwrap();
            project.save_profile(&format!("{doc_id}-{e}"), &profile).unwrap();
        }
    }
    root
}

#[test]
fn compare_counts_agreeing_pairs() {
    let dir = TempDir::new().unwrap();
    for (agree, want) in [(8, 1.0), (7, 0.875), (0, 0.0)] {
        let root = profiles_project(dir.path(), agree);
        let o = connprof(&["compare", "--project", p(&root), "--group-a", "a", "--group-b", "b", "--format", "json"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let c: ComparisonView = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(c.agreement, want);
        assert_eq!(c.pairs_agreeing, agree);
        let table = stdout(&connprof(&["compare", "--project", p(&root), "--group-a", "a", "--group-b", "b"]));
        assert!(table.contains(&format!("{agree}/8")), "{table}");
    }
}

#[test]
fn import_and_validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let project = dir.path().join("pj");
    assert_eq!(connprof(&["import", "--project", p(&project), p(&bad)]).status.code(), Some(2));
    assert_eq!(connprof(&["validate", p(&bad)]).status.code(), Some(2));

    let doc = dir.path().join("doc.json");
    fs::write(&doc, r#"{"id": "t", "language": "en", "sentences": ["One.", "Two."]}"#).unwrap();
    let o = connprof(&["import", "--project", p(&project), "--defaults", p(&doc)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("imported document 't'"));
    let o = connprof(&["validate", p(&project)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

struct Server(Child, String);

impl Drop for Server {
    fn drop(&mut self) {
        self.0.kill().ok();
        self.0.wait().ok();
    }
}

fn serve(project: &Path) -> Server {
    let mut child = Command::new(env!("CARGO_BIN_EXE_connprof"))
        .args(["serve", "--project", p(project), "--port", "0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let url = line.trim().strip_prefix("listening on ").unwrap().to_owned();
    Server(child, url)
}

#[test]
fn serve_rejects_non_projects() {
    let dir = TempDir::new().unwrap();
    let o = connprof(&["serve", "--project", p(&dir.path().join("missing")), "--port", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not-a-project"));
}

#[test]
fn serve_resumes_sessions_after_restart() {
    let dir = TempDir::new().unwrap();
    let project = dir.path().join("pj");
    let doc = dir.path().join("doc.json");
    fs::write(&doc, r#"{"id": "t", "language": "ja", "sentences": ["一。", "二。", "三。"]}"#).unwrap();
    assert!(connprof(&["import", "--project", p(&project), "--defaults", p(&doc)]).status.success());
    let client = reqwest::blocking::Client::new();

    let before: ScreenView = {
        let server = serve(&project);
        let reports: Value = client.get(format!("{}/reports", server.1)).send().unwrap().json().unwrap();
        assert_eq!(reports, json!([]));
        let body = json!({"document_id": "t", "dialog_tree_id": "default-dialog", "evaluator_id": "e", "session_id": "s"});
        let v: ScreenView = client.post(format!("{}/sessions", server.1)).json(&body).send().unwrap().json().unwrap();
        let body = json!({"answer_index": 2, "stage_token": v.stage_token});
        let v: ScreenView = client.post(format!("{}/sessions/s/answer", server.1)).json(&body).send().unwrap().json().unwrap();
        let however = v.conjuncts.as_ref().unwrap().iter().find(|c| c.conjunct_id == "however").unwrap();
        assert_eq!(however.surface, "しかし");
        v
    };
    let server = serve(&project);
    let after: ScreenView = client.get(format!("{}/sessions/s/screen", server.1)).send().unwrap().json().unwrap();
    assert_eq!(after, before);
    let body = json!({"conjunct_id": "however", "stage_token": after.stage_token});
    let resp = client.post(format!("{}/sessions/s/conjunct", server.1)).json(&body).send().unwrap();
    assert!(resp.status().is_success());
}
