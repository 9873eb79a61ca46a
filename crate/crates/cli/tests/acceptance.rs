//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use connprof_core::dialog::{
    Dialog, DialogNode, DialogTree, ManualClock, SessionMode, SessionState,
};
use connprof_core::inventory::{Granularity, LabelOrder};
use connprof_core::stats::{mode_agreement, rank_transform, spread, ChoiceDistribution, ProfileGroup};
use connprof_core::store::{ArtifactKind, Project};
use connprof_core::{
    assemble_profile, defaults, ConjunctInventory, ConnectivityProfile, Rational, RelationChoice,
    TextDocument, TopicComment,
};
use connprof_service::{RecordedRequest, ReportView};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

const MU2_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {{
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    }};
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 rank-transform reproduction", c1_rank_transform, None),
        ("2 variance oracle equivalence", c2_oracle, Some(Duration::from_secs(5))),
        ("3 frequency-multiset invariance", c3_relabeling, Some(Duration::from_secs(2))),
        ("4 profile shape", c4_profile_shape, None),
        ("5 replay determinism", c5_replay, Some(Duration::from_secs(30))),
        ("6 config validation", c6_validation, None),
        ("7 grouped report pipeline", c7_pipeline, Some(Duration::from_secs(10))),
        ("8 mode agreement", c8_mode_agreement, None),
        ("9 api replay", c9_api_replay, None),
    ];
    let mut failed = 0;
    for (name, f, limit) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} [{elapsed:.2?}]");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("label{i:02}")).collect()
}

/// `(1/n) * sum (x_i - mean)^2` over the explicitly expanded rank sample.
fn brute_force_mu2(counts: &[u32]) -> (f64, Rational) {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let xs: Vec<i64> = sorted
        .iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(i as i64 + 1, c as usize))
        .collect();
    let n = xs.len() as i64;
    let mean_f = xs.iter().sum::<i64>() as f64 / n as f64;
    let float = xs.iter().map(|&x| (x as f64 - mean_f).powi(2)).sum::<f64>() / n as f64;
    let mean_q = Rational::new(xs.iter().sum::<i64>(), n);
    let exact = xs
        .iter()
        .map(|&x| (Rational::from_integer(x) - mean_q) * (Rational::from_integer(x) - mean_q))
        .fold(Rational::from_integer(0), |a, b| a + b)
        / Rational::from_integer(n);
    (float, exact)
}

fn random_counts(rng: &mut ChaCha8Rng) -> Vec<u32> {
    let evaluators = rng.gen_range(1..=30u32);
    let k = rng.gen_range(1..=11usize.min(evaluators as usize));
    // every label chosen at least once, the rest spread at random
    let mut counts = vec![1u32; k];
    for _ in 0..evaluators - k as u32 {
        counts[rng.gen_range(0..k)] += 1;
    }
    counts
}

fn distribution(names: &[String], counts: &[u32]) -> ChoiceDistribution {
    ChoiceDistribution::new(2, Granularity::Category, names.iter().cloned().zip(counts.iter().copied()))
        .expect("positive counts")
}

fn c1_rank_transform() -> Outcome {
    let names = vec!["X".to_string(), "Y".to_string(), "Z".to_string()];
    let d = distribution(&names, &[7, 2, 1]);
    let sample = rank_transform(&d, &LabelOrder::new(&names));
    check!(
        sample.values == [1, 1, 1, 1, 1, 1, 1, 2, 2, 3],
        "ranks {:?}",
        sample.values
    );
    let s = spread::<f64>(&sample).map_err(|e| e.to_string())?;
    check!((s.mu2 - 0.44).abs() <= MU2_TOL, "mu2 = {}", s.mu2);
    let exact = spread::<Rational>(&sample).map_err(|e| e.to_string())?;
    check!(exact.mu2 == Rational::new(11, 25), "exact mu2 = {}", exact.mu2);
    Ok(format!("ranks {:?}, mu2 = {} (exact {})", sample.values, s.mu2, exact.mu2))
}

fn c2_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f64;
    for case in 0..10_000 {
        let counts = random_counts(&mut rng);
        let names = labels(counts.len());
        let sample = rank_transform(&distribution(&names, &counts), &LabelOrder::new(&names));
        let got = spread::<f64>(&sample).map_err(|e| e.to_string())?;
        let got_exact = spread::<Rational>(&sample).map_err(|e| e.to_string())?;
        let (want, want_exact) = brute_force_mu2(&counts);
        let err = (got.mu2 - want).abs();
        worst = worst.max(err);
        check!(err <= MU2_TOL, "case {case} {counts:?}: {} vs {want}", got.mu2);
        check!(got_exact.mu2 == want_exact, "case {case} {counts:?}: exact {} vs {want_exact}", got_exact.mu2);
    }
    Ok(format!("10000 distributions, max |error| {worst:e}"))
}

fn c3_relabeling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..1_000 {
        let counts = random_counts(&mut rng);
        let names = labels(counts.len());
        let before = rank_transform(&distribution(&names, &counts), &LabelOrder::new(&names));

        let mut renamed = names.clone();
        renamed.shuffle(&mut rng);
        let renamed: Vec<String> = renamed.into_iter().map(|n| format!("x{n}")).collect();
        let mut order = renamed.clone();
        order.shuffle(&mut rng);
        let after = rank_transform(&distribution(&renamed, &counts), &LabelOrder::new(&order));

        check!(before.values == after.values, "case {case}: rank multisets differ");
        let (a, b) = (
            spread::<Rational>(&before).map_err(|e| e.to_string())?,
            spread::<Rational>(&after).map_err(|e| e.to_string())?,
        );
        check!(a.mu2 == b.mu2, "case {case}: mu2 {} vs {}", a.mu2, b.mu2);
        let (fa, fb) = (
            spread::<f64>(&before).map_err(|e| e.to_string())?,
            spread::<f64>(&after).map_err(|e| e.to_string())?,
        );
        check!(fa.mu2 == fb.mu2, "case {case}: f64 mu2 {} vs {}", fa.mu2, fb.mu2);
    }
    Ok("1000 relabelings, identical rank multisets and mu2".into())
}

fn document(id: &str, n: usize) -> TextDocument {
    TextDocument::new(id, "en", (1..=n).map(|i| format!("Sentence {i}.")), Some("g".into()))
}

fn complete_session(dialog: &Dialog<'_>, tree: &DialogTree, inv: &ConjunctInventory, rng: &mut ChaCha8Rng) -> SessionState {
    let mut s = dialog.start_session("s", "ev", SessionMode::Lazy).unwrap();
    while !s.is_finalized() {
        let target = &inv.conjuncts.choose(rng).unwrap().id;
        let (path, _) = tree.shortest_path_to(target).unwrap();
        for a in path {
            dialog.choose_answer(&mut s, a).unwrap();
        }
        dialog.select_conjunct(&mut s, target).unwrap();
        if rng.gen_bool(0.1) {
            dialog.backtrack(&mut s).unwrap();
        }
    }
    s
}

fn c4_profile_shape() -> Outcome {
    let (tree, inv) = (defaults::dialog_tree(), defaults::inventory());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..500 {
        let n = if case == 0 { 9 } else { rng.gen_range(2..=50) };
        let doc = document("d", n);
        let dialog = Dialog::new(&doc, &tree, &inv).unwrap();
        let s = complete_session(&dialog, &tree, &inv, &mut rng);
        let p = s.profile().ok_or("finalized session has no profile")?;
        let pairs: Vec<u32> = p.choices.iter().map(|c| c.pair_index).collect();
        check!(p.len() == n - 1, "n = {n}: {} choices", p.len());
        check!(pairs == (2..=n as u32).collect::<Vec<_>>(), "n = {n}: pairs {pairs:?}");
        if n == 9 {
            check!(p.len() == 8, "9-sentence text gave {}", p.len());
        }
    }
    Ok("500 documents with n in 2..=50 (9 sentences -> 8 choices)".into())
}

/// One random operation that is legal in the current state.
fn random_valid_op(
    dialog: &Dialog<'_>,
    tree: &DialogTree,
    s: &mut SessionState,
    rng: &mut ChaCha8Rng,
) -> Vec<connprof_core::dialog::SessionEvent> {
    let Some(pair) = s.current_pair_index() else {
        return dialog.backtrack(s).unwrap();
    };
    let needs_tc = s.mode == SessionMode::Full && s.pending_topic_comment.is_none();
    let roll = rng.gen_range(0..100);
    if needs_tc || (s.mode == SessionMode::Full && roll < 8) {
        let tc = TopicComment {
            pair_index: pair,
            topics: vec![format!("topic {}", rng.gen_range(0..100))],
            comments: vec![format!("comment {}", rng.gen_range(0..100))],
            intra_pair_conjuncts: None,
        };
        return dialog.submit_topic_comment(s, tc).unwrap();
    }
    if s.can_backtrack() && roll < 25 {
        return dialog.backtrack(s).unwrap();
    }
    match tree.node(s.current_node_id().unwrap()).unwrap() {
        DialogNode::Question { answers, .. } => dialog.choose_answer(s, rng.gen_range(0..answers.len())).unwrap(),
        DialogNode::ConjunctScreen { conjuncts } => {
            let c = conjuncts.choose(rng).unwrap().clone();
            dialog.select_conjunct(s, &c).unwrap()
        }
    }
}

fn c5_replay() -> Outcome {
    let (tree, inv) = (defaults::dialog_tree(), defaults::inventory());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let mut truncated = 0;
    for case in 0..1_000 {
        let n = rng.gen_range(2..=8);
        let doc = document("d", n);
        let clock = ManualClock::new(rng.gen_range(0..1_000_000));
        let dialog = Dialog::new(&doc, &tree, &inv).unwrap().with_clock(&clock);
        let mode = if rng.gen_bool(0.5) { SessionMode::Full } else { SessionMode::Lazy };
        let root = dir.path().join(format!("case{case}"));
        let id = "s";

        let project = Project::open_or_create(&root).unwrap().without_fsync();
        let mut live = dialog.start_session(id, "ev", mode).unwrap();
        project.append_events(id, &live.log).unwrap();
        let mut previous = live.clone();
        for _ in 0..rng.gen_range(1..=80) {
            clock.advance(rng.gen_range(0..20_000));
            previous = live.clone();
            let events = random_valid_op(&dialog, &tree, &mut live, &mut rng);
            check!(!events.is_empty(), "case {case}: operation emitted no events");
            project.append_events(id, &events).unwrap();
        }
        drop(project);

        let replayed = dialog.replay(&live.log).map_err(|e| e.to_string())?;
        check!(replayed == live, "case {case}: in-memory replay differs");
        let loaded = Project::open(&root).unwrap().load_session(id, &doc, &tree, &inv);
        check!(loaded.as_ref().ok() == Some(&live), "case {case}: persisted replay differs: {loaded:?}");

        let log_path = root.join("sessions").join(format!("{id}.jsonl"));
        let bytes = fs::read(&log_path).unwrap();
        let expected = if case % 2 == 0 {
            // torn append after the last complete line
            let mut f = fs::OpenOptions::new().append(true).open(&log_path).unwrap();
            f.write_all(br#"{"seq":99999,"timestamp_ms":12,"kind":"answer_"#).unwrap();
            &live
        } else {
            // final line cut short: its whole operation is dropped
            let body = &bytes[..bytes.len() - 1];
            let line_start = body.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            let cut = rng.gen_range(line_start + 1..bytes.len() - 1);
            fs::write(&log_path, &bytes[..cut]).unwrap();
            truncated += 1;
            &previous
        };
        let recovered = Project::open(&root).unwrap().load_session(id, &doc, &tree, &inv);
        check!(
            recovered.as_ref().ok() == Some(expected),
            "case {case}: state after crash recovery differs: {recovered:?}"
        );
        fs::remove_dir_all(&root).ok();
    }
    Ok(format!(
        "1000 sequences replayed from disk, {} with a torn trailing line, {truncated} with a truncated final line",
        1000 - truncated
    ))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_connprof")
}

fn connprof(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("run connprof")
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn c6_validation() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let inv_path = dir.path().join("inventory.json");
    let tree_path = dir.path().join("dialog.json");
    fs::write(&inv_path, defaults::INVENTORY_JSON).unwrap();
    fs::write(&tree_path, defaults::DIALOG_JSON).unwrap();

    let inv = defaults::inventory();
    let tree = defaults::dialog_tree();
    check!(inv.conjuncts.len() == 32 && inv.categories.len() == 11, "inventory has {} conjuncts, {} categories", inv.conjuncts.len(), inv.categories.len());
    let questions: Vec<_> = tree.nodes.values().filter(|n| n.is_question()).collect();
    check!(questions.len() == 1, "{} questions", questions.len());
    match tree.node(&tree.root) {
        Some(DialogNode::Question { answers, .. }) => check!(answers.len() == 6, "root has {} answers", answers.len()),
        _ => return Err("root is not a question".into()),
    }
    let widest = tree
        .nodes
        .values()
        .filter_map(|n| match n {
            DialogNode::ConjunctScreen { conjuncts } => Some(conjuncts.len()),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    check!(widest <= 8, "screen of {widest}");

    let files = [inv_path.to_str().unwrap(), tree_path.to_str().unwrap()];
    let clean = connprof(&["validate", files[0], files[1]]);
    check!(clean.status.code() == Some(0), "defaults: exit {:?}\n{}", clean.status.code(), text(&clean));
    let builtin = connprof(&["validate", "--builtin"]);
    check!(builtin.status.code() == Some(0), "--builtin: exit {:?}", builtin.status.code());

    let mutate = |name: &str, inv: &ConjunctInventory, tree: &DialogTree| -> (PathBuf, PathBuf) {
        let i = dir.path().join(format!("{name}-inventory.json"));
        let t = dir.path().join(format!("{name}-dialog.json"));
        fs::write(&i, serde_json::to_string_pretty(inv).unwrap()).unwrap();
        fs::write(&t, serde_json::to_string_pretty(tree).unwrap()).unwrap();
        (i, t)
    };

    let mut wide = tree.clone();
    let extra: Vec<String> = ["in_short", "in_conclusion"].map(String::from).to_vec();
    if let Some(DialogNode::ConjunctScreen { conjuncts }) = wide.nodes.get_mut("screen_adds") {
        conjuncts.extend(extra);
        check!(conjuncts.len() == 9, "mutated screen has {}", conjuncts.len());
    }
    let mut dangling = inv.clone();
    dangling.conjuncts[0].category_id = "no_such_category".into();
    let mut uncovered = tree.clone();
    if let Some(DialogNode::ConjunctScreen { conjuncts }) = uncovered.nodes.get_mut("screen_sums_up") {
        conjuncts.retain(|c| c != "overall");
    }

    let cases = [
        ("nine", mutate("nine", &inv, &wide), "screen exceeds 8"),
        ("dangling", mutate("dangling", &dangling, &tree), "dangling category"),
        ("uncovered", mutate("uncovered", &inv, &uncovered), "uncovered conjunct"),
    ];
    for (name, (i, t), needle) in &cases {
        let o = connprof(&["validate", i.to_str().unwrap(), t.to_str().unwrap()]);
        let out = text(&o);
        check!(o.status.code() == Some(1), "{name}: exit {:?}\n{out}", o.status.code());
        check!(out.contains(needle), "{name}: '{needle}' missing from\n{out}");
    }
    let missing = connprof(&["validate", dir.path().join("absent.json").to_str().unwrap()]);
    check!(missing.status.code() == Some(2), "missing file: exit {:?}", missing.status.code());
    Ok("defaults exit 0; 9-conjunct screen, dangling category, uncovered conjunct exit 1; missing file exit 2".into())
}

fn report_json(project: &Path, extra: &[&str]) -> Result<Vec<ReportView>, String> {
    let mut args = vec!["report", "--project", project.to_str().unwrap(), "--format", "json"];
    args.extend_from_slice(extra);
    let o = connprof(&args);
    check!(o.status.success(), "report {extra:?} failed\n{}", text(&o));
    serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())
}

fn c7_pipeline() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let project = dir.path().join("project");
    let record = dir.path().join("requests.jsonl");
    let o = connprof(&[
        "synthesize",
        "--project",
        project.to_str().unwrap(),
        "--seed",
        "42",
        "--record",
        record.to_str().unwrap(),
    ]);
    check!(o.status.success(), "synthesize failed\n{}", text(&o));

    let singles = report_json(&project, &[])?;
    let labels: Vec<&str> = singles.iter().map(|r| r.label.as_str()).collect();
    check!(labels == ["A (14)", "B (13)", "C (7)", "D (7)"], "columns {labels:?}");
    for r in &singles {
        check!(r.per_pair.len() == 8, "{}: {} pairs", r.label, r.per_pair.len());
        let pooled = report_json(&project, &["--docs", &r.document_ids[0], "--pooled"])?;
        check!(pooled.len() == 1 && pooled[0] == *r, "{}: pooled single group differs from unpooled", r.label);
    }
    let combos = ["A,B", "A,C", "A,D", "A,C,D"];
    let mut args = Vec::new();
    for c in combos {
        args.extend(["--docs", c]);
    }
    args.push("--pooled");
    let pooled = report_json(&project, &args)?;
    let labels: Vec<&str> = pooled.iter().map(|r| r.label.as_str()).collect();
    check!(labels == ["A+B", "A+C", "A+D", "A+C+D"], "pooled columns {labels:?}");
    let table = connprof(&["report", "--project", project.to_str().unwrap(), "--docs", "A,B", "--docs", "A,C,D", "--pooled"]);
    check!(table.status.success(), "pooled table failed\n{}", text(&table));

    // the unscaled 10-evaluator recipe
    let ten = dir.path().join("ten");
    let recipe = dir.path().join("ten.json");
    fs::write(&recipe, r#"{"documents": [{"id": "T", "sentences": 9}], "group_sizes": [10]}"#).unwrap();
    let o = connprof(&["synthesize", "--project", ten.to_str().unwrap(), "--recipe", recipe.to_str().unwrap(), "--seed", "42"]);
    check!(o.status.success(), "synthesize (10) failed\n{}", text(&o));
    let r = &report_json(&ten, &[])?[0];
    for p in &r.per_pair {
        check!((p.mu2 - 0.44).abs() <= MU2_TOL, "pair {}: mu2 {}", p.pair_index, p.mu2);
    }
    check!((r.mean_cat - 0.44).abs() <= MU2_TOL, "mean(cat) {}", r.mean_cat);
    let table = connprof(&["report", "--project", ten.to_str().unwrap()]);
    let cell = String::from_utf8_lossy(&table.stdout)
        .lines()
        .find(|l| l.starts_with("mean(cat)"))
        .and_then(|l| l.split_whitespace().nth(1).map(str::to_owned));
    check!(cell.as_deref() == Some("0.44"), "mean(cat) cell {cell:?}");

    Ok(format!(
        "A (14) B (13) C (7) D (7); A+C+D mean(cat) {:.2}; 10-evaluator pairs all 0.44",
        pooled[3].mean_cat
    ))
}

fn group_profiles(doc: &TextDocument, modes: &[&str], inv: &ConjunctInventory, evaluators: usize) -> Vec<ConnectivityProfile> {
    (0..evaluators)
        .map(|e| {
            let choices: Vec<RelationChoice> = modes
                .iter()
                .enumerate()
                .map(|(i, m)| RelationChoice {
                    pair_index: i as u32 + 2,
                    // one dissenter per group never changes the mode
                    conjunct_id: if e == 0 { "overall".into() } else { m.to_string() },
                    category_id: String::new(),
                })
                .collect();
            assemble_profile(doc, inv, &choices, &format!("e{e}")).unwrap()
        })
        .collect()
}

fn c8_mode_agreement() -> Outcome {
    let inv = defaults::inventory();
    let (a_doc, b_doc) = (document("A", 9), document("B", 9));
    let a_modes = ["however", "therefore", "moreover", "first", "then", "that_is", "for_example", "still"];
    let other = ["moreover", "then", "that_is", "for_example", "still", "first", "however", "therefore"];
    for k in [0usize, 4, 8] {
        let b_modes: Vec<&str> = (0..8).map(|i| if i < k { a_modes[i] } else { other[i] }).collect();
        let a = group_profiles(&a_doc, &a_modes, &inv, 5);
        let b = group_profiles(&b_doc, &b_modes, &inv, 4);
        let (ga, gb) = (ProfileGroup::new(&a_doc, &a), ProfileGroup::new(&b_doc, &b));
        for g in [Granularity::Conjunct, Granularity::Category] {
            let exact = mode_agreement::<Rational>(&ga, &gb, g, &inv).map_err(|e| e.to_string())?;
            let float = mode_agreement::<f64>(&ga, &gb, g, &inv).map_err(|e| e.to_string())?;
            check!(exact.fraction == Rational::new(k as i64, 8), "k = {k} ({g}): {}", exact.fraction);
            check!(float.fraction == k as f64 / 8.0, "k = {k} ({g}): {}", float.fraction);
        }
    }
    Ok("agreement 0/8, 4/8, 8/8 exactly".into())
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        self.0.kill().ok();
        self.0.wait().ok();
    }
}

fn start_server(project: &Path) -> Result<(Server, String), String> {
    let mut child = Command::new(bin())
        .args(["serve", "--project", project.to_str().unwrap(), "--port", "0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    let stdout = child.stdout.take().unwrap();
    let server = Server(child);
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line).map_err(|e| e.to_string())?;
    let url = line
        .trim()
        .strip_prefix("listening on ")
        .ok_or_else(|| format!("unexpected serve output {line:?}"))?
        .to_owned();
    Ok((server, url))
}

fn profile_files(project: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(project.join("profiles"))
        .unwrap()
        .flatten()
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

fn c9_api_replay() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let original = dir.path().join("original");
    let fresh = dir.path().join("fresh");
    let record = dir.path().join("requests.jsonl");
    let o = connprof(&[
        "synthesize",
        "--project",
        original.to_str().unwrap(),
        "--seed",
        "42",
        "--record",
        record.to_str().unwrap(),
    ]);
    check!(o.status.success(), "synthesize failed\n{}", text(&o));
    let docs = original.join("documents");
    let o = connprof(&["import", "--project", fresh.to_str().unwrap(), "--defaults", docs.to_str().unwrap()]);
    check!(o.status.success(), "import failed\n{}", text(&o));

    let (_server, url) = start_server(&fresh)?;
    let client = reqwest::blocking::Client::new();
    let requests: Vec<RecordedRequest> = fs::read_to_string(&record)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    for (i, r) in requests.iter().enumerate() {
        check!(r.method == "POST", "request {i}: unexpected method {}", r.method);
        let resp = client
            .post(format!("{url}{}", r.path))
            .json(&r.body)
            .send()
            .map_err(|e| format!("request {i}: {e}"))?;
        let status = resp.status();
        if !status.is_success() {
            let body: Value = resp.json().unwrap_or(Value::Null);
            return Err(format!("request {i} {}: {status} {body}", r.path));
        }
    }

    let (a, b) = (profile_files(&original), profile_files(&fresh));
    check!(a.len() == 41, "{} original profiles", a.len());
    check!(a.keys().eq(b.keys()), "profile file names differ");
    for (name, bytes) in &a {
        check!(&b[name] == bytes, "{name} differs");
    }
    let fresh_project = Project::open(&fresh).map_err(|e| e.to_string())?;
    check!(fresh_project.ids(ArtifactKind::Session).len() == 41, "session count differs");
    Ok(format!("{} requests replayed over HTTP, {} profile files byte-identical", requests.len(), a.len()))
}
