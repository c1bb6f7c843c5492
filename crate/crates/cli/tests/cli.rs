use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_headline-bench"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const TOPICS: [&str; 6] = ["курс доллара", "погода в москве", "выборы мэра", "матч спартака", "цены на нефть", "новый закон"];

/// A small RIA-style dump: one JSON object per line with HTML in the body.
fn write_ria(dir: &Path, n: usize) -> PathBuf {
    let mut body = String::new();
    for i in 0..n {
        let topic = TOPICS[i % TOPICS.len()];
        let line = serde_json::json!({
            "title": format!("{topic} изменился {i}"),
            "text": format!(
                "<p>Москва, {i} мая. {topic} изменился в понедельник, сообщает агентство.</p><p>Эксперты ожидают продолжения {i}.</p>"
            ),
        });
        body.push_str(&line.to_string());
        body.push('\n');
    }
    body.push_str("{broken\n");
    let path = dir.join("ria.jsonl");
    std::fs::write(&path, body).unwrap();
    path
}

fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_ria(dir.path(), 80);
    ok(dir.path(), &["ingest", "--format", "ria", "--input", "ria.jsonl", "--output", "articles.jsonl"]);
    ok(dir.path(), &["split", "--input", "articles.jsonl", "--output", "split.json", "--ratios", "80:10:10"]);
    dir
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["--version"], &["evaluate", "--help"]] {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &[][..],
        &["frobnicate"],
        &["split", "--input", "x.jsonl", "--output", "y.json", "--bogus"],
        &["split", "--input", "x.jsonl", "--output", "y.json", "--ratios", "90:10"],
        &["humeval-aggregate", "--votes", "v.tsv", "--rule", "majority"],
    ] {
        let out = run(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(dir.path(), &["split", "--wat"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["split", "--input", "missing.jsonl", "--output", "s.json"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(dir.path().join("a.txt"), "x\ny\n").unwrap();
    std::fs::write(dir.path().join("b.txt"), "x\n").unwrap();
    let out = run(dir.path(), &["evaluate", "--refs", "a.txt", "--hyps", "b.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ingest_reports_skips_and_split_is_reproducible() {
    let dir = prepared();
    let d = dir.path();
    let out = ok(d, &["ingest", "--format", "ria", "--input", "ria.jsonl", "--output", "again.jsonl"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("80 articles written, 1 records skipped"));
    assert_eq!(read(d, "articles.jsonl").lines().count(), 80);

    ok(d, &["split", "--input", "articles.jsonl", "--output", "split2.json", "--ratios", "80:10:10"]);
    assert_eq!(read(d, "split.json"), read(d, "split2.json"));
    let m1: serde_json::Value = serde_json::from_str(&read(d, "split.json.run.json")).unwrap();
    let m2: serde_json::Value = serde_json::from_str(&read(d, "split2.json.run.json")).unwrap();
    assert_eq!(m1["inputs"], m2["inputs"]);
    assert_eq!(m1["seeds"]["seed"], 42);
    assert_eq!(m1["command"], "split");
    assert_eq!(m1["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    ok(d, &["split", "--input", "articles.jsonl", "--output", "split3.json", "--seed", "7", "--partitions-dir", "parts"]);
    assert_ne!(read(d, "split.json"), read(d, "split3.json"));
    let total: usize = ["train", "val", "test"]
        .iter()
        .map(|p| read(d, &format!("parts/{p}.jsonl")).lines().count())
        .sum();
    assert_eq!(total, 80);
}

#[test]
fn baseline_evaluate_and_report() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["baseline", "--input", "articles.jsonl", "--split", "split.json", "--output", "pred.txt"]);
    let preds = read(d, "pred.txt");
    assert_eq!(preds.lines().count(), 8);
    assert!(preds.lines().all(|l| l.starts_with("Москва,")));

    let out = ok(
        d,
        &["evaluate", "--refs", "articles.jsonl", "--split", "split.json", "--hyps", "pred.txt", "--output", "lead.json", "--label", "lead"],
    );
    let table = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(table.contains("R1") && table.contains("lead"));
    let report: serde_json::Value = serde_json::from_str(&read(d, "lead.json")).unwrap();
    assert!(report["rouge_1"].as_f64().unwrap() > 10.0);
    assert!(report["novelty"]["1"].is_number());
    assert!(d.join("lead.json.run.json").exists());

    // references scored against themselves
    let titles: Vec<String> = read(d, "articles.jsonl")
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["title"].as_str().unwrap().to_string())
        .collect();
    std::fs::write(d.join("titles.txt"), titles.join("\n") + "\n").unwrap();
    ok(d, &["evaluate", "--refs", "articles.jsonl", "--hyps", "titles.txt", "--output", "oracle.json", "--label", "oracle"]);
    let oracle: serde_json::Value = serde_json::from_str(&read(d, "oracle.json")).unwrap();
    for k in ["rouge_1", "rouge_2", "rouge_l", "r_mean", "bleu"] {
        assert_eq!(oracle[k].as_f64().unwrap(), 100.0, "{k}");
    }

    let out = ok(d, &["report", "--inputs", "lead.json", "oracle.json"]);
    let table = String::from_utf8_lossy(&out.stdout).to_string();
    let header = table.lines().next().unwrap();
    let cols: Vec<&str> = header.split('|').map(str::trim).collect();
    assert_eq!(cols, vec!["Model", "R1", "R2", "RL", "R-mean", "BLEU"]);
    assert!(table.lines().nth(3).unwrap().contains("100.0"));
}

#[test]
fn jobs_do_not_change_results() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["baseline", "--input", "articles.jsonl", "--output", "pred.txt"]);
    for jobs in ["1", "3"] {
        ok(
            d,
            &["evaluate", "--refs", "articles.jsonl", "--hyps", "pred.txt", "--jobs", jobs, "--output", &format!("r{jobs}.json")],
        );
    }
    assert_eq!(read(d, "r1.json"), read(d, "r3.json"));
}

#[test]
fn config_file_supplies_missing_flags() {
    let dir = prepared();
    let d = dir.path();
    std::fs::write(d.join("run.cfg"), "# split settings\nseed = 7\nratios=80:10:10\n").unwrap();
    ok(d, &["split", "--input", "articles.jsonl", "--output", "a.json", "--config", "run.cfg"]);
    ok(d, &["split", "--input", "articles.jsonl", "--output", "b.json", "--seed", "7", "--ratios", "80:10:10"]);
    assert_eq!(read(d, "a.json"), read(d, "b.json"));
    ok(d, &["split", "--input", "articles.jsonl", "--output", "c.json", "--config", "run.cfg", "--seed", "42"]);
    assert_eq!(read(d, "c.json"), read(d, "split.json"));

    std::fs::write(d.join("bad.cfg"), "no_such_flag = 1\n").unwrap();
    let out = run(d, &["split", "--input", "articles.jsonl", "--output", "x.json", "--config", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn novelty_csv_orders_reference_above_baseline() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["baseline", "--input", "articles.jsonl", "--output", "pred.txt"]);
    ok(d, &["novelty", "--input", "articles.jsonl", "--hyps", "pred.txt", "--output", "nov.csv"]);
    let csv = read(d, "nov.csv");
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], vec!["n", "reference", "system"]);
    assert_eq!(rows.len(), 5);
    for row in &rows[1..] {
        let reference: f64 = row[1].parse().unwrap();
        let system: f64 = row[2].parse().unwrap();
        assert_eq!(system, 0.0, "first sentences are copied from the text");
        assert!(reference >= system);
    }
}

#[test]
fn corrupt_writes_articles() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["corrupt", "--input", "articles.jsonl", "--output", "infill.jsonl", "--kind", "infill", "--seed", "3"]);
    ok(d, &["corrupt", "--input", "articles.jsonl", "--output", "infill2.jsonl", "--kind", "infill", "--seed", "3"]);
    assert_eq!(read(d, "infill.jsonl"), read(d, "infill2.jsonl"));
    assert!(read(d, "infill.jsonl").contains("[MASK]"));
    ok(d, &["corrupt", "--input", "articles.jsonl", "--output", "rot.jsonl", "--kind", "rotate"]);
    assert_eq!(read(d, "rot.jsonl").lines().count(), 80);
    let out = run(d, &["corrupt", "--input", "articles.jsonl", "--output", "z.jsonl", "--kind", "infill", "--mask-fraction", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn human_eval_round_trip() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["baseline", "--input", "articles.jsonl", "--output", "pred.txt"]);
    ok(
        d,
        &["humeval-export", "--input", "articles.jsonl", "--hyps", "pred.txt", "--tasks", "tasks.tsv", "--key", "key.tsv", "--limit", "10"],
    );
    let tasks = read(d, "tasks.tsv");
    assert_eq!(tasks.lines().count(), 11);
    assert!(!tasks.to_lowercase().contains("model") && !tasks.to_lowercase().contains("human"));

    let mut votes = String::from("item_id\tannotator_id\tchoice\n");
    for (i, line) in read(d, "key.tsv").lines().skip(1).enumerate() {
        let item = line.split('\t').next().unwrap();
        let choice = if i < 6 { "HUMAN" } else if i < 9 { "MODEL" } else { "DRAW" };
        for a in 0..9 {
            votes.push_str(&format!("{item}\tann{a}\t{choice}\n"));
        }
    }
    std::fs::write(d.join("votes.tsv"), votes).unwrap();
    ok(d, &["humeval-aggregate", "--votes", "votes.tsv", "--output", "summary.json"]);
    let s: serde_json::Value = serde_json::from_str(&read(d, "summary.json")).unwrap();
    assert_eq!(s["n_items"], 10);
    assert_eq!(s["human_win_rate"], 0.6);
    assert_eq!(s["model_win_rate"], 0.3);
    assert_eq!(s["draw_rate"], 0.1);
}

#[test]
fn pgn_train_decode_and_grad_check() {
    let dir = prepared();
    let d = dir.path();
    let args = [
        "train-pgn", "--copy-task", "--examples", "200", "--steps", "20", "--eval-every", "10", "--output", "copy.json",
    ];
    let out = ok(d, &args);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["train_examples"], 180);
    let csv = read(d, "copy.json.loss.csv");
    assert_eq!(csv.lines().next().unwrap(), "step,train_loss,val_loss");
    assert_eq!(csv.lines().count(), 3);
    ok(d, &[&args[..args.len() - 1], &["copy2.json"]].concat());
    assert_eq!(read(d, "copy.json.loss.csv"), read(d, "copy2.json.loss.csv"));
    assert_eq!(read(d, "copy.json"), read(d, "copy2.json"));

    ok(
        d,
        &["train-pgn", "--input", "articles.jsonl", "--split", "split.json", "--steps", "5", "--max-src-len", "20", "--max-tgt-len", "8", "--vocab-size", "60", "--output", "news.json"],
    );
    for jobs in ["1", "2"] {
        ok(
            d,
            &["decode", "--checkpoint", "news.json", "--input", "articles.jsonl", "--split", "split.json", "--beam-size", "3", "--jobs", jobs, "--output", &format!("dec{jobs}.txt")],
        );
    }
    assert_eq!(read(d, "dec1.txt").lines().count(), 8);
    assert_eq!(read(d, "dec1.txt"), read(d, "dec2.txt"));

    let out = ok(d, &["grad-check", "--max-coords", "60", "--output", "gc.json"]);
    assert!(out.status.success());
    let gc: serde_json::Value = serde_json::from_str(&read(d, "gc.json")).unwrap();
    assert_eq!(gc["passed"], true);
    assert!(gc["checked"].as_u64().unwrap() > 0);
    let out = run(d, &["grad-check", "--max-coords", "60", "--tolerance", "1e-30"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bpe_training_writes_model_and_sidecar() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["train-bpe", "--input", "articles.jsonl", "--num-merges", "50", "--output", "bpe.merges"]);
    assert!(d.join("bpe.merges").exists());
    assert!(d.join("bpe.merges.json").exists());
    assert!(d.join("bpe.merges.run.json").exists());
}
