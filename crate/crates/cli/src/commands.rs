use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::json;

use headline_core::baseline::{read_predictions, run_baseline, FirstSentence, Generator};
use headline_core::corpus::{load_lenta, load_ria, read_articles, split_dataset, split_sentences, write_articles};
use headline_core::corpus::{Article, Partition, SplitManifest};
use headline_core::humaneval::{aggregate, export_tasks, read_votes, write_key, write_tasks, OutcomeRule};
use headline_core::mechanisms::{corrupt, NoiseKind, NoiseSpec};
use headline_core::metrics::{aggregate_scores, novelty_profile, prepare, render_table, score_example};
use headline_core::metrics::{EvalConfig, MetricReport};
use headline_core::tokenize::{bpe_train, word_tokenize, TokenSeq, Vocab, RESERVED};
use headline_pgn::{
    build_example, copy_task, decode_example, decode_ids, grad_check, teacher_forced_accuracy, train, BeamConfig,
    Checkpoint, Example, ExampleLimits, GradCheckOptions, PgnConfig, PgnError, PgnParams, TrainConfig,
};

use crate::cli::*;
use crate::manifest::RunManifest;

/// An error in how the tool was invoked rather than in the data (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    // 0 threads lets rayon use every core
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn is_jsonl(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "jsonl")
}

/// Articles from `path`, restricted to a split partition when requested.
fn load_selected(path: &Path, sel: &Selection, m: &mut RunManifest) -> Result<Vec<Article>> {
    m.input(path)?;
    let articles = read_articles(path)?;
    let Some(split) = &sel.split else {
        return Ok(articles);
    };
    m.input(split)?;
    let manifest = SplitManifest::read(split)?;
    let picked: Vec<Article> = manifest
        .select(&articles, sel.partition.into())
        .into_iter()
        .cloned()
        .collect();
    if picked.is_empty() && !articles.is_empty() {
        bail!(
            "split {} selects no articles of {}; was it made from this file?",
            split.display(),
            path.display()
        );
    }
    Ok(picked)
}

fn read_lines(path: &Path, m: &mut RunManifest) -> Result<Vec<String>> {
    m.input(path)?;
    Ok(read_predictions(path)?)
}

fn check_aligned(what: &str, left: usize, right: usize) -> Result<()> {
    if left != right {
        bail!("{what}: {left} vs {right} lines");
    }
    Ok(())
}

pub fn ingest(a: &IngestArgs, m: &mut RunManifest) -> Result<()> {
    m.input(&a.input)?;
    let loaded = match a.format {
        CorpusFormat::Ria => load_ria(&a.input)?,
        CorpusFormat::Lenta => load_lenta(&a.input)?,
    };
    let articles: Vec<Article> = if a.normalize {
        loaded.articles.iter().map(Article::normalized).collect()
    } else {
        loaded.articles
    };
    write_articles(&a.output, &articles)?;
    m.output(&a.output);
    eprintln!("{} articles written, {} records skipped", articles.len(), loaded.skipped);
    Ok(())
}

pub fn split(a: &SplitArgs, m: &mut RunManifest) -> Result<()> {
    m.input(&a.input)?;
    let articles = read_articles(&a.input)?;
    let manifest = split_dataset(&articles, a.ratios, a.seed)?;
    std::fs::write(&a.output, manifest.to_json() + "\n").with_context(|| format!("cannot write {}", a.output.display()))?;
    m.output(&a.output);
    if let Some(dir) = &a.partitions_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for p in [Partition::Train, Partition::Val, Partition::Test] {
            let path = dir.join(format!("{}.jsonl", p.as_str()));
            let part: Vec<Article> = manifest.select(&articles, p).into_iter().cloned().collect();
            write_articles(&path, &part)?;
            m.output(&path);
        }
    }
    let [tr, va, te] = manifest.counts;
    eprintln!("train {tr}, val {va}, test {te}");
    Ok(())
}

pub fn train_bpe(a: &TrainBpeArgs, m: &mut RunManifest) -> Result<()> {
    let articles = load_selected(&a.input, &a.selection, m)?;
    let cfg = EvalConfig::default();
    let corpus: Vec<TokenSeq> = articles
        .iter()
        .flat_map(|art| [prepare(&art.title, &cfg), prepare(&art.text, &cfg)])
        .collect();
    let model = bpe_train(&corpus, a.num_merges)?;
    model.save(&a.output)?;
    m.output(&a.output);
    eprintln!(
        "{} merges learned ({} effective), vocabulary {}",
        model.merges().len(),
        model.effective_merges(),
        model.vocab().len()
    );
    Ok(())
}

pub fn baseline(a: &BaselineArgs, m: &mut RunManifest) -> Result<()> {
    let Generator::FirstSentence = Generator::from_str(&a.generator).map_err(|e| UsageError(e.to_string()))?;
    let articles = load_selected(&a.input, &a.selection, m)?;
    let gen = FirstSentence {
        max_tokens: a.max_tokens,
        ..FirstSentence::default()
    };
    let heads = run_baseline(&articles, &gen, &a.output)?;
    m.output(&a.output);
    eprintln!("{} headlines written", heads.len());
    Ok(())
}

/// Tokenizes and scores in parallel; results keep corpus order for any `jobs`.
pub fn score(
    refs: &[String],
    hyps: &[String],
    sources: Option<&[String]>,
    cfg: &EvalConfig,
    jobs: usize,
) -> Result<MetricReport> {
    check_aligned("references vs hypotheses", refs.len(), hyps.len())?;
    if let Some(s) = sources {
        check_aligned("sources vs hypotheses", s.len(), hyps.len())?;
    }
    pool(jobs)?.install(|| {
        let tok = |v: &[String]| v.par_iter().map(|t| prepare(t, cfg)).collect::<Vec<TokenSeq>>();
        let r = tok(refs);
        let h = tok(hyps);
        let s = sources.map(tok);
        let scores: Vec<_> = r
            .par_iter()
            .zip(&h)
            .map(|(r, h)| score_example(&r.tokens, &h.tokens))
            .collect();
        Ok(aggregate_scores(&scores, &h, s.as_deref(), cfg)?)
    })
}

pub fn evaluate(a: &EvaluateArgs, m: &mut RunManifest) -> Result<()> {
    let cfg = EvalConfig {
        lowercase: !a.no_lowercase,
        label: a.label.clone(),
        ..EvalConfig::default()
    };
    let (refs, mut sources) = if is_jsonl(&a.refs) {
        let articles = load_selected(&a.refs, &a.selection, m)?;
        let titles = articles.iter().map(|x| x.title.clone()).collect();
        let texts = articles.iter().map(|x| x.text.clone()).collect();
        (titles, Some(texts))
    } else {
        if a.selection.split.is_some() {
            return usage("--split needs --refs in articles JSONL format");
        }
        (read_lines(&a.refs, m)?, None)
    };
    if let Some(p) = &a.sources {
        sources = Some(read_lines(p, m)?);
    }
    let hyps = read_lines(&a.hyps, m)?;
    let report = score(&refs, &hyps, sources.as_deref(), &cfg, a.jobs)?;
    match &a.output {
        Some(out) => {
            std::fs::write(out, report.to_json() + "\n").with_context(|| format!("cannot write {}", out.display()))?;
            m.output(out);
        }
        None => println!("{}", report.to_json()),
    }
    print!("{}", render_table(&[&report]));
    Ok(())
}

pub fn novelty(a: &NoveltyArgs, m: &mut RunManifest) -> Result<()> {
    if a.max_n == 0 {
        return usage("--max-n must be at least 1");
    }
    let articles = load_selected(&a.input, &a.selection, m)?;
    let cfg = EvalConfig::default();
    let sources: Vec<TokenSeq> = articles.iter().map(|x| prepare(&x.text, &cfg)).collect();
    let titles: Vec<TokenSeq> = articles.iter().map(|x| prepare(&x.title, &cfg)).collect();
    let reference = novelty_profile(&sources, &titles, a.max_n);
    let system = match &a.hyps {
        Some(p) => {
            let hyps = read_lines(p, m)?;
            check_aligned("articles vs hypotheses", articles.len(), hyps.len())?;
            let toks: Vec<TokenSeq> = hyps.iter().map(|h| prepare(h, &cfg)).collect();
            Some(novelty_profile(&sources, &toks, a.max_n))
        }
        None => None,
    };
    let mut csv = String::from(if system.is_some() { "n,reference,system\n" } else { "n,reference\n" });
    for n in 1..=a.max_n {
        let key = n.to_string();
        csv.push_str(&format!("{n},{:.6}", reference[&key]));
        if let Some(s) = &system {
            csv.push_str(&format!(",{:.6}", s[&key]));
        }
        csv.push('\n');
    }
    std::fs::write(&a.output, &csv).with_context(|| format!("cannot write {}", a.output.display()))?;
    m.output(&a.output);
    print!("{csv}");
    Ok(())
}

pub fn corrupt_cmd(a: &CorruptArgs, m: &mut RunManifest) -> Result<()> {
    m.input(&a.input)?;
    let articles = read_articles(&a.input)?;
    let kind = match a.kind {
        NoiseArg::ShuffleSentences => NoiseKind::ShuffleSentences,
        NoiseArg::Rotate => NoiseKind::Rotate,
        NoiseArg::Infill => NoiseKind::Infill,
    };
    let (mut masked, mut total) = (0usize, 0usize);
    let mut out = Vec::with_capacity(articles.len());
    for (i, art) in articles.iter().enumerate() {
        let sentences: Vec<TokenSeq> = split_sentences(&art.text)
            .iter()
            .map(|s| word_tokenize(s.slice(&art.text)))
            .collect();
        let spec = NoiseSpec {
            kind,
            mask_token: a.mask_token.clone(),
            span_length_mean: a.span_length_mean,
            mask_fraction: a.mask_fraction,
            seed: a.seed.wrapping_add(i as u64),
        };
        let c = corrupt(&sentences, &spec).map_err(|e| UsageError(e.to_string()))?;
        masked += c.masked;
        total += c.original_len;
        out.push(Article {
            text: c.tokens.join(" "),
            ..art.clone()
        });
    }
    write_articles(&a.output, &out)?;
    m.output(&a.output);
    if kind == NoiseKind::Infill && total > 0 {
        eprintln!("masked {masked} of {total} tokens ({:.3})", masked as f64 / total as f64);
    }
    Ok(())
}

fn corpus_examples(
    articles: &[&Article],
    vocab: &Vocab,
    limits: ExampleLimits,
    cfg: &EvalConfig,
) -> Vec<Example> {
    articles
        .iter()
        .filter_map(|art| {
            let src = prepare(&art.text, cfg).tokens;
            if src.is_empty() {
                return None;
            }
            let tgt = prepare(&art.title, cfg).tokens;
            Some(build_example(&src, Some(&tgt), vocab, limits).0)
        })
        .collect()
}

pub fn train_pgn(a: &TrainPgnArgs, m: &mut RunManifest) -> Result<()> {
    let mut cfg = PgnConfig {
        vocab_size: a.vocab_size,
        embed_dim: a.embed_dim,
        hidden_dim: a.hidden_dim,
        max_src_len: a.max_src_len,
        max_tgt_len: a.max_tgt_len,
        coverage_weight: a.coverage_weight,
        use_coverage: !a.no_coverage,
        cell: a.cell.into(),
        seed: a.seed,
    };
    let (vocab, train_set, val_set) = if a.copy_task {
        if a.vocab_size <= RESERVED.len() {
            return usage("--vocab-size must exceed the 4 reserved tokens");
        }
        if a.copy_k == 0 || a.copy_k > a.max_src_len || a.max_tgt_len < 2 {
            return usage("copy task needs 1 <= copy-k <= max-src-len and max-tgt-len >= 2");
        }
        let min_len = a.max_src_len.saturating_sub(4).max(a.copy_k);
        let data = copy_task(a.examples, a.vocab_size, a.copy_k, min_len..=a.max_src_len, a.seed);
        let n_val = a.examples / 10;
        let (tr, va) = data.split_at(a.examples - n_val);
        let mut names: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        names.extend((RESERVED.len()..a.vocab_size).map(|i| format!("w{i}")));
        (names, tr.to_vec(), va.to_vec())
    } else {
        let input = a.input.as_ref().expect("clap requires --input without --copy-task");
        m.input(input)?;
        let articles = read_articles(input)?;
        let (train_a, val_a): (Vec<&Article>, Vec<&Article>) = match &a.split {
            Some(split) => {
                m.input(split)?;
                let manifest = SplitManifest::read(split)?;
                (
                    manifest.select(&articles, Partition::Train),
                    manifest.select(&articles, Partition::Val),
                )
            }
            None => (articles.iter().collect(), Vec::new()),
        };
        let ec = EvalConfig::default();
        let mut counts: HashMap<String, usize> = HashMap::new();
        for art in &train_a {
            for t in prepare(&art.text, &ec).tokens.into_iter().chain(prepare(&art.title, &ec).tokens) {
                *counts.entry(t).or_default() += 1;
            }
        }
        let vocab = Vocab::from_counts(&counts, a.vocab_size, 1);
        cfg.vocab_size = vocab.len();
        let limits = ExampleLimits {
            max_src_len: cfg.max_src_len,
            max_tgt_len: cfg.max_tgt_len,
            extended: true,
        };
        let tr = corpus_examples(&train_a, &vocab, limits, &ec);
        let va = corpus_examples(&val_a, &vocab, limits, &ec);
        (vocab.tokens().to_vec(), tr, va)
    };
    if train_set.is_empty() {
        bail!("no training examples");
    }
    let tc = TrainConfig {
        steps: a.steps,
        batch_size: a.batch_size,
        grad_accum: a.grad_accum,
        lr: a.lr,
        clip_norm: (a.clip_norm > 0.0).then_some(a.clip_norm),
        eval_every: a.eval_every,
        coverage_start: a.coverage_start,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let (params, curve) = match train(&cfg, PgnParams::init(&cfg), &train_set, &val_set, &tc) {
        Ok(r) => r,
        Err(PgnError::Diverged { step, last_good }) => {
            let mut path = a.output.clone().into_os_string();
            path.push(".last_good.json");
            let path = PathBuf::from(path);
            Checkpoint::new(&cfg, a.seed, vocab, &last_good).save(&path)?;
            bail!("training diverged at step {step}; last finite parameters saved to {}", path.display());
        }
        Err(PgnError::Config(msg)) => return usage(msg),
        Err(e) => return Err(e.into()),
    };
    Checkpoint::new(&cfg, a.seed, vocab, &params).save(&a.output)?;
    m.output(&a.output);
    let loss_csv = a.loss_csv.clone().unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".loss.csv");
        p.into()
    });
    std::fs::write(&loss_csv, curve.to_csv()).with_context(|| format!("cannot write {}", loss_csv.display()))?;
    m.output(&loss_csv);

    let last = curve.points.last();
    let accuracy = if val_set.is_empty() {
        None
    } else {
        Some(teacher_forced_accuracy(&params, &cfg, &val_set)?)
    };
    let summary = json!({
        "train_examples": train_set.len(),
        "val_examples": val_set.len(),
        "vocab_size": cfg.vocab_size,
        "parameters": params.num_parameters(),
        "final_train_loss": last.map(|p| p.train_loss),
        "final_val_loss": last.and_then(|p| p.val_loss),
        "val_token_accuracy": accuracy,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

pub fn decode(a: &DecodeArgs, m: &mut RunManifest) -> Result<()> {
    m.input(&a.checkpoint)?;
    let ck = Checkpoint::load(&a.checkpoint)?;
    let params = ck.params()?;
    let cfg = ck.config.clone();
    let vocab = Vocab::from_tokens(&ck.vocab);
    if vocab.len() != ck.vocab.len() || vocab.tokens() != ck.vocab.as_slice() {
        bail!("checkpoint vocabulary must start with the reserved tokens and hold no duplicates");
    }
    let articles = load_selected(&a.input, &a.selection, m)?;
    let beam = BeamConfig {
        beam_size: a.beam_size.max(1),
        max_len: a.max_len.unwrap_or(cfg.max_tgt_len),
        alpha: a.alpha,
        ..BeamConfig::default()
    };
    let limits = ExampleLimits {
        max_src_len: cfg.max_src_len,
        max_tgt_len: cfg.max_tgt_len,
        extended: true,
    };
    let ec = EvalConfig::default();
    let heads: Vec<String> = pool(a.jobs)?.install(|| {
        articles
            .par_iter()
            .map(|art| {
                let src = prepare(&art.text, &ec).tokens;
                if src.is_empty() {
                    return String::new();
                }
                let (ex, oov) = build_example::<String>(&src, None, &vocab, limits);
                let ids = decode_example(&params, &cfg, &ex, &beam);
                decode_ids(&ids, &vocab, &oov).join(" ")
            })
            .collect()
    });
    headline_core::baseline::write_predictions(&a.output, &heads)?;
    m.output(&a.output);
    eprintln!("{} headlines decoded", heads.len());
    Ok(())
}

/// A tiny model with weights in (−1, 1) and an example that copies a source OOV word.
fn grad_fixture(a: &GradCheckArgs) -> (PgnConfig, PgnParams, Example) {
    let cfg = PgnConfig {
        vocab_size: 20,
        embed_dim: 4,
        hidden_dim: 5,
        max_src_len: 8,
        max_tgt_len: 6,
        coverage_weight: a.coverage_weight,
        use_coverage: true,
        cell: a.cell.into(),
        seed: a.seed,
    };
    let mut p = PgnParams::init(&cfg);
    for (_, t) in p.tensors_mut() {
        for (k, w) in t.data.iter_mut().enumerate() {
            *w = *w * 10.0 + if *w == 0.0 { 0.05 * ((k % 7) as f64 - 3.0) } else { 0.0 };
        }
    }
    let ex = Example {
        src: vec![4, 9, 1, 13, 9, 7],
        src_ext: vec![4, 9, 20, 13, 9, 7],
        tgt: vec![9, 20, 15, 3],
        n_oov: 1,
    };
    (cfg, p, ex)
}

pub fn grad_check_cmd(a: &GradCheckArgs, m: &mut RunManifest) -> Result<()> {
    if a.epsilon.is_nan() || a.epsilon <= 0.0 {
        return usage("--epsilon must be positive");
    }
    let (cfg, params, ex) = grad_fixture(a);
    let opts = GradCheckOptions {
        epsilon: a.epsilon,
        max_coords: a.max_coords,
        seed: a.seed,
    };
    let r = grad_check(&params, &cfg, &ex, &opts)?;
    let passed = r.max_rel_error < a.tolerance;
    let report = json!({
        "cell": a.cell,
        "coverage_weight": a.coverage_weight,
        "epsilon": a.epsilon,
        "max_rel_error": r.max_rel_error,
        "worst": r.worst.map(|(name, idx)| json!({"tensor": name, "index": idx})),
        "checked": r.checked,
        "skipped": r.skipped,
        "tolerance": a.tolerance,
        "passed": passed,
    });
    let text = serde_json::to_string_pretty(&report)?;
    match &a.output {
        Some(out) => {
            std::fs::write(out, text + "\n").with_context(|| format!("cannot write {}", out.display()))?;
            m.output(out);
        }
        None => println!("{text}"),
    }
    if !passed {
        bail!("max relative error {:.3e} is not below {:.1e}", r.max_rel_error, a.tolerance);
    }
    Ok(())
}

pub fn humeval_export(a: &HumevalExportArgs, m: &mut RunManifest) -> Result<()> {
    let mut articles = load_selected(&a.input, &a.selection, m)?;
    let mut hyps = read_lines(&a.hyps, m)?;
    check_aligned("articles vs hypotheses", articles.len(), hyps.len())?;
    if let Some(n) = a.limit {
        articles.truncate(n);
        hyps.truncate(n);
    }
    let (tasks, key) = export_tasks(&articles, &hyps, a.seed)?;
    write_tasks(&a.tasks, &tasks)?;
    write_key(&a.key, &key)?;
    m.output(&a.tasks);
    m.output(&a.key);
    eprintln!("{} tasks exported", tasks.len());
    Ok(())
}

fn parse_rule(s: &str) -> Result<OutcomeRule> {
    if s == "plurality" {
        return Ok(OutcomeRule::Plurality);
    }
    match s.strip_prefix("threshold:").map(str::parse::<usize>) {
        Some(Ok(k)) if k > 0 => Ok(OutcomeRule::Threshold(k)),
        _ => usage(format!("--rule must be `plurality` or `threshold:K`, got `{s}`")),
    }
}

pub fn humeval_aggregate(a: &HumevalAggregateArgs, m: &mut RunManifest) -> Result<()> {
    let rule = parse_rule(&a.rule)?;
    if a.quorum == 0 {
        return usage("--quorum must be positive");
    }
    m.input(&a.votes)?;
    let votes = read_votes(&a.votes)?;
    let s = aggregate(&votes, a.quorum, a.supermajority, rule)?;
    match &a.output {
        Some(out) => {
            std::fs::write(out, s.to_json() + "\n").with_context(|| format!("cannot write {}", out.display()))?;
            m.output(out);
        }
        None => println!("{}", s.to_json()),
    }
    eprintln!(
        "{} items ({} excluded): model {:.2}, draw {:.2}, human {:.2}; supermajority model {:.2}, human {:.2}",
        s.n_items,
        s.excluded.len(),
        s.model_win_rate,
        s.draw_rate,
        s.human_win_rate,
        s.model_supermajority_rate,
        s.human_supermajority_rate
    );
    Ok(())
}

pub fn report(a: &ReportArgs, m: &mut RunManifest) -> Result<()> {
    let mut reports = Vec::with_capacity(a.inputs.len());
    for p in &a.inputs {
        m.input(p)?;
        let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
        let mut r = MetricReport::from_json(&text).with_context(|| format!("in {}", p.display()))?;
        if r.config.label.is_none() {
            r.config.label = p.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        reports.push(r);
    }
    let table = render_table(&reports.iter().collect::<Vec<_>>());
    match &a.output {
        Some(out) => {
            std::fs::write(out, &table).with_context(|| format!("cannot write {}", out.display()))?;
            m.output(out);
        }
        None => print!("{table}"),
    }
    Ok(())
}
