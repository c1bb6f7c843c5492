//! One line per acceptance criterion: PASS, FAIL or NOT RUN (with the reason).
//! Exits non-zero if any criterion fails.
//!
//! The corpus-backed checks read `HEADLINE_RIA_TEST` (RIA-format JSONL holding
//! the test articles) and `HEADLINE_LENTA` (Lenta CSV); they are reported as
//! NOT RUN when those are unset.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use headline_core::baseline::{generate, FirstSentence};
use headline_core::corpus::{load_lenta, load_ria, Article};
use headline_core::humaneval::{aggregate, Choice, OutcomeRule, VoteRecord};
use headline_core::mechanisms::{
    corrupt, encode_document, noam_lr, rotate_at, NoiseKind, NoiseSpec, ScheduleConfig, CLS, MASK, SEP,
};
use headline_core::metrics::{
    aggregate_scores, corpus_bleu, novelty, novelty_profile, prepare, repetition_rate, rouge_l, score_example,
    BleuSmoothing, EvalConfig, MetricReport,
};
use headline_core::tokenize::{TokenSeq, Vocab};
use headline_pgn::{
    copy_task, final_distribution, grad_check, teacher_forced_accuracy, train, CellKind, Example, GradCheckOptions,
    PgnConfig, PgnParams, TrainConfig,
};

enum Outcome {
    Pass(String),
    Fail(String),
    NotRun(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---------------------------------------------------------------- corpora

const TOLERANCE: f64 = 1.5;
const RIA_TARGET: [f64; 5] = [23.8, 10.5, 16.6, 16.9, 21.8];
const LENTA_TARGET: [f64; 5] = [24.0, 10.6, 18.3, 17.6, 24.9];

fn corpus_from_env(var: &str) -> Option<Result<Vec<Article>, String>> {
    let path = std::env::var_os(var)?;
    let path = Path::new(&path);
    let loaded = if var.contains("LENTA") { load_lenta(path) } else { load_ria(path) };
    Some(loaded.map(|l| l.articles).map_err(|e| format!("{}: {e}", path.display())))
}

fn score_baseline(articles: &[Article]) -> (MetricReport, f64) {
    let start = Instant::now();
    let cfg = EvalConfig::default();
    let heads = generate(articles, &FirstSentence::default());
    let refs: Vec<TokenSeq> = articles.par_iter().map(|a| prepare(&a.title, &cfg)).collect();
    let hyps: Vec<TokenSeq> = heads.par_iter().map(|h| prepare(h, &cfg)).collect();
    let srcs: Vec<TokenSeq> = articles.par_iter().map(|a| prepare(&a.text, &cfg)).collect();
    let scores: Vec<_> = refs
        .par_iter()
        .zip(&hyps)
        .map(|(r, h)| score_example(&r.tokens, &h.tokens))
        .collect();
    let report = aggregate_scores(&scores, &hyps, Some(&srcs), &cfg).expect("non-empty corpus");
    (report, start.elapsed().as_secs_f64())
}

fn baseline_row(var: &str, target: [f64; 5]) -> Outcome {
    let articles = match corpus_from_env(var) {
        None => return Outcome::NotRun(format!("set {var} to the corpus file")),
        Some(Err(e)) => return Outcome::Fail(e),
        Some(Ok(a)) if a.is_empty() => return Outcome::Fail(format!("{var} holds no articles")),
        Some(Ok(a)) => a,
    };
    let (r, secs) = score_baseline(&articles);
    let got = [r.rouge_1, r.rouge_2, r.rouge_l, r.r_mean, r.bleu];
    let ok = got.iter().zip(&target).all(|(g, t)| (g - t).abs() <= TOLERANCE) && secs < 600.0;
    verdict(
        ok,
        format!(
            "{} articles in {secs:.0}s: R1/R2/RL/R-mean/BLEU {:.1}/{:.1}/{:.1}/{:.1}/{:.1} vs {:?} ±{TOLERANCE}",
            articles.len(),
            got[0],
            got[1],
            got[2],
            got[3],
            got[4],
            target
        ),
    )
}

// ---------------------------------------------------------------- metrics

fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << b.len()) {
        let sub: Vec<u8> = (0..b.len()).filter(|i| mask >> i & 1 == 1).map(|i| b[i]).collect();
        if sub.len() > best {
            let mut it = a.iter();
            if sub.iter().all(|x| it.any(|y| y == x)) {
                best = sub.len();
            }
        }
    }
    best
}

fn rouge_l_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    for i in 0..10_000 {
        let alphabet = rng.random_range(1..6u8);
        let mut draw = || -> Vec<u8> {
            let len = rng.random_range(0..=10);
            (0..len).map(|_| rng.random_range(0..alphabet)).collect()
        };
        let (a, b) = (draw(), draw());
        let l = brute_lcs(&a, &b);
        let expected = if l == 0 {
            0.0
        } else {
            let (p, r) = (l as f64 / b.len() as f64, l as f64 / a.len() as f64);
            2.0 * p * r / (p + r)
        };
        let got = rouge_l(&a, &b).f1;
        if got != expected {
            return Outcome::Fail(format!("pair {i}: {a:?} / {b:?}: {got} vs {expected}"));
        }
    }
    Outcome::Pass(format!("10000 pairs exact in {:.2}s", start.elapsed().as_secs_f64()))
}

fn evaluate_texts(refs: &[String], hyps: &[String]) -> MetricReport {
    let cfg = EvalConfig::default();
    let r: Vec<TokenSeq> = refs.iter().map(|t| prepare(t, &cfg)).collect();
    let h: Vec<TokenSeq> = hyps.iter().map(|t| prepare(t, &cfg)).collect();
    headline_core::metrics::evaluate_corpus(&r, &h, None, &cfg).unwrap()
}

fn identity_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // at least two tokens: a one-token pair has no bigrams and scores R2 = 0 by definition
    let words = |rng: &mut ChaCha8Rng, prefix: &str| -> String {
        let n = rng.random_range(2..12);
        (0..n).map(|_| format!("{prefix}{}", rng.random_range(0..30))).collect::<Vec<_>>().join(" ")
    };
    let refs: Vec<String> = (0..200).map(|_| words(&mut rng, "а")).collect();
    let same = evaluate_texts(&refs, &refs);
    let all = [same.rouge_1, same.rouge_2, same.rouge_l, same.r_mean, same.bleu];
    if all.iter().any(|&v| v != 100.0) {
        return Outcome::Fail(format!("identity gave {all:?}"));
    }
    let disjoint: Vec<String> = (0..200).map(|_| words(&mut rng, "б")).collect();
    let d = evaluate_texts(&refs, &disjoint);
    let zeros = [d.rouge_1, d.rouge_2, d.rouge_l, d.bleu];
    verdict(
        zeros.iter().all(|&v| v == 0.0),
        format!("identity all 100.0; disjoint R1/R2/RL/BLEU {zeros:?}"),
    )
}

/// BLEU with n-grams counted by linear scans.
fn reference_bleu(pairs: &[(Vec<String>, Vec<String>)]) -> f64 {
    let grams = |s: &[String], n: usize| -> Vec<Vec<String>> {
        if s.len() < n {
            return Vec::new();
        }
        (0..=s.len() - n).map(|i| s[i..i + n].to_vec()).collect()
    };
    let (mut log_sum, mut orders) = (0.0, 0);
    for n in 1..=4 {
        let (mut m, mut t) = (0, 0);
        for (r, h) in pairs {
            let mut rg = grams(r, n);
            for g in grams(h, n) {
                t += 1;
                if let Some(pos) = rg.iter().position(|x| *x == g) {
                    rg.remove(pos);
                    m += 1;
                }
            }
        }
        if t == 0 {
            continue;
        }
        if m == 0 {
            return 0.0;
        }
        orders += 1;
        log_sum += (m as f64 / t as f64).ln();
    }
    let c: usize = pairs.iter().map(|(_, h)| h.len()).sum();
    let r: usize = pairs.iter().map(|(r, _)| r.len()).sum();
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * (log_sum / orders as f64).exp()
}

fn bleu_spot() -> Outcome {
    let toks = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let pairs = vec![(toks("a b c d"), toks("a b c"))];
    let ours = corpus_bleu(&pairs, BleuSmoothing::None).unwrap().bleu;
    let theirs = reference_bleu(&pairs);
    verdict(
        (ours - 71.65).abs() <= 0.01 && (ours - theirs).abs() < 1e-9,
        format!("{ours:.4} (independent scorer {theirs:.4}, target 71.65 ±0.01)"),
    )
}

// ---------------------------------------------------------------- pgn

fn pgn_distribution() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let simplex = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(1e-6..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    };
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let v = rng.random_range(2..40);
        let n = rng.random_range(1..15);
        let ext = rng.random_range(0..4);
        let pv = simplex(&mut rng, v);
        let a = simplex(&mut rng, n);
        let src: Vec<u32> = (0..n).map(|_| rng.random_range(0..(v + ext) as u32)).collect();
        let p_gen = rng.random_range(0.0..=1.0);
        let out = final_distribution(p_gen, &pv, &a, &src, ext);
        let dev = (out.iter().sum::<f64>() - 1.0).abs();
        worst = worst.max(dev);
        if dev > 1e-9 || out.iter().any(|&p| p < 0.0) {
            return Outcome::Fail(format!("case {case}: sum off by {dev:e}"));
        }
        let copy = final_distribution(0.0, &pv, &a, &src, ext);
        if let Some(id) = (0..copy.len()).find(|&i| copy[i] > 0.0 && !src.contains(&(i as u32))) {
            return Outcome::Fail(format!("case {case}: p_gen=0 puts mass on {id} outside the source"));
        }
    }
    Outcome::Pass(format!("1000 cases, worst |Σ−1| = {worst:.1e}, p_gen=0 support within source ids"))
}

fn grad_fixture(cell: CellKind, lambda: f64) -> (PgnConfig, PgnParams, Example) {
    let cfg = PgnConfig {
        vocab_size: 20,
        embed_dim: 4,
        hidden_dim: 5,
        max_src_len: 8,
        max_tgt_len: 6,
        coverage_weight: lambda,
        use_coverage: true,
        cell,
        seed: 11,
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

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for cell in [CellKind::Lstm, CellKind::Gru] {
        for lambda in [0.0, 1.0] {
            let (cfg, p, ex) = grad_fixture(cell, lambda);
            match grad_check(&p, &cfg, &ex, &GradCheckOptions::default()) {
                Ok(r) => {
                    ok &= r.max_rel_error < 1e-4 && r.checked > 0;
                    parts.push(format!(
                        "{cell:?} λ={lambda}: {:.1e} ({} checked, {} skipped)",
                        r.max_rel_error, r.checked, r.skipped
                    ));
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("{cell:?} λ={lambda}: {e}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(ok && secs < 60.0, format!("{}; {secs:.1}s", parts.join("; ")))
}

fn toy_training() -> Outcome {
    let cfg = PgnConfig {
        vocab_size: 50,
        max_src_len: 10,
        max_tgt_len: 4,
        ..PgnConfig::default()
    };
    let data = copy_task(5000, 50, 3, 6..=10, 7);
    let (tr, va) = data.split_at(4500);
    let tc = TrainConfig::default();
    let start = Instant::now();
    let first = train(&cfg, PgnParams::init(&cfg), tr, va, &tc);
    let secs = start.elapsed().as_secs_f64();
    let second = train(&cfg, PgnParams::init(&cfg), tr, va, &tc);
    let ((p1, c1), (p2, c2)) = match (first, second) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Outcome::Fail(format!("training failed: {e}")),
    };
    let bits = |c: &headline_pgn::LossCurve| {
        c.points
            .iter()
            .map(|p| (p.step, p.train_loss.to_bits(), p.val_loss.map(f64::to_bits)))
            .collect::<Vec<_>>()
    };
    let identical = bits(&c1) == bits(&c2) && p1 == p2;
    let acc = match teacher_forced_accuracy(&p1, &cfg, va) {
        Ok(a) => a,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let last = c1.points.last().and_then(|p| p.val_loss).unwrap_or(f64::NAN);
    verdict(
        acc >= 0.95 && identical,
        format!(
            "held-out teacher-forced accuracy {acc:.4} after {} steps ({secs:.1}s, val loss {last:.3}); rerun curve bit-identical: {identical}",
            tc.steps
        ),
    )
}

// ---------------------------------------------------------------- mechanisms

fn mechanisms_suite() -> Outcome {
    let mut words: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
    words.extend([CLS.to_string(), SEP.to_string()]);
    let vocab = Vocab::from_tokens(&words);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let random_doc = |rng: &mut ChaCha8Rng| -> Vec<TokenSeq> {
        (0..rng.random_range(1..8))
            .map(|_| {
                let len = rng.random_range(1..12);
                TokenSeq::words((0..len).map(|_| format!("w{}", rng.random_range(0..20))))
            })
            .collect()
    };

    for d in 0..1000 {
        let doc = random_doc(&mut rng);
        let enc = encode_document(&doc, &vocab, 512).unwrap();
        let sentences = enc.sentences(&vocab);
        let want: Vec<Vec<u32>> = doc
            .iter()
            .map(|s| s.tokens.iter().map(|t| vocab.id(t).unwrap()).collect())
            .collect();
        if sentences != want {
            return Outcome::Fail(format!("doc {d}: round trip lost sentences"));
        }
        for (k, &pos) in enc.cls_positions.iter().enumerate() {
            let end = enc.cls_positions.get(k + 1).copied().unwrap_or(enc.token_ids.len());
            if enc.segment_ids[pos..end].iter().any(|&s| s as usize != k % 2) {
                return Outcome::Fail(format!("doc {d}: segment ids do not alternate"));
            }
        }
    }

    let sched = ScheduleConfig::new(2e-3, 20_000).unwrap();
    let peak = (1..=60_000u64)
        .max_by(|&a, &b| noam_lr(a, &sched).total_cmp(&noam_lr(b, &sched)))
        .unwrap();
    let at_peak = noam_lr(20_000, &sched);
    let at_one = noam_lr(1, &sched);
    let four_sig = |x: f64, t: f64| format!("{x:.4e}") == format!("{t:.4e}");
    if peak != 20_000 || !four_sig(at_peak, 1.4142e-5) || !four_sig(at_one, 7.0711e-10) {
        return Outcome::Fail(format!("peak {peak}, lr(20000) {at_peak:.4e}, lr(1) {at_one:.4e}"));
    }

    let sorted = |v: &[String]| {
        let mut v = v.to_vec();
        v.sort();
        v
    };
    for seed in 0..500 {
        let doc = random_doc(&mut rng);
        let flat: Vec<String> = doc.iter().flat_map(|s| s.tokens.clone()).collect();
        let shuffled = corrupt(&doc, &NoiseSpec::new(NoiseKind::ShuffleSentences, seed)).unwrap();
        // a shuffle is a concatenation of some ordering of the sentences
        let found = permutations_match(&doc, &shuffled.tokens);
        if !found || sorted(&shuffled.tokens) != sorted(&flat) {
            return Outcome::Fail(format!("shuffle seed {seed} broke the sentence multiset"));
        }
        let rotated = corrupt(&doc, &NoiseSpec::new(NoiseKind::Rotate, seed)).unwrap();
        if !(0..flat.len()).any(|o| rotate_at(&flat, o) == rotated.tokens) {
            return Outcome::Fail(format!("rotate seed {seed} is not a rotation"));
        }
    }

    let doc = vec![TokenSeq::words((0..1000).map(|i| format!("t{i}")))];
    let mut fractions = Vec::new();
    for seed in 0..100 {
        let spec = NoiseSpec {
            span_length_mean: 2.0,
            mask_fraction: 0.3,
            ..NoiseSpec::new(NoiseKind::Infill, seed)
        };
        let out = corrupt(&doc, &spec).unwrap();
        let kept = out.tokens.iter().filter(|t| *t != MASK).count();
        if kept + out.masked != 1000 {
            return Outcome::Fail(format!("infill seed {seed}: token accounting off"));
        }
        fractions.push(out.masked as f64 / 1000.0);
    }
    let (lo, hi) = fractions
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &f| (lo.min(f), hi.max(f)));
    verdict(
        lo >= 0.25 && hi <= 0.35,
        format!(
            "1000 docs encoded; lr peak at 20000, spot {at_peak:.4e}/{at_one:.4e}; 500 shuffle/rotate seeds; infill fraction in [{lo:.3}, {hi:.3}]"
        ),
    )
}

/// True when `tokens` is the concatenation of `doc`'s sentences in some order.
fn permutations_match(doc: &[TokenSeq], tokens: &[String]) -> bool {
    fn go(rest: &[String], left: &mut Vec<&TokenSeq>) -> bool {
        if left.is_empty() {
            return rest.is_empty();
        }
        for i in 0..left.len() {
            let s = left[i];
            if rest.starts_with(&s.tokens) {
                let taken = left.remove(i);
                if go(&rest[s.len()..], left) {
                    return true;
                }
                left.insert(i, taken);
            }
        }
        false
    }
    go(tokens, &mut doc.iter().collect())
}

// ---------------------------------------------------------------- human eval

fn human_eval() -> Outcome {
    let unanimous = |item: String, choice: Choice| -> Vec<VoteRecord> {
        (0..9)
            .map(|a| VoteRecord {
                item_id: item.clone(),
                annotator_id: format!("a{a}"),
                choice,
            })
            .collect()
    };
    let mut votes = Vec::new();
    for i in 0..100 {
        let c = match i {
            0..49 => Choice::Model,
            49..57 => Choice::Draw,
            _ => Choice::Human,
        };
        votes.extend(unanimous(format!("item{i:03}"), c));
    }
    let s = aggregate(&votes, 9, 5, OutcomeRule::Plurality).unwrap();
    let rates = [s.model_win_rate, s.draw_rate, s.human_win_rate];
    if rates != [0.49, 0.08, 0.43] || s.model_supermajority_rate != 0.49 || s.human_supermajority_rate != 0.43 {
        return Outcome::Fail(format!("fixture gave {rates:?}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let choices = [Choice::Model, Choice::Human, Choice::Draw];
    for set in 0..1000 {
        let mut votes = Vec::new();
        for item in 0..rng.random_range(1..20) {
            for a in 0..rng.random_range(1..12) {
                votes.push(VoteRecord {
                    item_id: format!("i{item}"),
                    annotator_id: format!("a{a}"),
                    choice: choices[rng.random_range(0..3)],
                });
            }
        }
        let swapped: Vec<VoteRecord> = votes
            .iter()
            .map(|v| VoteRecord {
                choice: v.choice.swapped(),
                ..v.clone()
            })
            .collect();
        let quorum = rng.random_range(1..12);
        let a = aggregate(&votes, quorum, quorum / 2 + 1, OutcomeRule::Plurality).unwrap();
        let b = aggregate(&swapped, quorum, quorum / 2 + 1, OutcomeRule::Plurality).unwrap();
        let symmetric = a.model_win_rate == b.human_win_rate
            && a.human_win_rate == b.model_win_rate
            && a.draw_rate == b.draw_rate
            && a.model_supermajority_rate == b.human_supermajority_rate
            && a.human_supermajority_rate == b.model_supermajority_rate;
        let sums = a.n_items == 0 || (a.model_win_rate + a.draw_rate + a.human_win_rate - 1.0).abs() <= 1e-9;
        if !symmetric || !sums {
            return Outcome::Fail(format!("vote set {set} breaks MODEL/HUMAN symmetry"));
        }
    }
    Outcome::Pass("fixture 0.49/0.08/0.43, supermajority 0.49/0.43; 1000 relabeled vote sets symmetric".into())
}

// ---------------------------------------------------------------- novelty

fn novelty_fixtures() -> Outcome {
    let toks = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let src = toks("a b c d");
    let head = toks("a b x");
    let n1 = novelty(&src, &head, 1).unwrap();
    let n2 = novelty(&src, &head, 2).unwrap();
    let copied: Vec<Vec<String>> = vec![toks("b c d"), toks("a b")];
    let sources = vec![src.clone(), src.clone()];
    let profile = novelty_profile(&sources, &copied, 4);
    let zero_everywhere = profile.values().all(|&v| v == 0.0);
    let rep = repetition_rate(&[TokenSeq::words(["a", "b", "a", "b"]), TokenSeq::words(["a", "b", "c"])], 2);
    verdict(
        (n1 - 1.0 / 3.0).abs() < 1e-15 && n2 == 0.5 && zero_everywhere && rep == 0.5,
        format!("novelty {n1:.4}/{n2:.4}; full copy {profile:?}; repetition fixture {rep}"),
    )
}

fn novelty_direction() -> Outcome {
    let mut ran = Vec::new();
    for var in ["HEADLINE_RIA_TEST", "HEADLINE_LENTA"] {
        let articles = match corpus_from_env(var) {
            None => continue,
            Some(Err(e)) => return Outcome::Fail(e),
            Some(Ok(a)) => a,
        };
        if articles.len() < 1000 {
            return Outcome::Fail(format!("{var} has {} articles; need ≥ 1000", articles.len()));
        }
        let cfg = EvalConfig::default();
        let heads = generate(&articles, &FirstSentence::default());
        let src: Vec<TokenSeq> = articles.par_iter().map(|a| prepare(&a.text, &cfg)).collect();
        let refs: Vec<TokenSeq> = articles.par_iter().map(|a| prepare(&a.title, &cfg)).collect();
        let hyps: Vec<TokenSeq> = heads.par_iter().map(|h| prepare(h, &cfg)).collect();
        let r: BTreeMap<String, f64> = novelty_profile(&src, &refs, 4);
        let h = novelty_profile(&src, &hyps, 4);
        let ok = r.keys().all(|k| h[k] < r[k]);
        ran.push((var, ok, format!("{var}: reference {r:?} vs first sentence {h:?}")));
    }
    if ran.is_empty() {
        return Outcome::NotRun("set HEADLINE_RIA_TEST or HEADLINE_LENTA".into());
    }
    verdict(
        ran.iter().all(|(_, ok, _)| *ok),
        ran.into_iter().map(|(_, _, d)| d).collect::<Vec<_>>().join("; "),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("first-sentence baseline, RIA test split", || baseline_row("HEADLINE_RIA_TEST", RIA_TARGET)),
        ("first-sentence baseline, Lenta", || baseline_row("HEADLINE_LENTA", LENTA_TARGET)),
        ("ROUGE-L equals brute-force LCS oracle", rouge_l_oracle),
        ("ROUGE/BLEU identity and disjoint suite", identity_suite),
        ("BLEU spot value", bleu_spot),
        ("PGN final distribution invariants", pgn_distribution),
        ("PGN gradient check", gradient_check),
        ("PGN toy copy-task training", toy_training),
        ("mechanisms suite", mechanisms_suite),
        ("human-eval aggregation", human_eval),
        ("novelty/repetition fixtures", novelty_fixtures),
        ("novelty direction on a real corpus", novelty_direction),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let line = match check() {
            Outcome::Pass(d) => format!("PASS     {name}: {d}"),
            Outcome::Fail(d) => {
                failed += 1;
                format!("FAIL     {name}: {d}")
            }
            Outcome::NotRun(d) => format!("NOT RUN  {name}: {d}"),
        };
        println!("{line}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
