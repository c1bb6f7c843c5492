//! ROUGE, BLEU, novelty and repetition scoring over word tokens.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::normalize;
use crate::error::{Error, Result};
use crate::tokenize::{word_tokenize, TokenSeq};

pub const MAX_BLEU_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_overlap(overlap: usize, hyp_total: usize, ref_total: usize) -> Self {
        if hyp_total == 0 || ref_total == 0 {
            return Self::default();
        }
        let precision = overlap as f64 / hyp_total as f64;
        let recall = overlap as f64 / ref_total as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RougeScore {
            precision,
            recall,
            f1,
        }
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_default() += 1;
    }
    counts
}

fn ngram_set<T: Eq + Hash>(tokens: &[T], n: usize) -> HashSet<&[T]> {
    if n == 0 || tokens.len() < n {
        return HashSet::new();
    }
    tokens.windows(n).collect()
}

/// Multiset overlap of n-grams, and the hypothesis and reference n-gram totals.
fn clipped_overlap<T: Eq + Hash>(reference: &[T], hypothesis: &[T], n: usize) -> (usize, usize, usize) {
    let ref_counts = ngram_counts(reference, n);
    let hyp_counts = ngram_counts(hypothesis, n);
    let overlap = hyp_counts
        .iter()
        .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
        .sum();
    (
        overlap,
        hypothesis.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    )
}

/// ROUGE-N with multiset n-gram overlap.
pub fn rouge_n<T: Eq + Hash>(reference: &[T], hypothesis: &[T], n: usize) -> RougeScore {
    assert!(n >= 1, "rouge_n needs n >= 1");
    let (overlap, hyp_total, ref_total) = clipped_overlap(reference, hypothesis, n);
    RougeScore::from_overlap(overlap, hyp_total, ref_total)
}

/// Length of the longest common subsequence, O(|a|·|b|) time and O(|b|) memory.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE-L: plain LCS precision/recall/F1.
pub fn rouge_l<T: Eq>(reference: &[T], hypothesis: &[T]) -> RougeScore {
    if reference.is_empty() || hypothesis.is_empty() {
        return RougeScore::default();
    }
    RougeScore::from_overlap(lcs_len(reference, hypothesis), hypothesis.len(), reference.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BleuSmoothing {
    /// Orders with no hypothesis n-grams are dropped; a zero match count gives BLEU 0.
    #[default]
    None,
    /// Add one to numerator and denominator of every order above 1.
    AddOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuBreakdown {
    /// Modified precisions for orders 1..=4; `None` when the order was excluded.
    pub precisions: Vec<Option<f64>>,
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
    pub bleu: f64,
}

/// Corpus BLEU with a single reference per hypothesis, max order 4, uniform weights.
pub fn corpus_bleu<R, H>(pairs: &[(R, H)], smoothing: BleuSmoothing) -> Result<BleuBreakdown>
where
    R: AsRef<[String]>,
    H: AsRef<[String]>,
{
    if pairs.is_empty() {
        return Err(Error::EmptyBleuCorpus);
    }
    let mut matches = [0usize; MAX_BLEU_ORDER];
    let mut totals = [0usize; MAX_BLEU_ORDER];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (r, h) in pairs {
        let (r, h) = (r.as_ref(), h.as_ref());
        hyp_len += h.len();
        ref_len += r.len();
        for n in 1..=MAX_BLEU_ORDER {
            let (overlap, hyp_total, _) = clipped_overlap(r, h, n);
            matches[n - 1] += overlap;
            totals[n - 1] += hyp_total;
        }
    }
    Ok(bleu_from_counts(&matches, &totals, hyp_len, ref_len, smoothing))
}

/// BLEU from pooled clipped match counts and hypothesis n-gram totals.
pub fn bleu_from_counts(
    matches: &[usize; MAX_BLEU_ORDER],
    totals: &[usize; MAX_BLEU_ORDER],
    hyp_len: usize,
    ref_len: usize,
    smoothing: BleuSmoothing,
) -> BleuBreakdown {
    let precisions: Vec<Option<f64>> = (0..MAX_BLEU_ORDER)
        .map(|i| {
            if totals[i] == 0 {
                return None;
            }
            let (m, t) = match smoothing {
                BleuSmoothing::AddOne if i > 0 => (matches[i] + 1, totals[i] + 1),
                _ => (matches[i], totals[i]),
            };
            Some(m as f64 / t as f64)
        })
        .collect();
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    let included: Vec<f64> = precisions.iter().flatten().copied().collect();
    let bleu = if included.is_empty() || included.contains(&0.0) {
        0.0
    } else {
        let log_mean = included.iter().map(|p| p.ln()).sum::<f64>() / included.len() as f64;
        100.0 * brevity_penalty * log_mean.exp()
    };
    BleuBreakdown {
        precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
        bleu,
    }
}

/// Share of distinct headline n-grams absent from the source; `None` when the
/// headline is shorter than `n`.
pub fn novelty<T: Eq + Hash>(source: &[T], headline: &[T], n: usize) -> Option<f64> {
    assert!(n >= 1, "novelty needs n >= 1");
    let head = ngram_set(headline, n);
    if head.is_empty() {
        return None;
    }
    let src = ngram_set(source, n);
    let novel = head.iter().filter(|g| !src.contains(*g)).count();
    Some(novel as f64 / head.len() as f64)
}

/// True when some n-gram occurs at least twice in `tokens`.
pub fn has_repeated_ngram<T: Eq + Hash>(tokens: &[T], n: usize) -> bool {
    let mut seen = HashSet::new();
    n >= 1 && tokens.len() >= n && tokens.windows(n).any(|g| !seen.insert(g))
}

/// Fraction of headlines containing a repeated n-gram.
pub fn repetition_rate<S: AsRef<[String]>>(headlines: &[S], n: usize) -> f64 {
    assert!(n >= 1, "repetition_rate needs n >= 1");
    if headlines.is_empty() {
        return 0.0;
    }
    let flagged = headlines
        .iter()
        .filter(|h| has_repeated_ngram(h.as_ref(), n))
        .count();
    flagged as f64 / headlines.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub tokenizer: String,
    pub lowercase: bool,
    pub stemming: bool,
    pub rouge_average: String,
    pub bleu_max_order: usize,
    pub bleu_smoothing: BleuSmoothing,
    pub novelty_max_n: usize,
    pub repetition_n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tokenizer: "word".into(),
            lowercase: true,
            stemming: false,
            rouge_average: "macro_f1".into(),
            bleu_max_order: MAX_BLEU_ORDER,
            bleu_smoothing: BleuSmoothing::None,
            novelty_max_n: 4,
            repetition_n: 2,
            label: None,
        }
    }
}

/// The tokens a raw text is scored on: normalized (case folded unless
/// `lowercase` is off) and word-tokenized.
pub fn prepare(text: &str, config: &EvalConfig) -> TokenSeq {
    if config.lowercase {
        word_tokenize(&normalize(text))
    } else {
        let composed: String = text.nfc().collect();
        word_tokenize(&composed.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

/// Corpus-level scores. ROUGE, R-mean and BLEU are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rouge_1: f64,
    pub rouge_2: f64,
    pub rouge_l: f64,
    pub r_mean: f64,
    pub bleu: f64,
    /// Keyed "1".."4"; absent when no sources were supplied.
    pub novelty: Option<BTreeMap<String, f64>>,
    pub repetition_rate: f64,
    pub n_examples: usize,
    pub bleu_breakdown: BleuBreakdown,
    pub config: EvalConfig,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(data: &str) -> Result<Self> {
        serde_json::from_str(data).map_err(|e| Error::Malformed {
            line: e.line(),
            reason: e.to_string(),
        })
    }

    pub fn label(&self) -> &str {
        self.config.label.as_deref().unwrap_or("model")
    }
}

/// Per-example scores: ROUGE-1/2/L F1 and BLEU sufficient statistics.
#[derive(Debug, Clone, Default)]
pub struct ExampleScore {
    pub rouge: [f64; 3],
    pub matches: [usize; MAX_BLEU_ORDER],
    pub totals: [usize; MAX_BLEU_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

pub fn score_example(reference: &[String], hypothesis: &[String]) -> ExampleScore {
    let mut s = ExampleScore {
        rouge: [
            rouge_n(reference, hypothesis, 1).f1,
            rouge_n(reference, hypothesis, 2).f1,
            rouge_l(reference, hypothesis).f1,
        ],
        hyp_len: hypothesis.len(),
        ref_len: reference.len(),
        ..Default::default()
    };
    for n in 1..=MAX_BLEU_ORDER {
        let (overlap, hyp_total, _) = clipped_overlap(reference, hypothesis, n);
        s.matches[n - 1] = overlap;
        s.totals[n - 1] = hyp_total;
    }
    s
}

/// Macro-averaged novelty per order for items long enough to have n-grams.
pub fn novelty_profile<S, H>(sources: &[S], headlines: &[H], max_n: usize) -> BTreeMap<String, f64>
where
    S: AsRef<[String]>,
    H: AsRef<[String]>,
{
    (1..=max_n)
        .map(|n| {
            let vals: Vec<f64> = sources
                .iter()
                .zip(headlines)
                .filter_map(|(s, h)| novelty(s.as_ref(), h.as_ref(), n))
                .collect();
            let mean = if vals.is_empty() {
                0.0
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            (n.to_string(), mean)
        })
        .collect()
}

/// Aggregates already-computed per-example scores (in corpus order).
pub fn aggregate_scores(
    scores: &[ExampleScore],
    hyps: &[TokenSeq],
    sources: Option<&[TokenSeq]>,
    config: &EvalConfig,
) -> Result<MetricReport> {
    if scores.is_empty() {
        return Err(Error::EmptyBleuCorpus);
    }
    let n = scores.len() as f64;
    let mut sums = [0.0f64; 3];
    let mut matches = [0usize; MAX_BLEU_ORDER];
    let mut totals = [0usize; MAX_BLEU_ORDER];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for s in scores {
        for (acc, v) in sums.iter_mut().zip(s.rouge) {
            *acc += v;
        }
        for k in 0..MAX_BLEU_ORDER {
            matches[k] += s.matches[k];
            totals[k] += s.totals[k];
        }
        hyp_len += s.hyp_len;
        ref_len += s.ref_len;
    }
    let [rouge_1, rouge_2, rouge_l] = sums.map(|v| 100.0 * v / n);
    let breakdown = bleu_from_counts(&matches, &totals, hyp_len, ref_len, config.bleu_smoothing);
    let novelty = sources.map(|src| novelty_profile(src, hyps, config.novelty_max_n));
    Ok(MetricReport {
        rouge_1,
        rouge_2,
        rouge_l,
        r_mean: (rouge_1 + rouge_2 + rouge_l) / 3.0,
        bleu: breakdown.bleu,
        novelty,
        repetition_rate: repetition_rate(hyps, config.repetition_n),
        n_examples: scores.len(),
        bleu_breakdown: breakdown,
        config: config.clone(),
    })
}

/// Scores aligned references and hypotheses; novelty is computed against
/// `sources` when given.
pub fn evaluate_corpus(
    refs: &[TokenSeq],
    hyps: &[TokenSeq],
    sources: Option<&[TokenSeq]>,
    config: &EvalConfig,
) -> Result<MetricReport> {
    if refs.len() != hyps.len() {
        return Err(Error::LengthMismatch {
            refs: refs.len(),
            hyps: hyps.len(),
        });
    }
    if let Some(src) = sources {
        if src.len() != refs.len() {
            return Err(Error::LengthMismatch {
                refs: src.len(),
                hyps: hyps.len(),
            });
        }
    }
    let scores: Vec<ExampleScore> = refs
        .iter()
        .zip(hyps)
        .map(|(r, h)| score_example(&r.tokens, &h.tokens))
        .collect();
    aggregate_scores(&scores, hyps, sources, config)
}

/// Renders reports as a fixed-width table with columns R1, R2, RL, R-mean, BLEU.
pub fn render_table(reports: &[&MetricReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.label().chars().count())
        .chain(std::iter::once(5))
        .max()
        .unwrap_or(5);
    let mut out = format!(
        "{:<width$} | {:>6} | {:>6} | {:>6} | {:>6} | {:>6}\n",
        "Model", "R1", "R2", "RL", "R-mean", "BLEU"
    );
    out.push_str(&format!("{}\n", "-".repeat(width + 5 * 9)));
    for r in reports {
        out.push_str(&format!(
            "{:<width$} | {:>6.1} | {:>6.1} | {:>6.1} | {:>6.1} | {:>6.1}\n",
            r.label(),
            r.rouge_1,
            r.rouge_2,
            r.rouge_l,
            r.r_mean,
            r.bleu
        ));
    }
    out
}
