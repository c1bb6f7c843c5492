//! Encoder input layout with per-sentence [CLS]/[SEP] and interval segments,
//! warmup learning-rate schedules for separately optimized encoder and decoder,
//! and document corruption (sentence shuffle, rotation, span infilling).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::{TokenSeq, Vocab};

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedDoc {
    pub token_ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    pub cls_positions: Vec<usize>,
    pub attention_length: usize,
}

impl EncodedDoc {
    /// Sentence token ids with the [CLS]/[SEP] markers removed.
    pub fn sentences(&self, vocab: &Vocab) -> Vec<Vec<u32>> {
        let cls = vocab.id(CLS);
        let sep = vocab.id(SEP);
        let mut out = Vec::new();
        let mut current = Vec::new();
        for &id in &self.token_ids {
            if Some(id) == cls {
                current.clear();
            } else if Some(id) == sep {
                out.push(std::mem::take(&mut current));
            } else {
                current.push(id);
            }
        }
        out
    }
}

/// Lays out `[CLS] s1 [SEP] [CLS] s2 [SEP] ...` with segment ids alternating
/// 0/1 per sentence. A sentence that does not fit in `max_len` is dropped
/// along with everything after it; only the first sentence is ever cut short.
pub fn encode_document(sentences: &[TokenSeq], vocab: &Vocab, max_len: usize) -> Result<EncodedDoc> {
    let cls = vocab.id(CLS).ok_or_else(|| Error::MissingToken(CLS.into()))?;
    let sep = vocab.id(SEP).ok_or_else(|| Error::MissingToken(SEP.into()))?;
    if sentences.is_empty() {
        return Err(Error::Config("document has no sentences".into()));
    }
    if max_len < 3 {
        return Err(Error::Config(format!("max_len {max_len} cannot hold [CLS] x [SEP]")));
    }
    let mut doc = EncodedDoc {
        token_ids: Vec::new(),
        segment_ids: Vec::new(),
        cls_positions: Vec::new(),
        attention_length: 0,
    };
    for (idx, sentence) in sentences.iter().enumerate() {
        let room = max_len - doc.token_ids.len();
        let needed = sentence.len() + 2;
        let take = if needed <= room {
            sentence.len()
        } else if idx == 0 {
            room - 2
        } else {
            break;
        };
        let segment = (idx % 2) as u8;
        doc.cls_positions.push(doc.token_ids.len());
        doc.token_ids.push(cls);
        doc.token_ids
            .extend(sentence.tokens[..take].iter().map(|t| vocab.id_or_unk(t)));
        doc.token_ids.push(sep);
        doc.segment_ids
            .resize(doc.token_ids.len(), segment);
    }
    doc.attention_length = doc.token_ids.len();
    Ok(doc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub base_lr: f64,
    pub warmup_steps: u64,
}

impl ScheduleConfig {
    pub fn new(base_lr: f64, warmup_steps: u64) -> Result<Self> {
        if base_lr.is_nan() || base_lr <= 0.0 || warmup_steps < 1 {
            return Err(Error::Config(format!(
                "schedule needs base_lr > 0 and warmup >= 1, got {base_lr} / {warmup_steps}"
            )));
        }
        Ok(ScheduleConfig {
            base_lr,
            warmup_steps,
        })
    }
}

/// Inverse-square-root schedule with linear warmup:
/// `base_lr * min(step^-0.5, step * warmup^-1.5)`.
pub fn noam_lr(step: u64, cfg: &ScheduleConfig) -> f64 {
    let step = step.max(1) as f64;
    let warmup = cfg.warmup_steps as f64;
    cfg.base_lr * step.powf(-0.5).min(step * warmup.powf(-1.5))
}

/// Independent warmup schedules for a pretrained encoder and a fresh decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSchedule {
    pub encoder: ScheduleConfig,
    pub decoder: ScheduleConfig,
}

impl Default for DualSchedule {
    /// Encoder 2e-3 with 20k warmup steps, decoder 0.2 with 10k. These follow
    /// common practice for fine-tuning a pretrained encoder under a fresh
    /// decoder; they are defaults, not tuned values.
    fn default() -> Self {
        DualSchedule {
            encoder: ScheduleConfig {
                base_lr: 2e-3,
                warmup_steps: 20_000,
            },
            decoder: ScheduleConfig {
                base_lr: 0.2,
                warmup_steps: 10_000,
            },
        }
    }
}

impl DualSchedule {
    /// `(encoder_lr, decoder_lr)` at `step`.
    pub fn at(&self, step: u64) -> (f64, f64) {
        (noam_lr(step, &self.encoder), noam_lr(step, &self.decoder))
    }

    /// True when the decoder warms up faster and runs hotter than the encoder.
    pub fn is_separated(&self) -> bool {
        self.decoder.warmup_steps < self.encoder.warmup_steps
            && self.decoder.base_lr > self.encoder.base_lr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    ShuffleSentences,
    Rotate,
    Infill,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub mask_token: String,
    /// Mean span length for infilling.
    pub span_length_mean: f64,
    /// Share of tokens to cover with masked spans.
    pub mask_fraction: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, seed: u64) -> Self {
        NoiseSpec {
            kind,
            mask_token: MASK.into(),
            span_length_mean: 3.0,
            mask_fraction: 0.3,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kind == NoiseKind::Infill {
            if self.span_length_mean.is_nan() || self.span_length_mean <= 0.0 {
                return Err(Error::Config("span_length_mean must be > 0".into()));
            }
            if !(0.0..=1.0).contains(&self.mask_fraction) {
                return Err(Error::Config("mask_fraction must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corrupted {
    pub tokens: Vec<String>,
    /// Original tokens hidden under mask tokens (infill only).
    pub masked: usize,
    /// Original token count.
    pub original_len: usize,
}

/// Rotates so that the output starts at `offset`.
pub fn rotate_at<T: Clone>(tokens: &[T], offset: usize) -> Vec<T> {
    if tokens.is_empty() {
        return Vec::new();
    }
    let offset = offset % tokens.len();
    tokens[offset..].iter().chain(&tokens[..offset]).cloned().collect()
}

/// Applies one corruption to a document given as sentences.
pub fn corrupt(sentences: &[TokenSeq], spec: &NoiseSpec) -> Result<Corrupted> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let flat: Vec<String> = sentences.iter().flat_map(|s| s.tokens.iter().cloned()).collect();
    let original_len = flat.len();
    if original_len == 0 {
        return Ok(Corrupted {
            tokens: flat,
            masked: 0,
            original_len,
        });
    }
    match spec.kind {
        NoiseKind::ShuffleSentences => {
            let mut order: Vec<&TokenSeq> = sentences.iter().collect();
            order.shuffle(&mut rng);
            Ok(Corrupted {
                tokens: order.into_iter().flat_map(|s| s.tokens.iter().cloned()).collect(),
                masked: 0,
                original_len,
            })
        }
        NoiseKind::Rotate => {
            let offset = rng.random_range(0..original_len);
            Ok(Corrupted {
                tokens: rotate_at(&flat, offset),
                masked: 0,
                original_len,
            })
        }
        NoiseKind::Infill => Ok(infill(&flat, spec, &mut rng)),
    }
}

/// Masks Poisson-length spans (zero lengths become one) at uniformly chosen
/// unmasked positions until `mask_fraction` of the tokens are covered; each
/// span collapses to a single mask token.
fn infill(tokens: &[String], spec: &NoiseSpec, rng: &mut ChaCha8Rng) -> Corrupted {
    let n = tokens.len();
    let budget = (spec.mask_fraction * n as f64).round() as usize;
    let poisson = Poisson::new(spec.span_length_mean).expect("mean validated > 0");
    // span id per position; 0 = kept
    let mut span_of = vec![0usize; n];
    let mut masked = 0;
    let mut next_span = 1;
    while masked < budget {
        let free: Vec<usize> = (0..n).filter(|&i| span_of[i] == 0).collect();
        let start = free[rng.random_range(0..free.len())];
        let drawn = (poisson.sample(rng) as usize).max(1);
        let length = drawn.min(budget - masked);
        let mut i = start;
        while i < n && i - start < length && span_of[i] == 0 {
            span_of[i] = next_span;
            masked += 1;
            i += 1;
        }
        next_span += 1;
    }
    let mut out = Vec::with_capacity(n - masked + next_span);
    for i in 0..n {
        match span_of[i] {
            0 => out.push(tokens[i].clone()),
            s if i == 0 || span_of[i - 1] != s => out.push(spec.mask_token.clone()),
            _ => {}
        }
    }
    Corrupted {
        tokens: out,
        masked,
        original_len: n,
    }
}
