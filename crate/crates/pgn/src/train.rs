use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PgnConfig;
use crate::error::{PgnError, Result};
use crate::model::{forward_loss, loss_and_grad, Example};
use crate::params::PgnParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Optimizer updates.
    pub steps: usize,
    pub batch_size: usize,
    /// Micro-batches accumulated into each update.
    pub grad_accum: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Global gradient-norm clip.
    pub clip_norm: Option<f64>,
    /// Log train/validation loss every this many updates.
    pub eval_every: usize,
    /// Coverage stays off (no feature, no penalty) before this update.
    pub coverage_start: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 2000,
            batch_size: 16,
            grad_accum: 1,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            clip_norm: Some(2.0),
            eval_every: 100,
            coverage_start: 0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub step: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossCurve {
    pub points: Vec<LossPoint>,
}

impl LossCurve {
    /// CSV with header `step,train_loss,val_loss`; an empty field means no validation set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,train_loss,val_loss\n");
        for p in &self.points {
            let val = p.val_loss.map(|v| format!("{v}")).unwrap_or_default();
            writeln!(out, "{},{},{}", p.step, p.train_loss, val).unwrap();
        }
        out
    }
}

struct Adam {
    m: PgnParams,
    v: PgnParams,
    t: i32,
}

impl Adam {
    fn new(cfg: &PgnConfig) -> Self {
        Adam {
            m: PgnParams::zeros(cfg),
            v: PgnParams::zeros(cfg),
            t: 0,
        }
    }

    fn update(&mut self, params: &mut PgnParams, grads: &PgnParams, tc: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - tc.beta1.powi(self.t);
        let bc2 = 1.0 - tc.beta2.powi(self.t);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for ((((_, p), (_, g)), (_, m)), (_, v)) in tensors {
            for k in 0..p.data.len() {
                let gk = g.data[k];
                m.data[k] = tc.beta1 * m.data[k] + (1.0 - tc.beta1) * gk;
                v.data[k] = tc.beta2 * v.data[k] + (1.0 - tc.beta2) * gk * gk;
                let m_hat = m.data[k] / bc1;
                let v_hat = v.data[k] / bc2;
                p.data[k] -= tc.lr * m_hat / (v_hat.sqrt() + tc.adam_eps);
            }
        }
    }
}

/// Cycles through a shuffled permutation of example indices, reshuffling per epoch.
struct Sampler {
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl Sampler {
    fn new(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        Sampler {
            order,
            cursor: 0,
            rng,
        }
    }

    fn next(&mut self) -> usize {
        if self.cursor == self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        self.cursor += 1;
        self.order[self.cursor - 1]
    }
}

fn effective_config(cfg: &PgnConfig, tc: &TrainConfig, step: usize) -> PgnConfig {
    let mut c = cfg.clone();
    if step < tc.coverage_start {
        c.use_coverage = false;
    }
    c
}

/// Mean loss over `examples`.
pub fn mean_loss(params: &PgnParams, cfg: &PgnConfig, examples: &[Example]) -> Result<f64> {
    let mut total = 0.0;
    for ex in examples {
        total += forward_loss(params, cfg, ex)?.0;
    }
    Ok(total / examples.len().max(1) as f64)
}

/// Share of target tokens whose argmax prediction is right under teacher forcing.
pub fn teacher_forced_accuracy(params: &PgnParams, cfg: &PgnConfig, examples: &[Example]) -> Result<f64> {
    let (mut correct, mut total) = (0usize, 0usize);
    for ex in examples {
        let (_, diag) = forward_loss(params, cfg, ex)?;
        correct += diag.correct(&ex.tgt);
        total += ex.tgt.len();
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}

/// Adam training. Deterministic for a fixed seed; single-threaded.
pub fn train(
    cfg: &PgnConfig,
    init: PgnParams,
    train_set: &[Example],
    val_set: &[Example],
    tc: &TrainConfig,
) -> Result<(PgnParams, LossCurve)> {
    cfg.validate()?;
    if tc.batch_size == 0 || tc.grad_accum == 0 || tc.eval_every == 0 {
        return Err(PgnError::Config(
            "batch_size, grad_accum and eval_every must be >= 1".into(),
        ));
    }
    if train_set.is_empty() && tc.steps > 0 {
        return Err(PgnError::Config("training set is empty".into()));
    }
    let mut params = init;
    let mut curve = LossCurve::default();
    if tc.steps == 0 {
        return Ok((params, curve));
    }
    let mut adam = Adam::new(cfg);
    let mut sampler = Sampler::new(train_set.len(), tc.seed);
    let mut grads = PgnParams::zeros(cfg);
    let scale = 1.0 / (tc.batch_size * tc.grad_accum) as f64;
    let (mut window_loss, mut window_batches) = (0.0, 0usize);
    let mut last_good = params.clone();

    for step in 1..=tc.steps {
        let step_cfg = effective_config(cfg, tc, step);
        grads.clear();
        let mut step_loss = 0.0;
        for _ in 0..tc.grad_accum * tc.batch_size {
            let ex = &train_set[sampler.next()];
            step_loss += loss_and_grad(&params, &step_cfg, ex, &mut grads, scale)?.0 * scale;
        }
        if !step_loss.is_finite() || !grads.all_finite() {
            return Err(PgnError::Diverged {
                step,
                last_good: Box::new(last_good),
            });
        }
        if let Some(max_norm) = tc.clip_norm {
            let norm = grads.squared_norm().sqrt();
            if norm > max_norm {
                let mut clipped = PgnParams::zeros(cfg);
                clipped.add_scaled(&grads, max_norm / norm);
                grads = clipped;
            }
        }
        adam.update(&mut params, &grads, tc);
        if !params.all_finite() {
            return Err(PgnError::Diverged {
                step,
                last_good: Box::new(last_good),
            });
        }
        last_good.clone_from(&params);
        window_loss += step_loss;
        window_batches += 1;

        if step % tc.eval_every == 0 || step == tc.steps {
            let val_loss = if val_set.is_empty() {
                None
            } else {
                Some(mean_loss(&params, &step_cfg, val_set)?)
            };
            curve.points.push(LossPoint {
                step,
                train_loss: window_loss / window_batches as f64,
                val_loss,
            });
            window_loss = 0.0;
            window_batches = 0;
        }
    }
    Ok((params, curve))
}

/// Sources of random content tokens whose headline is their first `k` tokens.
/// Content ids avoid the reserved range; every target ends with EOS.
pub fn copy_task(
    n: usize,
    vocab_size: usize,
    k: usize,
    src_len: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Vec<Example> {
    use headline_core::tokenize::{Vocab, RESERVED};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = RESERVED.len() as u32;
    (0..n)
        .map(|_| {
            let len = rng.random_range(src_len.clone());
            let src: Vec<u32> = (0..len)
                .map(|_| rng.random_range(lo..vocab_size as u32))
                .collect();
            let mut tgt: Vec<u32> = src.iter().take(k).copied().collect();
            tgt.push(Vocab::EOS_ID);
            Example::closed(src, tgt)
        })
        .collect()
}
