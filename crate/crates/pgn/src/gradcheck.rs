//! Central finite-difference check of the analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::PgnConfig;
use crate::error::{PgnError, Result};
use crate::model::{forward_loss, loss_and_grad, Diagnostics, Example};
use crate::params::PgnParams;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor name and flat index of the worst coordinate.
    pub worst: Option<(&'static str, usize)>,
    pub checked: usize,
    /// Coordinates whose probes moved a coverage `min` term across its kink.
    pub skipped: usize,
}

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    pub epsilon: f64,
    /// Check a random subset of this many coordinates instead of all.
    pub max_coords: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            epsilon: 1e-4,
            max_coords: None,
            seed: 0,
        }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Signed gaps `a_t[i] − c_t[i]` of every coverage `min` term, step by step.
fn min_gaps(diag: &Diagnostics) -> Vec<f64> {
    let n = diag.attention.first().map_or(0, Vec::len);
    let mut coverage = vec![0.0; n];
    let mut gaps = Vec::new();
    for attn in &diag.attention {
        gaps.extend(attn.iter().zip(&coverage).map(|(a, c)| a - c));
        for (c, a) in coverage.iter_mut().zip(attn) {
            *c += a;
        }
    }
    gaps
}

/// True when some term within `margin` of its kink sits on different sides
/// of it across the base point and the two probes.
fn crosses_kink(base: &[f64], plus: &[f64], minus: &[f64], margin: f64) -> bool {
    let side = |g: f64| g <= 0.0;
    base.iter().zip(plus).zip(minus).any(|((&b, &p), &m)| {
        let near = b.abs().min(p.abs()).min(m.abs()) < margin;
        near && (side(b) != side(p) || side(b) != side(m))
    })
}

/// Compares analytic gradients with `(L(θ+ε) − L(θ−ε)) / 2ε` per coordinate.
pub fn grad_check(
    params: &PgnParams,
    cfg: &PgnConfig,
    example: &Example,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut grads = PgnParams::zeros(cfg);
    let (_, base_diag) = loss_and_grad(params, cfg, example, &mut grads, 1.0)?;
    if let Some(name) = grads.first_non_finite() {
        return Err(PgnError::NonFiniteGradient(name.to_string()));
    }
    let coverage_active = cfg.use_coverage && cfg.coverage_weight > 0.0;
    let margin = 10.0 * opts.epsilon;
    let base_gaps = min_gaps(&base_diag);

    let mut coords: Vec<(usize, usize)> = params
        .tensors()
        .iter()
        .enumerate()
        .flat_map(|(ti, (_, t))| (0..t.len()).map(move |k| (ti, k)))
        .collect();
    if let Some(limit) = opts.max_coords {
        if limit < coords.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut picked: Vec<usize> = sample(&mut rng, coords.len(), limit).into_vec();
            picked.sort_unstable();
            coords = picked.into_iter().map(|i| coords[i]).collect();
        }
    }

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        skipped: 0,
    };
    let mut probe = params.clone();
    for (ti, k) in coords {
        let original = params.tensors()[ti].1.data[k];
        let mut eval = |value: f64| -> Result<(f64, Diagnostics)> {
            probe.tensors_mut()[ti].1.data[k] = value;
            forward_loss(&probe, cfg, example)
        };
        let (plus, diag_plus) = eval(original + opts.epsilon)?;
        let (minus, diag_minus) = eval(original - opts.epsilon)?;
        probe.tensors_mut()[ti].1.data[k] = original;

        if coverage_active && crosses_kink(&base_gaps, &min_gaps(&diag_plus), &min_gaps(&diag_minus), margin) {
            report.skipped += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * opts.epsilon);
        let (name, tensor) = grads.tensors()[ti];
        let err = relative_error(tensor.data[k], numeric);
        report.checked += 1;
        if report.worst.is_none() || err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst = Some((name, k));
        }
    }
    Ok(report)
}
