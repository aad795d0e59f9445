//! Delay-coordinate embedding: delay choice by average mutual information
//! and embedding dimension by false nearest neighbours.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fft::autocovariance;
use crate::kdtree::{KdTree, PointSet};

/// Number of equiprobable bins used by the mutual-information estimate.
pub const AMI_BINS: usize = 16;
/// Minimum series length accepted by [`ami_delay`].
pub const AMI_MIN_LENGTH: usize = 1000;
/// Default distance-ratio threshold of the false-neighbour test.
pub const DEFAULT_FNN_RTOL: f64 = 15.0;
/// Default loneliness threshold, in units of the series standard deviation.
pub const DEFAULT_FNN_ATOL: f64 = 2.0;
/// FNN fraction below which a dimension is accepted.
pub const FNN_ACCEPT_FRACTION: f64 = 0.01;

/// Delay embedding parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Embedding {
    /// Lag `J` in samples.
    pub delay: usize,
    /// Dimension `d`.
    pub dim: usize,
}

impl Embedding {
    /// Checked constructor.
    pub fn new(delay: usize, dim: usize) -> Result<Self> {
        if delay == 0 {
            return Err(Error::invalid("delay", "must be at least 1"));
        }
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        Ok(Self { delay, dim })
    }

    /// Number of delay vectors in a series of `len` samples.
    pub fn vector_count(&self, len: usize) -> usize {
        len.saturating_sub((self.dim - 1) * self.delay)
    }

    /// Zero-copy view of the delay vectors of `series`.
    pub fn view<'a>(&self, series: &'a [f64]) -> DelayVectors<'a> {
        DelayVectors {
            series,
            delay: self.delay,
            dim: self.dim,
            count: self.vector_count(series.len()),
        }
    }
}

/// Delay vectors `(x_i, x_{i+J}, …, x_{i+(d−1)J})` viewed in place.
#[derive(Debug, Clone, Copy)]
pub struct DelayVectors<'a> {
    series: &'a [f64],
    delay: usize,
    dim: usize,
    count: usize,
}

impl DelayVectors<'_> {
    /// Same view restricted to the first `count` vectors.
    pub fn truncated(mut self, count: usize) -> Self {
        self.count = self.count.min(count);
        self
    }

    /// Copies vector `i` into `out`.
    pub fn fill(&self, i: usize, out: &mut [f64]) {
        for (ax, o) in out.iter_mut().enumerate() {
            *o = self.series[i + ax * self.delay];
        }
    }
}

impl PointSet for DelayVectors<'_> {
    fn len(&self) -> usize {
        self.count
    }
    fn dim(&self) -> usize {
        self.dim
    }
    #[inline]
    fn coord(&self, index: usize, axis: usize) -> f64 {
        self.series[index + axis * self.delay]
    }
}

fn check_not_constant(series: &[f64]) -> Result<(f64, f64)> {
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if series.is_empty() || lo == hi {
        return Err(Error::Degenerate("series is constant"));
    }
    Ok((lo, hi))
}

/// Rank-based equiprobable bin index of every sample (ties by position).
fn equiprobable_bins(series: &[f64], bins: usize) -> Vec<u8> {
    let n = series.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| series[a].total_cmp(&series[b]).then(a.cmp(&b)));
    let mut out = vec![0u8; n];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = (rank * bins / n) as u8;
    }
    out
}

/// Average mutual information `I(τ)` (nats) for `τ = 0..=max_lag`, using
/// [`AMI_BINS`] equiprobable bins.
pub fn average_mutual_information(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    check_not_constant(series)?;
    let n = series.len();
    if max_lag + 2 > n {
        return Err(Error::invalid("max_lag", "must be below the series length"));
    }
    let b = AMI_BINS;
    let bins = equiprobable_bins(series, b);
    let mut out = Vec::with_capacity(max_lag + 1);
    let mut joint = vec![0u64; b * b];
    let mut pa = vec![0u64; b];
    let mut pb = vec![0u64; b];
    for lag in 0..=max_lag {
        joint.iter_mut().for_each(|c| *c = 0);
        pa.iter_mut().for_each(|c| *c = 0);
        pb.iter_mut().for_each(|c| *c = 0);
        let m = n - lag;
        for i in 0..m {
            let (u, v) = (bins[i] as usize, bins[i + lag] as usize);
            joint[u * b + v] += 1;
            pa[u] += 1;
            pb[v] += 1;
        }
        let mf = m as f64;
        let mut mi = 0.0;
        for u in 0..b {
            for v in 0..b {
                let c = joint[u * b + v];
                if c > 0 {
                    let p = c as f64 / mf;
                    mi += p * libm::log(p * mf * mf / (pa[u] as f64 * pb[v] as f64));
                }
            }
        }
        out.push(mi);
    }
    Ok(out)
}

/// How [`ami_delay`] arrived at its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayRule {
    /// Mutual information fell to the finite-sample bias floor.
    NoiseFloor,
    /// First local minimum of the mutual information.
    FirstMinimum,
    /// Fallback: first lag where the autocorrelation drops below `1/e`.
    AutocorrelationDecay,
    /// No criterion fired before `max_lag`; `max_lag` returned.
    MaxLag,
}

/// Delay choice and the curve it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayChoice {
    /// Selected delay in samples.
    pub delay: usize,
    /// Rule that selected it.
    pub rule: DelayRule,
    /// `I(τ)` for `τ = 0..=max_lag`.
    pub ami: Vec<f64>,
}

/// Mutual-information delay: the first lag at which `I(τ)` reaches the
/// finite-sample bias floor `3 (B−1)² / (2N)` (independence), otherwise its
/// first local minimum; falls back to the first `1/e` decay of the
/// autocorrelation when neither occurs before `max_lag`.
pub fn ami_delay(series: &[f64], max_lag: usize) -> Result<DelayChoice> {
    if series.len() < AMI_MIN_LENGTH {
        return Err(Error::InsufficientData {
            what: "samples for mutual information",
            have: series.len(),
            need: AMI_MIN_LENGTH,
        });
    }
    let ami = average_mutual_information(series, max_lag)?;
    let b = AMI_BINS as f64;
    let floor = 3.0 * (b - 1.0) * (b - 1.0) / (2.0 * series.len() as f64);
    for tau in 1..=max_lag {
        if ami[tau] <= floor {
            return Ok(DelayChoice {
                delay: tau,
                rule: DelayRule::NoiseFloor,
                ami,
            });
        }
        if ami[tau] < ami[tau - 1] && tau < max_lag && ami[tau] <= ami[tau + 1] {
            return Ok(DelayChoice {
                delay: tau,
                rule: DelayRule::FirstMinimum,
                ami,
            });
        }
    }
    let r = autocovariance(series, max_lag);
    let target = r[0] / core::f64::consts::E;
    if let Some(tau) = (1..=max_lag).find(|&l| r[l] < target) {
        return Ok(DelayChoice {
            delay: tau,
            rule: DelayRule::AutocorrelationDecay,
            ami,
        });
    }
    Ok(DelayChoice {
        delay: max_lag,
        rule: DelayRule::MaxLag,
        ami,
    })
}

/// Options of the false-nearest-neighbour scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnnOptions {
    /// Distance-ratio threshold.
    pub rtol: f64,
    /// Loneliness threshold in units of the series standard deviation.
    pub atol: f64,
    /// Neighbours closer in time than this are not considered (0 excludes
    /// only the point itself).
    pub theiler: usize,
    /// Upper bound on the number of reference vectors tested per dimension.
    pub max_refs: usize,
}

impl Default for FnnOptions {
    fn default() -> Self {
        Self {
            rtol: DEFAULT_FNN_RTOL,
            atol: DEFAULT_FNN_ATOL,
            theiler: 0,
            max_refs: 5000,
        }
    }
}

/// Result of [`fnn_embedding_dim`].
#[derive(Debug, Clone, PartialEq)]
pub struct FnnResult {
    /// False-neighbour fraction for `d = 1..=max_dim` (index `d − 1`).
    pub fractions: Vec<f64>,
    /// Smallest `d` whose fraction is below [`FNN_ACCEPT_FRACTION`], if any.
    pub dim: Option<usize>,
}

/// Evenly spaced reference indices (at most `max` of them) in `0..n`.
pub(crate) fn reference_indices(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    (0..max)
        .map(|i| (i as u128 * n as u128 / max as u128) as usize)
        .collect()
}

/// Kennel false-nearest-neighbour fractions for `d = 1..=max_dim`.
///
/// A neighbour pair at dimension `d` is false when adding the next delay
/// coordinate stretches it by more than `rtol` times its distance, or when the
/// extended distance exceeds `atol·σ`.
pub fn fnn_embedding_dim(series: &[f64], delay: usize, max_dim: usize, opts: FnnOptions) -> Result<FnnResult> {
    if max_dim < 2 {
        return Err(Error::invalid("max_dim", "must be at least 2"));
    }
    if delay == 0 {
        return Err(Error::invalid("delay", "must be at least 1"));
    }
    let span = max_dim * delay;
    if series.len() < span + 2 * opts.theiler + 10 {
        return Err(Error::InsufficientData {
            what: "samples for the embedding span",
            have: series.len(),
            need: span + 2 * opts.theiler + 10,
        });
    }
    check_not_constant(series)?;
    let sigma = libm::sqrt(crate::stats::variance(series));
    let mut fractions = Vec::with_capacity(max_dim);
    for d in 1..=max_dim {
        let emb = Embedding { delay, dim: d };
        // Vectors whose (d+1)-th coordinate exists.
        let n = series.len() - d * delay;
        let view = emb.view(series).truncated(n);
        let tree = KdTree::build(&view, n);
        let mut false_count = 0usize;
        let mut total = 0usize;
        let mut q = vec![0.0; d];
        for i in reference_indices(n, opts.max_refs) {
            view.fill(i, &mut q);
            let w = opts.theiler;
            let Some(nb) = tree.nearest(&view, &q, |j| j.abs_diff(i) > w) else {
                continue;
            };
            total += 1;
            let r = libm::sqrt(nb.dist2);
            let extra = (series[i + d * delay] - series[nb.index + d * delay]).abs();
            let r_ext = libm::sqrt(nb.dist2 + extra * extra);
            let ratio_false = if r > 0.0 { extra / r > opts.rtol } else { extra > 0.0 };
            if ratio_false || r_ext / sigma > opts.atol {
                false_count += 1;
            }
        }
        fractions.push(if total == 0 {
            1.0
        } else {
            false_count as f64 / total as f64
        });
    }
    let dim = fractions.iter().position(|&f| f < FNN_ACCEPT_FRACTION).map(|i| i + 1);
    Ok(FnnResult { fractions, dim })
}
