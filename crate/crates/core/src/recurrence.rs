//! Coarse-grained recurrence statistics: invariant density, cell measure,
//! first-return times, Kac's lemma, and return-time distribution tests.
//!
//! Time is counted in samples throughout. A *visit* is any sample whose value
//! lies in the cell (consecutive samples inside the cell are separate visits,
//! so a gap of one sample is a legitimate return); with that convention the
//! discrete-time Kac identity `⟨τ⟩·μ = 1` holds up to end effects.
//!
//! The exponential law `μ e^{−μτ}` becomes the geometric law
//! `P(τ = k) = μ(1−μ)^{k−1}` for sampled dynamics, and the Erlang-2 law
//! `μ²τ e^{−μτ}` becomes the negative binomial `(s−1) μ² (1−μ)^{s−2}`; those
//! discrete forms are what the goodness-of-fit tests compare against.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats::{ks_pvalue, ks_statistic_discrete, pearson};

/// Default histogram bin width (signal units).
pub const DEFAULT_BIN_WIDTH: f64 = 1e-2;
/// Minimum number of return times for the distribution fit.
pub const MIN_RETURNS_FOR_FIT: usize = 500;
/// Minimum number of visits for the successive-return test.
pub const MIN_VISITS_FOR_PAIRS: usize = 10_000;
/// KS p-value above which a fixed-rate law is accepted.
pub const KS_ACCEPT_P: f64 = 0.01;
/// Share of the return-time mass on the ten most frequent values above
/// which the distribution is declared discrete.
pub const DISCRETE_MASS_FRACTION: f64 = 0.9;
/// Largest |serial correlation| of consecutive return times compatible with
/// independent (Poissonian) visits.
pub const MAX_SERIAL_CORRELATION: f64 = 0.05;

/// Normalized histogram of the signal values.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantDensity {
    /// Left edge of the first bin (series minimum).
    pub lo: f64,
    /// Bin width.
    pub bin_width: f64,
    /// Samples per bin; sums to the series length.
    pub counts: Vec<u64>,
    /// Density per bin, `counts / (N · width)`.
    pub rho: Vec<f64>,
}

impl InvariantDensity {
    /// Number of samples histogrammed.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin edges, one more than the number of bins.
    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=self.counts.len())
            .map(|i| self.lo + i as f64 * self.bin_width)
            .collect()
    }

    /// Bin holding `x`; values beyond the last edge fall in the last bin.
    pub fn bin_of(&self, x: f64) -> usize {
        let i = libm::floor((x - self.lo) / self.bin_width);
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.counts.len() - 1)
        }
    }

    /// `Σ ρ · width`, equal to 1 up to rounding.
    pub fn normalization(&self) -> f64 {
        crate::sum::neumaier(&self.rho) * self.bin_width
    }

    /// Probability mass of bin `i`.
    pub fn mass(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.total() as f64
    }
}

fn range(series: &[f64]) -> (f64, f64) {
    series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)))
}

/// Histogram of `series` over `[min, max]` with bins of `bin_width`.
pub fn invariant_density(series: &[f64], bin_width: f64) -> Result<InvariantDensity> {
    let (lo, hi) = range(series);
    if series.is_empty() || lo == hi {
        return Err(Error::Degenerate("series is constant"));
    }
    // At least ten bins across the sampled range, with 1% slack so that a
    // nominal-range width (0.1 for data on [0, 1]) is not rejected because the
    // sample extremes fall just short of the nominal ends.
    if !(bin_width > 0.0) || bin_width > 1.01 * (hi - lo) / 10.0 {
        return Err(Error::invalid(
            "bin_width",
            alloc::format!("must lie in (0, range/10] ≈ (0, {}]", (hi - lo) / 10.0),
        ));
    }
    let nbins = (libm::floor((hi - lo) / bin_width) as usize + 1).max(1);
    let mut d = InvariantDensity {
        lo,
        bin_width,
        counts: vec![0; nbins],
        rho: Vec::new(),
    };
    for &x in series {
        let b = d.bin_of(x);
        d.counts[b] += 1;
    }
    let scale = 1.0 / (series.len() as f64 * bin_width);
    d.rho = d.counts.iter().map(|&c| c as f64 * scale).collect();
    Ok(d)
}

/// How the recurrence cell is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellPolicy {
    /// The most populated bin; ties go to the lowest-valued bin.
    Mode,
    /// The bin containing the median sample.
    MedianSupport,
    /// A caller-supplied half-open interval `[lo, hi)`.
    Explicit {
        /// Lower edge (inclusive).
        lo: f64,
        /// Upper edge (exclusive).
        hi: f64,
    },
}

impl CellPolicy {
    /// Short name for manifests.
    pub fn name(&self) -> &'static str {
        match self {
            CellPolicy::Mode => "mode",
            CellPolicy::MedianSupport => "median-support",
            CellPolicy::Explicit { .. } => "explicit",
        }
    }
}

/// The coarse-graining cell `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// Lower edge.
    pub lo: f64,
    /// Upper edge.
    pub hi: f64,
    /// For histogram-derived cells, the bin and the histogram geometry, so that
    /// membership is decided by exactly the same arithmetic as the density.
    bin: Option<(usize, f64, f64, usize)>,
}

impl Cell {
    /// Explicit half-open interval.
    pub fn explicit(lo: f64, hi: f64) -> Self {
        Self { lo, hi, bin: None }
    }

    /// Whether `x` lies in the cell.
    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        match self.bin {
            Some((b, lo, w, nbins)) => {
                let i = libm::floor((x - lo) / w);
                let i = if i <= 0.0 { 0 } else { (i as usize).min(nbins - 1) };
                i == b
            }
            None => x >= self.lo && x < self.hi,
        }
    }

    /// Histogram bin the cell was taken from, if any.
    pub fn bin(&self) -> Option<usize> {
        self.bin.map(|b| b.0)
    }
}

/// Chooses a cell from a density.
pub fn select_cell(density: &InvariantDensity, series: &[f64], policy: CellPolicy) -> Result<Cell> {
    if density.counts.is_empty() || density.total() == 0 {
        return Err(Error::Degenerate("empty density"));
    }
    let from_bin = |b: usize| Cell {
        lo: density.lo + b as f64 * density.bin_width,
        hi: density.lo + (b + 1) as f64 * density.bin_width,
        bin: Some((b, density.lo, density.bin_width, density.counts.len())),
    };
    match policy {
        CellPolicy::Mode => {
            let mut best = 0;
            for (i, &c) in density.counts.iter().enumerate() {
                if c > density.counts[best] {
                    best = i;
                }
            }
            Ok(from_bin(best))
        }
        CellPolicy::MedianSupport => {
            if series.is_empty() {
                return Err(Error::Degenerate("empty series"));
            }
            let mut s = series.to_vec();
            s.sort_by(f64::total_cmp);
            Ok(from_bin(density.bin_of(s[(s.len() - 1) / 2])))
        }
        CellPolicy::Explicit { lo, hi } => {
            if !(lo < hi) {
                return Err(Error::invalid("cell", "need lo < hi"));
            }
            Ok(Cell::explicit(lo, hi))
        }
    }
}

/// First-return statistics of a series to a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceReport {
    /// The cell.
    pub cell: Cell,
    /// Fraction of samples inside the cell.
    pub mu: f64,
    /// Number of samples inside the cell.
    pub visits: usize,
    /// Series length.
    pub length: usize,
    /// Gaps between consecutive visits, in samples (`visits − 1` of them).
    pub taus: Vec<u64>,
    /// Sample interval, for conversions to time units.
    pub dt: f64,
    /// Mean return time in samples.
    pub mean_tau: f64,
    /// `mean_tau · mu` (Kac: 1 for ergodic dynamics).
    pub kac_ratio: f64,
}

impl RecurrenceReport {
    /// Return times in time units.
    pub fn taus_time(&self) -> Vec<f64> {
        self.taus.iter().map(|&t| t as f64 * self.dt).collect()
    }

    /// `(τ, count)` pairs of the return-time histogram, ascending in `τ`.
    pub fn histogram(&self) -> Vec<(u64, u64)> {
        let mut s = self.taus.clone();
        s.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::new();
        for t in s {
            match out.last_mut() {
                Some((v, c)) if *v == t => *c += 1,
                _ => out.push((t, 1)),
            }
        }
        out
    }
}

/// Visits of `series` to `cell` and the gaps between them.
pub fn recurrence_times(series: &[f64], cell: Cell, dt: f64) -> Result<RecurrenceReport> {
    let mut last: Option<usize> = None;
    let mut taus = Vec::new();
    let mut visits = 0usize;
    for (i, &x) in series.iter().enumerate() {
        if cell.contains(x) {
            visits += 1;
            if let Some(l) = last {
                taus.push((i - l) as u64);
            }
            last = Some(i);
        }
    }
    if visits < 2 {
        return Err(Error::InsufficientData {
            what: "visits to the cell",
            have: visits,
            need: 2,
        });
    }
    let mu = visits as f64 / series.len() as f64;
    let mean_tau = taus.iter().sum::<u64>() as f64 / taus.len() as f64;
    Ok(RecurrenceReport {
        cell,
        mu,
        visits,
        length: series.len(),
        taus,
        dt,
        mean_tau,
        kac_ratio: mean_tau * mu,
    })
}

/// Shape of a return-time distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnVerdict {
    /// Consistent with the fixed-rate exponential (geometric) law.
    Exponential,
    /// Mass concentrated on a few values: quasiperiodic recurrences.
    Discrete,
    /// Neither.
    Neither,
}

impl ReturnVerdict {
    /// Lower-case tag.
    pub fn name(self) -> &'static str {
        match self {
            ReturnVerdict::Exponential => "exponential",
            ReturnVerdict::Discrete => "discrete",
            ReturnVerdict::Neither => "neither",
        }
    }
}

/// Goodness of fit of the first-return law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnFit {
    /// KS distance to the geometric law with rate `μ`.
    pub ks_statistic: f64,
    /// Its p-value.
    pub ks_p: f64,
    /// Share of return times on the ten most frequent values.
    pub top10_mass: f64,
    /// Number of distinct return times.
    pub distinct: usize,
    /// Verdict.
    pub verdict: ReturnVerdict,
}

/// Geometric CDF `P(τ ≤ k) = 1 − (1−μ)^k`.
pub fn geometric_cdf(mu: f64, k: u64) -> f64 {
    -libm::expm1(k as f64 * libm::log1p(-mu))
}

/// Negative-binomial (two-event) CDF
/// `P(S ≤ s) = 1 − (1−μ)^s − sμ(1−μ)^{s−1}`.
pub fn erlang2_cdf(mu: f64, s: u64) -> f64 {
    if s < 2 {
        return 0.0;
    }
    let lq = libm::log1p(-mu);
    let sf = s as f64;
    let tail = libm::exp(sf * lq) + sf * mu * libm::exp((sf - 1.0) * lq);
    (1.0 - tail).max(0.0)
}

/// Fits the first-return law: discrete support first, then the fixed-rate
/// exponential via a KS test.
pub fn fit_return_distribution(report: &RecurrenceReport) -> Result<ReturnFit> {
    let n = report.taus.len();
    if n < MIN_RETURNS_FOR_FIT {
        return Err(Error::InsufficientData {
            what: "return times",
            have: n,
            need: MIN_RETURNS_FOR_FIT,
        });
    }
    let hist = report.histogram();
    let mut counts: Vec<u64> = hist.iter().map(|&(_, c)| c).collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let top10: u64 = counts.iter().take(10).sum();
    let top10_mass = top10 as f64 / n as f64;
    let mu = report.mu;
    let d = ks_statistic_discrete(&report.taus, |k| geometric_cdf(mu, k));
    let p = ks_pvalue(d, n);
    let verdict = if top10_mass > DISCRETE_MASS_FRACTION {
        ReturnVerdict::Discrete
    } else if p > KS_ACCEPT_P {
        ReturnVerdict::Exponential
    } else {
        ReturnVerdict::Neither
    };
    Ok(ReturnFit {
        ks_statistic: d,
        ks_p: p,
        top10_mass,
        distinct: hist.len(),
        verdict,
    })
}

/// Result of the successive-return test.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessiveReturnFit {
    /// Sums `τ_{2i} + τ_{2i+1}` of non-overlapping consecutive pairs.
    pub sums: Vec<u64>,
    /// KS distance to the two-event law with rate `μ`.
    pub ks_statistic: f64,
    /// Its p-value.
    pub ks_p: f64,
    /// Pearson correlation of consecutive return times.
    pub serial_correlation: f64,
    /// Law accepted and consecutive returns uncorrelated.
    pub accepted: bool,
}

/// Tests whether two successive returns follow the Erlang-2 (negative
/// binomial) law with rate `μ`, and whether consecutive return times are
/// uncorrelated.
pub fn successive_return_test(report: &RecurrenceReport) -> Result<SuccessiveReturnFit> {
    if report.visits < MIN_VISITS_FOR_PAIRS {
        return Err(Error::InsufficientData {
            what: "visits for successive returns",
            have: report.visits,
            need: MIN_VISITS_FOR_PAIRS,
        });
    }
    let t = &report.taus;
    let sums: Vec<u64> = t.chunks_exact(2).map(|p| p[0] + p[1]).collect();
    let mu = report.mu;
    let d = ks_statistic_discrete(&sums, |s| erlang2_cdf(mu, s));
    let p = ks_pvalue(d, sums.len());
    let a: Vec<f64> = t[..t.len() - 1].iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = t[1..].iter().map(|&v| v as f64).collect();
    let r = pearson(&a, &b);
    Ok(SuccessiveReturnFit {
        sums,
        ks_statistic: d,
        ks_p: p,
        serial_correlation: r,
        accepted: p > KS_ACCEPT_P && r.abs() < MAX_SERIAL_CORRELATION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_uniform(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect()
    }

    #[test]
    fn uniform_density_is_flat() {
        let x = lcg_uniform(100_000, 1);
        let d = invariant_density(&x, 0.1).unwrap();
        assert_eq!(d.total(), 100_000);
        assert!((d.normalization() - 1.0).abs() < 1e-12);
        // Each full bin holds ~10⁴ samples: σ ≈ 95, i.e. ≈ 0.0095 in ρ.
        for &r in &d.rho[..10] {
            assert!((r - 1.0).abs() < 3.0 * 0.0095 * 1.5, "{r}");
        }
    }

    #[test]
    fn sine_density_peaks_at_edges() {
        let x: Vec<f64> = (0..200_000).map(|i| libm::sin(i as f64 * 0.01)).collect();
        let d = invariant_density(&x, 0.02).unwrap();
        let n = d.rho.len();
        let mid = d.rho[n / 2];
        // Arcsine law: 1/(π√(1−x²)) is 1/π at the centre.
        assert!((mid - 1.0 / core::f64::consts::PI).abs() < 0.02, "{mid}");
        assert!(d.rho[0] > 5.0 * mid && d.rho[n - 1] > 5.0 * mid);
    }

    #[test]
    fn bad_width_and_constant_rejected() {
        assert!(invariant_density(&[1.0; 10], 0.1).is_err());
        assert!(invariant_density(&[0.0, 1.0], 0.2).is_err());
    }

    #[test]
    fn mode_tie_breaks_low() {
        let x = [0.05, 0.05, 0.95, 0.95, 0.5, 0.0, 1.0];
        let d = invariant_density(&x, 0.1).unwrap();
        let c = select_cell(&d, &x, CellPolicy::Mode).unwrap();
        assert_eq!(c.bin(), Some(0));
        let e = select_cell(&d, &x, CellPolicy::Explicit { lo: 0.2, hi: 0.3 }).unwrap();
        assert_eq!((e.lo, e.hi), (0.2, 0.3));
    }

    #[test]
    fn mu_equals_cell_mass_exactly() {
        let x: Vec<f64> = (0..50_000).map(|i| libm::sin(i as f64 * 0.173) * 3.3).collect();
        let d = invariant_density(&x, 0.05).unwrap();
        let c = select_cell(&d, &x, CellPolicy::Mode).unwrap();
        let r = recurrence_times(&x, c, 0.1).unwrap();
        assert_eq!(r.mu, d.mass(c.bin().unwrap()));
        assert_eq!(r.taus.len(), r.visits - 1);
    }

    #[test]
    fn iid_returns_are_geometric() {
        let x = lcg_uniform(200_000, 11);
        let c = Cell::explicit(0.3, 0.4);
        let r = recurrence_times(&x, c, 1.0).unwrap();
        assert!((r.kac_ratio - 1.0).abs() < 0.05);
        assert!((r.mean_tau - 10.0).abs() < 0.5);
        let f = fit_return_distribution(&r).unwrap();
        assert_eq!(f.verdict, ReturnVerdict::Exponential, "{f:?}");
        let s = successive_return_test(&r).unwrap();
        assert!(s.accepted, "{:?}", (s.ks_p, s.serial_correlation));
        assert!(s.serial_correlation.abs() < 0.02);
    }

    #[test]
    fn periodic_returns_are_discrete() {
        // Period 25, one visit per period.
        let x: Vec<f64> = (0..250_000).map(|i| (i % 25) as f64).collect();
        let r = recurrence_times(&x, Cell::explicit(3.0, 4.0), 1.0).unwrap();
        assert!(r.taus.iter().all(|&t| t == 25));
        assert_eq!(r.kac_ratio, 1.0);
        assert_eq!(fit_return_distribution(&r).unwrap().verdict, ReturnVerdict::Discrete);
        assert!(!successive_return_test(&r).unwrap().accepted);
    }

    #[test]
    fn cdfs_are_consistent() {
        let mu = 0.07;
        // Differences of the CDFs reproduce the probability mass functions.
        for k in 1..50u64 {
            let pmf = geometric_cdf(mu, k) - geometric_cdf(mu, k - 1);
            assert!((pmf - mu * libm::pow(1.0 - mu, (k - 1) as f64)).abs() < 1e-15);
        }
        for s in 2..80u64 {
            let pmf = erlang2_cdf(mu, s) - erlang2_cdf(mu, s - 1);
            let direct = (s - 1) as f64 * mu * mu * libm::pow(1.0 - mu, (s - 2) as f64);
            assert!((pmf - direct).abs() < 1e-14);
        }
        assert!((erlang2_cdf(mu, 10_000) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_visits() {
        let x = [0.0, 1.0, 2.0];
        assert!(recurrence_times(&x, Cell::explicit(0.5, 0.6), 1.0).is_err());
    }
}
