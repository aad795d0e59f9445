//! Rosenstein estimate of the maximal Lyapunov exponent.
//!
//! Each reference vector is paired with its nearest neighbour outside a
//! Theiler window; the separations of the pairs are followed for `kmax`
//! steps and `⟨ln d_j(k)⟩` is fitted by a straight line over a linear range.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolve::TimeSeries;
use crate::kdtree::{KdTree, PointSet};
use crate::stats::{linear_fit, LinearFit};

use super::embed::{reference_indices, Embedding};

/// Default number of reference vectors.
pub const DEFAULT_MAX_REFS: usize = 5000;
/// Pairs below this count mark the estimate unreliable.
pub const MIN_RELIABLE_PAIRS: usize = 100;
/// Lower edge of the scaling band, in e-folds below the attractor scale.
pub const DEFAULT_BAND_LOWER: f64 = 3.0;
/// Upper edge of the scaling band, in e-folds below the attractor scale.
pub const DEFAULT_BAND_UPPER: f64 = 0.5;
/// Fewest steps a fit window may hold.
pub const MIN_FIT_POINTS: usize = 5;
/// Default minimum window length of [`FitRange::Linear`].
pub const DEFAULT_MIN_FIT_LEN: usize = 10;
/// Default R² a [`FitRange::Linear`] window must reach.
pub const DEFAULT_FIT_R2: f64 = 0.995;
/// Pairs whose initial separation exceeds this fraction of the attractor
/// diameter are already saturated and are discarded.
pub const DEFAULT_MAX_INITIAL_FRACTION: f64 = 0.1;

/// How the linear fit range of the divergence curve is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitRange {
    /// Scaling band anchored to the size of the reconstructed attractor.
    ///
    /// With `D = σ√(2d)` the RMS distance between two independent delay
    /// vectors, the window opens at the first step `k ≥ theiler` where
    /// `⟨ln d⟩ ≥ ln D − lower` and closes just before `⟨ln d⟩` first reaches
    /// `ln D − upper`. Skipping one mean period discards the alignment
    /// transient; the band keeps the fit clear of both the initial-separation
    /// floor and saturation. A curve that never enters the band has no
    /// divergence towards the attractor scale, and the second half of the
    /// curve is fitted instead (its slope is the residual drift).
    Band {
        /// Band floor, e-folds below `ln D`.
        lower: f64,
        /// Band ceiling, e-folds below `ln D`.
        upper: f64,
    },
    /// Longest window of at least `min_len` steps, before the curve has
    /// completed 90% of its rise, whose straight-line fit has `R² ≥ r2_min`;
    /// if none qualifies, the `min_len` window of best R². Suited to maps,
    /// whose curves have no transient and a long clean exponential stretch.
    Linear {
        /// Minimum window length in steps.
        min_len: usize,
        /// Required coefficient of determination.
        r2_min: f64,
    },
    /// Fixed inclusive range of steps.
    Manual {
        /// First step.
        lo: usize,
        /// Last step.
        hi: usize,
    },
}

impl Default for FitRange {
    fn default() -> Self {
        FitRange::Band {
            lower: DEFAULT_BAND_LOWER,
            upper: DEFAULT_BAND_UPPER,
        }
    }
}

impl FitRange {
    /// The longest-linear-window policy with default settings.
    pub fn linear() -> Self {
        FitRange::Linear {
            min_len: DEFAULT_MIN_FIT_LEN,
            r2_min: DEFAULT_FIT_R2,
        }
    }

    /// Short name for manifests.
    pub fn name(&self) -> &'static str {
        match self {
            FitRange::Band { .. } => "band",
            FitRange::Linear { .. } => "linear",
            FitRange::Manual { .. } => "manual",
        }
    }
}

/// How the fit window of a particular curve came about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitOutcome {
    /// Inside the scaling band.
    Band,
    /// The band was crossed in fewer than [`MIN_FIT_POINTS`] steps; the
    /// shortest window starting at the band entry was used.
    BandShort,
    /// The curve never entered the band; the second half was fitted.
    Unsaturated,
    /// A window met the R² requirement.
    Linear,
    /// No window met the R² requirement; the best one was used.
    LinearBestEffort,
    /// Caller-supplied range.
    Manual,
}

impl FitOutcome {
    /// Lower-case tag.
    pub fn name(self) -> &'static str {
        match self {
            FitOutcome::Band => "band",
            FitOutcome::BandShort => "band-short",
            FitOutcome::Unsaturated => "unsaturated",
            FitOutcome::Linear => "linear",
            FitOutcome::LinearBestEffort => "linear-best-effort",
            FitOutcome::Manual => "manual",
        }
    }
}

/// Curve-independent inputs of the automatic fit policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitContext {
    /// `ln D`, the log RMS distance between independent delay vectors.
    pub log_scale: f64,
    /// First step the band policy may use (the Theiler window).
    pub start: usize,
}

/// Options of [`rosenstein_lambda`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosensteinOptions {
    /// Neighbours must be more than this many samples apart in time.
    pub theiler: usize,
    /// Number of steps each pair is followed.
    pub kmax: usize,
    /// Upper bound on reference vectors (spread evenly over the series).
    pub max_refs: usize,
    /// Saturated-pair cut, as a fraction of the attractor diameter.
    pub max_initial_fraction: f64,
    /// Fit range policy.
    pub fit: FitRange,
}

impl RosensteinOptions {
    /// Defaults for the given Theiler window and horizon.
    pub fn new(theiler: usize, kmax: usize) -> Self {
        Self {
            theiler,
            kmax,
            max_refs: DEFAULT_MAX_REFS,
            max_initial_fraction: DEFAULT_MAX_INITIAL_FRACTION,
            fit: FitRange::default(),
        }
    }
}

/// Divergence curve and the exponent fitted to it.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCurve {
    /// Steps `k = 0..=kmax`.
    pub k_values: Vec<usize>,
    /// `⟨ln d_j(k)⟩` over the valid pairs.
    pub mean_log_sep: Vec<f64>,
    /// Selected inclusive fit range `(k_lo, k_hi)`.
    pub fit_range: (usize, usize),
    /// Policy that chose the range.
    pub fit_policy: FitRange,
    /// How the range came about.
    pub fit_outcome: FitOutcome,
    /// `ln D` with `D = σ√(2d)`, the saturation scale of the curve.
    pub log_scale: f64,
    /// Fitted slope per step.
    pub slope_per_step: f64,
    /// `slope / dt`, in inverse time units of the series.
    pub lambda_max: f64,
    /// Standard error of `lambda_max`.
    pub lambda_se: f64,
    /// R² of the linear fit.
    pub fit_r2: f64,
    /// Sample interval of the analysed series.
    pub dt: f64,
    /// Number of neighbour pairs that entered the average.
    pub pairs: usize,
    /// False when fewer than [`MIN_RELIABLE_PAIRS`] pairs were found.
    pub reliable: bool,
    /// Embedding used.
    pub embedding: Embedding,
    /// Theiler window used.
    pub theiler: usize,
}

/// Region a step of the curve belongs to, for plot annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveRegion {
    /// Before the fit range.
    Transient,
    /// Inside the fit range.
    Linear,
    /// After the fit range.
    Saturation,
}

impl CurveRegion {
    /// Lower-case tag.
    pub fn name(self) -> &'static str {
        match self {
            CurveRegion::Transient => "transient",
            CurveRegion::Linear => "linear",
            CurveRegion::Saturation => "saturation",
        }
    }
}

/// One row of a plot table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    /// Step.
    pub k: usize,
    /// Time `k·dt`.
    pub t: f64,
    /// `⟨ln d_j(k)⟩`.
    pub mean_log_sep: f64,
    /// Region tag.
    pub region: CurveRegion,
}

impl LyapunovCurve {
    /// Plot rows `t = k·dt` vs `⟨ln d_j(k)⟩`, tagged by region.
    pub fn rows(&self) -> Vec<CurveRow> {
        let (lo, hi) = self.fit_range;
        self.k_values
            .iter()
            .zip(&self.mean_log_sep)
            .map(|(&k, &y)| CurveRow {
                k,
                t: k as f64 * self.dt,
                mean_log_sep: y,
                region: if k < lo {
                    CurveRegion::Transient
                } else if k <= hi {
                    CurveRegion::Linear
                } else {
                    CurveRegion::Saturation
                },
            })
            .collect()
    }

    /// Refits the same curve under another policy.
    pub fn refit(&self, fit: FitRange) -> Result<Self> {
        let mut c = self.clone();
        let ctx = FitContext {
            log_scale: self.log_scale,
            start: self.theiler,
        };
        let (range, outcome, f) = fit_curve(&self.mean_log_sep, fit, ctx)?;
        c.fit_policy = fit;
        c.apply_fit(range, outcome, f);
        Ok(c)
    }

    fn apply_fit(&mut self, range: (usize, usize), outcome: FitOutcome, f: LinearFit) {
        self.fit_range = range;
        self.fit_outcome = outcome;
        self.slope_per_step = f.slope;
        self.lambda_max = f.slope / self.dt;
        self.lambda_se = f.slope_se / self.dt;
        self.fit_r2 = f.r2;
    }
}

fn window_fit(y: &[f64], lo: usize, hi: usize) -> Option<LinearFit> {
    let x: Vec<f64> = (lo..=hi).map(|k| k as f64).collect();
    linear_fit(&x, &y[lo..=hi])
}

fn fitted(y: &[f64], lo: usize, hi: usize, outcome: FitOutcome) -> Result<((usize, usize), FitOutcome, LinearFit)> {
    let f = window_fit(y, lo, hi).ok_or(Error::Degenerate("fit window"))?;
    Ok(((lo, hi), outcome, f))
}

/// Applies a fit-range policy to a divergence curve `y[k]`, `k = 0..=kmax`.
pub fn fit_curve(y: &[f64], fit: FitRange, ctx: FitContext) -> Result<((usize, usize), FitOutcome, LinearFit)> {
    let n = y.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            what: "curve points for the fit window",
            have: n,
            need: MIN_FIT_POINTS,
        });
    }
    let last = n - 1;
    match fit {
        FitRange::Manual { lo, hi } => {
            if lo >= hi || hi > last {
                return Err(Error::invalid("fit_range", "need lo < hi ≤ kmax"));
            }
            fitted(y, lo, hi, FitOutcome::Manual)
        }
        FitRange::Band { lower, upper } => {
            if !(lower > upper) || !upper.is_finite() || !lower.is_finite() {
                return Err(Error::invalid("band", "need finite lower > upper"));
            }
            let floor = ctx.log_scale - lower;
            let ceiling = ctx.log_scale - upper;
            let start = ctx.start.min(last);
            let Some(lo) = (start..n).find(|&k| y[k] >= floor) else {
                return fitted(y, last / 2, last, FitOutcome::Unsaturated);
            };
            let hi = (lo + 1..n).find(|&k| y[k] >= ceiling).map_or(last, |k| k - 1);
            if hi + 1 - lo >= MIN_FIT_POINTS {
                fitted(y, lo, hi, FitOutcome::Band)
            } else {
                let lo = lo.min(n - MIN_FIT_POINTS);
                fitted(y, lo, lo + MIN_FIT_POINTS - 1, FitOutcome::BandShort)
            }
        }
        FitRange::Linear { min_len, r2_min } => {
            let min_len = min_len.max(MIN_FIT_POINTS);
            // Search only the rising part: up to 90% of the total rise.
            let y0 = y[0];
            let top = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let cap = y
                .iter()
                .position(|&v| v >= y0 + 0.9 * (top - y0))
                .unwrap_or(last)
                .max(min_len - 1)
                .min(last);
            let m = cap + 1;
            if m < min_len {
                return Err(Error::InsufficientData {
                    what: "curve points for the fit window",
                    have: m,
                    need: min_len,
                });
            }
            // Longest qualifying window; among equal lengths the earliest.
            for len in (min_len..=m).rev() {
                for lo in 0..=m - len {
                    if let Some(f) = window_fit(y, lo, lo + len - 1) {
                        if f.r2 >= r2_min {
                            return Ok(((lo, lo + len - 1), FitOutcome::Linear, f));
                        }
                    }
                }
            }
            let mut best: Option<((usize, usize), FitOutcome, LinearFit)> = None;
            for lo in 0..=m - min_len {
                if let Some(f) = window_fit(y, lo, lo + min_len - 1) {
                    if best.map_or(true, |(_, _, b)| f.r2 > b.r2) {
                        best = Some(((lo, lo + min_len - 1), FitOutcome::LinearBestEffort, f));
                    }
                }
            }
            best.ok_or(Error::Degenerate("divergence curve"))
        }
    }
}

/// Rosenstein divergence curve and exponent for `series` under `embedding`.
pub fn rosenstein_lambda(series: &TimeSeries, embedding: Embedding, opts: RosensteinOptions) -> Result<LyapunovCurve> {
    let x = &series.values;
    let kmax = opts.kmax;
    if kmax < 2 {
        return Err(Error::invalid("kmax", "must be at least 2"));
    }
    let m = embedding.vector_count(x.len());
    if m <= kmax + 2 * opts.theiler + 2 {
        return Err(Error::InsufficientData {
            what: "delay vectors",
            have: m,
            need: kmax + 2 * opts.theiler + 3,
        });
    }
    let view = embedding.view(x);
    // Only vectors that can be followed for kmax steps take part.
    let usable = m - kmax;
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let diameter = (hi - lo) * libm::sqrt(embedding.dim as f64);
    if diameter == 0.0 {
        return Err(Error::Degenerate("series is constant"));
    }
    let max_d0 = opts.max_initial_fraction * diameter;
    let sigma = libm::sqrt(crate::stats::variance(x));
    let log_scale = libm::log(sigma * libm::sqrt(2.0 * embedding.dim as f64));

    let tree = KdTree::build(&view, usable);
    let mut sums = vec![0.0f64; kmax + 1];
    let mut counts = vec![0usize; kmax + 1];
    let mut q = vec![0.0; embedding.dim];
    let mut pairs = 0usize;
    for j in reference_indices(usable, opts.max_refs) {
        view.fill(j, &mut q);
        let w = opts.theiler;
        let Some(nb) = tree.nearest(&view, &q, |i| i.abs_diff(j) > w) else {
            continue;
        };
        let d0 = libm::sqrt(nb.dist2);
        if d0 == 0.0 || d0 > max_d0 {
            continue;
        }
        pairs += 1;
        let i = nb.index;
        for k in 0..=kmax {
            let d2 = view.dist2(j + k, i + k);
            if d2 > 0.0 {
                sums[k] += 0.5 * libm::log(d2);
                counts[k] += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(Error::InsufficientData {
            what: "valid neighbour pairs",
            have: 0,
            need: MIN_RELIABLE_PAIRS,
        });
    }
    let mean_log_sep: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NEG_INFINITY })
        .collect();
    if mean_log_sep.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("every pair collapsed to zero separation"));
    }
    let mut curve = LyapunovCurve {
        k_values: (0..=kmax).collect(),
        mean_log_sep,
        fit_range: (0, 0),
        fit_policy: opts.fit,
        fit_outcome: FitOutcome::Manual,
        log_scale,
        slope_per_step: 0.0,
        lambda_max: 0.0,
        lambda_se: 0.0,
        fit_r2: 0.0,
        dt: series.dt,
        pairs,
        reliable: pairs >= MIN_RELIABLE_PAIRS,
        embedding,
        theiler: opts.theiler,
    };
    let ctx = FitContext {
        log_scale,
        start: opts.theiler,
    };
    let (range, outcome, f) = fit_curve(&curve.mean_log_sep, opts.fit, ctx)?;
    curve.apply_fit(range, outcome, f);
    Ok(curve)
}

/// Fig.-2-style table: one column of `⟨ln d_j(k)⟩` per curve (typically one
/// per embedding dimension), rows indexed by step.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    /// Times `k·dt`.
    pub t: Vec<f64>,
    /// Embedding dimension of each column.
    pub dims: Vec<usize>,
    /// Column-major values, `columns[c][k]`.
    pub columns: Vec<Vec<f64>>,
    /// Fit range of each column.
    pub fit_ranges: Vec<(usize, usize)>,
}

/// Collects curves (sharing `dt` and `kmax`) into a plot table.
pub fn curve_for_plot(curves: &[LyapunovCurve]) -> CurveTable {
    let Some(first) = curves.first() else {
        return CurveTable {
            t: Vec::new(),
            dims: Vec::new(),
            columns: Vec::new(),
            fit_ranges: Vec::new(),
        };
    };
    let len = curves.iter().map(|c| c.k_values.len()).min().unwrap_or(0);
    CurveTable {
        t: first.k_values[..len].iter().map(|&k| k as f64 * first.dt).collect(),
        dims: curves.iter().map(|c| c.embedding.dim).collect(),
        columns: curves.iter().map(|c| c.mean_log_sep[..len].to_vec()).collect(),
        fit_ranges: curves.iter().map(|c| c.fit_range).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kdtree::brute_force_nearest;

    fn logistic(n: usize) -> TimeSeries {
        let mut x = 0.123_456_789;
        let v: Vec<f64> = (0..n)
            .map(|_| {
                x = 4.0 * x * (1.0 - x);
                x
            })
            .collect();
        TimeSeries::new(1.0, v, "logistic").unwrap()
    }

    fn sine(n: usize, dt: f64, period: f64) -> TimeSeries {
        let v = (0..n)
            .map(|i| libm::sin(core::f64::consts::TAU * i as f64 / period))
            .collect();
        TimeSeries::new(dt, v, "sine").unwrap()
    }

    /// Lyapunov exponent of the fully chaotic logistic map along an orbit:
    /// the average of `ln|4 − 8x|`.
    fn logistic_oracle(s: &TimeSeries) -> f64 {
        let v = &s.values;
        v.iter().map(|x| libm::log((4.0 - 8.0 * x).abs())).sum::<f64>() / v.len() as f64
    }

    #[test]
    fn logistic_map_gives_ln2() {
        let s = logistic(20_000);
        let oracle = logistic_oracle(&s);
        assert!((oracle - core::f64::consts::LN_2).abs() < 0.02, "{oracle}");
        let mut opts = RosensteinOptions::new(1, 20);
        opts.fit = FitRange::linear();
        let c = rosenstein_lambda(&s, Embedding::new(1, 1).unwrap(), opts).unwrap();
        assert!(c.reliable);
        assert!((c.lambda_max - oracle).abs() < 0.05, "{} vs {oracle}", c.lambda_max);
    }

    #[test]
    fn sine_has_zero_exponent() {
        let s = sine(20_000, 0.1, 40.3);
        let e = Embedding::new(10, 2).unwrap();
        let c = rosenstein_lambda(&s, e, RosensteinOptions::new(41, 200)).unwrap();
        assert_eq!(c.fit_outcome, FitOutcome::Unsaturated);
        assert!(c.lambda_max.abs() < 0.02, "{}", c.lambda_max);
    }

    #[test]
    fn band_policy_windows() {
        // A synthetic curve rising 0.1 per step from -6 and saturating at -1.
        let y: Vec<f64> = (0..=100).map(|k| (-6.0 + 0.1 * k as f64).min(-1.0)).collect();
        let ctx = FitContext {
            log_scale: -0.5,
            start: 5,
        };
        let (range, outcome, f) = fit_curve(&y, FitRange::default(), ctx).unwrap();
        assert_eq!(outcome, FitOutcome::Band);
        // Floor -3.5 is reached at k = 25; ceiling -1.0 at k = 50.
        assert_eq!(range, (25, 49));
        assert!((f.slope - 0.1).abs() < 1e-12);
        // A flat curve far below the band: the tail is fitted.
        let flat = alloc::vec![-8.0; 101];
        let (range, outcome, f) = fit_curve(&flat, FitRange::default(), ctx).unwrap();
        assert_eq!(outcome, FitOutcome::Unsaturated);
        assert_eq!(range, (50, 100));
        assert_eq!(f.slope, 0.0);
        let (range, outcome, _) = fit_curve(&y, FitRange::Manual { lo: 3, hi: 9 }, ctx).unwrap();
        assert_eq!((range, outcome), ((3, 9), FitOutcome::Manual));
        assert!(fit_curve(&y, FitRange::Manual { lo: 9, hi: 3 }, ctx).is_err());
    }

    #[test]
    fn reversed_logistic_does_not_contract() {
        // Divergence is generic in both time directions of the reconstruction.
        let s = logistic(20_000).reversed();
        let mut opts = RosensteinOptions::new(1, 20);
        opts.fit = FitRange::linear();
        let c = rosenstein_lambda(&s, Embedding::new(1, 2).unwrap(), opts).unwrap();
        assert!(c.slope_per_step > 0.0);
    }

    #[test]
    fn tree_neighbours_match_brute_force_on_prefix() {
        let s = logistic(10_000);
        let e = Embedding::new(1, 3).unwrap();
        let view = e.view(&s.values);
        let n = e.vector_count(s.len());
        let tree = KdTree::build(&view, n);
        let mut q = alloc::vec![0.0; 3];
        for j in (0..n).step_by(97) {
            view.fill(j, &mut q);
            let allow = |i: usize| i.abs_diff(j) > 5;
            let a = tree.nearest(&view, &q, allow).unwrap();
            let b = brute_force_nearest(&view, n, &q, allow).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rows_are_tagged() {
        let s = sine(5_000, 0.1, 40.3);
        let mut opts = RosensteinOptions::new(41, 60);
        opts.fit = FitRange::Manual { lo: 10, hi: 20 };
        let c = rosenstein_lambda(&s, Embedding::new(10, 2).unwrap(), opts).unwrap();
        let rows = c.rows();
        assert_eq!(rows.len(), 61);
        assert_eq!(rows[5].region, CurveRegion::Transient);
        assert_eq!(rows[15].region, CurveRegion::Linear);
        assert_eq!(rows[30].region, CurveRegion::Saturation);
        let table = curve_for_plot(&[c.clone(), c]);
        assert_eq!(table.columns.len(), 2);
        assert_eq!(table.fit_ranges[0], (10, 20));
    }
}
