//! The analysis chain applied to one series: spectrum, embedding, Lyapunov
//! sweep and recurrence statistics, with every automatic choice recorded.

use std::time::Instant;

use kerr_ergo_core::recurrence::{
    fit_return_distribution, invariant_density, recurrence_times, select_cell, successive_return_test, CellPolicy,
    InvariantDensity, RecurrenceReport, ReturnFit, SuccessiveReturnFit,
};
use kerr_ergo_core::tsa::{
    ami_delay, fnn_embedding_dim, power_spectrum, rosenstein_lambda, DelayChoice, Embedding, FnnOptions, FnnResult,
    LyapunovCurve, PowerSpectrum, RosensteinOptions,
};
use kerr_ergo_core::TimeSeries;
use rayon::prelude::*;

use crate::config::{AnalysesConfig, AnalysisConfig};
use crate::error::{CliError, CoreContext, Result};
use crate::verdict::{Verdict, VerdictRule};

/// Where an analysis parameter came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// Given in the config (or pinned by a manifest).
    Config,
    /// Selected by its documented automatic rule.
    Auto(&'static str),
}

impl Source {
    /// Tag for manifests.
    pub fn name(self) -> &'static str {
        match self {
            Source::Config => "config",
            Source::Auto(rule) => rule,
        }
    }
}

/// Spectrum with its line census.
#[derive(Debug, Clone)]
pub struct SpectrumSummary {
    /// The estimate.
    pub spectrum: PowerSpectrum,
    /// Peak indices above the threshold.
    pub peaks: Vec<usize>,
    /// Frequency of the strongest line.
    pub dominant: Option<f64>,
}

/// Exponent at the embedding dimension and its stability across the sweep.
#[derive(Debug, Clone)]
pub struct LyapunovSummary {
    /// Exponent at the embedding dimension, in the rate unit.
    pub lambda: f64,
    /// Its standard error, in the rate unit.
    pub se: f64,
    /// Rate unit (exponent per unit time divided by this).
    pub rate_unit: f64,
    /// `(dim, λ, SE)` for every swept dimension, in the rate unit.
    pub sweep: Vec<(usize, f64, f64)>,
    /// `max_d |λ_d − λ_{d_emb}| / |λ_{d_emb}|`.
    pub spread: f64,
    /// Classification of `lambda`.
    pub verdict: Verdict,
}

/// Recurrence statistics of the analysed series.
#[derive(Debug, Clone)]
pub struct RecurrenceSummary {
    /// Invariant density.
    pub density: InvariantDensity,
    /// Policy that chose the cell.
    pub policy: CellPolicy,
    /// Return-time report.
    pub report: RecurrenceReport,
    /// First-return law fit, when enough returns were seen.
    pub fit: Option<ReturnFit>,
    /// Successive-return test, when enough visits were seen.
    pub successive: Option<SuccessiveReturnFit>,
}

/// Everything the chain produced for one series.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// Samples analysed (after the discarded prefix).
    pub len: usize,
    /// Sample interval.
    pub dt: f64,
    /// Verdict thresholds.
    pub rule: VerdictRule,
    /// Spectrum, when requested.
    pub spectrum: Option<SpectrumSummary>,
    /// Mutual-information curve and delay (absent when the delay was given).
    pub delay_choice: Option<DelayChoice>,
    /// Delay used.
    pub delay: Option<(usize, Source)>,
    /// False-neighbour scan (absent when the dimension was given).
    pub fnn: Option<FnnResult>,
    /// Embedding dimension used.
    pub dim: Option<(usize, Source)>,
    /// Theiler window used.
    pub theiler: Option<(usize, Source)>,
    /// Divergence curves, one per swept dimension.
    pub curves: Vec<LyapunovCurve>,
    /// Exponent summary.
    pub lyapunov: Option<LyapunovSummary>,
    /// Recurrence statistics.
    pub recurrence: Option<RecurrenceSummary>,
    /// Requested results that could not be computed, with reasons.
    pub missing: Vec<String>,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(&'static str, f64)>,
}

impl Analysis {
    /// Verdict of the exponent, `Failed` when it was not computed.
    pub fn verdict(&self) -> Verdict {
        self.lyapunov.as_ref().map_or(Verdict::Failed, |l| l.verdict)
    }
}

/// Runs the requested analyses on `series` (prefix already discarded).
/// `rate_unit` converts exponents from inverse time to the reporting unit.
pub fn analyze(series: &TimeSeries, which: &AnalysesConfig, cfg: &AnalysisConfig, rate_unit: f64) -> Result<Analysis> {
    let x = &series.values;
    let dt = series.dt;
    let rule = VerdictRule {
        regular_threshold: cfg.regular_threshold,
        significance: cfg.significance,
    };
    let mut out = Analysis {
        len: x.len(),
        dt,
        rule,
        spectrum: None,
        delay_choice: None,
        delay: None,
        fnn: None,
        dim: None,
        theiler: None,
        curves: Vec::new(),
        lyapunov: None,
        recurrence: None,
        missing: Vec::new(),
        timings: Vec::new(),
    };
    let mut clock = Instant::now();
    let mut lap = |out: &mut Analysis, stage: &'static str| {
        out.timings.push((stage, clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let mut spectral_dominant = None;
    let need_spectrum = which.spectrum || (which.lyapunov && cfg.theiler.is_none());
    if need_spectrum {
        let max_lag = cfg.max_lag.min(x.len() / 4).max(1);
        let window = cfg.lag_window().expect("validated");
        let spectrum = power_spectrum(series, max_lag, window).stage("spectrum")?;
        let peaks = spectrum.peaks(cfg.peak_threshold_db);
        let dominant = spectrum.dominant_frequency();
        spectral_dominant = dominant;
        if which.spectrum {
            out.spectrum = Some(SpectrumSummary {
                spectrum,
                peaks,
                dominant,
            });
        }
        lap(&mut out, "spectrum");
    }

    if which.embed {
        let delay = match cfg.delay {
            Some(d) => (d, Source::Config),
            None => {
                let choice = ami_delay(x, cfg.ami_max_lag).stage("delay")?;
                let d = (choice.delay, Source::Auto(delay_rule_name(&choice)));
                out.delay_choice = Some(choice);
                d
            }
        };
        out.delay = Some(delay);
        let dim = match cfg.dim {
            Some(d) => (d, Source::Config),
            None => {
                let opts = FnnOptions {
                    rtol: cfg.fnn_rtol,
                    atol: cfg.fnn_atol,
                    ..FnnOptions::default()
                };
                let fnn = fnn_embedding_dim(x, delay.0, cfg.max_dim, opts).stage("embedding dimension")?;
                let d = match fnn.dim {
                    Some(d) => (d, Source::Auto("fnn")),
                    None => (cfg.fallback_dim, Source::Auto("fallback")),
                };
                out.fnn = Some(fnn);
                d
            }
        };
        out.dim = Some(dim);
        lap(&mut out, "embedding");
    }

    if which.lyapunov {
        let (delay, _) = out
            .delay
            .ok_or_else(|| CliError::Analysis("lyapunov requires embed".into()))?;
        let (d0, _) = out.dim.expect("set with delay");
        let theiler = match cfg.theiler {
            Some(w) => (w, Source::Config),
            None => match spectral_dominant {
                Some(f) if f > 0.0 => (
                    ((1.0 / (f * dt)).ceil() as usize).max(1),
                    Source::Auto("spectral-period"),
                ),
                _ => (delay, Source::Auto("delay")),
            },
        };
        out.theiler = Some(theiler);
        let dims: Vec<usize> = (d0..=d0 + cfg.dim_sweep).collect();
        let curves: Vec<Result<LyapunovCurve>> = dims
            .par_iter()
            .map(|&d| {
                let emb = Embedding::new(delay, d).stage("embedding")?;
                let mut o = RosensteinOptions::new(theiler.0, cfg.kmax);
                o.max_refs = cfg.max_refs;
                o.fit = cfg.fit_for(d).expect("validated");
                rosenstein_lambda(series, emb, o).stage(&format!("lyapunov (d = {d})"))
            })
            .collect();
        let mut good = Vec::new();
        for c in curves {
            match c {
                Ok(c) => good.push(c),
                Err(e) if good.is_empty() => return Err(e),
                Err(e) => out.missing.push(e.to_string()),
            }
        }
        let first = &good[0];
        let lambda = first.lambda_max / rate_unit;
        let se = first.lambda_se / rate_unit;
        let sweep: Vec<(usize, f64, f64)> = good
            .iter()
            .map(|c| (c.embedding.dim, c.lambda_max / rate_unit, c.lambda_se / rate_unit))
            .collect();
        let spread = sweep.iter().map(|(_, l, _)| (l - lambda).abs()).fold(0.0, f64::max) / lambda.abs();
        let verdict = if first.reliable {
            rule.classify(lambda, se)
        } else {
            out.missing
                .push(format!("only {} neighbour pairs for the exponent", first.pairs));
            Verdict::Failed
        };
        out.lyapunov = Some(LyapunovSummary {
            lambda,
            se,
            rate_unit,
            sweep,
            spread,
            verdict,
        });
        out.curves = good;
        lap(&mut out, "lyapunov");
    }

    if which.recurrence {
        let density = invariant_density(x, cfg.bin_width).stage("invariant density")?;
        let policy = cfg.cell_policy().expect("validated");
        let cell = select_cell(&density, x, policy).stage("cell")?;
        let report = recurrence_times(x, cell, dt).stage("recurrence")?;
        let fit = fit_return_distribution(&report)
            .map_err(|e| out.missing.push(format!("return-time fit: {e}")))
            .ok();
        let successive = successive_return_test(&report).ok();
        out.recurrence = Some(RecurrenceSummary {
            density,
            policy,
            report,
            fit,
            successive,
        });
        lap(&mut out, "recurrence");
    }
    Ok(out)
}

fn delay_rule_name(c: &DelayChoice) -> &'static str {
    use kerr_ergo_core::tsa::embed::DelayRule;
    match c.rule {
        DelayRule::NoiseFloor => "ami-noise-floor",
        DelayRule::FirstMinimum => "ami-first-minimum",
        DelayRule::AutocorrelationDecay => "autocorrelation-1/e",
        DelayRule::MaxLag => "max-lag",
    }
}
