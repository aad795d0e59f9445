//! Run configuration: a TOML document whose keys mirror the library types.
//!
//! ```toml
//! steps = 100000
//! discard_prefix = 0
//! # dt defaults to 0.01 when gamma/g < 1 and to 0.1 otherwise
//!
//! [model]
//! omega = 1.0
//! omega0 = 1.0
//! gamma = 5.0
//! g = 1.0
//!
//! [state]
//! kind = "pacs"      # "cs" or "pacs"
//! nu = 10.0
//! m = 1
//!
//! [analyses]
//! spectrum = true
//! embed = true
//! lyapunov = true
//! recurrence = true
//! entropy = false
//!
//! [analysis]
//! fit_range = "band"  # "band", "linear" or [lo, hi]
//! cell = "mode"       # "mode", "median-support" or [lo, hi]
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Unknown keys are rejected. Every validation message carries the line of
//! the offending key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kerr_ergo_core::classical::{ClassicalParams, Composition, PhasePoint};
use kerr_ergo_core::recurrence::CellPolicy;
use kerr_ergo_core::states::{StateKind, StateSpec, DEFAULT_EPS_TRUNC, DEFAULT_SECTOR_CAP};
use kerr_ergo_core::tsa::{FitRange, LagWindow};
use kerr_ergo_core::{ModelParams, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// CI-grade series length.
pub const DESK_STEPS: usize = 100_000;
/// Series length behind `--paper-scale`.
pub const LONG_STEPS: usize = 1_000_000;
/// Sample spacing for weak nonlinearity (`γ/g < 1`).
pub const DT_WEAK: f64 = 0.01;
/// Sample spacing for strong nonlinearity (`γ/g ≥ 1`).
pub const DT_STRONG: f64 = 0.1;

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Sample spacing; derived from `γ/g` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Number of samples.
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Leading samples dropped before analysis.
    #[serde(default)]
    pub discard_prefix: usize,
    /// Hamiltonian parameters.
    #[serde(default)]
    pub model: ModelConfig,
    /// Initial field state.
    #[serde(default)]
    pub state: StateConfig,
    /// Which analyses to run.
    #[serde(default)]
    pub analyses: AnalysesConfig,
    /// Analysis parameters and overrides.
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Output location.
    #[serde(default)]
    pub output: OutputConfig,
    /// Manifest options.
    #[serde(default)]
    pub manifest: ManifestConfig,
    /// Classical-limit run (used by the `classical` command).
    #[serde(default)]
    pub classical: ClassicalConfig,
}

fn default_steps() -> usize {
    DESK_STEPS
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty document deserializes to defaults")
    }
}

/// Hamiltonian parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Field frequency ω.
    pub omega: f64,
    /// Medium frequency ω₀.
    pub omega0: f64,
    /// Kerr strength γ.
    pub gamma: f64,
    /// Coupling g.
    pub g: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            omega0: 1.0,
            gamma: 5.0,
            g: 1.0,
        }
    }
}

impl ModelConfig {
    /// Library parameter type.
    pub fn params(&self) -> ModelParams {
        ModelParams {
            omega: self.omega,
            omega0: self.omega0,
            gamma: self.gamma,
            g: self.g,
        }
    }
}

/// Initial-state kind as written in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindConfig {
    /// Coherent state.
    Cs,
    /// Photon-added coherent state.
    Pacs,
}

/// Initial field state; the medium starts in its ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateConfig {
    /// CS or PACS.
    pub kind: KindConfig,
    /// `ν = |α|²`.
    pub nu: f64,
    /// Photon-addition order (must be 0 for `cs`).
    pub m: usize,
    /// Phase of α in radians.
    pub phase: f64,
    /// Fock-tail truncation tolerance.
    pub eps_trunc: f64,
    /// Largest admissible truncation sector.
    pub sector_cap: usize,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            kind: KindConfig::Pacs,
            nu: 10.0,
            m: 1,
            phase: 0.0,
            eps_trunc: DEFAULT_EPS_TRUNC,
            sector_cap: DEFAULT_SECTOR_CAP,
        }
    }
}

impl StateConfig {
    /// Library state description.
    pub fn spec(&self) -> StateSpec {
        let alpha = C64::from_polar(self.nu.max(0.0).sqrt(), self.phase);
        match self.kind {
            KindConfig::Cs => StateSpec::coherent(alpha),
            KindConfig::Pacs => StateSpec::photon_added(alpha, self.m),
        }
    }

    /// Short human label such as `PACS m=1 nu=10`.
    pub fn describe(&self) -> String {
        match self.kind {
            KindConfig::Cs => format!("CS nu={}", self.nu),
            KindConfig::Pacs => format!("PACS m={} nu={}", self.m, self.nu),
        }
    }

    /// Library state kind.
    pub fn kind(&self) -> StateKind {
        match self.kind {
            KindConfig::Cs => StateKind::Coherent,
            KindConfig::Pacs => StateKind::PhotonAdded,
        }
    }
}

/// Analysis switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysesConfig {
    /// Power spectrum and peak count.
    pub spectrum: bool,
    /// Delay and embedding dimension.
    pub embed: bool,
    /// Maximal Lyapunov exponent (requires `embed`).
    pub lyapunov: bool,
    /// Invariant density and return times.
    pub recurrence: bool,
    /// Entanglement entropy series during simulation.
    pub entropy: bool,
}

impl Default for AnalysesConfig {
    fn default() -> Self {
        Self {
            spectrum: true,
            embed: true,
            lyapunov: true,
            recurrence: true,
            entropy: false,
        }
    }
}

/// Fit-range choice as written in configs: `"band"`, `"linear"` or `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FitRangeConfig {
    /// Named rule.
    Named(String),
    /// Inclusive manual window in samples.
    Manual([usize; 2]),
}

/// Cell choice as written in configs: `"mode"`, `"median-support"` or `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellConfig {
    /// Named policy.
    Named(String),
    /// Explicit half-open interval.
    Explicit([f64; 2]),
}

/// Analysis parameters. `None` overrides mean "select automatically".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Series analysed: `"mean_N"` or `"mean_b"`.
    pub observable: String,
    /// Autocorrelation lags of the spectrum estimate (clamped below `n/2`).
    pub max_lag: usize,
    /// Lag window: `"hann"`, `"rectangular"` or `"blackman-harris"`.
    pub window: String,
    /// Peak-count threshold in dB below the strongest line.
    pub peak_threshold_db: f64,
    /// Largest lag scanned for the mutual-information delay.
    pub ami_max_lag: usize,
    /// Largest embedding dimension tested by false nearest neighbours.
    pub max_dim: usize,
    /// False-neighbour distance-ratio threshold.
    pub fnn_rtol: f64,
    /// False-neighbour loneliness threshold (units of σ).
    pub fnn_atol: f64,
    /// Dimension used when no tested dimension is free of false neighbours.
    pub fallback_dim: usize,
    /// Delay override (samples).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay: Option<usize>,
    /// Embedding-dimension override.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Theiler-window override (samples).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theiler: Option<usize>,
    /// Divergence-curve horizon (samples).
    pub kmax: usize,
    /// Reference vectors per divergence curve.
    pub max_refs: usize,
    /// Extra dimensions above the embedding dimension for the stability sweep.
    pub dim_sweep: usize,
    /// Fit-range rule or manual window.
    pub fit_range: FitRangeConfig,
    /// Pinned per-dimension fit windows (written by manifest replays).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub fit_ranges: BTreeMap<String, [usize; 2]>,
    /// Band rule: window opens this many e-folds below saturation.
    pub band_lower: f64,
    /// Band rule: window closes this many e-folds below saturation.
    pub band_upper: f64,
    /// Linear rule: shortest window.
    pub fit_min_len: usize,
    /// Linear rule: smallest acceptable R².
    pub fit_r2: f64,
    /// Histogram bin width of the invariant density.
    pub bin_width: f64,
    /// Recurrence-cell policy or explicit interval.
    pub cell: CellConfig,
    /// Rate that exponents are expressed in; defaults to `model.g`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_unit: Option<f64>,
    /// "Regular" when `|λ|` (in `time_unit`) is below this...
    pub regular_threshold: f64,
    /// ...or when `|λ|` is within this many standard errors of zero.
    pub significance: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            observable: "mean_N".into(),
            max_lag: 4096,
            window: "hann".into(),
            peak_threshold_db: -60.0,
            ami_max_lag: 100,
            max_dim: 10,
            fnn_rtol: kerr_ergo_core::tsa::embed::DEFAULT_FNN_RTOL,
            fnn_atol: kerr_ergo_core::tsa::embed::DEFAULT_FNN_ATOL,
            fallback_dim: 5,
            delay: None,
            dim: None,
            theiler: None,
            kmax: 300,
            max_refs: kerr_ergo_core::tsa::lyapunov::DEFAULT_MAX_REFS,
            dim_sweep: 5,
            fit_range: FitRangeConfig::Named("band".into()),
            fit_ranges: BTreeMap::new(),
            band_lower: kerr_ergo_core::tsa::lyapunov::DEFAULT_BAND_LOWER,
            band_upper: kerr_ergo_core::tsa::lyapunov::DEFAULT_BAND_UPPER,
            fit_min_len: kerr_ergo_core::tsa::lyapunov::DEFAULT_MIN_FIT_LEN,
            fit_r2: kerr_ergo_core::tsa::lyapunov::DEFAULT_FIT_R2,
            bin_width: kerr_ergo_core::recurrence::DEFAULT_BIN_WIDTH,
            cell: CellConfig::Named("mode".into()),
            time_unit: None,
            regular_threshold: 0.02,
            significance: 3.0,
        }
    }
}

impl AnalysisConfig {
    /// Parsed lag window.
    pub fn lag_window(&self) -> Option<LagWindow> {
        match self.window.as_str() {
            "hann" => Some(LagWindow::Hann),
            "rectangular" => Some(LagWindow::Rectangular),
            "blackman-harris" => Some(LagWindow::BlackmanHarris),
            _ => None,
        }
    }

    /// Fit rule for embedding dimension `dim`, honouring pinned windows.
    pub fn fit_for(&self, dim: usize) -> Option<FitRange> {
        if let Some([lo, hi]) = self.fit_ranges.get(&dim.to_string()) {
            return Some(FitRange::Manual { lo: *lo, hi: *hi });
        }
        match &self.fit_range {
            FitRangeConfig::Named(n) if n == "band" => Some(FitRange::Band {
                lower: self.band_lower,
                upper: self.band_upper,
            }),
            FitRangeConfig::Named(n) if n == "linear" => Some(FitRange::Linear {
                min_len: self.fit_min_len,
                r2_min: self.fit_r2,
            }),
            FitRangeConfig::Named(_) => None,
            FitRangeConfig::Manual([lo, hi]) => Some(FitRange::Manual { lo: *lo, hi: *hi }),
        }
    }

    /// Parsed cell policy.
    pub fn cell_policy(&self) -> Option<CellPolicy> {
        match &self.cell {
            CellConfig::Named(n) if n == "mode" => Some(CellPolicy::Mode),
            CellConfig::Named(n) if n == "median-support" => Some(CellPolicy::MedianSupport),
            CellConfig::Named(_) => None,
            CellConfig::Explicit([lo, hi]) => Some(CellPolicy::Explicit { lo: *lo, hi: *hi }),
        }
    }
}

/// Output location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory receiving series, tables and the manifest.
    pub dir: PathBuf,
    /// Also write CSV copies of every series.
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            csv: false,
        }
    }
}

/// Manifest options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifestConfig {
    /// File name inside the output directory.
    pub file: String,
    /// Record wall-clock timings.
    pub timings: bool,
}

impl Default for ManifestConfig {
    fn default() -> Self {
        Self {
            file: "manifest.json".into(),
            timings: true,
        }
    }
}

/// Classical-limit trajectory settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalConfig {
    /// Field-oscillator mass.
    pub m: f64,
    /// Medium-oscillator mass.
    #[serde(rename = "M")]
    pub big_m: f64,
    /// Field frequency.
    pub omega: f64,
    /// Medium frequency.
    pub omega0: f64,
    /// Kerr-limit constant λ.
    pub lambda_cl: f64,
    /// Coupling.
    pub g: f64,
    /// Initial point `[x, p_x, y, p_y]`.
    pub point: [f64; 4],
    /// Integration step.
    pub dt: f64,
    /// Integration steps.
    pub steps: usize,
    /// Steps between stored points.
    pub stride: usize,
    /// `"strang"`, `"yoshida4"` or `"yoshida6"`.
    pub composition: String,
    /// Relative energy-drift gate.
    pub drift_tol: f64,
    /// Steps between Gram–Schmidt passes of the tangent frame.
    pub reorthonormalize: usize,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            m: 1.0,
            big_m: 1.0,
            omega: 1.0,
            omega0: 1.0,
            lambda_cl: 0.5,
            g: 0.5,
            point: [1.0, 0.0, 0.5, 0.3],
            dt: 0.01,
            steps: LONG_STEPS,
            stride: 10,
            composition: "yoshida6".into(),
            drift_tol: kerr_ergo_core::classical::DEFAULT_DRIFT_TOL,
            reorthonormalize: kerr_ergo_core::classical::DEFAULT_REORTHONORMALIZE,
        }
    }
}

impl ClassicalConfig {
    /// Library parameters.
    pub fn params(&self) -> ClassicalParams {
        ClassicalParams {
            m: self.m,
            big_m: self.big_m,
            omega: self.omega,
            omega0: self.omega0,
            lambda_cl: self.lambda_cl,
            g: self.g,
        }
    }

    /// Initial phase point.
    pub fn initial_point(&self) -> PhasePoint {
        let [x, px, y, py] = self.point;
        PhasePoint::new(x, px, y, py)
    }

    /// Parsed composition scheme.
    pub fn composition(&self) -> Option<Composition> {
        match self.composition.as_str() {
            "strang" => Some(Composition::Strang),
            "yoshida4" => Some(Composition::Yoshida4),
            "yoshida6" => Some(Composition::Yoshida6),
            _ => None,
        }
    }
}

impl RunConfig {
    /// Sample spacing actually used.
    pub fn effective_dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(&self.model.params()))
    }

    /// Rate exponents are expressed in: `analysis.time_unit`, else `model.g`
    /// when positive, else 1.
    pub fn rate_unit(&self) -> f64 {
        self.analysis
            .time_unit
            .unwrap_or(if self.model.g > 0.0 { self.model.g } else { 1.0 })
    }

    /// Parses and validates a TOML document. `name` labels error messages.
    pub fn from_toml(text: &str, name: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| toml_error(&e, text, name))?;
        cfg.validate_in(text, name)?;
        Ok(cfg)
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&crate::io::read_to_string(path)?, &path.display().to_string())
    }

    /// Renders the config back to TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every documented invariant.
    pub fn validate(&self) -> Result<()> {
        self.validate_in("", "<config>")
    }

    fn validate_in(&self, text: &str, name: &str) -> Result<()> {
        let fail = |key: &str, msg: String| -> Result<()> {
            Err(CliError::Config {
                source_name: name.to_string(),
                line: locate_key(text, key).unwrap_or(0),
                message: format!("`{key}`: {msg}"),
            })
        };
        if self.steps < 2 {
            return fail("steps", "must be at least 2".into());
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return fail("dt", "must be positive and finite".into());
            }
        }
        if self.discard_prefix + 2 > self.steps {
            return fail("discard_prefix", "must leave at least 2 samples".into());
        }
        if let Err(e) = self.model.params().validate() {
            let key = match &e {
                kerr_ergo_core::Error::InvalidParameter { name, .. } => format!("model.{name}"),
                _ => "model".into(),
            };
            return fail(&key, e.to_string());
        }
        let st = &self.state;
        if !(st.nu >= 0.0 && st.nu.is_finite()) {
            return fail("state.nu", "must be non-negative and finite".into());
        }
        if st.kind == KindConfig::Cs && st.m != 0 {
            return fail("state.m", "must be 0 for a coherent state".into());
        }
        if !(st.eps_trunc > 0.0 && st.eps_trunc < 1.0) {
            return fail("state.eps_trunc", "must lie in (0, 1)".into());
        }
        if self.analyses.lyapunov && !self.analyses.embed {
            return fail("analyses.lyapunov", "requires analyses.embed = true".into());
        }
        let a = &self.analysis;
        if a.observable != "mean_N" && a.observable != "mean_b" {
            return fail("analysis.observable", "must be \"mean_N\" or \"mean_b\"".into());
        }
        if a.lag_window().is_none() {
            return fail(
                "analysis.window",
                "must be \"hann\", \"rectangular\" or \"blackman-harris\"".into(),
            );
        }
        if a.max_lag == 0 || a.ami_max_lag == 0 {
            return fail("analysis.max_lag", "lag limits must be positive".into());
        }
        if a.max_dim == 0 || a.fallback_dim == 0 || a.dim == Some(0) {
            return fail("analysis.max_dim", "dimensions must be positive".into());
        }
        if a.delay == Some(0) {
            return fail("analysis.delay", "must be positive".into());
        }
        if a.kmax < 2 || a.max_refs == 0 {
            return fail("analysis.kmax", "need kmax ≥ 2 and max_refs ≥ 1".into());
        }
        match a.fit_for(1) {
            None => return fail("analysis.fit_range", "must be \"band\", \"linear\" or [lo, hi]".into()),
            Some(FitRange::Manual { lo, hi }) if lo >= hi || hi > a.kmax => {
                return fail("analysis.fit_range", format!("need lo < hi ≤ kmax = {}", a.kmax));
            }
            Some(FitRange::Band { lower, upper }) if !(lower > upper && upper >= 0.0) => {
                return fail("analysis.band_lower", "need band_lower > band_upper ≥ 0".into());
            }
            _ => {}
        }
        for (d, [lo, hi]) in &a.fit_ranges {
            if d.parse::<usize>().is_err() || lo >= hi || *hi > a.kmax {
                return fail("analysis.fit_ranges", format!("bad pinned window for dimension {d}"));
            }
        }
        if !(a.bin_width > 0.0 && a.bin_width.is_finite()) {
            return fail("analysis.bin_width", "must be positive".into());
        }
        match a.cell_policy() {
            None => {
                return fail(
                    "analysis.cell",
                    "must be \"mode\", \"median-support\" or [lo, hi]".into(),
                )
            }
            Some(CellPolicy::Explicit { lo, hi }) if !(lo < hi) => {
                return fail("analysis.cell", "explicit cell needs lo < hi".into());
            }
            _ => {}
        }
        if let Some(u) = a.time_unit {
            if !(u > 0.0 && u.is_finite()) {
                return fail("analysis.time_unit", "must be positive".into());
            }
        }
        if !(a.regular_threshold >= 0.0 && a.significance > 0.0) {
            return fail("analysis.regular_threshold", "thresholds must be non-negative".into());
        }
        let c = &self.classical;
        if let Err(e) = c.params().validate() {
            return fail("classical", e.to_string());
        }
        if c.composition().is_none() {
            return fail(
                "classical.composition",
                "must be \"strang\", \"yoshida4\" or \"yoshida6\"".into(),
            );
        }
        if !(c.dt > 0.0) || c.steps == 0 || c.stride == 0 || c.reorthonormalize == 0 {
            return fail(
                "classical.dt",
                "dt, steps, stride and reorthonormalize must be positive".into(),
            );
        }
        Ok(())
    }

    /// Applies `section.key=value` overrides (values in TOML syntax, bare
    /// words taken as strings) and re-validates.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc: toml::Table = toml::from_str(&self.to_toml()).expect("round trip");
        for (i, o) in overrides.iter().enumerate() {
            let bad = |m: String| CliError::Config {
                source_name: "<flags>".into(),
                line: i + 1,
                message: m,
            };
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| bad(format!("override `{o}` is not of the form key=value")))?;
            let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.to_string()));
            let mut table = &mut doc;
            let parts: Vec<&str> = key.trim().split('.').collect();
            for p in &parts[..parts.len() - 1] {
                table = table
                    .entry(p.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                    .as_table_mut()
                    .ok_or_else(|| bad(format!("`{p}` is not a section")))?;
            }
            table.insert(parts[parts.len() - 1].to_string(), value);
        }
        let text = toml::to_string(&doc).expect("table serializes");
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config {
            source_name: "<flags>".into(),
            line: 0,
            message: e.message().to_string(),
        })?;
        cfg.validate_in("", "<flags>")?;
        Ok(cfg)
    }
}

/// Sampling convention: `0.01` for weak nonlinearity (`γ/g < 1`), `0.1`
/// otherwise (including `g = 0`).
pub fn default_dt(p: &ModelParams) -> f64 {
    if p.g > 0.0 && p.gamma / p.g < 1.0 {
        DT_WEAK
    } else {
        DT_STRONG
    }
}

fn toml_error(e: &toml::de::Error, text: &str, name: &str) -> CliError {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    CliError::Config {
        source_name: name.to_string(),
        line,
        message: e.message().to_string(),
    }
}

/// One-based line on which the dotted `key` is assigned in `text`.
pub fn locate_key(text: &str, key: &str) -> Option<usize> {
    let (section, leaf) = match key.rsplit_once('.') {
        Some((s, l)) => (s, l),
        None => ("", key),
    };
    let mut current = String::new();
    let mut section_line = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
            current = h.trim().to_string();
            if current == section || current == key {
                section_line = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == leaf {
                    return Some(i + 1);
                }
            }
        }
    }
    section_line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml(), "x").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.effective_dt(), DT_STRONG);
    }

    #[test]
    fn dt_follows_nonlinearity() {
        let mut cfg = RunConfig::default();
        cfg.model.gamma = 1.0;
        cfg.model.g = 100.0;
        assert_eq!(cfg.effective_dt(), DT_WEAK);
        cfg.dt = Some(0.05);
        assert_eq!(cfg.effective_dt(), 0.05);
    }

    #[test]
    fn semantic_errors_name_the_line() {
        let text = "steps = 1000\n\n[model]\ngamma = 1.0\ng = -3.0\n";
        let e = RunConfig::from_toml(text, "run.toml").unwrap_err().to_string();
        assert!(e.starts_with("run.toml:5:"), "{e}");
        let text = "[analyses]\nembed = false\nlyapunov = true\n";
        let e = RunConfig::from_toml(text, "a.toml").unwrap_err().to_string();
        assert!(e.starts_with("a.toml:3:"), "{e}");
        let text = "[state]\nkind = \"cs\"\nm = 2\n";
        assert!(RunConfig::from_toml(text, "s")
            .unwrap_err()
            .to_string()
            .starts_with("s:3:"));
    }

    #[test]
    fn syntax_and_unknown_keys_name_the_line() {
        let e = RunConfig::from_toml("steps = 10\n[model]\ngama = 1\n", "t")
            .unwrap_err()
            .to_string();
        assert!(e.starts_with("t:3:"), "{e}");
        let e = RunConfig::from_toml("steps = \n", "t").unwrap_err().to_string();
        assert!(e.starts_with("t:1:"), "{e}");
    }

    #[test]
    fn overrides_mirror_keys() {
        let cfg = RunConfig::default()
            .with_overrides(&[
                "model.gamma=1".into(),
                "state.kind=cs".into(),
                "state.m=0".into(),
                "analysis.fit_range=[5, 40]".into(),
                "steps=5000".into(),
            ])
            .unwrap();
        assert_eq!(cfg.model.gamma, 1.0);
        assert_eq!(cfg.state.kind, KindConfig::Cs);
        assert_eq!(cfg.steps, 5000);
        assert_eq!(cfg.analysis.fit_for(3), Some(FitRange::Manual { lo: 5, hi: 40 }));
        assert!(RunConfig::default().with_overrides(&["model.g=-1".into()]).is_err());
        assert!(RunConfig::default().with_overrides(&["nonsense".into()]).is_err());
    }

    #[test]
    fn pinned_fit_windows_take_precedence() {
        let mut cfg = RunConfig::default();
        cfg.analysis.fit_ranges.insert("5".into(), [10, 20]);
        assert_eq!(cfg.analysis.fit_for(5), Some(FitRange::Manual { lo: 10, hi: 20 }));
        assert!(matches!(cfg.analysis.fit_for(6), Some(FitRange::Band { .. })));
        let back = RunConfig::from_toml(&cfg.to_toml(), "x").unwrap();
        assert_eq!(back, cfg);
    }
}
