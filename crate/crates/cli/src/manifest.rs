//! Run manifests: a JSON record of the configuration, every automatically
//! selected analysis parameter, the produced files and the verdicts, from
//! which a run can be replayed exactly.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::analysis::Analysis;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{read, read_to_string, sha256_hex, write_atomic};

/// Version string recorded in manifests.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Manifest under construction.
#[derive(Debug, Clone)]
pub struct Manifest {
    root: Map<String, Value>,
}

impl Manifest {
    /// Starts a manifest for `command` run with `config`.
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let mut root = Map::new();
        root.insert("code_version".into(), json!(CODE_VERSION));
        root.insert("command".into(), json!(command));
        root.insert(
            "config".into(),
            serde_json::to_value(config).expect("config serializes"),
        );
        root.insert("inputs".into(), json!([]));
        root.insert("outputs".into(), json!([]));
        Self { root }
    }

    /// Sets a top-level section.
    pub fn set(&mut self, key: &str, value: Value) {
        self.root.insert(key.into(), value);
    }

    /// Records an input file and its hash.
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let entry = json!({ "path": path, "sha256": sha256_hex(&read(path)?) });
        self.root["inputs"].as_array_mut().expect("array").push(entry);
        Ok(())
    }

    /// Records output files and their hashes.
    pub fn add_outputs(&mut self, paths: &[PathBuf]) -> Result<()> {
        for p in paths {
            let bytes = read(p)?;
            let entry = json!({ "path": p, "sha256": sha256_hex(&bytes), "bytes": bytes.len() });
            self.root["outputs"].as_array_mut().expect("array").push(entry);
        }
        Ok(())
    }

    /// Records timings unless the config disables them.
    pub fn set_timings(&mut self, config: &RunConfig, timings: Value) {
        if config.manifest.timings {
            self.set("timings", timings);
        }
    }

    /// JSON value.
    pub fn value(&self) -> Value {
        Value::Object(self.root.clone())
    }

    /// Writes the manifest atomically to `config.output.dir/config.manifest.file`.
    pub fn write(&self, config: &RunConfig) -> Result<PathBuf> {
        let path = config.output.dir.join(&config.manifest.file);
        let text = serde_json::to_string_pretty(&self.value()).expect("manifest serializes");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// Auto-selected parameters and results of an analysis, as manifest JSON.
pub fn analysis_record(a: &Analysis, config: &RunConfig) -> Value {
    let mut auto = Map::new();
    if let Some((d, s)) = a.delay {
        auto.insert("delay".into(), json!({ "value": d, "source": s.name() }));
    }
    if let Some((d, s)) = a.dim {
        auto.insert("dim".into(), json!({ "value": d, "source": s.name() }));
    }
    if let Some((w, s)) = a.theiler {
        auto.insert("theiler".into(), json!({ "value": w, "source": s.name() }));
    }
    if !a.curves.is_empty() {
        let ranges: Map<String, Value> = a
            .curves
            .iter()
            .map(|c| (c.embedding.dim.to_string(), json!([c.fit_range.0, c.fit_range.1])))
            .collect();
        let outcomes: Map<String, Value> = a
            .curves
            .iter()
            .map(|c| (c.embedding.dim.to_string(), json!(c.fit_outcome.name())))
            .collect();
        auto.insert("fit_policy".into(), json!(a.curves[0].fit_policy.name()));
        auto.insert("fit_ranges".into(), Value::Object(ranges));
        auto.insert("fit_outcomes".into(), Value::Object(outcomes));
        auto.insert("kmax".into(), json!(config.analysis.kmax));
    }
    if let Some(f) = &a.fnn {
        auto.insert("fnn_fractions".into(), json!(f.fractions));
    }
    if let Some(s) = &a.spectrum {
        auto.insert("max_lag".into(), json!(s.spectrum.max_lag));
        auto.insert("lag_window".into(), json!(s.spectrum.window.name()));
    }
    if let Some(r) = &a.recurrence {
        auto.insert(
            "cell".into(),
            json!({
                "policy": r.policy.name(),
                "lo": r.report.cell.lo,
                "hi": r.report.cell.hi,
                "bin": r.report.cell.bin(),
            }),
        );
    }

    let mut results = Map::new();
    results.insert("samples".into(), json!(a.len));
    if let Some(s) = &a.spectrum {
        results.insert(
            "spectrum".into(),
            json!({
                "peaks": s.peaks.len(),
                "dominant_frequency": s.dominant,
                "contrast_db": finite(s.spectrum.peak_contrast_db()),
                "parseval_error": s.spectrum.parseval_error(),
            }),
        );
    }
    if let Some(l) = &a.lyapunov {
        let c = &a.curves[0];
        results.insert(
            "lyapunov".into(),
            json!({
                "lambda_max": l.lambda,
                "se": l.se,
                "rate_unit": l.rate_unit,
                "lambda_per_time": c.lambda_max,
                "r2": c.fit_r2,
                "pairs": c.pairs,
                "sweep": l.sweep.iter().map(|(d, v, e)| json!({"dim": d, "lambda_max": v, "se": e})).collect::<Vec<_>>(),
                "spread": finite(l.spread),
            }),
        );
    }
    if let Some(r) = &a.recurrence {
        results.insert(
            "recurrence".into(),
            json!({
                "mu": r.report.mu,
                "visits": r.report.visits,
                "mean_tau": r.report.mean_tau,
                "kac_ratio": r.report.kac_ratio,
                "ks_p": r.fit.map(|f| f.ks_p),
                "top10_mass": r.fit.map(|f| f.top10_mass),
                "distinct_taus": r.fit.map(|f| f.distinct),
                "successive_ks_p": r.successive.as_ref().map(|s| s.ks_p),
                "serial_correlation": r.successive.as_ref().map(|s| s.serial_correlation),
            }),
        );
    }

    let mut verdicts = Map::new();
    if let Some(l) = &a.lyapunov {
        verdicts.insert("lyapunov".into(), json!(l.verdict.name()));
    }
    if let Some(r) = &a.recurrence {
        verdicts.insert("return_law".into(), json!(r.fit.map(|f| f.verdict.name())));
        verdicts.insert("erlang2".into(), json!(r.successive.as_ref().map(|s| s.accepted)));
    }
    json!({
        "auto": auto,
        "verdict_rule": a.rule,
        "results": results,
        "verdicts": verdicts,
        "missing": a.missing,
    })
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// A manifest loaded for replay.
#[derive(Debug, Clone)]
pub struct Replay {
    /// Command that produced it.
    pub command: String,
    /// Config with every auto-selected parameter pinned.
    pub config: RunConfig,
    /// Recorded input files.
    pub inputs: Vec<(PathBuf, String)>,
    /// Recorded output files.
    pub outputs: Vec<(PathBuf, String)>,
    /// Full document.
    pub document: Value,
}

/// Loads a manifest and pins its auto-selected parameters into the config.
pub fn load_replay(path: &Path) -> Result<Replay> {
    let text = read_to_string(path)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
    let bad = |m: &str| CliError::format(path, m);
    let command = doc["command"]
        .as_str()
        .ok_or_else(|| bad("missing `command`"))?
        .to_string();
    let mut config: RunConfig =
        serde_json::from_value(doc["config"].clone()).map_err(|e| bad(&format!("config: {e}")))?;
    pin(&mut config, &doc["analysis"]["auto"]);
    config.validate()?;
    let files = |key: &str| -> Vec<(PathBuf, String)> {
        doc[key]
            .as_array()
            .map(|a| {
                a.iter()
                    .filter_map(|e| Some((PathBuf::from(e["path"].as_str()?), e["sha256"].as_str()?.to_string())))
                    .collect()
            })
            .unwrap_or_default()
    };
    Ok(Replay {
        command,
        inputs: files("inputs"),
        outputs: files("outputs"),
        config,
        document: doc,
    })
}

/// Writes recorded automatic choices into the config as explicit overrides.
pub fn pin(config: &mut RunConfig, auto: &Value) {
    let a = &mut config.analysis;
    let num = |k: &str| auto[k]["value"].as_u64().map(|v| v as usize);
    if let Some(d) = num("delay") {
        a.delay = Some(d);
    }
    if let Some(d) = num("dim") {
        a.dim = Some(d);
    }
    if let Some(w) = num("theiler") {
        a.theiler = Some(w);
    }
    if let Some(map) = auto["fit_ranges"].as_object() {
        for (d, r) in map {
            if let (Some(lo), Some(hi)) = (r[0].as_u64(), r[1].as_u64()) {
                a.fit_ranges.insert(d.clone(), [lo as usize, hi as usize]);
            }
        }
    }
}
