//! The five subcommands and manifest replay.

use std::path::{Path, PathBuf};
use std::time::Instant;

use kerr_ergo_core::classical::{
    classical_lyapunov, integrate, Coordinate, IntegrateOptions, LyapunovSpectrum, Trajectory,
};
use kerr_ergo_core::TimeSeries;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{analyze, Analysis};
use crate::config::{AnalysesConfig, KindConfig, RunConfig};
use crate::error::{CliError, CoreContext, Result};
use crate::format::{read_series, write_csv, write_series};
use crate::io::{read, sha256, sha256_hex, write_atomic};
use crate::manifest::{analysis_record, load_replay, pin, Manifest};
use crate::simulate::{simulate, Simulation};
use crate::tables::write_analysis_tables;
use crate::verdict::Verdict;

fn write_series_files(dir: &Path, series: &[&TimeSeries], csv: bool) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for s in series {
        let p = dir.join(format!("{}.bin", s.label));
        write_series(&p, s)?;
        files.push(p);
        if csv {
            let p = dir.join(format!("{}.csv", s.label));
            write_csv(&p, s)?;
            files.push(p);
        }
    }
    Ok(files)
}

/// Result of [`cmd_simulate`].
#[derive(Debug)]
pub struct SimulateOutcome {
    /// Simulated series and diagnostics.
    pub simulation: Simulation,
    /// Files written (series, CSV copies).
    pub files: Vec<PathBuf>,
    /// Manifest path.
    pub manifest: PathBuf,
}

/// Simulates and writes `mean_N`, `mean_b` (and `entropy`) series plus a manifest.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateOutcome> {
    let sim = simulate(config)?;
    let o = &sim.observables;
    let mut series = vec![&o.mean_n, &o.mean_b];
    if let Some(e) = &o.entropy {
        series.push(e);
    }
    let files = write_series_files(&config.output.dir, &series, config.output.csv)?;
    let mut m = Manifest::new("simulate", config);
    m.set("simulation", sim.record());
    m.add_outputs(&files)?;
    m.set_timings(config, json!({ "simulate": sim.seconds }));
    let manifest = m.write(config)?;
    Ok(SimulateOutcome {
        simulation: sim,
        files,
        manifest,
    })
}

/// Result of [`cmd_analyze`].
#[derive(Debug)]
pub struct AnalyzeOutcome {
    /// Analysis results.
    pub analysis: Analysis,
    /// Tables written.
    pub files: Vec<PathBuf>,
    /// Manifest path.
    pub manifest: PathBuf,
}

/// Runs the configured analyses on a series file and writes the tables and a
/// manifest.
pub fn cmd_analyze(series_path: &Path, config: &RunConfig) -> Result<AnalyzeOutcome> {
    let series = read_series(series_path)?;
    let series = series.discard_prefix(config.discard_prefix).stage("discard_prefix")?;
    let a = analyze(&series, &config.analyses, &config.analysis, config.rate_unit())?;
    let files = write_analysis_tables(&config.output.dir, "", &a, config.rate_unit())?;
    let mut m = Manifest::new("analyze", config);
    m.add_input(series_path)?;
    m.set("analysis", analysis_record(&a, config));
    m.add_outputs(&files)?;
    m.set_timings(config, timings_json(&a.timings));
    let manifest = m.write(config)?;
    Ok(AnalyzeOutcome {
        analysis: a,
        files,
        manifest,
    })
}

fn timings_json(t: &[(&'static str, f64)]) -> Value {
    Value::Object(t.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

/// One row of the regime table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    /// Kerr strength γ.
    pub gamma: f64,
    /// Coupling g.
    pub g: f64,
    /// `"cs"` or `"pacs"`.
    pub kind: KindConfig,
    /// `ν = |α|²`.
    pub nu: f64,
    /// Photon-addition order.
    #[serde(default)]
    pub m: usize,
    /// Sample spacing override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl CaseSpec {
    fn new(gamma: f64, g: f64, kind: KindConfig, nu: f64, m: usize) -> Self {
        Self {
            gamma,
            g,
            kind,
            nu,
            m,
            dt: None,
        }
    }

    /// Full run config for this case on top of `base`.
    pub fn config(&self, base: &RunConfig) -> RunConfig {
        let mut c = base.clone();
        c.model.gamma = self.gamma;
        c.model.g = self.g;
        c.state.kind = self.kind;
        c.state.nu = self.nu;
        c.state.m = if self.kind == KindConfig::Cs { 0 } else { self.m };
        c.dt = self.dt.or(base.dt);
        c
    }

    /// Label such as `g5_pacs_m1_nu10`.
    pub fn label(&self) -> String {
        let k = match self.kind {
            KindConfig::Cs => "cs".to_string(),
            KindConfig::Pacs => format!("pacs_m{}", self.m),
        };
        format!("g{}_{k}_nu{}", self.gamma / self.g, self.nu)
    }
}

/// The regime-table grid and the config shared by its runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Set {
    /// Shared settings (steps, analysis parameters, output directory).
    #[serde(default)]
    pub base: RunConfig,
    /// Grid cases.
    #[serde(default = "regime_grid", rename = "case")]
    pub cases: Vec<CaseSpec>,
}

impl Default for Table1Set {
    fn default() -> Self {
        Self {
            base: RunConfig::default(),
            cases: regime_grid(),
        }
    }
}

impl Table1Set {
    /// Parses a grid file (`[base]` section plus `[[case]]` entries).
    pub fn from_toml(text: &str, name: &str) -> Result<Self> {
        let set: Table1Set = toml::from_str(text).map_err(|e| CliError::Config {
            source_name: name.into(),
            line: e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0),
            message: e.message().to_string(),
        })?;
        set.base.validate()?;
        for (i, c) in set.cases.iter().enumerate() {
            c.config(&set.base).validate().map_err(|e| CliError::Config {
                source_name: name.into(),
                line: 0,
                message: format!("case {}: {e}", i + 1),
            })?;
        }
        Ok(set)
    }
}

/// Weak (`γ = 1, g = 100`) and strong (`γ = 5, g = 1`) nonlinearity over
/// coherent and photon-added initial states.
pub fn regime_grid() -> Vec<CaseSpec> {
    use KindConfig::{Cs, Pacs};
    vec![
        CaseSpec::new(1.0, 100.0, Cs, 1.0, 0),
        CaseSpec::new(1.0, 100.0, Pacs, 1.0, 1),
        CaseSpec::new(1.0, 100.0, Pacs, 1.0, 5),
        CaseSpec::new(5.0, 1.0, Cs, 1.0, 0),
        CaseSpec::new(5.0, 1.0, Pacs, 1.0, 1),
        CaseSpec::new(5.0, 1.0, Pacs, 1.0, 5),
        CaseSpec::new(5.0, 1.0, Cs, 10.0, 0),
        CaseSpec::new(5.0, 1.0, Pacs, 10.0, 1),
        CaseSpec::new(5.0, 1.0, Pacs, 10.0, 5),
    ]
}

/// Everything computed for one case.
#[derive(Debug, Clone)]
pub struct CaseRun {
    /// Effective config.
    pub config: RunConfig,
    /// Simulation.
    pub simulation: Simulation,
    /// Analysis of the configured observable.
    pub analysis: Analysis,
}

/// Simulates and analyses one config in memory.
pub fn run_case(config: &RunConfig) -> Result<CaseRun> {
    let simulation = simulate(config)?;
    let series = simulation
        .observable(&config.analysis.observable)
        .discard_prefix(config.discard_prefix)
        .stage("discard_prefix")?;
    let analysis = analyze(&series, &config.analyses, &config.analysis, config.rate_unit())?;
    Ok(CaseRun {
        config: config.clone(),
        simulation,
        analysis,
    })
}

/// One row of the regime table.
#[derive(Debug, Clone)]
pub struct Table1Row {
    /// Grid case.
    pub case: CaseSpec,
    /// The run, or why it failed.
    pub run: std::result::Result<CaseRun, String>,
}

impl Table1Row {
    /// Verdict (`Failed` for failed runs).
    pub fn verdict(&self) -> Verdict {
        self.run.as_ref().map_or(Verdict::Failed, |r| r.analysis.verdict())
    }

    /// `(λ, SE)` in units of `g`.
    pub fn lambda(&self) -> Option<(f64, f64)> {
        let l = self.run.as_ref().ok()?.analysis.lyapunov.as_ref()?;
        Some((l.lambda, l.se))
    }
}

/// Result of [`cmd_table1`].
#[derive(Debug)]
pub struct Table1Outcome {
    /// Rows in grid order.
    pub rows: Vec<Table1Row>,
    /// Table path.
    pub table: PathBuf,
    /// Manifest path.
    pub manifest: PathBuf,
}

/// Runs every case concurrently; a failing case marks its row `failed`.
pub fn cmd_table1(set: &Table1Set) -> Result<Table1Outcome> {
    let configs: Vec<RunConfig> = set.cases.iter().map(|c| c.config(&set.base)).collect();
    run_table(set, &configs)
}

fn run_table(set: &Table1Set, configs: &[RunConfig]) -> Result<Table1Outcome> {
    let t0 = Instant::now();
    let rows: Vec<Table1Row> = set
        .cases
        .par_iter()
        .zip(configs.par_iter())
        .map(|(case, cfg)| Table1Row {
            case: case.clone(),
            run: run_case(cfg).map_err(|e| e.to_string()),
        })
        .collect();
    let mut text = String::from(
        "gamma_over_g,state,m,nu,dt,steps,lambda_max,se,verdict,spread,delay,dim,theiler,fit_lo,fit_hi,fit_outcome,peaks,conservation_residual,kac_ratio,return_law\n",
    );
    let mut cases_json = Vec::new();
    for r in &rows {
        let c = &r.case;
        let kind = match c.kind {
            KindConfig::Cs => "CS",
            KindConfig::Pacs => "PACS",
        };
        match &r.run {
            Ok(run) => {
                let a = &run.analysis;
                let l = a.lyapunov.as_ref();
                let curve = a.curves.first();
                let opt = |v: Option<String>| v.unwrap_or_default();
                text.push_str(&format!(
                    "{},{kind},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:e},{},{}\n",
                    c.gamma / c.g,
                    c.m,
                    c.nu,
                    run.config.effective_dt(),
                    run.config.steps,
                    opt(l.map(|l| format!("{:.6}", l.lambda))),
                    opt(l.map(|l| format!("{:.6}", l.se))),
                    a.verdict().name(),
                    opt(l.map(|l| format!("{:.4}", l.spread))),
                    opt(a.delay.map(|d| d.0.to_string())),
                    opt(a.dim.map(|d| d.0.to_string())),
                    opt(a.theiler.map(|d| d.0.to_string())),
                    opt(curve.map(|c| c.fit_range.0.to_string())),
                    opt(curve.map(|c| c.fit_range.1.to_string())),
                    opt(curve.map(|c| c.fit_outcome.name().to_string())),
                    opt(a.spectrum.as_ref().map(|s| s.peaks.len().to_string())),
                    run.simulation.residual,
                    opt(a.recurrence.as_ref().map(|r| format!("{:.4}", r.report.kac_ratio))),
                    opt(a
                        .recurrence
                        .as_ref()
                        .and_then(|r| r.fit)
                        .map(|f| f.verdict.name().to_string())),
                ));
                cases_json.push(json!({
                    "case": c,
                    "config": run.config,
                    "simulation": run.simulation.record(),
                    "analysis": analysis_record(a, &run.config),
                }));
            }
            Err(e) => {
                text.push_str(&format!(
                    "{},{kind},{},{},,,,,failed,,,,,,,,,,,\n",
                    c.gamma / c.g,
                    c.m,
                    c.nu
                ));
                cases_json.push(json!({ "case": c, "error": e }));
            }
        }
    }
    let table = set.base.output.dir.join("table1.csv");
    write_atomic(&table, text.as_bytes())?;
    let mut m = Manifest::new("table1", &set.base);
    m.set("cases", Value::Array(cases_json));
    m.add_outputs(std::slice::from_ref(&table))?;
    m.set_timings(&set.base, json!({ "table1": t0.elapsed().as_secs_f64() }));
    let manifest = m.write(&set.base)?;
    Ok(Table1Outcome { rows, table, manifest })
}

/// Result of [`cmd_classical`].
#[derive(Debug)]
pub struct ClassicalOutcome {
    /// Recorded trajectory.
    pub trajectory: Trajectory,
    /// Lyapunov spectrum.
    pub spectrum: LyapunovSpectrum,
    /// Analysis of the field energy `H₁(t)`.
    pub analysis: Analysis,
    /// Files written.
    pub files: Vec<PathBuf>,
    /// Manifest path.
    pub manifest: PathBuf,
}

/// Analyses switched on for the classical `H₁(t)` series.
pub fn classical_analyses() -> AnalysesConfig {
    AnalysesConfig {
        recurrence: false,
        entropy: false,
        ..AnalysesConfig::default()
    }
}

/// Integrates the classical limit, computes its Lyapunov spectrum and runs
/// the field energy through the analysis chain.
pub fn cmd_classical(config: &RunConfig) -> Result<ClassicalOutcome> {
    let c = &config.classical;
    let p = c.params();
    let opts = IntegrateOptions {
        composition: c.composition().expect("validated"),
        stride: c.stride,
        drift_tol: c.drift_tol,
    };
    let t0 = Instant::now();
    let trajectory = integrate(c.initial_point(), &p, c.dt, c.steps, opts).stage("classical integration")?;
    let t_int = t0.elapsed().as_secs_f64();
    let spectrum = classical_lyapunov(c.initial_point(), &p, c.dt, c.steps, opts, c.reorthonormalize)
        .stage("classical lyapunov")?;
    let t_lyap = t0.elapsed().as_secs_f64() - t_int;
    let hash = sha256(serde_json::to_string(c).expect("serializes").as_bytes());
    let h1 = trajectory
        .series(Coordinate::H1, &p)
        .stage("H1 series")?
        .with_params_hash(hash);
    let mut files = write_series_files(&config.output.dir, &[&h1], config.output.csv)?;
    let unit = config.analysis.time_unit.unwrap_or(if p.g > 0.0 { p.g } else { 1.0 });
    let analysis = analyze(&h1, &classical_analyses(), &config.analysis, unit)?;
    files.extend(write_analysis_tables(&config.output.dir, "H1_", &analysis, unit)?);
    let mut m = Manifest::new("classical", config);
    m.set(
        "invariants",
        json!({
            "energy": trajectory.energy,
            "n_tot": trajectory.n_tot,
            "max_energy_drift": trajectory.max_energy_drift,
            "max_ntot_drift": trajectory.max_ntot_drift,
            "max_radius": trajectory.max_radius,
            "bounding_radius": kerr_ergo_core::classical::bounding_radius(trajectory.n_tot, &p),
        }),
    );
    m.set(
        "lyapunov_spectrum",
        json!({ "exponents": spectrum.exponents, "sum": spectrum.sum, "time": spectrum.time }),
    );
    m.set("analysis", analysis_record(&analysis, config));
    m.add_outputs(&files)?;
    m.set_timings(config, json!({ "integrate": t_int, "lyapunov": t_lyap }));
    let manifest = m.write(config)?;
    Ok(ClassicalOutcome {
        trajectory,
        spectrum,
        analysis,
        files,
        manifest,
    })
}

/// Test signals with known answers.
pub const FIXTURES: [&str; 4] = ["sine", "two-tone", "logistic", "iid"];

/// Generates fixture `name` with `n` samples.
pub fn fixture(name: &str, n: usize, seed: u64) -> Option<TimeSeries> {
    use std::f64::consts::TAU;
    let (dt, v): (f64, Vec<f64>) = match name {
        "sine" => (0.1, (0..n).map(|i| (TAU * 0.37 * i as f64 * 0.1).sin()).collect()),
        "two-tone" => (
            0.1,
            (0..n)
                .map(|i| {
                    let t = i as f64 * 0.1;
                    (TAU * 0.37 * t).sin() + 0.5 * (TAU * 0.37 * std::f64::consts::SQRT_2 * t).sin()
                })
                .collect(),
        ),
        "logistic" => {
            let mut x = 0.314_159_265_358_979_3_f64;
            for _ in 0..1000 {
                x = 4.0 * x * (1.0 - x);
            }
            (
                1.0,
                (0..n)
                    .map(|_| {
                        x = 4.0 * x * (1.0 - x);
                        x
                    })
                    .collect(),
            )
        }
        "iid" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (1.0, (0..n).map(|_| rng.gen::<f64>()).collect())
        }
        _ => return None,
    };
    let hash = sha256(format!("fixture:{name}:{n}:{seed}").as_bytes());
    Some(TimeSeries::new(dt, v, name).ok()?.with_params_hash(hash))
}

/// Analysis config that suits fixture `name`, writing its tables to
/// `dir/name`. Exponents are per unit time; the logistic map gets the unit
/// delay, a one-step Theiler window and the linear fit rule appropriate to a
/// map whose divergence saturates within a few iterations.
pub fn fixture_config(name: &str, dir: &Path) -> RunConfig {
    let mut c = RunConfig::default();
    c.analysis.time_unit = Some(1.0);
    c.output.dir = dir.join(name);
    if name == "logistic" {
        c.analysis.delay = Some(1);
        c.analysis.theiler = Some(1);
        c.analysis.kmax = 20;
        c.analysis.fit_range = crate::config::FitRangeConfig::Named("linear".into());
    }
    c
}

/// Writes every fixture (`<name>.bin`) and its analysis config (`<name>.toml`).
pub fn cmd_fixtures(dir: &Path, n: usize, seed: u64) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for name in FIXTURES {
        let s = fixture(name, n, seed).ok_or_else(|| CliError::Analysis(format!("fixture {name}")))?;
        let p = dir.join(format!("{name}.bin"));
        write_series(&p, &s)?;
        files.push(p);
        let p = dir.join(format!("{name}.toml"));
        write_atomic(&p, fixture_config(name, dir).to_toml().as_bytes())?;
        files.push(p);
    }
    Ok(files)
}

/// Outcome of replaying a manifest.
#[derive(Debug)]
pub struct ReplayOutcome {
    /// Command replayed.
    pub command: String,
    /// Comparison of every recorded output.
    pub outputs: Vec<ReplayFile>,
    /// Recorded and recomputed verdicts and numeric results agree.
    pub verdicts_match: bool,
    /// Manifest written by the replay.
    pub manifest: PathBuf,
}

/// One recorded output compared against its replayed counterpart.
#[derive(Debug, Clone)]
pub struct ReplayFile {
    /// File name.
    pub name: String,
    /// A time series (binary file or series CSV export) rather than a
    /// diagnostic table.
    pub series: bool,
    /// Same SHA-256 as recorded.
    pub same: bool,
}

impl ReplayOutcome {
    /// Every series file bit-identical and every verdict and numeric result
    /// equal.
    ///
    /// Diagnostic tables are reported but do not gate: with the automatic
    /// choices pinned, the AMI and FNN tables are not regenerated and fit
    /// tables label their windows as manual.
    pub fn identical(&self) -> bool {
        self.verdicts_match && self.outputs.iter().all(|f| f.same || !f.series)
    }
}

/// Re-runs the command recorded in `manifest_path` with every automatic
/// choice pinned, writing into `out_dir` (default: the recorded directory),
/// and compares outputs and verdicts with the record.
pub fn replay(manifest_path: &Path, out_dir: Option<&Path>) -> Result<ReplayOutcome> {
    let rep = load_replay(manifest_path)?;
    let mut config = rep.config.clone();
    if let Some(d) = out_dir {
        config.output.dir = d.to_path_buf();
    }
    let doc = &rep.document;
    let (manifest, verdicts_match) = match rep.command.as_str() {
        "simulate" => (cmd_simulate(&config)?.manifest, true),
        "analyze" => {
            let (input, hash) = rep
                .inputs
                .first()
                .ok_or_else(|| CliError::format(manifest_path, "analyze manifest lists no input"))?;
            if &sha256_hex(&read(input)?) != hash {
                return Err(CliError::format(
                    input,
                    "input differs from the one recorded in the manifest",
                ));
            }
            let out = cmd_analyze(input, &config)?;
            let now = analysis_record(&out.analysis, &config);
            let same = now["verdicts"] == doc["analysis"]["verdicts"] && now["results"] == doc["analysis"]["results"];
            (out.manifest, same)
        }
        "classical" => {
            let out = cmd_classical(&config)?;
            let now = analysis_record(&out.analysis, &config);
            (
                out.manifest,
                now["verdicts"] == doc["analysis"]["verdicts"] && now["results"] == doc["analysis"]["results"],
            )
        }
        "table1" => {
            let cases = doc["cases"].as_array().cloned().unwrap_or_default();
            let mut set = Table1Set {
                base: config.clone(),
                cases: Vec::new(),
            };
            let mut configs = Vec::new();
            for c in &cases {
                let spec: CaseSpec = serde_json::from_value(c["case"].clone())
                    .map_err(|e| CliError::format(manifest_path, e.to_string()))?;
                let mut cfg = match c.get("config") {
                    Some(v) => {
                        serde_json::from_value(v.clone()).map_err(|e| CliError::format(manifest_path, e.to_string()))?
                    }
                    None => spec.config(&config),
                };
                pin(&mut cfg, &c["analysis"]["auto"]);
                cfg.output.dir = config.output.dir.clone();
                set.cases.push(spec);
                configs.push(cfg);
            }
            let out = run_table(&set, &configs)?;
            let same = out.rows.iter().zip(&cases).all(|(r, c)| {
                let recorded = c["analysis"]["verdicts"]["lyapunov"].as_str().unwrap_or("failed");
                r.verdict().name() == recorded
            });
            (out.manifest, same)
        }
        other => return Err(CliError::format(manifest_path, format!("unknown command `{other}`"))),
    };
    let fresh = load_replay(&manifest)?;
    let outputs = rep
        .outputs
        .iter()
        .map(|(p, h)| {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let same = fresh
                .outputs
                .iter()
                .any(|(q, g)| q.file_name() == p.file_name() && g == h);
            let series = rep.command == "simulate" || p.extension().is_some_and(|e| e == "bin");
            ReplayFile { name, series, same }
        })
        .collect();
    Ok(ReplayOutcome {
        command: rep.command,
        outputs,
        verdicts_match,
        manifest,
    })
}
