//! `kerr-ergo` command-line driver.
//!
//! Exit codes: 0 when every requested verdict was computed, 1 on a
//! configuration, file or numerical error, 3 when a run finished but some
//! verdict is missing (a failed table row, an unreliable fit) or a manifest
//! replay did not reproduce its record.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kerr_ergo::commands::{cmd_analyze, cmd_classical, cmd_fixtures, cmd_simulate, cmd_table1, replay, Table1Set};
use kerr_ergo::config::{RunConfig, LONG_STEPS};
use kerr_ergo::io::read_to_string;
use kerr_ergo::{CliError, Verdict};

#[derive(Parser)]
#[command(
    name = "kerr-ergo",
    version,
    about = "Kerr-medium field dynamics and ergodicity analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set model.gamma=5 --set state.kind=cs`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Number of samples (`steps`).
    #[arg(long)]
    steps: Option<usize>,
    /// Sample spacing (`dt`).
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory (`output.dir`).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Long series (10⁶ samples); runs take minutes.
    #[arg(long)]
    paper_scale: bool,
    /// Replay a manifest with every automatic choice pinned and compare.
    #[arg(long, value_name = "MANIFEST")]
    from_manifest: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let mut sets = overrides_of(self);
        sets.extend(self.set.iter().cloned());
        base.with_overrides(&sets)
    }
}

fn toml_string(p: &Path) -> String {
    toml::Value::String(p.display().to_string()).to_string()
}

#[derive(Subcommand)]
enum Command {
    /// Simulate ⟨N⟩ and ⟨b†b⟩ and write them as series files.
    Simulate(Common),
    /// Analyse a series file.
    Analyze {
        /// Binary (or `.csv`) series file.
        series: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate and classify the regime grid.
    Table1 {
        /// Grid file (`[base]` plus `[[case]]` entries); default: built-in grid.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Integrate the classical limit and analyse H₁(t).
    Classical(Common),
    /// Write test signals and matching analysis configs.
    Fixtures {
        /// Output directory.
        #[arg(long, short, default_value = "fixtures")]
        out: PathBuf,
        /// Samples per fixture.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Seed of the iid fixture.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn replay_report(manifest: &Path, out: Option<&Path>) -> Result<bool, CliError> {
    let r = replay(manifest, out)?;
    for f in &r.outputs {
        let status = match (f.same, f.series) {
            (true, _) => "identical",
            (false, true) => "DIFFERS",
            (false, false) => "differs (diagnostic table)",
        };
        println!("{}: {status}", f.name);
    }
    println!("verdicts: {}", if r.verdicts_match { "identical" } else { "DIFFER" });
    println!("manifest: {}", r.manifest.display());
    Ok(r.identical())
}

fn run(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Simulate(c) => {
            if let Some(m) = &c.from_manifest {
                return replay_report(m, c.out.as_deref());
            }
            let cfg = c.config()?;
            let out = cmd_simulate(&cfg)?;
            let s = &out.simulation;
            println!(
                "simulated {} samples (dt = {}, nmax = {}) in {:.1} s",
                s.observables.mean_n.len(),
                cfg.effective_dt(),
                s.nmax,
                s.seconds
            );
            println!("conservation_residual = {:e}", s.residual);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            println!("manifest: {}", out.manifest.display());
            Ok(true)
        }
        Command::Analyze { series, common } => {
            if let Some(m) = &common.from_manifest {
                return replay_report(m, common.out.as_deref());
            }
            let series = series.ok_or_else(|| CliError::Analysis("a series file is required".into()))?;
            let cfg = common.config()?;
            let out = cmd_analyze(&series, &cfg)?;
            let a = &out.analysis;
            if let Some(s) = &a.spectrum {
                println!(
                    "spectrum: {} peaks above {} dB",
                    s.peaks.len(),
                    cfg.analysis.peak_threshold_db
                );
            }
            if let (Some(d), Some(m)) = (a.delay, a.dim) {
                println!(
                    "embedding: delay {} ({}), dim {} ({})",
                    d.0,
                    d.1.name(),
                    m.0,
                    m.1.name()
                );
            }
            if let Some(l) = &a.lyapunov {
                let c = &a.curves[0];
                println!(
                    "lambda_max = {:.5} ± {:.5} (per {} time⁻¹; fit [{}, {}] {}; spread {:.3}) -> {}",
                    l.lambda,
                    l.se,
                    l.rate_unit,
                    c.fit_range.0,
                    c.fit_range.1,
                    c.fit_outcome.name(),
                    l.spread,
                    l.verdict.name()
                );
            }
            if let Some(r) = &a.recurrence {
                println!(
                    "recurrence: mu = {:.5}, kac_ratio = {:.4}, law = {}",
                    r.report.mu,
                    r.report.kac_ratio,
                    r.fit.map_or("n/a", |f| f.verdict.name())
                );
            }
            for m in &a.missing {
                eprintln!("missing: {m}");
            }
            println!("manifest: {}", out.manifest.display());
            let lyap_ok = !cfg.analyses.lyapunov || a.verdict() != Verdict::Failed;
            let rec_ok = !cfg.analyses.recurrence || a.recurrence.as_ref().is_some_and(|r| r.fit.is_some());
            Ok(lyap_ok && rec_ok)
        }
        Command::Table1 { grid, common } => {
            if let Some(m) = &common.from_manifest {
                return replay_report(m, common.out.as_deref());
            }
            let mut set = match &grid {
                Some(p) => Table1Set::from_toml(&read_to_string(p)?, &p.display().to_string())?,
                None => Table1Set::default(),
            };
            if let Some(p) = &common.config {
                set.base = RunConfig::load(p)?;
            }
            let mut sets = overrides_of(&common);
            sets.extend(common.set.iter().cloned());
            set.base = set.base.with_overrides(&sets)?;
            let out = cmd_table1(&set)?;
            println!("{:>8} {:<14} {:>10} {:>9} verdict", "γ/g", "state", "λ_max/g", "se");
            for r in &out.rows {
                let (l, se) = r.lambda().map_or((f64::NAN, f64::NAN), |x| x);
                let state = match r.case.kind {
                    kerr_ergo::config::KindConfig::Cs => format!("CS ν={}", r.case.nu),
                    kerr_ergo::config::KindConfig::Pacs => format!("PACS m={} ν={}", r.case.m, r.case.nu),
                };
                println!(
                    "{:>8} {:<14} {:>10.4} {:>9.4} {}",
                    r.case.gamma / r.case.g,
                    state,
                    l,
                    se,
                    r.verdict().name()
                );
                if let Err(e) = &r.run {
                    eprintln!("  failed: {e}");
                }
            }
            println!("table: {}", out.table.display());
            println!("manifest: {}", out.manifest.display());
            Ok(out.rows.iter().all(|r| r.verdict() != Verdict::Failed))
        }
        Command::Classical(c) => {
            if let Some(m) = &c.from_manifest {
                return replay_report(m, c.out.as_deref());
            }
            let mut cfg = c.config()?;
            if let Some(n) = c.steps {
                cfg.classical.steps = n;
            }
            let out = cmd_classical(&cfg)?;
            let t = &out.trajectory;
            println!(
                "invariants: max relative drift H_cl {:.2e}, N_tot {:.2e}; max radius {:.4}",
                t.max_energy_drift, t.max_ntot_drift, t.max_radius
            );
            println!(
                "lyapunov spectrum: {:?} (sum {:.2e})",
                out.spectrum.exponents, out.spectrum.sum
            );
            if let Some(l) = &out.analysis.lyapunov {
                println!(
                    "H1 series: lambda_max = {:.5} ± {:.5} -> {}",
                    l.lambda,
                    l.se,
                    l.verdict.name()
                );
            }
            println!("manifest: {}", out.manifest.display());
            Ok(out.analysis.verdict() != Verdict::Failed)
        }
        Command::Fixtures { out, samples, seed } => {
            for f in cmd_fixtures(&out, samples, seed)? {
                println!("wrote {}", f.display());
            }
            Ok(true)
        }
    }
}

fn overrides_of(c: &Common) -> Vec<String> {
    let mut sets = Vec::new();
    if c.paper_scale {
        sets.push(format!("steps={LONG_STEPS}"));
    }
    if let Some(n) = c.steps {
        sets.push(format!("steps={n}"));
    }
    if let Some(dt) = c.dt {
        sets.push(format!("dt={dt:e}"));
    }
    if let Some(o) = &c.out {
        sets.push(format!("output.dir={}", toml_string(o)));
    }
    sets
}
