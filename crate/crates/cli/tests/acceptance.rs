//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs the 10⁶-sample regime table once (about two to three minutes on a
//! single core) and derives criteria 4–8 from it; the others run their own
//! short simulations. The process exits 0 after reporting, so a failing
//! criterion is visible in the output without breaking the workspace test
//! run; set `KERR_ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

use std::path::Path;
use std::time::Instant;

use kerr_ergo::analysis::analyze;
use kerr_ergo::commands::{
    cmd_analyze, cmd_classical, cmd_simulate, cmd_table1, fixture, fixture_config, regime_grid, replay, CaseSpec,
    Table1Row, Table1Set,
};
use kerr_ergo::config::{KindConfig, RunConfig, DESK_STEPS, LONG_STEPS};
use kerr_ergo::simulate::simulate;
use kerr_ergo::Verdict;
use kerr_ergo_core::recurrence::{ReturnVerdict, KS_ACCEPT_P, MAX_SERIAL_CORRELATION};

/// Criterion 1: bound on `max_t |⟨N⟩ + ⟨b†b⟩ − const|`.
const CONSERVATION_TOL: f64 = 1e-8;
/// Criterion 1: wall-clock budget per case.
const CONSERVATION_SECONDS: f64 = 60.0;
/// Criterion 2: bound on `|⟨N⟩ − ν cos²(gt)|`.
const ANALYTIC_TOL: f64 = 1e-9;
/// Criterion 2: samples compared.
const ANALYTIC_SAMPLES: usize = 10_000;
/// Criterion 3: logistic exponent `ln 2` per step ± this.
const LOGISTIC_TOL: f64 = 0.05;
/// Criterion 3: `|λ|` bound for the sine.
const SINE_BOUND: f64 = 0.02;
/// Criterion 3: wall-clock budget.
const ORACLE_SECONDS: f64 = 30.0;
/// Criterion 4: anchor exponent and tolerance (units of g).
const ANCHOR_LAMBDA: f64 = 0.80;
const ANCHOR_TOL: f64 = 0.25;
/// Criterion 4: exponent must exceed this many standard errors.
const ANCHOR_SIGMAS: f64 = 3.0;
/// Criterion 4: largest relative spread over `d_emb … d_emb + 5`.
const ANCHOR_SPREAD: f64 = 0.25;
/// Criterion 4: wall-clock budget.
const ANCHOR_SECONDS: f64 = 600.0;
/// Criterion 7: `|kac_ratio − 1|` bound.
const KAC_TOL: f64 = 0.05;
/// Criterion 9: relative drift bound of both invariants.
const CLASSICAL_DRIFT: f64 = 1e-8;
/// Criterion 9: bound on every classical exponent.
const CLASSICAL_EXPONENT: f64 = 5e-3;
/// Criterion 9: integration steps.
const CLASSICAL_STEPS: usize = 1_000_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn find<'a>(rows: &'a [Table1Row], gamma_over_g: f64, kind: KindConfig, m: usize, nu: f64) -> &'a Table1Row {
    rows.iter()
        .find(|r| {
            (r.case.gamma / r.case.g - gamma_over_g).abs() < 1e-12
                && r.case.kind == kind
                && (kind == KindConfig::Cs || r.case.m == m)
                && r.case.nu == nu
        })
        .expect("case in grid")
}

fn lambda_text(r: &Table1Row) -> String {
    match r.lambda() {
        Some((l, se)) => format!("{l:.4}±{se:.4} {}", r.verdict().name()),
        None => format!("{}", r.verdict().name()),
    }
}

fn conservation() -> Outcome {
    let mut worst: (f64, f64) = (0.0, 0.0);
    let mut notes = Vec::new();
    for case in regime_grid() {
        let mut cfg = case.config(&RunConfig::default());
        cfg.steps = DESK_STEPS;
        match simulate(&cfg) {
            Ok(s) => {
                worst.0 = worst.0.max(s.residual);
                worst.1 = worst.1.max(s.seconds);
            }
            Err(e) => notes.push(format!("{}: {e}", case.label())),
        }
    }
    let pass = notes.is_empty() && worst.0 < CONSERVATION_TOL && worst.1 <= CONSERVATION_SECONDS;
    outcome(
        pass,
        format!(
            "max residual {:.2e} (< {CONSERVATION_TOL:e}), slowest case {:.1} s (≤ {CONSERVATION_SECONDS} s) over {} cases of {DESK_STEPS} steps{}",
            worst.0,
            worst.1,
            regime_grid().len(),
            notes.iter().map(|n| format!("; {n}")).collect::<String>()
        ),
    )
}

fn analytic_limit() -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.model.gamma = 0.0;
    cfg.model.g = 1.0;
    cfg.state.kind = KindConfig::Cs;
    cfg.state.m = 0;
    cfg.state.nu = 1.0;
    cfg.dt = Some(0.01);
    cfg.steps = ANALYTIC_SAMPLES;
    let sim = match simulate(&cfg) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let err = sim
        .observables
        .mean_n
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| (v - (j as f64 * 0.01).cos().powi(2)).abs())
        .fold(0.0, f64::max);
    outcome(
        err < ANALYTIC_TOL,
        format!("max |⟨N⟩ − cos²(gt)| = {err:.2e} over {ANALYTIC_SAMPLES} samples (< {ANALYTIC_TOL:e})"),
    )
}

fn oracle_lyapunov() -> Outcome {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, check) in [
        (
            "logistic",
            (|l: f64| (l - std::f64::consts::LN_2).abs() < LOGISTIC_TOL) as fn(f64) -> bool,
        ),
        ("sine", |l: f64| l.abs() < SINE_BOUND),
    ] {
        let series = fixture(name, DESK_STEPS, 1).expect("fixture");
        let cfg = fixture_config(name, Path::new("."));
        match analyze(&series, &cfg.analyses, &cfg.analysis, cfg.rate_unit()) {
            Ok(a) => {
                let l = a.lyapunov.as_ref().map_or(f64::NAN, |l| l.lambda);
                pass &= check(l);
                lines.push(format!("{name} λ = {l:.4}/step ({})", a.verdict().name()));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("{name}: {e}"));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    pass &= secs <= ORACLE_SECONDS;
    outcome(
        pass,
        format!(
            "{}; target ln2 ± {LOGISTIC_TOL} and |λ| < {SINE_BOUND}; {secs:.1} s (≤ {ORACLE_SECONDS} s)",
            lines.join(", ")
        ),
    )
}

fn anchor(rows: &[Table1Row]) -> Outcome {
    let r = find(rows, 5.0, KindConfig::Pacs, 1, 10.0);
    let Ok(run) = &r.run else {
        return outcome(false, format!("run failed: {:?}", r.run.as_ref().err()));
    };
    let Some(l) = run.analysis.lyapunov.as_ref() else {
        return outcome(false, "no exponent".into());
    };
    let secs = run.simulation.seconds + run.analysis.timings.iter().map(|t| t.1).sum::<f64>();
    let in_band = (l.lambda - ANCHOR_LAMBDA).abs() <= ANCHOR_TOL;
    let significant = l.lambda > ANCHOR_SIGMAS * l.se;
    let stable = l.spread <= ANCHOR_SPREAD;
    let sweep: Vec<String> = l.sweep.iter().map(|(d, v, _)| format!("d{d}:{v:.3}")).collect();
    outcome(
        in_band && significant && stable && secs <= ANCHOR_SECONDS,
        format!(
            "λ_max = {:.4} ± {:.4} (per g; target {ANCHOR_LAMBDA} ± {ANCHOR_TOL}), λ/SE = {:.1} (> {ANCHOR_SIGMAS}), spread {:.3} (≤ {ANCHOR_SPREAD}) over [{}], {} samples, {secs:.0} s",
            l.lambda,
            l.se,
            l.lambda / l.se,
            l.spread,
            sweep.join(" "),
            run.config.steps
        ),
    )
}

fn regime_table(rows: &[Table1Row]) -> Outcome {
    use KindConfig::{Cs, Pacs};
    let expect: [(f64, KindConfig, usize, f64, Verdict); 7] = [
        (0.01, Cs, 0, 1.0, Verdict::Regular),
        (0.01, Pacs, 1, 1.0, Verdict::Regular),
        (0.01, Pacs, 5, 1.0, Verdict::Regular),
        (5.0, Cs, 0, 1.0, Verdict::Regular),
        (5.0, Pacs, 5, 1.0, Verdict::Chaotic),
        (5.0, Cs, 0, 10.0, Verdict::Chaotic),
        (5.0, Pacs, 1, 10.0, Verdict::Chaotic),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (ratio, kind, m, nu, want) in expect {
        let r = find(rows, ratio, kind, m, nu);
        let ok = r.verdict() == want;
        pass &= ok;
        parts.push(format!(
            "{}{}",
            r.case.label(),
            if ok {
                String::new()
            } else {
                format!(" ({} ≠ {})", r.verdict().name(), want.name())
            }
        ));
    }
    let ls: Vec<f64> = [(Cs, 0), (Pacs, 1), (Pacs, 5)]
        .iter()
        .map(|&(k, m)| find(rows, 5.0, k, m, 10.0).lambda().map_or(f64::NAN, |x| x.0))
        .collect();
    let monotone = ls[0] <= ls[1] && ls[1] <= ls[2];
    pass &= monotone;
    outcome(
        pass,
        format!(
            "{} verdicts as expected{}; λ(m = 0, 1, 5; γ/g = 5, ν = 10) = {:.3}, {:.3}, {:.3} {}",
            parts.iter().filter(|p| !p.contains('≠')).count(),
            parts
                .iter()
                .filter(|p| p.contains('≠'))
                .map(|p| format!("; {p}"))
                .collect::<String>(),
            ls[0],
            ls[1],
            ls[2],
            if monotone { "non-decreasing" } else { "NOT monotone" }
        ),
    )
}

fn spectrum_contrast(rows: &[Table1Row]) -> Outcome {
    let peaks = |r: &Table1Row| {
        r.run
            .as_ref()
            .ok()
            .and_then(|run| run.analysis.spectrum.as_ref())
            .map(|s| s.peaks.len())
    };
    let cs = peaks(find(rows, 0.01, KindConfig::Cs, 0, 1.0));
    let m5 = peaks(find(rows, 0.01, KindConfig::Pacs, 5, 1.0));
    match (cs, m5) {
        (Some(c), Some(p)) => outcome(p > c, format!("peaks above −60 dB: PACS m=5 {p} vs CS {c}")),
        _ => outcome(false, "spectrum missing".into()),
    }
}

fn recurrence_rows<'a>(rows: &'a [Table1Row]) -> [(&'static str, &'a Table1Row); 2] {
    [
        ("weak", find(rows, 0.01, KindConfig::Pacs, 1, 1.0)),
        ("strong", find(rows, 5.0, KindConfig::Pacs, 1, 10.0)),
    ]
}

fn kac(rows: &[Table1Row]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in recurrence_rows(rows) {
        match r.run.as_ref().ok().and_then(|run| run.analysis.recurrence.as_ref()) {
            Some(rec) => {
                let k = rec.report.kac_ratio;
                pass &= (k - 1.0).abs() <= KAC_TOL;
                parts.push(format!("{name} kac_ratio = {k:.4} (μ = {:.4})", rec.report.mu));
            }
            None => {
                pass = false;
                parts.push(format!("{name}: no recurrence"));
            }
        }
    }
    outcome(pass, format!("{} (target 1 ± {KAC_TOL})", parts.join(", ")))
}

fn dichotomy(rows: &[Table1Row]) -> Outcome {
    let [(_, weak), (_, strong)] = recurrence_rows(rows);
    let rec = |r: &Table1Row| r.run.as_ref().ok().and_then(|run| run.analysis.recurrence.clone());
    let (Some(w), Some(s)) = (rec(weak), rec(strong)) else {
        return outcome(false, "recurrence missing".into());
    };
    let (Some(wf), Some(sf)) = (w.fit, s.fit) else {
        return outcome(false, "return-time fit missing".into());
    };
    let weak_ok = wf.verdict == ReturnVerdict::Discrete;
    let strong_ok = sf.verdict == ReturnVerdict::Exponential;
    let (succ_ok, succ_text) = match &s.successive {
        Some(x) => (
            x.accepted,
            format!("Erlang-2 KS p = {:.3e}, serial r = {:.3}", x.ks_p, x.serial_correlation),
        ),
        None => (false, "too few visits for the Erlang-2 test".into()),
    };
    outcome(
        weak_ok && strong_ok && succ_ok,
        format!(
            "weak: {} (top-10 mass {:.3}, {} distinct τ; need ≥ 0.9); strong: {} (KS p = {:.3e}, need > {KS_ACCEPT_P}), {succ_text} (need p > {KS_ACCEPT_P}, |r| < {MAX_SERIAL_CORRELATION})",
            wf.verdict.name(),
            wf.top10_mass,
            wf.distinct,
            sf.verdict.name(),
            sf.ks_p
        ),
    )
}

fn classical_contrast(dir: &Path) -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.classical.steps = CLASSICAL_STEPS;
    cfg.output.dir = dir.join("classical");
    let out = match cmd_classical(&cfg) {
        Ok(o) => o,
        Err(e) => return outcome(false, e.to_string()),
    };
    let t = &out.trajectory;
    let ex = out.spectrum.exponents;
    let max_ex = ex.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let verdict = out.analysis.verdict();
    let pass = t.max_energy_drift < CLASSICAL_DRIFT
        && t.max_ntot_drift < CLASSICAL_DRIFT
        && max_ex < CLASSICAL_EXPONENT
        && verdict == Verdict::Regular;
    outcome(
        pass,
        format!(
            "drift H_cl {:.1e}, N_tot {:.1e} (< {CLASSICAL_DRIFT:e}) over {CLASSICAL_STEPS} steps; max |λ_i| = {max_ex:.1e} (< {CLASSICAL_EXPONENT:e}); H₁ series λ = {:.4} → {}",
            t.max_energy_drift,
            t.max_ntot_drift,
            out.analysis.lyapunov.as_ref().map_or(f64::NAN, |l| l.lambda),
            verdict.name()
        ),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let run = || -> kerr_ergo::Result<(bool, String)> {
        let case = CaseSpec {
            gamma: 5.0,
            g: 1.0,
            kind: KindConfig::Pacs,
            nu: 10.0,
            m: 1,
            dt: None,
        };
        let mut cfg = case.config(&RunConfig::default());
        cfg.output.dir = dir.join("first");
        cfg.output.csv = true;
        let sim = cmd_simulate(&cfg)?;
        let series = cfg.output.dir.join("mean_N.bin");
        let mut acfg = cfg.clone();
        acfg.output.dir = dir.join("first/analysis");
        let ana = cmd_analyze(&series, &acfg)?;
        let mut ccfg = RunConfig::default();
        ccfg.classical.steps = 200_000;
        ccfg.output.dir = dir.join("first/classical");
        let cls = cmd_classical(&ccfg)?;
        let mut all = true;
        let mut notes = Vec::new();
        for (what, manifest, out) in [
            ("simulate", &sim.manifest, dir.join("again")),
            ("analyze", &ana.manifest, dir.join("again/analysis")),
            ("classical", &cls.manifest, dir.join("again/classical")),
        ] {
            let r = replay(manifest, Some(&out))?;
            let series: Vec<_> = r.outputs.iter().filter(|o| o.series).collect();
            let same_series = series.iter().filter(|o| o.same).count();
            all &= r.identical() && !r.outputs.is_empty();
            notes.push(format!(
                "{what}: {same_series}/{} series files bit-identical, verdicts and results {}",
                series.len(),
                if r.verdicts_match { "identical" } else { "DIFFER" }
            ));
        }
        Ok((all, notes.join("; ")))
    };
    match run() {
        Ok((pass, text)) => outcome(pass, text),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; this target
    // takes no arguments and ignores them.
    let strict = std::env::var("KERR_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let dir = tempfile::tempdir().expect("temporary directory");
    let t0 = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();

    results.push((1, "conservation", conservation()));
    results.push((2, "analytic limit", analytic_limit()));
    results.push((3, "oracle Lyapunov", oracle_lyapunov()));

    let mut set = Table1Set::default();
    set.base.steps = LONG_STEPS;
    set.base.output.dir = dir.path().join("table1");
    let table = cmd_table1(&set);
    match &table {
        Ok(t) => {
            let rows = &t.rows;
            results.push((4, "chaotic anchor", anchor(rows)));
            results.push((5, "regime table", regime_table(rows)));
            results.push((6, "spectrum contrast", spectrum_contrast(rows)));
            results.push((7, "Kac lemma", kac(rows)));
            results.push((8, "return-time dichotomy", dichotomy(rows)));
            for r in rows {
                eprintln!("  table1 {:<22} {}", r.case.label(), lambda_text(r));
            }
        }
        Err(e) => {
            for (n, name) in [
                (4, "chaotic anchor"),
                (5, "regime table"),
                (6, "spectrum contrast"),
                (7, "Kac lemma"),
                (8, "return-time dichotomy"),
            ] {
                results.push((n, name, outcome(false, format!("table1 failed: {e}"))));
            }
        }
    }

    results.push((9, "classical contrast", classical_contrast(dir.path())));
    results.push((10, "determinism", determinism(dir.path())));

    let passed = results.iter().filter(|r| r.2.pass).count();
    for (n, name, o) in &results {
        println!(
            "criterion {n:>2} [{name}]: {} — {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {passed}/{} criteria passed in {:.0} s",
        results.len(),
        t0.elapsed().as_secs_f64()
    );
    if strict && passed < results.len() {
        std::process::exit(1);
    }
}
