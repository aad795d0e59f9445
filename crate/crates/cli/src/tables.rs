//! Plot-ready CSV tables for each analysis.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kerr_ergo_core::tsa::curve_for_plot;

use crate::analysis::Analysis;
use crate::error::Result;
use crate::format::exact;
use crate::io::write_atomic;

/// Writes one CSV per completed analysis into `dir`, file names prefixed by
/// `prefix`, and returns the paths written. `rate_unit` scales the angular
/// frequency column of the spectrum.
pub fn write_analysis_tables(dir: &Path, prefix: &str, a: &Analysis, rate_unit: f64) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let p = dir.join(format!("{prefix}{name}.csv"));
        write_atomic(&p, body.as_bytes())?;
        written.push(p);
        Ok(())
    };

    if let Some(s) = &a.spectrum {
        let mut t = String::from("f,omega_over_unit,power,peak\n");
        let omega = s.spectrum.freqs_in_units_of(rate_unit);
        let mut peaks = s.peaks.iter().peekable();
        for (k, (f, p)) in s.spectrum.freqs.iter().zip(&s.spectrum.power).enumerate() {
            let is_peak = peaks.next_if(|&&i| i == k).is_some();
            let _ = writeln!(t, "{},{},{},{}", exact(*f), exact(omega[k]), exact(*p), is_peak as u8);
        }
        put("spectrum", t)?;
    }
    if let Some(c) = &a.delay_choice {
        let mut t = String::from("lag,ami\n");
        for (l, v) in c.ami.iter().enumerate() {
            let _ = writeln!(t, "{l},{}", exact(*v));
        }
        put("ami", t)?;
    }
    if let Some(f) = &a.fnn {
        let mut t = String::from("dim,false_fraction\n");
        for (i, v) in f.fractions.iter().enumerate() {
            let _ = writeln!(t, "{},{}", i + 1, exact(*v));
        }
        put("fnn", t)?;
    }
    if !a.curves.is_empty() {
        let table = curve_for_plot(&a.curves);
        let mut t = String::from("k,t");
        for d in &table.dims {
            let _ = write!(t, ",d{d}");
        }
        t.push('\n');
        for (k, time) in table.t.iter().enumerate() {
            let _ = write!(t, "{k},{}", exact(*time));
            for col in &table.columns {
                let _ = write!(t, ",{}", exact(col[k]));
            }
            t.push('\n');
        }
        put("lyapunov", t)?;
        let mut t = String::from("dim,fit_lo,fit_hi,outcome,lambda,se,r2,pairs,log_scale\n");
        let unit = a.lyapunov.as_ref().map_or(1.0, |l| l.rate_unit);
        for c in &a.curves {
            let _ = writeln!(
                t,
                "{},{},{},{},{},{},{},{},{}",
                c.embedding.dim,
                c.fit_range.0,
                c.fit_range.1,
                c.fit_outcome.name(),
                exact(c.lambda_max / unit),
                exact(c.lambda_se / unit),
                exact(c.fit_r2),
                c.pairs,
                exact(c.log_scale)
            );
        }
        put("lyapunov_fit", t)?;
    }
    if let Some(r) = &a.recurrence {
        let mut t = String::from("lo,hi,count,rho\n");
        let edges = r.density.bin_edges();
        for (i, (c, rho)) in r.density.counts.iter().zip(&r.density.rho).enumerate() {
            let _ = writeln!(t, "{},{},{c},{}", exact(edges[i]), exact(edges[i + 1]), exact(*rho));
        }
        put("density", t)?;
        let mut t = String::from("tau,tau_time,count\n");
        for (tau, c) in r.report.histogram() {
            let _ = writeln!(t, "{tau},{},{c}", exact(tau as f64 * r.report.dt));
        }
        put("returns", t)?;
        if let Some(s) = &r.successive {
            let mut sums = s.sums.clone();
            sums.sort_unstable();
            let mut t = String::from("sum,count\n");
            let mut i = 0;
            while i < sums.len() {
                let j = sums[i..].iter().take_while(|&&v| v == sums[i]).count();
                let _ = writeln!(t, "{},{j}", sums[i]);
                i += j;
            }
            put("successive", t)?;
        }
    }
    Ok(written)
}
