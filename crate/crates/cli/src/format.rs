//! Time-series persistence: a compact self-describing binary layout and a
//! lossless CSV export.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! | offset | size | content                                  |
//! |--------|------|------------------------------------------|
//! | 0      | 12   | magic `KERR-ERGO-TS`                     |
//! | 12     | 4    | format version (`u32`)                   |
//! | 16     | 8    | `dt` (`f64`)                             |
//! | 24     | 8    | sample count `n` (`u64`)                 |
//! | 32     | 4    | label length `l` in bytes (`u32`)        |
//! | 36     | l    | label, UTF-8                             |
//! | 36+l   | 32   | parameter fingerprint                    |
//! | 68+l   | 8n   | samples (`f64`)                          |

use std::path::Path;

use kerr_ergo_core::TimeSeries;

use crate::error::{CliError, CoreContext, Result};
use crate::io::{hex, read, read_to_string, write_atomic};

/// File magic.
pub const MAGIC: &[u8; 12] = b"KERR-ERGO-TS";
/// Current binary format version.
pub const FORMAT_VERSION: u32 = 1;
const HEADER_FIXED: usize = 36;

/// Serializes a series to the binary layout.
pub fn encode(series: &TimeSeries) -> Vec<u8> {
    let label = series.label.as_bytes();
    let mut out = Vec::with_capacity(HEADER_FIXED + label.len() + 32 + 8 * series.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&series.dt.to_le_bytes());
    out.extend_from_slice(&(series.len() as u64).to_le_bytes());
    out.extend_from_slice(&(label.len() as u32).to_le_bytes());
    out.extend_from_slice(label);
    out.extend_from_slice(&series.params_hash);
    for v in &series.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses the binary layout; `origin` names the source in errors.
pub fn decode(bytes: &[u8], origin: &Path) -> Result<TimeSeries> {
    let bad = |m: &str| CliError::format(origin, m);
    if bytes.len() < HEADER_FIXED || &bytes[..12] != MAGIC {
        return Err(bad("not a kerr-ergo time-series file (bad magic)"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(12);
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let dt = f64::from_bits(u64_at(16));
    let n = usize::try_from(u64_at(24)).map_err(|_| bad("sample count overflows"))?;
    let label_len = u32_at(32) as usize;
    let data_start = HEADER_FIXED + label_len + 32;
    let expected = n
        .checked_mul(8)
        .and_then(|b| b.checked_add(data_start))
        .ok_or_else(|| bad("sample count overflows"))?;
    if bytes.len() != expected {
        return Err(bad(&format!(
            "length mismatch: header promises {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let label = std::str::from_utf8(&bytes[HEADER_FIXED..HEADER_FIXED + label_len])
        .map_err(|_| bad("label is not valid UTF-8"))?;
    let mut hash = [0u8; 32];
    hash.copy_from_slice(&bytes[HEADER_FIXED + label_len..data_start]);
    let values = bytes[data_start..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    TimeSeries::new(dt, values, label)
        .map(|s| s.with_params_hash(hash))
        .map_err(|e| bad(&e.to_string()))
}

/// Writes the binary file atomically.
pub fn write_series(path: &Path, series: &TimeSeries) -> Result<()> {
    write_atomic(path, &encode(series))
}

/// Reads a binary (or, by `.csv` extension, CSV) series file.
pub fn read_series(path: &Path) -> Result<TimeSeries> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return parse_csv(&read_to_string(path)?, path);
    }
    decode(&read(path)?, path)
}

/// Formats a float with 17 significant digits, enough to round-trip exactly.
pub fn exact(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders the CSV export: `#`-prefixed metadata, then `index,t,value` rows.
pub fn to_csv(series: &TimeSeries) -> String {
    let mut s = String::with_capacity(64 + 48 * series.len());
    s.push_str("# kerr-ergo time series\n");
    s.push_str(&format!("# label={}\n", series.label));
    s.push_str(&format!("# dt={}\n", exact(series.dt)));
    s.push_str(&format!("# params={}\n", hex(&series.params_hash)));
    s.push_str("index,t,value\n");
    for (j, v) in series.values.iter().enumerate() {
        s.push_str(&format!("{j},{},{}\n", exact(j as f64 * series.dt), exact(*v)));
    }
    s
}

/// Writes the CSV export atomically.
pub fn write_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    write_atomic(path, to_csv(series).as_bytes())
}

/// Parses the CSV export.
pub fn parse_csv(text: &str, origin: &Path) -> Result<TimeSeries> {
    let mut label = None;
    let mut dt = None;
    let mut hash = [0u8; 32];
    let mut values = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let at = |m: &str| CliError::format(origin, format!("line {}: {m}", i + 1));
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if let Some(v) = meta.strip_prefix("label=") {
                label = Some(v.to_string());
            } else if let Some(v) = meta.strip_prefix("dt=") {
                dt = Some(v.parse::<f64>().map_err(|_| at("bad dt"))?);
            } else if let Some(v) = meta.strip_prefix("params=") {
                hash = parse_hex32(v).ok_or_else(|| at("bad params fingerprint"))?;
            }
            continue;
        }
        if !header_seen {
            if line.trim() != "index,t,value" {
                return Err(at("expected header `index,t,value`"));
            }
            header_seen = true;
            continue;
        }
        let mut cols = line.split(',');
        let (Some(idx), Some(_), Some(v), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
            return Err(at("expected three columns"));
        };
        if idx.trim().parse::<usize>().ok() != Some(values.len()) {
            return Err(at("indices must be consecutive from 0"));
        }
        values.push(v.trim().parse::<f64>().map_err(|_| at("bad value"))?);
    }
    let dt = dt.ok_or_else(|| CliError::format(origin, "missing `# dt=` line"))?;
    TimeSeries::new(dt, values, label.unwrap_or_default())
        .map(|s| s.with_params_hash(hash))
        .stage(&origin.display().to_string())
}

fn parse_hex32(s: &str) -> Option<[u8; 32]> {
    let s = s.trim();
    if s.len() != 64 {
        return None;
    }
    let mut out = [0u8; 32];
    for (i, o) in out.iter_mut().enumerate() {
        *o = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn awkward() -> TimeSeries {
        let v = vec![0.1, -0.0, 1e-310, f64::MAX, 1.0 / 3.0, -2.5e17, f64::MIN_POSITIVE];
        TimeSeries::new(0.1, v, "mean_N ⟨a†a⟩")
            .unwrap()
            .with_params_hash([7; 32])
    }

    fn bits(s: &TimeSeries) -> Vec<u64> {
        s.values.iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn binary_round_trip_is_bit_identical() {
        let s = awkward();
        let bytes = encode(&s);
        assert_eq!(bytes.len(), 36 + s.label.len() + 32 + 8 * s.len());
        let back = decode(&bytes, Path::new("x")).unwrap();
        assert_eq!(bits(&back), bits(&s));
        assert_eq!(back.dt.to_bits(), s.dt.to_bits());
        assert_eq!(back.label, s.label);
        assert_eq!(back.params_hash, s.params_hash);
    }

    #[test]
    fn csv_round_trip_is_bit_identical() {
        let s = awkward();
        let back = parse_csv(&to_csv(&s), Path::new("x")).unwrap();
        assert_eq!(bits(&back), bits(&s));
        assert_eq!(back.dt.to_bits(), s.dt.to_bits());
        assert_eq!(back.params_hash, s.params_hash);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let s = awkward();
        let bytes = encode(&s);
        let p = Path::new("x");
        assert!(decode(&bytes[..bytes.len() - 1], p).is_err());
        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(decode(&b, p).is_err());
        let mut b = bytes.clone();
        b[12] = 9;
        assert!(decode(&b, p).unwrap_err().to_string().contains("version"));
        let mut b = bytes;
        let nan = f64::NAN.to_le_bytes();
        let n = b.len();
        b[n - 8..].copy_from_slice(&nan);
        assert!(decode(&b, p).is_err());
    }
}
