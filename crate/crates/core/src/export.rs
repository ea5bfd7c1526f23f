//! Stable text output: 9 significant digits, '.' separator, fixed headers.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{BoundsRow, EvaluationReport};
use crate::optimize::SweepResult;

pub const SIG_DIGITS: usize = 9;

pub const EVALUATION_HEADER: [&str; 10] = [
    "n", "m", "copies", "i", "absJ", "delta", "alpha", "qopt", "ratio", "violated",
];
pub const SWEEP_HEADER: [&str; 4] = ["v", "delta", "alpha", "violated"];
pub const BOUNDS_HEADER: [&str; 4] = ["m", "alpha_m", "qopt", "ratio"];

/// Formats `x` with `SIG_DIGITS` significant digits in positional notation.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    // Round first so that e.g. 9.9999999996 is treated as 10.
    let rounded: f64 = format!("{:.*e}", SIG_DIGITS - 1, x)
        .parse()
        .expect("float formatting round-trips");
    let exp = rounded.abs().log10().floor() as i64;
    let decimals = (SIG_DIGITS as i64 - 1 - exp).max(0) as usize;
    let s = format!("{rounded:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn to_csv<W: Write>(out: W, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut buf = Vec::new();
    to_csv(&mut buf, header, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is ASCII"))
}

/// One row per input `i`.
pub fn evaluation_csv(r: &EvaluationReport) -> Result<String> {
    let rows = r
        .per_i_values
        .iter()
        .enumerate()
        .map(|(idx, j)| {
            vec![
                r.n.to_string(),
                r.m.to_string(),
                r.copies.to_string(),
                (idx + 1).to_string(),
                fmt_sig(*j),
                fmt_sig(r.delta),
                fmt_sig(r.classical_bound),
                fmt_sig(r.quantum_optimum),
                fmt_sig(r.ratio),
                r.violated.to_string(),
            ]
        })
        .collect();
    csv_string(&EVALUATION_HEADER, rows)
}

pub fn sweep_csv(r: &SweepResult) -> Result<String> {
    let rows = r
        .grid
        .iter()
        .map(|p| {
            vec![
                fmt_sig(p.v),
                fmt_sig(p.delta),
                fmt_sig(r.alpha),
                p.violated.to_string(),
            ]
        })
        .collect();
    csv_string(&SWEEP_HEADER, rows)
}

pub fn bounds_csv(rows: &[BoundsRow]) -> Result<String> {
    let rows = rows
        .iter()
        .map(|b| {
            vec![
                b.m.to_string(),
                b.alpha.to_string(),
                fmt_sig(b.qopt),
                fmt_sig(b.ratio),
            ]
        })
        .collect();
    csv_string(&BOUNDS_HEADER, rows)
}

/// Rebuilds an evaluation report from its CSV form. Values carry only the
/// exported precision.
pub fn evaluation_from_csv(text: &str) -> Result<EvaluationReport> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != EVALUATION_HEADER {
        return Err(Error::Numeric(format!("unexpected header {header:?}")));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::Numeric(format!("bad number {s:?}: {e}")))
    };
    let parse_u = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|e| Error::Numeric(format!("bad integer {s:?}: {e}")))
    };
    let mut report: Option<EvaluationReport> = None;
    for rec in rdr.records() {
        let rec = rec?;
        let abs_j = parse(&rec[4])?;
        let r = report.get_or_insert(EvaluationReport {
            n: parse_u(&rec[0])?,
            m: parse_u(&rec[1])?,
            copies: parse_u(&rec[2])?,
            per_i_values: Vec::new(),
            per_i_signed: Vec::new(),
            delta: parse(&rec[5])?,
            classical_bound: parse(&rec[6])?,
            quantum_optimum: parse(&rec[7])?,
            ratio: parse(&rec[8])?,
            violated: &rec[9] == "true",
        });
        r.per_i_values.push(abs_j);
        r.per_i_signed.push(abs_j);
    }
    report.ok_or_else(|| Error::Numeric("empty evaluation CSV".into()))
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub version: String,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, params: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            argv: std::env::args().collect(),
            params,
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs: Vec::new(),
        }
    }

    /// `<data path>.manifest.json`.
    pub fn path_for(data: &Path) -> PathBuf {
        let mut name = data.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }
}

/// Writes `contents` to `path` and the manifest next to it.
pub fn write_with_manifest(
    path: &Path,
    contents: &str,
    manifest: &mut RunManifest,
) -> Result<PathBuf> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    manifest.outputs.push(path.display().to_string());
    let mpath = RunManifest::path_for(path);
    let json = serde_json::to_string_pretty(manifest)?;
    std::fs::write(&mpath, json).map_err(|e| Error::io(&mpath, e))?;
    Ok(mpath)
}
