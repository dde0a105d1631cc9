//! File formats: CSV tables with unit-suffixed headers, JSON documents with a
//! config echo, and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::constants::{angular_from_mhz, mhz_from_angular};
use crate::error::{Error, Result};
use crate::fitting::{DataPoint, SpectrumData};

pub const TOOL_NAME: &str = "rxpm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seventeen significant digits, enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::usage("row length does not match header"));
        }
        w.write_record(row.iter().map(|v| format_float(*v)))
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(Error::from)
}

/// Top-level JSON output document.
pub fn json_document<C: Serialize>(command: &str, config: &C, result: Value) -> Result<String> {
    let doc = json!({
        "tool": TOOL_NAME,
        "version": VERSION,
        "command": command,
        "config_echo": serde_json::to_value(config).map_err(|e| Error::Io(e.to_string()))?,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

const COL_DELTA: &str = "delta_s_mhz";
const COL_T: &str = "transmission";
const COL_T_SIGMA: &str = "transmission_sigma";
const COL_PHASE: &str = "phase_rad";
const COL_PHASE_SIGMA: &str = "phase_sigma_rad";

/// Spectrum data in the fit input format. Phase columns are written when
/// the data carries phase rows on the same detunings.
pub fn spectrum_data_csv(data: &SpectrumData) -> Result<String> {
    let with_phase = data.phase.len() == data.transmission.len()
        && data
            .phase
            .iter()
            .zip(&data.transmission)
            .all(|(p, t)| p.delta_s == t.delta_s);
    let mut header = vec![COL_DELTA, COL_T, COL_T_SIGMA];
    if with_phase {
        header.extend([COL_PHASE, COL_PHASE_SIGMA]);
    }
    let rows: Vec<Vec<f64>> = data
        .transmission
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut r = vec![mhz_from_angular(t.delta_s), t.value, t.sigma];
            if with_phase {
                r.extend([data.phase[i].value, data.phase[i].sigma]);
            }
            r
        })
        .collect();
    csv_table(&header, &rows)
}

/// Reads the fit input format. Required columns: `delta_s_mhz`,
/// `transmission`, `transmission_sigma`; optional `phase_rad` with
/// `phase_sigma_rad`. Column order is free.
pub fn read_spectrum_data_csv(text: &str) -> Result<SpectrumData> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| Error::usage(e.to_string()))?
        .clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| Error::usage(format!("input is missing column `{name}`")))
    };
    let (cd, ct, cs) = (need(COL_DELTA)?, need(COL_T)?, need(COL_T_SIGMA)?);
    let phase_cols = match (col(COL_PHASE), col(COL_PHASE_SIGMA)) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => {
            return Err(Error::usage(format!(
                "`{COL_PHASE}` and `{COL_PHASE_SIGMA}` must appear together"
            )))
        }
    };
    let mut data = SpectrumData::default();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::usage(e.to_string()))?;
        let line = i + 2;
        let num = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("");
            s.parse::<f64>()
                .map_err(|_| Error::usage(format!("line {line}: `{s}` is not a number")))
        };
        let delta_s = angular_from_mhz(num(cd)?);
        data.transmission.push(DataPoint {
            delta_s,
            value: num(ct)?,
            sigma: num(cs)?,
        });
        if let Some((cp, cps)) = phase_cols {
            data.phase.push(DataPoint {
                delta_s,
                value: num(cp)?,
                sigma: num(cps)?,
            });
        }
    }
    Ok(data)
}
