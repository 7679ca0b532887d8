//! File formats: JSON with complex numbers as `[re, im]`, round-trip CSV,
//! raw little-endian amplitude dumps.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use dfrt_core::density::{magnitude_phase, ComplexDensity};
use dfrt_core::grid::Grid;
use dfrt_core::C64;

use crate::error::CliError;

pub const DENSITY_HEADER: [&str; 5] = ["x", "re_n", "im_n", "abs_n", "phase_unwrapped"];

/// `[re, im]`; non-finite parts become `null`.
pub fn complex(z: C64) -> Value {
    Value::Array(vec![Value::from(z.re), Value::from(z.im)])
}

/// Shortest decimal that parses back to the same double; exponent form
/// outside `[1e−4, 1e16)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::solver(format!("json: {e}")))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a density; the phase column is `NaN` where `|n|` vanishes.
pub fn write_density(path: &Path, n: &ComplexDensity) -> Result<(), CliError> {
    let (mag, phase) = match magnitude_phase(n) {
        Ok(mp) => mp,
        Err(_) => (n.values.iter().map(|z| z.norm()).collect(), vec![f64::NAN; n.values.len()]),
    };
    let rows: Vec<Vec<String>> = n
        .values
        .iter()
        .enumerate()
        .map(|(j, z)| vec![num(n.grid.x(j)), num(z.re), num(z.im), num(mag[j]), num(phase[j])])
        .collect();
    write_csv(path, &DENSITY_HEADER, &rows)
}

/// Reads a density file; the `x` column must be a uniform grid.
pub fn read_density(path: &Path, n_electrons: Option<usize>) -> Result<ComplexDensity, CliError> {
    let bad = |m: String| CliError::config(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column `{name}`")));
    let (cx, cr, ci) = (col("x")?, col("re_n")?, col("im_n")?);
    let (mut xs, mut vals) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |c: usize| -> Result<f64, CliError> {
            let s = rec.get(c).ok_or_else(|| bad(format!("row {}: short record", line + 2)))?;
            let v: f64 = s.trim().parse().map_err(|_| bad(format!("row {}: `{s}` is not a number", line + 2)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("row {}: non-finite value", line + 2)))
            }
        };
        xs.push(field(cx)?);
        vals.push(C64::new(field(cr)?, field(ci)?));
    }
    if xs.len() < dfrt_core::grid::MIN_POINTS {
        return Err(bad(format!("need at least {} rows", dfrt_core::grid::MIN_POINTS)));
    }
    let grid = Grid::new(xs[0], xs[xs.len() - 1], xs.len()).map_err(|e| bad(e.to_string()))?;
    for (j, x) in xs.iter().enumerate() {
        if (x - grid.x(j)).abs() > 1e-9 * grid.spacing.max(1.0) {
            return Err(bad(format!("x column is not uniform at row {}", j + 2)));
        }
    }
    let integral: C64 = vals.iter().sum::<C64>() * grid.weight();
    let n = n_electrons.unwrap_or_else(|| integral.re.round().max(0.0) as usize);
    ComplexDensity::new(grid, vals, n).map_err(|e| bad(e.to_string()))
}

/// Row-major `n × n` complex grid, interleaved re/im little-endian doubles.
pub fn write_amplitudes(path: &Path, values: &[C64]) -> Result<(), CliError> {
    let mut buf = Vec::with_capacity(values.len() * 16);
    for z in values {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}
