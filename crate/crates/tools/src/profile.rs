//! Two-column `(r, value)` radial profiles.
//!
//! Columns are separated by whitespace or a comma; blank lines and lines
//! starting with `#` are skipped. The radii must form a uniform grid.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use penrose_core::compat::RadialProfile;

use crate::error::{CliError, Result};

/// Relative deviation from uniform spacing that is still accepted.
const SPACING_TOL: f64 = 1e-6;

pub fn parse_profile(text: &str, path: &Path) -> Result<RadialProfile> {
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let [r, v] = fields[..] else {
            return Err(CliError::parse(path, idx + 1, format!("expected two columns, found {}", fields.len())));
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::parse(path, idx + 1, format!("not a finite number: {s:?}")))
        };
        rows.push((idx + 1, num(r)?, num(v)?));
    }
    if rows.len() < 2 {
        return Err(CliError::parse(path, 0, "profile needs at least two rows"));
    }
    let r0 = rows[0].1;
    let dr = (rows[rows.len() - 1].1 - r0) / (rows.len() - 1) as f64;
    if !(dr > 0.0) {
        return Err(CliError::parse(path, rows[1].0, "radii must increase"));
    }
    for (k, (line, r, _)) in rows.iter().enumerate() {
        if (r - (r0 + k as f64 * dr)).abs() > SPACING_TOL * dr {
            return Err(CliError::parse(path, *line, format!("radius {r} breaks the uniform spacing {dr}")));
        }
    }
    RadialProfile::new(r0, dr, rows.iter().map(|x| x.2).collect()).map_err(|e| CliError::parse(path, 0, e.to_string()))
}

pub fn read_profile(path: &Path) -> Result<RadialProfile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_profile(&text, path)
}

pub fn format_profile(p: &RadialProfile) -> String {
    let mut out = String::new();
    for (i, v) in p.values().iter().enumerate() {
        writeln!(out, "{} {}", p.r(i), v).expect("writing to a String");
    }
    out
}
