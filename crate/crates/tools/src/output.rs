//! Output directory bookkeeping, CSV series, JSON reports and the run
//! manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use penrose_core::checks::CheckReport;
use penrose_core::compat::CompatibilityJet;
use penrose_core::solver::{Trajectory, CONE_BANDS};

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

/// Files written under one output directory, in creation order.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
    verdicts: Vec<Verdict>,
    started: Instant,
    started_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    pub config: Option<serde_json::Value>,
    pub seed: u64,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub verdicts: Vec<Verdict>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Ok(Self { root: root.to_path_buf(), files: Vec::new(), verdicts: Vec::new(), started: Instant::now(), started_unix })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn claim(&mut self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        self.files.push(rel.to_string());
        Ok(path)
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        let path = self.claim(rel)?;
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).expect("reports are serializable");
        self.write_text(rel, &(text + "\n"))
    }

    /// Write a CSV with the given header and rows.
    pub fn write_csv<I, R>(&mut self, rel: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = f64>,
    {
        let path = self.claim(rel)?;
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::csv(&path, e))?;
        w.write_record(header).map_err(|e| CliError::csv(&path, e))?;
        for row in rows {
            let rec: Vec<String> = row.into_iter().map(|x| x.to_string()).collect();
            w.write_record(&rec).map_err(|e| CliError::csv(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    pub fn record(&mut self, name: &str, pass: bool) {
        self.verdicts.push(Verdict { name: name.to_string(), pass });
    }

    /// Write the manifest last, through a temporary file and a rename.
    pub fn finish(self, command: &str, config: Option<serde_json::Value>, seed: u64) -> Result<PathBuf> {
        for f in &self.files {
            let p = self.root.join(f);
            if !p.is_file() {
                return Err(CliError::io(&p, std::io::Error::new(std::io::ErrorKind::NotFound, "listed output is missing")));
            }
        }
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            config,
            seed,
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.files,
            verdicts: self.verdicts,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest is serializable") + "\n";
        let tmp = self.root.join(format!("{MANIFEST}.tmp"));
        let dst = self.root.join(MANIFEST);
        fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &dst).map_err(|e| CliError::io(&dst, e))?;
        Ok(dst)
    }
}

/// SHA-256 of the concatenated inputs, hex encoded.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDoc {
    pub name: String,
    pub anchor: String,
    pub inputs_digest: String,
    pub value: f64,
    pub threshold: f64,
    pub bound: &'static str,
    pub verdict: &'static str,
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl ReportDoc {
    pub fn from_check(rep: &CheckReport, inputs_digest: &str) -> Self {
        let details = rep.details.iter().map(|(k, v)| (k.clone(), serde_json::json!(v))).collect();
        Self {
            name: rep.name.clone(),
            anchor: rep.anchor.to_string(),
            inputs_digest: inputs_digest.to_string(),
            value: rep.value,
            threshold: rep.threshold,
            bound: rep.bound.symbol(),
            verdict: verdict(rep.pass),
            details,
        }
    }
}

pub fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// Frames as `frames/frame_NNNNN.csv` with columns `r, u, u_t`, then
/// `monitors.csv` and `lightcone.csv`.
pub fn write_trajectory(out: &mut OutputDir, traj: &Trajectory, frames: bool) -> Result<()> {
    if frames {
        for (k, f) in traj.frames.iter().enumerate() {
            let rows = f.u.iter().zip(&f.ut).enumerate().map(|(i, (u, ut))| [traj.r(i), *u, *ut]);
            out.write_csv(&format!("frames/frame_{k:05}.csv"), &["r", "u", "u_t"], rows)?;
        }
        let times = traj.frames.iter().enumerate().map(|(k, f)| [k as f64, f.t]);
        out.write_csv("frames/index.csv", &["frame", "t"], times)?;
    }
    let m = &traj.monitors;
    let rows = (0..m.t.len()).map(|i| [m.t[i], m.e_total[i], m.e_local[i], m.sup_u[i]]);
    out.write_csv("monitors.csv", &["t", "E_total", "E_local", "sup_u"], rows)?;
    let mut header = vec!["t".to_string()];
    header.extend(CONE_BANDS.iter().map(|b| format!("band_{b}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = m.t.iter().zip(&m.lightcone).map(|(t, l)| std::iter::once(*t).chain(l.iter().copied()));
    out.write_csv("lightcone.csv", &header, rows)
}

/// Jet profiles with columns `r, psi_0, ..., psi_K`.
pub fn write_jet(out: &mut OutputDir, rel: &str, jet: &CompatibilityJet) -> Result<()> {
    let mut header = vec!["r".to_string()];
    header.extend((0..=jet.order()).map(|k| format!("psi_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let base = &jet.psi[0];
    let rows = (0..base.len()).map(|i| std::iter::once(base.r(i)).chain(jet.psi.iter().map(move |p| p.values()[i])));
    out.write_csv(rel, &header, rows)
}
