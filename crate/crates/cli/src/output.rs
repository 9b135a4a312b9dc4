use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use blowup_core::classifier::Verdict;
use blowup_core::solitons::write_fit_csv;
use blowup_core::solver::{BlowupCurve, SnapshotFormat};

use crate::config::RunConfig;
use crate::pipeline::{Bundle, ProbeReport, RunSummary};

pub const MANIFEST: &str = "manifest.json";
pub const CLASSIFICATION: &str = "classification.json";
pub const CURVE: &str = "curve.csv";
/// Wall-clock time of the run, kept out of the manifest so that the
/// checksummed outputs stay byte-identical between runs.
pub const TIMING: &str = "timing.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub r0: f64,
    pub verdict: Verdict,
    pub k: Option<usize>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub name: &'a str,
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub summary: &'a RunSummary,
    pub probes: Vec<ProbeEntry>,
    pub files: Vec<FileEntry>,
    pub wall_time_file: &'static str,
}

/// File stem shared by the per-probe outputs.
pub fn probe_tag(r0: f64) -> String {
    format!("r{r0:.4}")
}

/// Serialises a bundle into `dir`: curve, per-probe traces and fits,
/// classification and a manifest listing every file with its checksum.
pub fn write_bundle(bundle: &Bundle, dir: &Path, wall_time: Option<f64>) -> Result<Vec<FileEntry>> {
    let mut files: Vec<(String, Vec<u8>)> = vec![(CURVE.into(), curve_csv(bundle.curve.as_ref())?)];
    for probe in &bundle.probes {
        let tag = probe_tag(probe.r0);
        if let Some(trace) = &probe.trace {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            files.push((format!("probes/{tag}_lyapunov.csv"), buf));
        }
        if !probe.single_fits.is_empty() {
            files.push((format!("probes/{tag}_single.csv"), single_csv(probe)?));
        }
        if !probe.multi_fits.is_empty() {
            let mut buf = Vec::new();
            write_fit_csv(&mut buf, &probe.multi_fits)?;
            files.push((format!("probes/{tag}_multi.csv"), buf));
        }
    }
    files.push((CLASSIFICATION.into(), json_bytes(&Classification::of(bundle))?));
    if let (Some(format), Some(history)) = (bundle.config.output.snapshots, &bundle.history) {
        let name = match format {
            SnapshotFormat::Csv => "snapshots.csv",
            SnapshotFormat::Binary => "snapshots.bin",
        };
        let mut buf = Vec::new();
        history.dump_snapshots(&mut buf, format)?;
        files.push((name.into(), buf));
    }

    std::fs::create_dir_all(dir.join("probes")).with_context(|| format!("creating {}", dir.display()))?;
    let mut entries = Vec::with_capacity(files.len());
    for (path, bytes) in &files {
        std::fs::write(dir.join(path), bytes).with_context(|| format!("writing {path}"))?;
        entries.push(FileEntry { path: path.clone(), bytes: bytes.len(), sha256: hex::encode(Sha256::digest(bytes)) });
    }
    let manifest = Manifest {
        name: &bundle.config.name,
        version: env!("CARGO_PKG_VERSION"),
        config: &bundle.config,
        summary: &bundle.summary,
        probes: bundle
            .probes
            .iter()
            .map(|p| ProbeEntry { r0: p.r0, verdict: p.verdict(), k: p.classification.k, errors: p.errors.clone() })
            .collect(),
        files: entries.clone(),
        wall_time_file: TIMING,
    };
    std::fs::write(dir.join(MANIFEST), json_bytes(&manifest)?)?;
    if let Some(seconds) = wall_time {
        std::fs::write(dir.join(TIMING), format!("wall_time_seconds = {seconds:.3}\n"))?;
    }
    Ok(entries)
}

#[derive(Serialize)]
struct Classification<'a> {
    name: &'a str,
    blowup: bool,
    soliton_energy: f64,
    probes: &'a [ProbeReport],
}

impl<'a> Classification<'a> {
    fn of(bundle: &'a Bundle) -> Self {
        Self {
            name: &bundle.config.name,
            blowup: bundle.summary.blowup,
            soliton_energy: bundle.summary.soliton_energy,
            probes: &bundle.probes,
        }
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

fn curve_csv(curve: Option<&BlowupCurve>) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# blow-up curve T(r), slope after median smoothing")?;
    match curve {
        Some(c) => writeln!(out, "# h = {:e}, nodes = {}", c.h, c.len())?,
        None => writeln!(out, "# no blow-up recorded")?,
    }
    writeln!(out, "r,T,slope,fit_residual,source")?;
    if let Some(c) = curve {
        for k in 0..c.len() {
            let source = serde_json::to_value(c.source[k])?;
            let source = source.as_str().unwrap_or_default();
            writeln!(out, "{:e},{:e},{:e},{:e},{source}", c.r[k], c.t[k], c.slope[k], c.residual[k])?;
        }
    }
    Ok(out)
}

fn single_csv(probe: &ProbeReport) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    writeln!(out, "# single-soliton fits at r0 = {}", probe.r0)?;
    writeln!(out, "s,theta,d,zeta,residual,converged,iterations")?;
    for (s, f) in &probe.single_fits {
        writeln!(out, "{s:e},{},{:e},{:e},{:e},{},{}", f.theta, f.d, f.zeta(), f.residual, f.converged, f.iterations)?;
    }
    Ok(out)
}

/// Paths of all files listed in a manifest, for verification.
pub fn manifest_files(dir: &Path) -> Result<Vec<(PathBuf, FileEntry)>> {
    let text = std::fs::read_to_string(dir.join(MANIFEST))
        .with_context(|| format!("reading manifest in {}", dir.display()))?;
    #[derive(Deserialize)]
    struct Files {
        files: Vec<FileEntry>,
    }
    let files: Files = serde_json::from_str(&text)?;
    Ok(files.files.into_iter().map(|f| (dir.join(&f.path), f)).collect())
}
