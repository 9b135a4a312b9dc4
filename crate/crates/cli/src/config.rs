use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use blowup_core::classifier::ClassifierSettings;
use blowup_core::solver::{InitialData, Scenario, SnapshotFormat, SnapshotRule, StopRules, GENERATOR_NAMES};
use blowup_core::{Error, Params};

/// Environment variable prefixed to relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "BLOWUP_OUTPUT_ROOT";

/// One experiment: scenario, probes, diagnostics settings and output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub params: Params,
    pub grid: GridConfig,
    #[serde(default)]
    pub stop: StopRules,
    #[serde(default)]
    pub snapshots: SnapshotRule,
    pub initial: InitialData,
    #[serde(default)]
    pub probes: ProbeConfig,
    #[serde(default)]
    pub similarity: SimilarityConfig,
    #[serde(default)]
    pub fits: FitConfig,
    #[serde(default)]
    pub classifier: ClassifierSettings,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_max: f64,
    pub nodes: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_amplitude_step")]
    pub amplitude_step: Option<f64>,
}

/// Probe radii `r₀`: explicit values, an optional evenly spaced range, and the
/// interior local maxima of `T(r)` when `auto` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default)]
    pub radii: Vec<f64>,
    /// `[from, to, count]`.
    #[serde(default)]
    pub range: Option<(f64, f64, usize)>,
    #[serde(default = "yes")]
    pub auto: bool,
    /// Half-width of the neighbourhood over which an automatic probe is a maximum.
    #[serde(default = "default_peak_window")]
    pub peak_window: f64,
    /// Minimal drop of `T` from the peak to the edge of that neighbourhood.
    #[serde(default = "default_peak_prominence")]
    pub peak_prominence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityConfig {
    /// Uniform y-grid size on `[-1 + η, 1 - η]`.
    #[serde(default = "default_y_nodes")]
    pub y_nodes: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Similarity times per Lyapunov trace.
    #[serde(default = "default_s_samples")]
    pub s_samples: usize,
    /// The last frame spans at least this many grid cells.
    #[serde(default = "default_min_cells")]
    pub min_cells: f64,
    /// Fixed `γ`; fitted when absent.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_centers")]
    pub boundedness_centers: usize,
    #[serde(default = "default_divergence")]
    pub divergence_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Relative residual accepted when selecting `k`.
    #[serde(default = "default_k_threshold")]
    pub k_threshold: f64,
    /// Frames fitted per probe, spread over the trusted similarity window.
    #[serde(default = "default_fit_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Bundle directory; relative paths resolve against the working
    /// directory, or against `BLOWUP_OUTPUT_ROOT` when it is set.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Also dump the solution snapshots.
    #[serde(default)]
    pub snapshots: Option<SnapshotFormat>,
}

fn yes() -> bool {
    true
}
fn default_cfl() -> f64 {
    0.45
}
fn default_amplitude_step() -> Option<f64> {
    Some(0.05)
}
fn default_peak_window() -> f64 {
    0.25
}
fn default_peak_prominence() -> f64 {
    0.02
}
fn default_y_nodes() -> usize {
    201
}
fn default_eta() -> f64 {
    blowup_core::model::DEFAULT_ETA
}
fn default_s_samples() -> usize {
    40
}
fn default_min_cells() -> f64 {
    10.0
}
fn default_centers() -> usize {
    5
}
fn default_divergence() -> f64 {
    10.0
}
fn default_k_max() -> usize {
    3
}
fn default_k_threshold() -> f64 {
    blowup_core::solitons::K_THRESHOLD
}
fn default_fit_samples() -> usize {
    16
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            radii: Vec::new(),
            range: None,
            auto: true,
            peak_window: default_peak_window(),
            peak_prominence: default_peak_prominence(),
        }
    }
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            y_nodes: default_y_nodes(),
            eta: default_eta(),
            s_samples: default_s_samples(),
            min_cells: default_min_cells(),
            gamma: None,
            boundedness_centers: default_centers(),
            divergence_factor: default_divergence(),
        }
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { k_max: default_k_max(), k_threshold: default_k_threshold(), samples: default_fit_samples() }
    }
}

impl RunConfig {
    /// Reads a TOML configuration. A `custom-table` generator may name a
    /// `file` of `r,u0,u1` rows, resolved relative to the configuration.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text)?;
        if let Some(toml::Value::Table(initial)) = doc.get_mut("initial") {
            resolve_initial(initial, base)?;
        }
        let config: RunConfig = toml::Value::Table(doc).try_into()?;
        config.validate()?;
        Ok(config)
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            params: self.params,
            r_max: self.grid.r_max,
            nodes: self.grid.nodes,
            initial: self.initial.clone(),
            cfl: self.grid.cfl,
            dt: self.grid.dt,
            amplitude_step: self.grid.amplitude_step,
            stop: self.stop,
            snapshots: self.snapshots,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario().validate()?;
        let r_max = self.grid.r_max;
        for &r in self.probes.radii.iter() {
            if !(r >= 0.0 && r <= r_max) {
                bail!("probe r0 = {r} lies outside [0, {r_max}]");
            }
        }
        if let Some((lo, hi, count)) = self.probes.range {
            if !(0.0 <= lo && lo <= hi && hi <= r_max) || count == 0 {
                bail!("probe range [{lo}, {hi}] x {count} must lie in [0, {r_max}] with count > 0");
            }
        }
        if !(self.probes.peak_window > 0.0 && self.probes.peak_prominence >= 0.0) {
            bail!("peak window must be > 0 and prominence >= 0");
        }
        let sim = &self.similarity;
        if sim.y_nodes < 5 || !(sim.eta > 0.0 && sim.eta < 1.0) {
            bail!("similarity grid needs at least 5 nodes and 0 < eta < 1");
        }
        if sim.s_samples < 3 || !(sim.min_cells > 0.0) || sim.boundedness_centers == 0 {
            bail!("similarity needs s_samples >= 3, min_cells > 0 and at least one boundedness center");
        }
        if let Some(g) = sim.gamma {
            if !(g >= 0.0) {
                bail!("gamma must be >= 0, got {g}");
            }
        }
        if self.fits.k_max == 0 || !(self.fits.k_threshold > 0.0) || self.fits.samples < 2 {
            bail!("fits need k_max >= 1, k_threshold > 0 and at least 2 samples");
        }
        let c = &self.classifier;
        if !(c.cone_window > 0.0 && c.cone_window < 1.0) || !(c.slope_tolerance > 0.0) || !(c.c3_factor > 0.0) {
            bail!("classifier needs 0 < cone_window < 1, slope_tolerance > 0 and c3_factor > 0");
        }
        Ok(())
    }

    /// Bundle directory after the `BLOWUP_OUTPUT_ROOT` override.
    pub fn output_dir(&self) -> PathBuf {
        let dir = self.output.dir.clone().unwrap_or_else(|| PathBuf::from(&self.name));
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
            _ => dir,
        }
    }
}

fn resolve_initial(initial: &mut toml::Table, base: &Path) -> Result<()> {
    let name = initial
        .get("generator")
        .and_then(|g| g.as_str())
        .ok_or_else(|| anyhow!("[initial] needs a `generator` name"))?
        .to_string();
    if !GENERATOR_NAMES.contains(&name.as_str()) {
        return Err(Error::UnknownGenerator(name).into());
    }
    if name == "custom-table" {
        if let Some(file) = initial.remove("file") {
            let file = file.as_str().ok_or_else(|| anyhow!("custom-table `file` must be a path"))?;
            let (r, u0, u1) = read_table(&base.join(file))?;
            initial.insert("r".into(), r.into());
            initial.insert("u0".into(), u0.into());
            initial.insert("u1".into(), u1.into());
        }
    }
    Ok(())
}

/// Reads `r,u0,u1` rows; `#` lines and a non-numeric header are skipped.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading table {}", path.display()))?;
    let (mut r, mut u0, mut u1) = (Vec::new(), Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let values: Vec<f64> = match record.iter().map(str::parse).collect::<Result<_, _>>() {
            Ok(v) => v,
            Err(_) if line == 0 => continue,
            Err(e) => bail!("{}: row {}: {e}", path.display(), line + 1),
        };
        if values.len() != 3 {
            bail!("{}: row {} has {} columns, expected r,u0,u1", path.display(), line + 1, values.len());
        }
        r.push(values[0]);
        u0.push(values[1]);
        u1.push(values[2]);
    }
    Ok((r, u0, u1))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "ode"
params = { p = 3.0, n = 3 }
grid = { r_max = 1.0, nodes = 101 }
initial = { generator = "constant-ode", blowup_time = 1.0 }
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(c.fits.k_max, 3);
        assert_eq!(c.similarity.y_nodes, 201);
        assert!(c.probes.auto);
        assert_eq!(c.classifier, ClassifierSettings::default());
        assert_eq!(c.scenario().spacing(), 0.01);
    }

    #[test]
    fn unknown_generator_is_rejected() {
        let text = MINIMAL.replace("constant-ode", "gaussian");
        let err = RunConfig::parse(&text, Path::new(".")).unwrap_err();
        assert!(matches!(err.downcast_ref::<Error>(), Some(Error::UnknownGenerator(g)) if g == "gaussian"));
    }

    #[test]
    fn invalid_params_are_rejected() {
        let text = MINIMAL.replace("p = 3.0", "p = 4.0");
        assert!(RunConfig::parse(&text, Path::new(".")).is_err());
    }

    #[test]
    fn probes_must_lie_on_the_grid() {
        let text = format!("{MINIMAL}\n[probes]\nradii = [2.0]\n");
        assert!(RunConfig::parse(&text, Path::new(".")).is_err());
    }

    #[test]
    fn custom_table_file_is_inlined() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("t.csv"), "# data\nr,u0,u1\n0,1,0\n1,2,0\n").unwrap();
        let text = MINIMAL.replace(
            r#"{ generator = "constant-ode", blowup_time = 1.0 }"#,
            r#"{ generator = "custom-table", file = "t.csv" }"#,
        );
        let c = RunConfig::parse(&text, dir.path()).unwrap();
        assert_eq!(c.initial, InitialData::CustomTable { r: vec![0.0, 1.0], u0: vec![1.0, 2.0], u1: vec![0.0, 0.0] });
    }
}
