use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::output::{CLASSIFICATION, CURVE, MANIFEST};

pub const PLOT_DIR: &str = "plot";

type Writer = Box<dyn FnOnce(&Path) -> Result<()>>;

/// Columns of a `#`-commented CSV file, by header name.
struct Table {
    columns: BTreeMap<String, Vec<f64>>,
    rows: usize,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut columns: BTreeMap<String, Vec<f64>> = headers.iter().map(|h| (h.clone(), Vec::new())).collect();
        let mut rows = 0;
        for record in reader.records() {
            let record = record?;
            for (h, cell) in headers.iter().zip(record.iter()) {
                columns.get_mut(h).unwrap().push(cell.parse().unwrap_or(f64::NAN));
            }
            rows += 1;
        }
        Ok(Self { columns, rows })
    }

    fn col(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }
}

/// Writes whitespace-separated data with a `#` header line.
fn data_file(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut text = format!("# {}\n", header.join(" "));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(text, "{}", cells.join(" "))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Plot-ready text data for a written bundle, in `<bundle>/plot/`.
///
/// Produces the blow-up curve, `E`, `F`, `H` against `s`, single-fit
/// residuals against `s`, `ζᵢ` against `log s` for multi-soliton fits, and
/// `1 + sign(r - r₀)T'(r)` against `1/|log|r - r₀||` around characteristic
/// candidates. Missing inputs are skipped with a notice on stderr.
pub fn emit_plot_data(bundle: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if !bundle.join(MANIFEST).is_file() {
        eprintln!("notice: no bundle in {}, nothing to plot", bundle.display());
        return Ok(written);
    }
    let out = bundle.join(PLOT_DIR);
    let mut pending: Vec<(PathBuf, Writer)> = Vec::new();

    let curve = match Table::read(&bundle.join(CURVE)) {
        Ok(t) if t.rows > 0 => Some(t),
        Ok(_) => {
            eprintln!("notice: empty blow-up curve, skipping curve plots");
            None
        }
        Err(e) => {
            eprintln!("notice: skipping curve plots: {e:#}");
            None
        }
    };
    if let Some(curve) = &curve {
        let (r, t) = (curve.col("r").unwrap_or_default().to_vec(), curve.col("T").unwrap_or_default().to_vec());
        pending.push((
            out.join("curve.dat"),
            Box::new(move |p| data_file(p, &["r", "T"], r.into_iter().zip(t).map(|(r, t)| vec![r, t]))),
        ));
    }

    let mut probe_files: Vec<PathBuf> = match std::fs::read_dir(bundle.join("probes")) {
        Ok(entries) => entries.filter_map(|e| e.ok().map(|e| e.path())).collect(),
        Err(_) => Vec::new(),
    };
    probe_files.sort();
    for path in probe_files {
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
            continue;
        };
        let table = match Table::read(&path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("notice: skipping {}: {e:#}", path.display());
                continue;
            }
        };
        if let Some(tag) = stem.strip_suffix("_lyapunov") {
            let cols: Option<Vec<Vec<f64>>> =
                ["s", "E", "F", "H"].iter().map(|c| table.col(c).map(<[f64]>::to_vec)).collect();
            if let Some(cols) = cols {
                pending.push((
                    out.join(format!("{tag}_lyapunov.dat")),
                    Box::new(move |p| {
                        data_file(
                            p,
                            &["s", "E", "F", "H"],
                            (0..cols[0].len()).map(|i| cols.iter().map(|c| c[i]).collect()),
                        )
                    }),
                ));
            }
        } else if let Some(tag) = stem.strip_suffix("_single") {
            if let (Some(s), Some(res)) = (table.col("s"), table.col("residual")) {
                let rows: Vec<Vec<f64>> = s.iter().zip(res).map(|(&s, &r)| vec![s, r]).collect();
                pending.push((
                    out.join(format!("{tag}_residual.dat")),
                    Box::new(move |p| data_file(p, &["s", "residual"], rows.into_iter())),
                ));
            }
        } else if let Some(tag) = stem.strip_suffix("_multi") {
            let zetas: Vec<(String, Vec<f64>)> = table
                .columns
                .iter()
                .filter(|(h, _)| h.starts_with("zeta_"))
                .map(|(h, v)| (h.clone(), v.clone()))
                .collect();
            if zetas.len() >= 2 {
                let s = table.col("s").unwrap_or_default().to_vec();
                pending.push((
                    out.join(format!("{tag}_zeta.dat")),
                    Box::new(move |p| {
                        let mut header = vec!["log_s"];
                        header.extend(zetas.iter().map(|(h, _)| h.as_str()));
                        let rows = (0..s.len()).map(|i| {
                            let mut row = vec![s[i].ln()];
                            row.extend(zetas.iter().map(|(_, v)| v[i]));
                            row
                        });
                        data_file(p, &header, rows)
                    }),
                ));
            }
        }
    }

    if let Some(curve) = &curve {
        match candidates(bundle) {
            Ok((window, radii)) => {
                let (r, slope) = (curve.col("r").unwrap_or_default(), curve.col("slope").unwrap_or_default());
                for r0 in radii {
                    let rows: Vec<Vec<f64>> = r
                        .iter()
                        .zip(slope)
                        .filter(|(&r, _)| r != r0 && (r - r0).abs() <= window)
                        .map(|(&r, &sl)| {
                            let side = (r - r0).signum();
                            vec![1.0 / (r - r0).abs().ln().abs(), side, 1.0 + side * sl]
                        })
                        .collect();
                    pending.push((
                        out.join(format!("{}_corner.dat", crate::output::probe_tag(r0))),
                        Box::new(move |p| data_file(p, &["inv_abs_log_dist", "side", "g"], rows.into_iter())),
                    ));
                }
            }
            Err(e) => eprintln!("notice: skipping corner plots: {e:#}"),
        }
    }

    if pending.is_empty() {
        eprintln!("notice: bundle {} holds no plottable data", bundle.display());
        return Ok(written);
    }
    std::fs::create_dir_all(&out)?;
    for (path, write) in pending {
        write(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Cone window and characteristic-candidate radii from a bundle.
fn candidates(bundle: &Path) -> Result<(f64, Vec<f64>)> {
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(bundle.join(MANIFEST))?)?;
    let window = manifest["config"]["classifier"]["cone_window"].as_f64().unwrap_or(0.25);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(bundle.join(CLASSIFICATION)).context("reading classification")?)?;
    let radii = report["probes"]
        .as_array()
        .map(|probes| {
            probes
                .iter()
                .filter(|p| p["classification"]["verdict"] == "characteristic-candidate")
                .filter_map(|p| p["r0"].as_f64())
                .collect()
        })
        .unwrap_or_default();
    Ok((window, radii))
}
