use rayon::prelude::*;
use serde::Serialize;

use blowup_core::classifier::{
    classify, cone_test, convergence_rate, corner_fit, energy_criterion, sign_constant_in_cone, slope_match,
    speed_trace, Evidence, PointClassification, Verdict,
};
use blowup_core::model::{energy, YGrid};
use blowup_core::similarity::{
    boundedness_centers, boundedness_report, frame_s_range, lyapunov_trace, s_grid, to_similarity_frame,
    BoundednessReport, LyapunovTrace, MonotonicityReport,
};
use blowup_core::solitons::{
    fit_multi, fit_single, select_k, soliton_frame, zeta_trace, KSelection, MultiSolitonFit, SolitonFit, ZetaTrace,
};
use blowup_core::solver::{
    blowup_curve, simulate, BlowupCurve, LightConeReport, LipschitzReport, SolutionHistory, StopReason,
};
use blowup_core::{Error, SimilarityFrame, SolitonParams};

use crate::config::RunConfig;

/// Everything a run produced, before it is written out.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub config: RunConfig,
    pub history: Option<SolutionHistory>,
    pub curve: Option<BlowupCurve>,
    pub summary: RunSummary,
    pub probes: Vec<ProbeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub blowup: bool,
    pub stop_reason: Option<StopReason>,
    pub curve_nodes: usize,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub lipschitz: Option<LipschitzReport>,
    pub light_cone: Option<LightConeReport>,
    /// `E(κ₀)` on the similarity grid of the run.
    pub soliton_energy: f64,
    /// Run-level failures (solver, curve reconstruction).
    pub errors: Vec<String>,
}

/// Diagnostics at one probe; stage failures are collected in `errors`.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub r0: f64,
    pub blowup_time: Option<f64>,
    pub s_range: Option<(f64, f64)>,
    pub classification: PointClassification,
    pub monotonicity: Option<MonotonicityReport>,
    pub boundedness: Option<BoundednessReport>,
    pub selection: Option<KSelection>,
    pub zeta: Option<ZetaTrace>,
    pub errors: Vec<String>,
    #[serde(skip)]
    pub trace: Option<LyapunovTrace>,
    #[serde(skip)]
    pub single_fits: Vec<(f64, SolitonFit)>,
    #[serde(skip)]
    pub multi_fits: Vec<(f64, MultiSolitonFit)>,
}

impl ProbeReport {
    pub fn verdict(&self) -> Verdict {
        self.classification.verdict
    }
}

impl Bundle {
    pub fn is_empty(&self) -> bool {
        self.curve.as_ref().is_none_or(|c| c.is_empty()) && self.probes.is_empty()
    }
}

/// Solve, reconstruct `T(r)`, then analyse every probe in parallel.
///
/// A failing probe only fills its own `errors`; solver failures end up in
/// the run summary with no probes.
pub fn run_pipeline(config: &RunConfig) -> anyhow::Result<Bundle> {
    config.validate()?;
    let grid = YGrid::uniform(config.similarity.y_nodes, config.similarity.eta)?;
    let unit = SolitonParams::new(1.0, 0.0, 0.0)?;
    let soliton_energy = energy(&soliton_frame(config.params, 1.0, 0.0, grid.clone(), &[unit])?);
    let mut summary = RunSummary {
        blowup: false,
        stop_reason: None,
        curve_nodes: 0,
        t_min: None,
        t_max: None,
        lipschitz: None,
        light_cone: None,
        soliton_energy,
        errors: Vec::new(),
    };
    let mut bundle =
        Bundle { config: config.clone(), history: None, curve: None, summary: summary.clone(), probes: vec![] };

    let history = match simulate(&config.scenario()) {
        Ok(h) => h,
        Err(e) => {
            summary.errors.push(format!("solver: {e}"));
            bundle.summary = summary;
            return Ok(bundle);
        }
    };
    summary.stop_reason = Some(history.stop_reason());
    let curve = match blowup_curve(&history) {
        Ok(c) => Some(c),
        Err(Error::NoBlowup) => None,
        Err(e) => {
            summary.errors.push(format!("blow-up curve: {e}"));
            None
        }
    };
    if let Some(curve) = &curve {
        summary.blowup = true;
        summary.curve_nodes = curve.len();
        summary.t_min = curve.t.iter().copied().reduce(f64::min);
        summary.t_max = curve.t.iter().copied().reduce(f64::max);
        summary.lipschitz = Some(curve.lipschitz_report());
        summary.light_cone = curve.light_cone_report(2.0 * curve.h);
        let ctx = Context { config, history: &history, curve, grid: &grid, soliton_energy };
        bundle.probes = probe_radii(config, curve).into_par_iter().map(|r0| ctx.analyze(r0)).collect();
    }
    bundle.summary = summary;
    bundle.history = Some(history);
    bundle.curve = curve;
    Ok(bundle)
}

/// Configured probes plus the interior local maxima of `T`, snapped to
/// sampled nodes, sorted and deduplicated.
pub fn probe_radii(config: &RunConfig, curve: &BlowupCurve) -> Vec<f64> {
    let probes = &config.probes;
    let mut radii = probes.radii.clone();
    if let Some((lo, hi, count)) = probes.range {
        radii.extend(s_grid(lo, hi, count));
    }
    if probes.auto {
        radii.extend(local_maxima(curve, probes.peak_window, probes.peak_prominence));
    }
    let mut snapped: Vec<f64> = radii
        .into_iter()
        .filter_map(|r| curve.nearest(r).filter(|&k| (curve.r[k] - r).abs() <= 0.5 * curve.h + 1e-12))
        .map(|k| curve.r[k])
        .collect();
    snapped.sort_by(f64::total_cmp);
    snapped.dedup();
    snapped
}

/// Sampled nodes holding the maximum of `T` over `|r - r_k| ≤ window`, with
/// `T` dropping by at least `prominence` at both ends of that window.
pub fn local_maxima(curve: &BlowupCurve, window: f64, prominence: f64) -> Vec<f64> {
    let mut peaks = Vec::new();
    let (Some(&first), Some(&last)) = (curve.r.first(), curve.r.last()) else {
        return peaks;
    };
    for k in 0..curve.len() {
        let r = curve.r[k];
        if r - window < first - 1e-12 || r + window > last + 1e-12 {
            continue;
        }
        let lo = curve.r.partition_point(|&x| x < r - window - 1e-12);
        let hi = curve.r.partition_point(|&x| x <= r + window + 1e-12);
        let is_max = (lo..hi).all(|j| curve.t[j] < curve.t[k] || (curve.t[j] == curve.t[k] && j >= k));
        let drop = curve.t[k] - curve.t[lo].max(curve.t[hi - 1]);
        if is_max && drop >= prominence {
            peaks.push(r);
        }
    }
    peaks
}

struct Context<'a> {
    config: &'a RunConfig,
    history: &'a SolutionHistory,
    curve: &'a BlowupCurve,
    grid: &'a YGrid,
    soliton_energy: f64,
}

impl Context<'_> {
    fn analyze(&self, r0: f64) -> ProbeReport {
        let cfg = self.config;
        let settings = &cfg.classifier;
        let mut errors = Vec::new();
        let mut note = |stage: &str, e: Error| errors.push(format!("{stage}: {e}"));
        let mut evidence = Evidence { on_axis: r0 < 0.5 * self.curve.h, ..Default::default() };
        let mut report = ProbeReport {
            r0,
            blowup_time: self.curve.t_near(r0),
            s_range: None,
            classification: classify(r0, Evidence::default(), settings),
            monotonicity: None,
            boundedness: None,
            selection: None,
            zeta: None,
            errors: Vec::new(),
            trace: None,
            single_fits: Vec::new(),
            multi_fits: Vec::new(),
        };
        let Some(t0) = report.blowup_time else {
            note("probe", Error::OutOfRange(format!("no blow-up time at r0 = {r0}")));
            report.errors = errors;
            report.classification = classify(r0, evidence, settings);
            return report;
        };

        evidence.sign_constant = sign_constant_in_cone(self.history, r0, t0);
        evidence.cone = cone_test(self.curve, r0, settings.cone_window).map_err(|e| note("cone test", e)).ok();

        let sim = &cfg.similarity;
        let s_range = frame_s_range(self.history, self.curve, r0, sim.min_cells).map_err(|e| note("s range", e)).ok();
        report.s_range = s_range;
        if let Some((lo, hi)) = s_range {
            let s = s_grid(lo, hi, sim.s_samples);
            let trace =
                lyapunov_trace(self.history, t0, r0, &s, self.grid, sim.gamma).map_err(|e| note("lyapunov", e)).ok();
            let centers = boundedness_centers(self.curve, r0, sim.boundedness_centers);
            let bound = boundedness_report(self.history, &centers, &s, self.grid, sim.divergence_factor)
                .map_err(|e| note("boundedness", e))
                .ok();

            let s_fit = s_grid(lo, hi, cfg.fits.samples);
            let frames: Vec<(f64, Result<SimilarityFrame, Error>)> =
                s_fit.par_iter().map(|&s| (s, to_similarity_frame(self.history, t0, r0, s, self.grid))).collect();
            let mut ok_frames = Vec::new();
            for (s, frame) in frames {
                match frame {
                    Ok(f) => ok_frames.push((s, f)),
                    Err(e) => note(&format!("frame s = {s:.4}"), e),
                }
            }
            let singles: Vec<(f64, Result<SolitonFit, Error>)> =
                ok_frames.par_iter().map(|(s, f)| (*s, fit_single(f))).collect();
            for (s, fit) in singles {
                match fit {
                    Ok(f) => report.single_fits.push((s, f)),
                    Err(e) => note(&format!("single fit s = {s:.4}"), e),
                }
            }

            if let Some((_, last)) = ok_frames.last() {
                match select_k(last, cfg.fits.k_max, cfg.fits.k_threshold) {
                    Ok(sel) => {
                        evidence.k = Some(sel.k);
                        report.selection = Some(sel);
                    }
                    Err(e) => note("k selection", e),
                }
            }
            if let Some(k) = evidence.k.filter(|&k| k >= 1) {
                let mut prev: Option<MultiSolitonFit> = None;
                for (s, frame) in &ok_frames {
                    match fit_multi(frame, k, prev.as_ref()) {
                        Ok(fit) => {
                            prev = Some(fit.clone());
                            report.multi_fits.push((*s, fit));
                        }
                        Err(e) => note(&format!("multi fit s = {s:.4}"), e),
                    }
                }
                if k >= 2 {
                    let (s, fits): (Vec<f64>, Vec<MultiSolitonFit>) = report.multi_fits.iter().cloned().unzip();
                    report.zeta = zeta_trace(&s, &fits, &cfg.params).map_err(|e| note("zeta trace", e)).ok();
                }
            }

            if let (Some(trace), Some(bound)) = (&trace, &bound) {
                let c3 = settings.c3_factor * bound.supremum;
                evidence.energy = Some(energy_criterion(trace, self.soliton_energy, c3, evidence.k));
            }
            if let Some((_, fit)) = report.single_fits.last() {
                evidence.slope = slope_match(fit, self.curve, r0).map_err(|e| note("slope match", e)).ok();
            }
            if !report.single_fits.is_empty() {
                evidence.rate = convergence_rate(&report.single_fits, settings.r2_threshold)
                    .map_err(|e| note("convergence rate", e))
                    .ok();
            }
            report.monotonicity = trace.as_ref().map(|t| t.report.clone());
            report.boundedness = bound;
            report.trace = trace;
        }

        if let Some(k) = evidence.k.filter(|&k| k >= 2) {
            evidence.corner = corner_fit(self.curve, r0, k, settings.cone_window, &cfg.params)
                .map_err(|e| note("corner fit", e))
                .ok();
        }
        evidence.speed =
            speed_trace(self.history, r0, t0, evidence.k.filter(|&k| k >= 1)).map_err(|e| note("speed trace", e)).ok();

        report.errors = errors;
        report.classification = classify(r0, evidence, settings);
        report
    }
}
