use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::history::SolutionHistory;
use super::stepper::DeathCause;
use crate::error::{Error, Result};
use crate::model::Params;
use crate::numeric::{median, pow_nonneg};

/// Fitted blow-up time of one amplitude trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeEstimate {
    pub blowup_time: f64,
    /// Relative RMS residual of the rate model.
    pub residual: f64,
    pub samples: usize,
}

/// Fits `|u| ≈ A (T - t)^{-2/(p-1)}` through the affine law
/// `|u|^{-(p-1)/2} = c (T - t)`, weighting each sample by its relative size.
pub fn estimate_blowup_time(trace: &[(f64, f64)], params: &Params) -> Result<TimeEstimate> {
    let n = trace.len();
    if n < 8 {
        return Err(Error::NoEstimate(format!("trace has {n} samples, need at least 8")));
    }
    if trace.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::NoEstimate("trace times are not increasing".into()));
    }
    let first = trace[0].1.abs();
    let last = trace[n - 1].1.abs();
    if !(last > first) || trace.iter().any(|s| !(s.1.abs() > 0.0) || !s.1.is_finite()) {
        return Err(Error::NoEstimate("amplitude is not growing".into()));
    }
    let e = -0.5 * (params.p() - 1.0);
    // weighted least squares of z = α + β t with weights 1/z²
    let (mut sw, mut st, mut sz, mut stt, mut stz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let t0 = trace[0].0;
    let z: Vec<f64> = trace.iter().map(|&(_, u)| pow_nonneg(u.abs(), e)).collect();
    for (&(t, _), &zi) in trace.iter().zip(&z) {
        let w = 1.0 / (zi * zi);
        let x = t - t0;
        sw += w;
        st += w * x;
        sz += w * zi;
        stt += w * x * x;
        stz += w * x * zi;
    }
    let det = sw * stt - st * st;
    if !(det > 0.0) {
        return Err(Error::NoEstimate("degenerate trace".into()));
    }
    let beta = (sw * stz - st * sz) / det;
    let alpha = (sz - beta * st) / sw;
    if !(beta < 0.0) {
        return Err(Error::NoEstimate("fitted rate does not decrease towards blow-up".into()));
    }
    let blowup_time = t0 - alpha / beta;
    let t_last = trace[n - 1].0;
    if !(blowup_time.is_finite() && blowup_time >= t_last) {
        return Err(Error::NoEstimate(format!("extrapolated time {blowup_time} precedes the last sample {t_last}")));
    }
    let ss: f64 = trace
        .iter()
        .zip(&z)
        .map(|(&(t, _), &zi)| {
            let r = (zi - alpha - beta * (t - t0)) / zi;
            r * r
        })
        .sum();
    Ok(TimeEstimate { blowup_time, residual: (ss / n as f64).sqrt(), samples: n })
}

/// How a node's blow-up time was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateSource {
    /// Rate fit on the dense trace recorded near the ceiling.
    DenseTrace,
    /// Rate fit on snapshot samples of a node removed by the light cone.
    ConeTrace,
    /// Light-cone bound `T(source) + |r - r_source|` when no fit was possible.
    ConeBound,
    /// Time at which the ceiling was reached, when no fit was possible.
    CeilingTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `max (|ΔT| - |Δr|)` over adjacent sampled nodes.
    pub max_excess: f64,
    /// Allowed discrete slack, `2h`.
    pub slack: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightConeReport {
    /// `max (T(r) - T(0) - r)` over sampled `r > r_tol`.
    pub max_violation: f64,
    pub checked: usize,
    pub passes: bool,
}

/// Sampled blow-up curve `T(r)` on the nodes where it could be estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupCurve {
    pub h: f64,
    pub node: Vec<usize>,
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    /// `T'(r)` after median smoothing.
    pub slope: Vec<f64>,
    pub residual: Vec<f64>,
    pub source: Vec<EstimateSource>,
    pub lipschitz: LipschitzReport,
}

/// Largest monotone-growth tail of a series, keeping samples within a
/// factor `span` of the final amplitude but at least `min_len` when possible.
fn growth_tail(series: &[(f64, f64)], span: f64, min_len: usize) -> &[(f64, f64)] {
    let n = series.len();
    if n == 0 {
        return series;
    }
    let mut start = n - 1;
    while start > 0 && series[start - 1].1.abs() < series[start].1.abs() {
        start -= 1;
    }
    let last = series[n - 1].1.abs();
    let mut cut = start;
    while cut < n && series[cut].1.abs() < last / span {
        cut += 1;
    }
    if n - cut < min_len {
        cut = n.saturating_sub(min_len).max(start);
    }
    &series[cut..]
}

/// Reconstructs `T(r)` from a solver history.
pub fn blowup_curve(history: &SolutionHistory) -> Result<BlowupCurve> {
    if !history.any_death() {
        return Err(Error::NoBlowup);
    }
    let params = *history.params();
    let h = history.spacing();
    let deaths = history.deaths();
    let n = history.nodes();

    let fit_series = |i: usize| -> Result<TimeEstimate> {
        let series = history.node_series(i);
        estimate_blowup_time(growth_tail(&series, 20.0, 8), &params)
    };

    let first: Vec<Option<(f64, f64, EstimateSource)>> = (0..n)
        .into_par_iter()
        .map(|i| match deaths[i] {
            Some(d) if d.cause == DeathCause::Ceiling => {
                let est = estimate_blowup_time(history.trace(i), &params).or_else(|_| fit_series(i));
                Some(match est {
                    Ok(e) => (e.blowup_time, e.residual, EstimateSource::DenseTrace),
                    Err(_) => (d.time, f64::NAN, EstimateSource::CeilingTime),
                })
            }
            _ => None,
        })
        .collect();

    let second: Vec<Option<(f64, f64, EstimateSource)>> = (0..n)
        .into_par_iter()
        .map(|i| match deaths[i] {
            Some(d) if d.cause == DeathCause::Cone => {
                let src = d.source.expect("cone deaths carry a source");
                let src_t = first[src].map_or(d.time, |x| x.0);
                let bound = src_t + (i as f64 - src as f64).abs() * h;
                Some(match fit_series(i) {
                    Ok(e) => (e.blowup_time.clamp(d.time, bound.max(d.time)), e.residual, EstimateSource::ConeTrace),
                    Err(_) => (bound, f64::NAN, EstimateSource::ConeBound),
                })
            }
            _ => first[i],
        })
        .collect();

    let mut curve = BlowupCurve {
        h,
        node: Vec::new(),
        r: Vec::new(),
        t: Vec::new(),
        slope: Vec::new(),
        residual: Vec::new(),
        source: Vec::new(),
        lipschitz: LipschitzReport { max_excess: 0.0, slack: 2.0 * h, passes: true },
    };
    for (i, est) in second.into_iter().enumerate() {
        if let Some((t, res, src)) = est {
            curve.node.push(i);
            curve.r.push(history.radii()[i]);
            curve.t.push(t);
            curve.residual.push(res);
            curve.source.push(src);
        }
    }
    curve.slope = smoothed_slope(&curve.node, &curve.t, h);
    curve.lipschitz = curve.lipschitz_report();
    Ok(curve)
}

/// Five-node median filter followed by a five-node least-squares slope,
/// both restricted to runs of consecutive nodes.
fn smoothed_slope(node: &[usize], t: &[f64], h: f64) -> Vec<f64> {
    let m = node.len();
    let mut slope = vec![f64::NAN; m];
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && node[end] == node[end - 1] + 1 {
            end += 1;
        }
        let run = &t[start..end];
        let len = run.len();
        let filtered: Vec<f64> = (0..len)
            .map(|j| {
                // symmetric window, shrinking at the ends of the run
                let half = 2.min(j).min(len - 1 - j);
                let mut win = run[j - half..=j + half].to_vec();
                median(&mut win)
            })
            .collect();
        for j in 0..len {
            let lo = j.saturating_sub(2);
            let hi = (j + 3).min(len);
            if hi - lo < 2 {
                continue;
            }
            let xs: Vec<f64> = (lo..hi).map(|k| k as f64 * h).collect();
            let mx = xs.iter().sum::<f64>() / xs.len() as f64;
            let my = filtered[lo..hi].iter().sum::<f64>() / xs.len() as f64;
            let (mut sxy, mut sxx) = (0.0, 0.0);
            for (x, y) in xs.iter().zip(&filtered[lo..hi]) {
                sxy += (x - mx) * (y - my);
                sxx += (x - mx) * (x - mx);
            }
            slope[start + j] = sxy / sxx;
        }
        start = end;
    }
    slope
}

impl BlowupCurve {
    pub fn len(&self) -> usize {
        self.node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node.is_empty()
    }

    /// Position in the sampled arrays of grid node `i`.
    pub fn position_of_node(&self, i: usize) -> Option<usize> {
        self.node.binary_search(&i).ok()
    }

    /// Position of the sampled node closest to `r`.
    pub fn nearest(&self, r: f64) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        let k = self.r.partition_point(|&x| x < r);
        let cands = [k.saturating_sub(1), k.min(self.len() - 1)];
        cands.into_iter().min_by(|&a, &b| (self.r[a] - r).abs().total_cmp(&(self.r[b] - r).abs()))
    }

    /// `T` at a sampled node lying within `h/2` of `r`.
    pub fn t_near(&self, r: f64) -> Option<f64> {
        let k = self.nearest(r)?;
        ((self.r[k] - r).abs() <= 0.5 * self.h + 1e-12).then(|| self.t[k])
    }

    /// Linear interpolation of `T` between adjacent sampled nodes.
    pub fn t_at(&self, r: f64) -> Option<f64> {
        let k = self.r.partition_point(|&x| x <= r);
        if k == 0 {
            return (self.r.first()? - r).abs().le(&1e-12).then(|| self.t[0]);
        }
        if k == self.len() {
            return ((r - self.r[k - 1]).abs() <= 1e-12).then(|| self.t[k - 1]);
        }
        if self.node[k] != self.node[k - 1] + 1 {
            return None;
        }
        let a = (r - self.r[k - 1]) / (self.r[k] - self.r[k - 1]);
        Some(self.t[k - 1] + a * (self.t[k] - self.t[k - 1]))
    }

    pub fn lipschitz_report(&self) -> LipschitzReport {
        let mut max_excess = f64::NEG_INFINITY;
        for k in 1..self.len() {
            if self.node[k] == self.node[k - 1] + 1 {
                let excess = (self.t[k] - self.t[k - 1]).abs() - (self.r[k] - self.r[k - 1]);
                max_excess = max_excess.max(excess);
            }
        }
        if max_excess == f64::NEG_INFINITY {
            max_excess = 0.0;
        }
        let slack = 2.0 * self.h;
        LipschitzReport { max_excess, slack, passes: max_excess <= slack }
    }

    /// Checks `T(r) < T(0) + r` for sampled `r > r_tol`; `None` when the
    /// axis did not blow up.
    pub fn light_cone_report(&self, r_tol: f64) -> Option<LightConeReport> {
        if self.node.first() != Some(&0) {
            return None;
        }
        let t0 = self.t[0];
        let mut max_violation = f64::NEG_INFINITY;
        let mut checked = 0;
        for k in 0..self.len() {
            if self.r[k] > r_tol {
                max_violation = max_violation.max(self.t[k] - t0 - self.r[k]);
                checked += 1;
            }
        }
        Some(LightConeReport { max_violation, checked, passes: checked == 0 || max_violation < 0.0 })
    }

    /// Curve built from closed-form values on nodes `i·h` (for synthetic studies).
    pub fn from_samples(h: f64, node: Vec<usize>, t: Vec<f64>) -> Result<Self> {
        if node.len() != t.len() || node.is_empty() {
            return Err(Error::InsufficientData("curve needs matching, non-empty node and time arrays".into()));
        }
        if node.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("curve nodes must be strictly increasing".into()));
        }
        let r = node.iter().map(|&i| i as f64 * h).collect();
        let slope = smoothed_slope(&node, &t, h);
        let m = node.len();
        let mut curve = BlowupCurve {
            h,
            node,
            r,
            t,
            slope,
            residual: vec![0.0; m],
            source: vec![EstimateSource::DenseTrace; m],
            lipschitz: LipschitzReport { max_excess: 0.0, slack: 2.0 * h, passes: true },
        };
        curve.lipschitz = curve.lipschitz_report();
        Ok(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> Params {
        Params::new(3.0, 3).unwrap()
    }

    fn ode_trace(scale: f64) -> Vec<(f64, f64)> {
        (0..=40)
            .map(|k| {
                let t = 0.5 + 0.01 * k as f64;
                (t, scale * 2f64.sqrt() / (1.0 - t))
            })
            .collect()
    }

    #[test]
    fn exact_trace_gives_exact_time() {
        let e = estimate_blowup_time(&ode_trace(1.0), &cubic()).unwrap();
        assert!((e.blowup_time - 1.0).abs() < 1e-6);
        let e2 = estimate_blowup_time(&ode_trace(2.0), &cubic()).unwrap();
        assert!((e2.blowup_time - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_short_or_decaying_traces() {
        let tr = ode_trace(1.0);
        assert!(estimate_blowup_time(&tr[..5], &cubic()).is_err());
        let decaying: Vec<(f64, f64)> = tr.iter().map(|&(t, u)| (t, 1.0 / u)).collect();
        assert!(estimate_blowup_time(&decaying, &cubic()).is_err());
    }

    #[test]
    fn slope_of_linear_curve() {
        let node: Vec<usize> = (0..50).collect();
        let t: Vec<f64> = node.iter().map(|&i| 1.0 + 0.3 * i as f64 * 0.01).collect();
        let c = BlowupCurve::from_samples(0.01, node, t).unwrap();
        assert!(c.slope.iter().all(|s| (s - 0.3).abs() < 1e-10));
        assert!(c.lipschitz.passes);
        assert!(c.light_cone_report(0.0).unwrap().passes);
        assert!((c.t_at(0.255).unwrap() - (1.0 + 0.3 * 0.255)).abs() < 1e-12);
    }

    #[test]
    fn steep_curve_fails_lipschitz() {
        let node: Vec<usize> = (0..10).collect();
        let t: Vec<f64> = node.iter().map(|&i| 1.0 + 4.0 * i as f64 * 0.01).collect();
        let c = BlowupCurve::from_samples(0.01, node, t).unwrap();
        assert!(!c.lipschitz.passes);
        assert!(!c.light_cone_report(0.0).unwrap().passes);
    }
}
