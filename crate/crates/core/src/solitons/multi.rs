use std::io::Write;

use serde::Serialize;

use super::lsq::{minimize, LsqOutcome, MAX_ITERATIONS};
use super::{fit_single, profile, FrameData, ZETA_LIMIT};
use crate::error::{Error, Result};
use crate::model::{h_norm, SimilarityFrame, SolitonParams};

/// Default `k` selection threshold, as a fraction of the frame's `𝓗` norm.
pub const K_THRESHOLD: f64 = 0.05;

/// Adjacent angles closer than this flag the fit as degenerate.
const COLLISION_TOL: f64 = 1e-3;
const LAMBDA_LIMIT: f64 = 30.0;
/// Shift coordinate of a seed soliton that contributes nothing.
const DORMANT_LAMBDA: f64 = 20.0;
const SEED_GAP: f64 = 1.5;
const MAX_RELAXED_K: usize = 6;

/// Fit of `Σᵢ e₁(-1)^{i+1} κ*(dᵢ, νᵢ)` with `dᵢ = -tanh ζᵢ`, `ζ₁ < … < ζ_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiSolitonFit {
    pub k: usize,
    pub e1: f64,
    pub zeta: Vec<f64>,
    pub nu: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    /// Two adjacent angles collided.
    pub degenerate: bool,
    pub iterations: usize,
}

impl MultiSolitonFit {
    pub fn signs(&self) -> Vec<f64> {
        alternating(self.e1, self.k)
    }

    pub fn d(&self) -> Vec<f64> {
        self.zeta.iter().map(|z| -z.tanh()).collect()
    }

    pub fn solitons(&self) -> Vec<SolitonParams> {
        self.signs()
            .into_iter()
            .zip(self.d())
            .zip(&self.nu)
            .map(|((theta, d), &nu)| SolitonParams { theta, d, nu })
            .collect()
    }
}

/// Multi-soliton fit with a free sign pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedFit {
    pub signs: Vec<f64>,
    pub zeta: Vec<f64>,
    pub nu: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    /// The best pattern alternates.
    pub alternating: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSelection {
    pub k: usize,
    /// `𝓗` norm of the frame, the residual of `k = 0`.
    pub norm: f64,
    pub threshold: f64,
    /// Residual for each `k = 0..=k_max`.
    pub residuals: Vec<f64>,
    /// Fits for `k = 1..=k_max`.
    pub fits: Vec<MultiSolitonFit>,
    /// `false` when no `k` met the threshold and the smallest residual was kept.
    pub below_threshold: bool,
}

impl KSelection {
    /// Fit for the selected `k`, `None` for `k = 0`.
    pub fn fit(&self) -> Option<&MultiSolitonFit> {
        self.k.checked_sub(1).and_then(|i| self.fits.get(i))
    }
}

fn alternating(e1: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| if i % 2 == 0 { e1 } else { -e1 }).collect()
}

/// `ν = (1-d²)/2 (e^λ - 1)`, so that `1 + d y + ν ≥ (1-|d|)²/2 > 0` on `[-1, 1]`.
fn nu_of(zeta: f64, lambda: f64) -> f64 {
    let c = 1.0 / zeta.cosh();
    0.5 * c * c * lambda.exp_m1()
}

fn lambda_of(zeta: f64, nu: f64) -> f64 {
    let c = 1.0 / zeta.cosh();
    (2.0 * nu / (c * c)).ln_1p()
}

struct Peak {
    zeta: f64,
    sign: f64,
    size: f64,
}

/// One peak per sign run of `w(y)(1-y²)^{1/(p-1)}`, whose maximum for
/// `κ(d)` sits at `y = -d`, i.e. `ζ = argth y`.
fn peaks(frame: &SimilarityFrame) -> Vec<Peak> {
    let half = 0.5 * frame.params().rate_exponent();
    let y = frame.y();
    let v: Vec<f64> = frame.w().iter().zip(y).map(|(w, y)| w * (1.0 - y * y).powf(half)).collect();
    let floor = 1e-9 * v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut out: Vec<Peak> = Vec::new();
    for (j, &vj) in v.iter().enumerate() {
        if vj.abs() <= floor {
            continue;
        }
        let sign = vj.signum();
        let zeta = y[j].clamp(-0.999, 0.999).atanh();
        match out.last_mut() {
            Some(p) if p.sign == sign => {
                if vj.abs() > p.size {
                    p.zeta = zeta;
                    p.size = vj.abs();
                }
            }
            _ => out.push(Peak { zeta, sign, size: vj.abs() }),
        }
    }
    out
}

/// Angle seeds for `k` solitons starting with sign `e1`: windows of the
/// alternating peak list, padded with dormant positions `1.5` apart.
fn seeds(peaks: &[Peak], k: usize, e1: f64) -> Vec<Vec<f64>> {
    let mut ext: Vec<(f64, f64, f64)> = peaks.iter().map(|p| (p.zeta, p.sign, p.size)).collect();
    if ext.is_empty() {
        ext.push((0.0, e1, 0.0));
    }
    if ext[0].1 != e1 {
        ext.insert(0, (ext[0].0 - SEED_GAP, e1, 0.0));
    }
    while ext.len() < k {
        let last = ext[ext.len() - 1];
        ext.push((last.0 + SEED_GAP, -last.1, 0.0));
    }
    let mut windows: Vec<(f64, Vec<f64>)> = (0..=ext.len() - k)
        .filter(|&i| ext[i].1 == e1)
        .map(|i| (ext[i..i + k].iter().map(|e| e.2).sum(), ext[i..i + k].iter().map(|e| e.0).collect()))
        .collect();
    windows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<Vec<f64>> = windows.into_iter().take(2).map(|w| w.1).collect();
    out.push((0..k).map(|i| i as f64 - 0.5 * (k as f64 - 1.0)).collect());
    for z in &mut out {
        // keep the seed strictly ordered and inside the admissible range
        for i in 0..k {
            z[i] = z[i].clamp(-ZETA_LIMIT + 1.0, ZETA_LIMIT - 1.0);
            if i > 0 && z[i] <= z[i - 1] + COLLISION_TOL {
                z[i] = z[i - 1] + 0.1;
            }
        }
    }
    out
}

fn run(data: &FrameData, signs: &[f64], x0: Vec<f64>) -> Option<LsqOutcome> {
    let k = signs.len();
    let residual = |x: &[f64]| {
        let (zeta, lambda) = x.split_at(k);
        if zeta.iter().any(|z| z.abs() > ZETA_LIMIT) || lambda.iter().any(|l| l.abs() > LAMBDA_LIMIT) {
            return None;
        }
        if zeta.windows(2).any(|w| !(w[1] > w[0])) {
            return None;
        }
        let terms = (0..k).map(|i| (signs[i], -zeta[i].tanh(), nu_of(zeta[i], lambda[i])));
        let (m, my) = profile(&data.params, data.y, terms);
        Some(data.residual(&m, &my))
    };
    minimize(residual, x0, MAX_ITERATIONS)
}

fn best_of(data: &FrameData, signs: &[f64], starts: Vec<Vec<f64>>) -> Option<LsqOutcome> {
    starts.into_iter().filter_map(|x0| run(data, signs, x0)).fold(None, |best: Option<LsqOutcome>, out| match best {
        Some(b) if b.cost <= out.cost => Some(b),
        _ => Some(out),
    })
}

fn with_lambda(zeta: Vec<f64>, lambda: f64) -> Vec<f64> {
    let k = zeta.len();
    zeta.into_iter().chain(std::iter::repeat_n(lambda, k)).collect()
}

fn params_of(fit: &MultiSolitonFit) -> Vec<f64> {
    let lambda = fit.zeta.iter().zip(&fit.nu).map(|(&z, &n)| lambda_of(z, n));
    fit.zeta.iter().copied().chain(lambda).collect()
}

/// Fits `k` alternating distorted solitons to the frame by damped
/// Gauss–Newton in `(ζᵢ, λᵢ)`, `νᵢ = (1-dᵢ²)/2 (e^{λᵢ} - 1)`, trying both
/// signs `e₁`.
///
/// Seeds come from the sign-alternating peaks of `w(y)(1-y²)^{1/(p-1)}`.
/// `init` adds a warm start: a fit with the same `k`, or a `(k-1)`-fit
/// extended by a dormant soliton at either end, so the residual never
/// exceeds that of the smaller model.
pub fn fit_multi(frame: &SimilarityFrame, k: usize, init: Option<&MultiSolitonFit>) -> Result<MultiSolitonFit> {
    if k == 0 {
        return Err(Error::Domain("a multi-soliton fit needs k >= 1".into()));
    }
    let data = FrameData::new(frame);
    let peaks = peaks(frame);
    let single = if k == 1 { Some(fit_single(frame)?) } else { None };
    let mut best: Option<(f64, LsqOutcome)> = None;
    for e1 in [1.0, -1.0] {
        let mut starts: Vec<Vec<f64>> = seeds(&peaks, k, e1).into_iter().map(|z| with_lambda(z, 0.0)).collect();
        if let Some(s) = single.filter(|s| s.theta == e1) {
            starts.push(vec![s.zeta(), 0.0]);
        }
        if let Some(init) = init {
            if init.k == k && init.e1 == e1 {
                starts.push(params_of(init));
            } else if init.k + 1 == k {
                let x = params_of(init);
                let (z, l) = x.split_at(init.k);
                if init.e1 == e1 {
                    let mut zeta = z.to_vec();
                    zeta.push(z[init.k - 1] + SEED_GAP);
                    let mut lambda = l.to_vec();
                    lambda.push(DORMANT_LAMBDA);
                    starts.push(zeta.into_iter().chain(lambda).collect());
                } else {
                    let zeta = std::iter::once(z[0] - SEED_GAP).chain(z.iter().copied());
                    let lambda = std::iter::once(DORMANT_LAMBDA).chain(l.iter().copied());
                    starts.push(zeta.chain(lambda).collect());
                }
            }
        }
        let starts: Vec<Vec<f64>> = starts
            .into_iter()
            .filter(|x| x[..k].iter().all(|z| z.abs() < ZETA_LIMIT) && x[..k].windows(2).all(|w| w[1] > w[0]))
            .collect();
        if let Some(out) = best_of(&data, &alternating(e1, k), starts) {
            if best.as_ref().is_none_or(|(_, b)| out.cost < b.cost) {
                best = Some((e1, out));
            }
        }
    }
    let (e1, out) = best.ok_or_else(|| Error::Domain("no admissible multi-soliton seed".into()))?;
    let (zeta, lambda) = out.x.split_at(k);
    Ok(MultiSolitonFit {
        k,
        e1,
        zeta: zeta.to_vec(),
        nu: zeta.iter().zip(lambda).map(|(&z, &l)| nu_of(z, l)).collect(),
        residual: data.distance(out.cost),
        converged: out.converged,
        degenerate: zeta.windows(2).any(|w| w[1] - w[0] < COLLISION_TOL),
        iterations: out.iterations,
    })
}

/// Diagnostic fit over every sign pattern of `k` solitons, to check that
/// the alternating pattern is the one the data prefers.
pub fn fit_multi_relaxed(frame: &SimilarityFrame, k: usize) -> Result<RelaxedFit> {
    if k == 0 || k > MAX_RELAXED_K {
        return Err(Error::Domain(format!("relaxed fits support 1 <= k <= {MAX_RELAXED_K}, got {k}")));
    }
    let data = FrameData::new(frame);
    let peaks = peaks(frame);
    let mut starts: Vec<Vec<f64>> = seeds(&peaks, k, 1.0);
    starts.extend(seeds(&peaks, k, -1.0));
    let starts: Vec<Vec<f64>> = starts.into_iter().map(|z| with_lambda(z, 0.0)).collect();
    let mut best: Option<(Vec<f64>, LsqOutcome)> = None;
    for pattern in 0..(1usize << k) {
        let signs: Vec<f64> = (0..k).map(|i| if pattern >> i & 1 == 0 { 1.0 } else { -1.0 }).collect();
        if let Some(out) = best_of(&data, &signs, starts.clone()) {
            if best.as_ref().is_none_or(|(_, b)| out.cost < b.cost) {
                best = Some((signs, out));
            }
        }
    }
    let (signs, out) = best.ok_or_else(|| Error::Domain("no admissible multi-soliton seed".into()))?;
    let (zeta, lambda) = out.x.split_at(k);
    Ok(RelaxedFit {
        alternating: signs.windows(2).all(|w| w[0] == -w[1]),
        signs,
        zeta: zeta.to_vec(),
        nu: zeta.iter().zip(lambda).map(|(&z, &l)| nu_of(z, l)).collect(),
        residual: data.distance(out.cost),
        converged: out.converged,
    })
}

/// Smallest `k ∈ 0..=k_max` whose residual is at most `threshold` times the
/// frame's `𝓗` norm.
///
/// When none qualifies, solitons are added while each one lowers the
/// residual by more than `threshold` times the norm.
pub fn select_k(frame: &SimilarityFrame, k_max: usize, threshold: f64) -> Result<KSelection> {
    let norm = h_norm(frame);
    let mut residuals = vec![norm];
    let mut fits: Vec<MultiSolitonFit> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let fit = fit_multi(frame, k, fits.last())?;
        residuals.push(fit.residual);
        fits.push(fit);
    }
    let limit = threshold * norm;
    let (k, below_threshold) = match residuals.iter().position(|&r| r <= limit) {
        Some(k) => (k, true),
        None => {
            let k = residuals.windows(2).position(|w| w[0] - w[1] <= limit).unwrap_or(k_max);
            (k, false)
        }
    };
    Ok(KSelection { k, norm, threshold, residuals, fits, below_threshold })
}

/// CSV with columns `s,k,e1,zeta_1..,nu_1..,residual,converged`, padded to
/// the largest `k` of the rows.
pub fn write_fit_csv<W: Write>(out: &mut W, rows: &[(f64, MultiSolitonFit)]) -> Result<()> {
    let k_max = rows.iter().map(|(_, f)| f.k).max().unwrap_or(0);
    let mut header = vec!["s".to_string(), "k".into(), "e1".into()];
    header.extend((1..=k_max).map(|i| format!("zeta_{i}")));
    header.extend((1..=k_max).map(|i| format!("nu_{i}")));
    header.push("residual".into());
    header.push("converged".into());
    writeln!(out, "# multi-soliton fits, signs e1 (-1)^(i+1)")?;
    writeln!(out, "{}", header.join(","))?;
    for (s, fit) in rows {
        let mut cells = vec![format!("{s:e}"), fit.k.to_string(), format!("{}", fit.e1)];
        for values in [&fit.zeta, &fit.nu] {
            cells.extend((0..k_max).map(|i| values.get(i).map(|v| format!("{v:e}")).unwrap_or_default()));
        }
        cells.push(format!("{:e}", fit.residual));
        cells.push(fit.converged.to_string());
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_coordinate_round_trips() {
        for (z, nu) in [(0.0, 0.0), (1.2, 0.3), (-2.0, -0.01), (0.5, 40.0)] {
            assert!((nu_of(z, lambda_of(z, nu)) - nu).abs() < 1e-12 * nu.abs().max(1.0));
        }
    }

    #[test]
    fn admissible_shifts_keep_the_base_positive() {
        for z in [-3.0, -0.5, 0.0, 2.0] {
            let d = -f64::tanh(z);
            let nu = nu_of(z, -LAMBDA_LIMIT);
            for y in [-1.0, 1.0] {
                assert!(1.0 + d * y + nu > 0.0);
            }
        }
    }

    #[test]
    fn seeds_alternate_and_pad() {
        let peaks = vec![Peak { zeta: -0.5, sign: -1.0, size: 1.0 }];
        let s = seeds(&peaks, 3, 1.0);
        assert_eq!(s[0], vec![-2.0, -0.5, 1.0]);
        assert!(s.iter().all(|z| z.windows(2).all(|w| w[1] > w[0])));
    }
}
