use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stepper::DeathCause;
use crate::error::{Error, Result};
use crate::model::Params;

/// Death record of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Death {
    pub time: f64,
    pub cause: DeathCause,
    /// For cone deaths, the ceiling death whose light cone removed the node.
    pub source: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    AllDead,
    MaxTime,
    MaxSteps,
    /// Synthetic history, not produced by the solver.
    Synthetic,
}

/// Fields on the whole grid at one time; dead nodes hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub ur: Vec<f64>,
}

/// Output format of [`SolutionHistory::dump_snapshots`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotFormat {
    /// `t,r,u,v,ur` rows, one per live node and snapshot, after a `#` header.
    Csv,
    /// Little-endian: magic `BLWS`, `u32` version 1, `u64` node count,
    /// `u64` snapshot count, node radii as `f64`, then per snapshot `t`
    /// followed by `u`, `v`, `ur` arrays of `f64` (`NaN` on dead nodes).
    Binary,
}

/// Immutable space-time record of a simulation.
#[derive(Debug, Clone)]
pub struct SolutionHistory {
    params: Params,
    h: f64,
    radii: Vec<f64>,
    snapshots: Vec<Snapshot>,
    traces: Vec<Vec<(f64, f64)>>,
    deaths: Vec<Option<Death>>,
    stop: StopReason,
}

impl SolutionHistory {
    pub fn new(
        params: Params,
        h: f64,
        snapshots: Vec<Snapshot>,
        traces: Vec<Vec<(f64, f64)>>,
        deaths: Vec<Option<Death>>,
        stop: StopReason,
    ) -> Result<Self> {
        let n = deaths.len();
        if snapshots.is_empty() {
            return Err(Error::InsufficientData("history without snapshots".into()));
        }
        if traces.len() != n {
            return Err(Error::GridMismatch(format!("{} traces for {n} nodes", traces.len())));
        }
        for s in &snapshots {
            if s.u.len() != n || s.v.len() != n || s.ur.len() != n {
                return Err(Error::GridMismatch(format!("snapshot at t = {} has wrong length", s.t)));
            }
        }
        if snapshots.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Domain("snapshot times must be strictly increasing".into()));
        }
        let radii = (0..n).map(|i| i as f64 * h).collect();
        Ok(Self { params, h, radii, snapshots, traces, deaths, stop })
    }

    /// History sampled from a closed-form field `f(r, t) -> (u, ∂_t u, ∂_r u)`.
    ///
    /// `blowup_time(r)` gives, when known, the time after which the node is
    /// treated as dead.
    pub fn from_fn<F, G>(params: Params, h: f64, nodes: usize, times: &[f64], f: F, blowup_time: G) -> Result<Self>
    where
        F: Fn(f64, f64) -> (f64, f64, f64),
        G: Fn(f64) -> Option<f64>,
    {
        let radii: Vec<f64> = (0..nodes).map(|i| i as f64 * h).collect();
        let tb: Vec<Option<f64>> = radii.iter().map(|&r| blowup_time(r)).collect();
        let snapshots = times
            .iter()
            .map(|&t| {
                let mut s =
                    Snapshot { t, u: vec![f64::NAN; nodes], v: vec![f64::NAN; nodes], ur: vec![f64::NAN; nodes] };
                for (i, &r) in radii.iter().enumerate() {
                    if tb[i].is_none_or(|tb| t < tb) {
                        let (u, v, ur) = f(r, t);
                        s.u[i] = u;
                        s.v[i] = v;
                        s.ur[i] = ur;
                    }
                }
                s
            })
            .collect();
        let deaths =
            tb.iter().map(|tb| tb.map(|time| Death { time, cause: DeathCause::Ceiling, source: None })).collect();
        Self::new(params, h, snapshots, vec![Vec::new(); nodes], deaths, StopReason::Synthetic)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn r_max(&self) -> f64 {
        self.radii[self.radii.len() - 1]
    }

    pub fn nodes(&self) -> usize {
        self.radii.len()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// Dense `(t, u)` samples recorded once `|u|` approached the ceiling.
    pub fn trace(&self, node: usize) -> &[(f64, f64)] {
        &self.traces[node]
    }

    pub fn deaths(&self) -> &[Option<Death>] {
        &self.deaths
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop
    }

    pub fn start_time(&self) -> f64 {
        self.snapshots[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.snapshots[self.snapshots.len() - 1].t
    }

    pub fn any_death(&self) -> bool {
        self.deaths.iter().any(Option::is_some)
    }

    /// Amplitude samples `(t, u)` at a node: snapshot values, then dense
    /// trace values after the last snapshot time, in time order.
    pub fn node_series(&self, node: usize) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> =
            self.snapshots.iter().filter(|s| s.u[node].is_finite()).map(|s| (s.t, s.u[node])).collect();
        for &(t, u) in &self.traces[node] {
            if out.last().is_none_or(|&(tl, _)| t > tl) {
                out.push((t, u));
            } else if let Err(pos) = out.binary_search_by(|probe| probe.0.total_cmp(&t)) {
                out.insert(pos, (t, u));
            }
        }
        out
    }

    /// Bilinear interpolation of `(u, ∂_t u, ∂_r u)` at `(r, t)`.
    pub fn sample(&self, r: f64, t: f64) -> Result<(f64, f64, f64)> {
        let n = self.radii.len();
        if !(r >= 0.0 && r <= self.r_max() * (1.0 + 1e-14)) {
            return Err(Error::OutOfRange(format!("r = {r} outside [0, {}]", self.r_max())));
        }
        if !(t >= self.start_time() && t <= self.end_time()) {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside recorded [{}, {}]",
                self.start_time(),
                self.end_time()
            )));
        }
        let x = (r / self.h).min((n - 1) as f64);
        let i = (x.floor() as usize).min(n - 2);
        let a = x - i as f64;
        let k = self.snapshots.partition_point(|s| s.t <= t).clamp(1, self.snapshots.len().max(2) - 1);
        let (s0, s1) = if self.snapshots.len() == 1 {
            (&self.snapshots[0], &self.snapshots[0])
        } else {
            (&self.snapshots[k - 1], &self.snapshots[k])
        };
        let b = if s1.t > s0.t { ((t - s0.t) / (s1.t - s0.t)).clamp(0.0, 1.0) } else { 0.0 };
        let mut out = [0.0; 3];
        for (c, field) in [(&s0.u, &s1.u), (&s0.v, &s1.v), (&s0.ur, &s1.ur)].into_iter().enumerate() {
            let corners = [field.0[i], field.0[i + 1], field.1[i], field.1[i + 1]];
            let weights = [(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b];
            let mut acc = 0.0;
            for (v, wgt) in corners.iter().zip(weights) {
                if wgt == 0.0 {
                    continue;
                }
                if !v.is_finite() {
                    return Err(Error::OutOfRange(format!("(r, t) = ({r}, {t}) touches a dead node")));
                }
                acc += wgt * v;
            }
            out[c] = acc;
        }
        Ok((out[0], out[1], out[2]))
    }

    /// Writes every snapshot to `out` in the requested format.
    pub fn dump_snapshots<W: Write>(&self, out: &mut W, format: SnapshotFormat) -> Result<()> {
        match format {
            SnapshotFormat::Csv => {
                writeln!(out, "# snapshot table: one row per live node and snapshot")?;
                writeln!(out, "t,r,u,v,ur")?;
                for s in &self.snapshots {
                    for (i, &r) in self.radii.iter().enumerate() {
                        if s.u[i].is_finite() {
                            writeln!(out, "{:e},{:e},{:e},{:e},{:e}", s.t, r, s.u[i], s.v[i], s.ur[i])?;
                        }
                    }
                }
            }
            SnapshotFormat::Binary => {
                out.write_all(b"BLWS")?;
                out.write_all(&1u32.to_le_bytes())?;
                out.write_all(&(self.radii.len() as u64).to_le_bytes())?;
                out.write_all(&(self.snapshots.len() as u64).to_le_bytes())?;
                for r in &self.radii {
                    out.write_all(&r.to_le_bytes())?;
                }
                for s in &self.snapshots {
                    out.write_all(&s.t.to_le_bytes())?;
                    for field in [&s.u, &s.v, &s.ur] {
                        for x in field {
                            out.write_all(&x.to_le_bytes())?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
