use serde::{Deserialize, Serialize};

use super::history::{Death, Snapshot, SolutionHistory, StopReason};
use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::model::Params;
use crate::numeric::{pow_nonneg, signed_power};

/// Why a node left the computed domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeathCause {
    /// `|u|` reached the amplitude ceiling.
    Ceiling,
    /// The node left the forward light cone of an earlier ceiling death.
    Cone,
}

/// Local ODE blow-up time, in cells, below which the Laplacian is taken in
/// the steep-profile form.
pub const STEEP_CELLS: f64 = 128.0;

/// Discrete state `(t, u, ∂_t u)` on the radial grid with the alive mask.
#[derive(Debug, Clone)]
pub struct FieldState {
    params: Params,
    h: f64,
    cfl: f64,
    ceiling: f64,
    t: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    acc: Vec<f64>,
    alive: Vec<bool>,
    deaths: Vec<Option<Death>>,
    kill_time: Vec<f64>,
    kill_source: Vec<Option<usize>>,
    steps: u64,
    steep_amplitude: f64,
}

/// Builds the initial state of a scenario: grid, sampled data, all nodes alive, `t = 0`.
pub fn init_scenario(scenario: &Scenario) -> Result<FieldState> {
    scenario.validate()?;
    let radii = scenario.radii();
    let (u, v) = scenario.initial.sample(&radii, &scenario.params)?;
    FieldState::new(scenario.params, scenario.spacing(), scenario.cfl, scenario.stop.ceiling, u, v)
}

impl FieldState {
    pub fn new(params: Params, h: f64, cfl: f64, ceiling: f64, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let n = u.len();
        if n < 3 || v.len() != n {
            return Err(Error::InvalidScenario(format!(
                "state needs matching u, v with at least 3 nodes, got {} and {}",
                n,
                v.len()
            )));
        }
        if let Some(i) = u.iter().chain(&v).position(|x| !x.is_finite()) {
            return Err(Error::InvalidScenario(format!("initial data is not finite at entry {i}")));
        }
        let mut state = Self {
            params,
            h,
            cfl,
            ceiling,
            t: 0.0,
            acc: vec![0.0; n],
            u,
            v,
            alive: vec![true; n],
            deaths: vec![None; n],
            kill_time: vec![f64::INFINITY; n],
            kill_source: vec![None; n],
            steps: 0,
            steep_amplitude: params.kappa0() * pow_nonneg(STEEP_CELLS * h, -params.rate_exponent()),
        };
        state.refresh_acceleration();
        Ok(state)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn alive(&self) -> &[bool] {
        &self.alive
    }

    pub fn deaths(&self) -> &[Option<Death>] {
        &self.deaths
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn any_alive(&self) -> bool {
        self.alive.iter().any(|&a| a)
    }

    /// Largest `|u|` over live nodes.
    pub fn max_amplitude(&self) -> f64 {
        self.u.iter().zip(&self.alive).filter(|(_, &a)| a).fold(0.0, |m, (x, _)| m.max(x.abs()))
    }

    fn radius(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    #[inline]
    fn read(&self, u: &[f64], j: usize) -> f64 {
        debug_assert!(self.alive[j], "stencil read dead node {j}");
        u[j]
    }

    /// Right-hand side `u_rr + (N-1)/r u_r + |u|^{p-1}u` at a live node.
    ///
    /// The axis uses the even extension and the limit `(N-1) u_rr` of the
    /// radial term; the outer end is a mirror. A dead neighbour is replaced
    /// by the linear extrapolation `2u_i - u_other`.
    ///
    /// Near blow-up, when the local ODE time `(κ₀/|u|)^{(p-1)/2}` falls below
    /// [`STEEP_CELLS`] cells and the stencil has one sign, derivatives are taken
    /// on `z = |u|^{-(p-1)/2}`. It stays smooth (linear in `r` for boosted ODE
    /// profiles) long after `u` itself is no longer resolved by the grid.
    fn rhs(&self, u: &[f64], i: usize) -> f64 {
        let n = u.len();
        let h2 = self.h * self.h;
        let dim = f64::from(self.params.n());
        let ui = u[i];
        let reaction = signed_power(ui, self.params.p());
        if i == 0 {
            let lap = if self.alive[1] { 2.0 * dim * (self.read(u, 1) - ui) / h2 } else { 0.0 };
            return lap + reaction;
        }
        let um = self.alive[i - 1].then(|| self.read(u, i - 1));
        let up = if i + 1 == n { um } else { self.alive[i + 1].then(|| self.read(u, i + 1)) };
        if ui.abs() > self.steep_amplitude {
            if let Some(lap) = self.steep_laplacian(i, ui, um, up) {
                return lap + reaction;
            }
        }
        let (um, up) = match (um, up) {
            (Some(m), Some(p)) => (m, p),
            (Some(m), None) => (m, 2.0 * ui - m),
            (None, Some(p)) => (2.0 * ui - p, p),
            (None, None) => (ui, ui),
        };
        (up - 2.0 * ui + um) / h2 + (dim - 1.0) / self.radius(i) * (up - um) / (2.0 * self.h) + reaction
    }

    /// Laplacian through `z = |u|^{-1/a}`, `a = 2/(p-1)`, with dead neighbours
    /// extrapolated linearly in `z`. `None` when a live neighbour has the
    /// opposite sign or is itself below the steep amplitude (`z` is singular
    /// at a zero of `u`), or when both neighbours are dead.
    fn steep_laplacian(&self, i: usize, ui: f64, um: Option<f64>, up: Option<f64>) -> Option<f64> {
        let a = self.params.rate_exponent();
        let z = |x: f64| pow_nonneg(x.abs(), -1.0 / a);
        let side = |x: Option<f64>| match x {
            Some(x) if x * ui > 0.0 && x.abs() > self.steep_amplitude => Ok(Some(z(x))),
            Some(_) => Err(()),
            None => Ok(None),
        };
        let zi = z(ui);
        let (zm, zp) = match (side(um).ok()?, side(up).ok()?) {
            (Some(m), Some(p)) => (m, p),
            (Some(m), None) => (m, 2.0 * zi - m),
            (None, Some(p)) => (2.0 * zi - p, p),
            (None, None) => return None,
        };
        let h = self.h;
        let dz = (zp - zm) / (2.0 * h);
        let d2z = (zp - 2.0 * zi + zm) / (h * h);
        // u = ±z^{-a}: u_r = ∓a z^{-a-1} z_r, u_rr = ±a z^{-a-1} ((a+1) z_r²/z - z_rr)
        let g = ui.signum() * a * pow_nonneg(zi, -a - 1.0);
        let ur = -g * dz;
        let urr = g * ((a + 1.0) * dz * dz / zi - d2z);
        Some(urr + (f64::from(self.params.n()) - 1.0) / self.radius(i) * ur)
    }

    fn refresh_acceleration(&mut self) {
        let mut acc = std::mem::take(&mut self.acc);
        for (i, a) in acc.iter_mut().enumerate() {
            *a = if self.alive[i] { self.rhs(&self.u, i) } else { 0.0 };
        }
        self.acc = acc;
    }

    /// `∂_r u` at a live node, with the same boundary and ghost rules as the stencil.
    pub fn radial_derivative(&self, i: usize) -> f64 {
        let n = self.u.len();
        if !self.alive[i] || i == 0 || i + 1 == n {
            return if self.alive[i] { 0.0 } else { f64::NAN };
        }
        let (left, right) = (self.alive[i - 1], self.alive[i + 1]);
        match (left, right) {
            (true, true) => (self.u[i + 1] - self.u[i - 1]) / (2.0 * self.h),
            (true, false) => (self.u[i] - self.u[i - 1]) / self.h,
            (false, true) => (self.u[i + 1] - self.u[i]) / self.h,
            (false, false) => 0.0,
        }
    }

    /// Advances live nodes by `dt` with a kick–drift–kick leapfrog, then
    /// applies the ceiling and light-cone death rules. Returns nodes that died.
    pub fn step(&mut self, dt: f64) -> Result<Vec<usize>> {
        let ratio = dt / self.h;
        if !(dt > 0.0) || ratio > self.cfl * (1.0 + 1e-12) {
            return Err(Error::Cfl { ratio, limit: self.cfl });
        }
        let n = self.u.len();
        for i in 0..n {
            if self.alive[i] {
                self.v[i] += 0.5 * dt * self.acc[i];
                self.u[i] += dt * self.v[i];
            }
        }
        self.refresh_acceleration();
        for i in 0..n {
            if self.alive[i] {
                self.v[i] += 0.5 * dt * self.acc[i];
            }
        }
        self.t += dt;
        self.steps += 1;

        for i in 0..n {
            if self.alive[i] && !(self.u[i].is_finite() && self.v[i].is_finite()) {
                return Err(Error::NonFinite { node: i, r: self.radius(i), t: self.t });
            }
        }

        let mut died = Vec::new();
        for i in 0..n {
            if self.alive[i] && self.u[i].abs() >= self.ceiling {
                self.alive[i] = false;
                self.deaths[i] = Some(Death { time: self.t, cause: DeathCause::Ceiling, source: None });
                died.push(i);
            }
        }
        for &j in &died {
            let rj = self.radius(j);
            for i in 0..n {
                let cand = self.t + (self.radius(i) - rj).abs();
                if cand < self.kill_time[i] {
                    self.kill_time[i] = cand;
                    self.kill_source[i] = Some(j);
                }
            }
        }
        let tol = 1e-12 * (1.0 + self.t.abs());
        for i in 0..n {
            if self.alive[i] && self.t >= self.kill_time[i] - tol {
                self.alive[i] = false;
                self.deaths[i] = Some(Death { time: self.t, cause: DeathCause::Cone, source: self.kill_source[i] });
                died.push(i);
            }
        }
        if !died.is_empty() {
            self.refresh_acceleration();
        }
        Ok(died)
    }

    pub(crate) fn snapshot(&self) -> Snapshot {
        let n = self.u.len();
        let mut u = vec![f64::NAN; n];
        let mut v = vec![f64::NAN; n];
        let mut ur = vec![f64::NAN; n];
        for i in 0..n {
            if self.alive[i] {
                u[i] = self.u[i];
                v[i] = self.v[i];
                ur[i] = self.radial_derivative(i);
            }
        }
        Snapshot { t: self.t, u, v, ur }
    }
}

/// Integrates until every node is dead or a stop rule fires, recording
/// snapshots at the adaptive cadence and dense amplitude traces near blow-up.
pub fn run(mut state: FieldState, scenario: &Scenario) -> Result<SolutionHistory> {
    let h = state.h;
    let p = state.params.p();
    let k0 = state.params.kappa0();
    let stop = scenario.stop;
    let rule = scenario.snapshots;
    let trace_level = stop.trace_fraction * stop.ceiling;
    let n = state.len();

    let cadence = |amplitude: f64| -> f64 {
        let tau = if amplitude > 0.0 { pow_nonneg(k0 / amplitude, 0.5 * (p - 1.0)) } else { f64::INFINITY };
        rule.base_interval.min(tau / rule.divisions).max(rule.floor_cells * h)
    };

    let mut snapshots = vec![state.snapshot()];
    let mut traces: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    let mut next_snapshot = state.t + cadence(state.max_amplitude());
    let reason;

    loop {
        if !state.any_alive() {
            reason = StopReason::AllDead;
            break;
        }
        if state.t >= stop.max_time * (1.0 - 1e-14) {
            reason = StopReason::MaxTime;
            break;
        }
        if state.steps >= stop.max_steps {
            reason = StopReason::MaxSteps;
            break;
        }
        let amplitude = state.max_amplitude();
        let mut dt = scenario.cfl * h;
        if let Some(fixed) = scenario.dt {
            dt = dt.min(fixed);
        }
        if let (Some(alpha), true) = (scenario.amplitude_step, amplitude > 0.0) {
            dt = dt.min(alpha * pow_nonneg(amplitude, -0.5 * (p - 1.0)));
        }
        let target = next_snapshot.min(stop.max_time);
        if state.t + dt > target && target - state.t > 1e-15 * (1.0 + state.t) {
            dt = target - state.t;
        }
        let died = state.step(dt)?;

        for (i, trace) in traces.iter_mut().enumerate() {
            if state.alive[i] && (!trace.is_empty() || state.u[i].abs() > trace_level) {
                trace.push((state.t, state.u[i]));
            }
        }
        for &i in &died {
            if matches!(state.deaths[i], Some(Death { cause: DeathCause::Ceiling, .. })) {
                traces[i].push((state.t, state.u[i]));
            }
        }

        if state.t >= next_snapshot * (1.0 - 1e-14) || !state.any_alive() {
            snapshots.push(state.snapshot());
            next_snapshot = state.t + cadence(state.max_amplitude());
        }
    }
    if snapshots.last().is_none_or(|s| s.t < state.t) {
        snapshots.push(state.snapshot());
    }

    SolutionHistory::new(state.params, h, snapshots, traces, state.deaths.clone(), reason)
}

#[cfg(test)]
mod tests {
    use super::*;

    // u = c (T0 + d r - t)^{-a} with c^{p-1} = a(a+1)(1-d²) solves the 1-D equation.
    fn boosted(params: &Params, d: f64, t0: f64, r: f64, t: f64) -> (f64, f64) {
        let a = params.rate_exponent();
        let c = params.kappa0() * (1.0 - d * d).powf(a / 2.0);
        let x = t0 + d * r - t;
        (c * x.powf(-a), a * (a + 1.0) * c * x.powf(-a - 2.0))
    }

    #[test]
    fn steep_laplacian_is_exact_on_boosted_profiles() {
        let params = Params::new(3.0, 1).unwrap();
        let (h, d, t0, t) = (0.01, 0.9, 0.5, 0.49);
        let n = 101;
        let u: Vec<f64> = (0..n).map(|i| boosted(&params, d, t0, i as f64 * h, t).0).collect();
        let state = FieldState::new(params, h, 0.5, 1e300, u.clone(), vec![0.0; n]).unwrap();
        for i in 1..8 {
            let (_, utt) = boosted(&params, d, t0, i as f64 * h, t);
            assert!(u[i].abs() > state.steep_amplitude);
            let got = state.rhs(&u, i);
            assert!((got / utt - 1.0).abs() < 1e-9, "node {i}: {got} vs {utt}");
        }
    }

    #[test]
    fn steep_form_falls_back_across_sign_changes() {
        let params = Params::new(3.0, 3).unwrap();
        let h = 0.01;
        let u = vec![500.0, 400.0, -300.0, -200.0, -100.0];
        let state = FieldState::new(params, h, 0.5, 1e300, u.clone(), vec![0.0; 5]).unwrap();
        let standard = (u[2] - 2.0 * u[1] + u[0]) / (h * h) + 2.0 / h * (u[2] - u[0]) / (2.0 * h) + u[1].powi(3);
        assert!((state.rhs(&u, 1) / standard - 1.0).abs() < 1e-12);
    }
}
