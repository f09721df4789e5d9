//! Positivity-preserving IMEX time stepping and the monitored run loop.
//!
//! One step of length `dt` is split into three stages, each of which maps
//! nonnegative cell values to nonnegative cell values:
//!
//! 1. explicit first-order upwind transport of `c1` along
//!    `v = b_h∇h + b_τ∇τ`, explicit logistic birth `βc1`, and explicit
//!    production `c2/(1+c2)` of both cues;
//! 2. a pointwise linearly implicit reaction solve: the `c1 ⇄ c2` exchange
//!    is solved as a coupled 2×2 system (so it cancels exactly in the total
//!    mass) together with the implicit `c1` losses, while the cue losses are
//!    handled by division by `1 + dt·rate`;
//! 3. backward-Euler diffusion of every species with zero-flux boundaries.
//!
//! Stage 1 needs `dt·(outflow rate) ≤ 1` per cell; the other stages are
//! unconditionally nonnegative.

use crate::discretization::{face_gradient, implicit_diffusion, FaceFluxes, Field, Grid, CG_TOLERANCE};
use crate::error::{Error, Result};
use crate::model::{local_coefficients, ModelParams, Regularization};
use crate::monitors::{ledger_context, Monitor, MonitorConfig, MonitorReport, MonitorState};

/// Relative slack accepted on the advective bound in [`step`].
const BOUND_ROUNDING: f64 = 1e-12;

/// The four species at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub c1: Field,
    pub c2: Field,
    pub h: Field,
    pub tau: Field,
    pub t: f64,
}

impl State {
    pub fn new(c1: Field, c2: Field, h: Field, tau: Field, t: f64) -> Result<Self> {
        let s = Self { c1, c2, h, tau, t };
        s.validate()?;
        Ok(s)
    }

    /// Spatially constant state at `t = 0`. Not validated.
    pub fn uniform(grid: Grid, c1: f64, c2: f64, h: f64, tau: f64) -> Self {
        Self {
            c1: Field::constant(grid, c1),
            c2: Field::constant(grid, c2),
            h: Field::constant(grid, h),
            tau: Field::constant(grid, tau),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.c1.grid()
    }

    pub fn fields(&self) -> [(&'static str, &Field); 4] {
        [("c1", &self.c1), ("c2", &self.c2), ("h", &self.h), ("tau", &self.tau)]
    }

    /// Shared grid, finite nonnegative values, finite `t ≥ 0`.
    pub fn validate(&self) -> Result<()> {
        for (name, f) in self.fields() {
            self.c1.check_same_grid(f)?;
            f.validate_nonnegative(name)?;
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return Err(Error::validation(format!("t = {}", self.t), "time must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Time-step policy of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub dt_max: f64,
    /// Fraction of the stability bound actually used, in `(0, 1]`.
    pub cfl_safety: f64,
    pub t_end: f64,
    /// Floor for quotient integrals in the monitors.
    pub floor: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt_max: 1e-3,
            cfl_safety: 0.9,
            t_end: 1.0,
            floor: crate::monitors::DEFAULT_FLOOR,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::validation(format!("step.dt_max = {}", self.dt_max), "dt_max must be positive"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::validation(
                format!("step.cfl = {}", self.cfl_safety),
                "CFL safety factor must lie in (0, 1]",
            ));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::validation(format!("step.t_end = {}", self.t_end), "t_end must be finite and >= 0"));
        }
        if !(self.floor > 0.0) {
            return Err(Error::validation(format!("step.floor = {}", self.floor), "floor must be positive"));
        }
        Ok(())
    }
}

/// Haptotactic velocity `b_h∇h + b_τ∇τ` on interior faces.
pub fn transport_velocity(p: &ModelParams, s: &State) -> FaceFluxes {
    let mut v = face_gradient(&s.h);
    v.scale(p.b_h);
    v.add_scaled(p.b_tau, &face_gradient(&s.tau));
    v
}

/// Per-cell outflow rate `Σ v_out / h_axis` and upwinded inflow `Σ v_in c / h_axis`.
fn upwind_rates(c: &Field, v: &FaceFluxes) -> (Vec<f64>, Vec<f64>) {
    let grid = c.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let cv = c.values();
    let mut out = vec![0.0; grid.len()];
    let mut inflow = vec![0.0; grid.len()];
    let mut face = |lo: usize, hi: usize, vel: f64, inv_h: f64| {
        if vel > 0.0 {
            out[lo] += vel * inv_h;
            inflow[hi] += vel * cv[lo] * inv_h;
        } else if vel < 0.0 {
            out[hi] -= vel * inv_h;
            inflow[lo] -= vel * cv[hi] * inv_h;
        }
    };
    let ihx = 1.0 / grid.hx();
    for j in 0..ny {
        for i in 0..nx - 1 {
            face(j * nx + i, j * nx + i + 1, v.x[j * (nx - 1) + i], ihx);
        }
    }
    if grid.dim() == 2 {
        let ihy = 1.0 / grid.hy();
        for j in 0..ny - 1 {
            for i in 0..nx {
                face(j * nx + i, (j + 1) * nx + i, v.y[j * nx + i], ihy);
            }
        }
    }
    (out, inflow)
}

/// Largest `dt` for which explicit upwind transport keeps every cell
/// nonnegative: `1 / max_cell Σ v_out / h_axis` (infinite without transport).
pub fn advective_bound(p: &ModelParams, s: &State) -> f64 {
    let v = transport_velocity(p, s);
    let ones = Field::constant(*s.grid(), 1.0);
    let (out, _) = upwind_rates(&ones, &v);
    let m = out.iter().copied().fold(0.0, f64::max);
    if m > 0.0 {
        1.0 / m
    } else {
        f64::INFINITY
    }
}

/// `1 / max_cell(largest per-capita loss rate)` (infinite without losses).
pub fn reaction_bound(p: &ModelParams, reg: &Regularization, s: &State) -> f64 {
    let (c1, c2, h, tau) = (s.c1.values(), s.c2.values(), s.h.values(), s.tau.values());
    let m = (0..c1.len())
        .map(|k| local_coefficients(p, reg, c1[k], c2[k], h[k], tau[k]).max_loss())
        .fold(0.0, f64::max);
    if m > 0.0 {
        1.0 / m
    } else {
        f64::INFINITY
    }
}

/// `cfl_safety · min(dt_max, advective bound, reaction bound)`.
pub fn stable_dt(p: &ModelParams, reg: &Regularization, s: &State, ctl: &StepControl) -> Result<f64> {
    s.validate()?;
    let dt = ctl.cfl_safety * ctl.dt_max.min(advective_bound(p, s)).min(reaction_bound(p, reg, s));
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("stable time step is not positive: {dt}")));
    }
    Ok(dt)
}

fn diffuse(u: &mut Field, coeff: f64) -> Result<()> {
    // Constants are exact solutions; skipping keeps uniform states bit-uniform.
    if coeff > 0.0 && !u.is_uniform() {
        implicit_diffusion(u, coeff, CG_TOLERANCE)?;
    }
    Ok(())
}

/// One IMEX step of length `dt`. Requires `dt` within the advective bound.
pub fn step(p: &ModelParams, reg: &Regularization, s: &State, dt: f64) -> Result<State> {
    s.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    let grid = *s.grid();
    let n = grid.len();
    let v = transport_velocity(p, s);
    let (out, inflow) = upwind_rates(&s.c1, &v);
    let max_out = out.iter().copied().fold(0.0, f64::max);
    if dt * max_out > 1.0 + BOUND_ROUNDING {
        return Err(Error::StepTooLarge { dt, bound: 1.0 / max_out });
    }

    let (c1, c2, h, tau) = (s.c1.values(), s.c2.values(), s.h.values(), s.tau.values());
    let mut n1 = vec![0.0; n];
    let mut n2 = vec![0.0; n];
    let mut nh = vec![0.0; n];
    let mut nt = vec![0.0; n];
    for k in 0..n {
        let lc = local_coefficients(p, reg, c1[k], c2[k], h[k], tau[k]);
        // Clamp only absorbs the rounding slack admitted above.
        let stay = (1.0 - dt * out[k]).max(0.0);
        let b1 = c1[k] * stay + dt * inflow[k] + dt * lc.growth * c1[k];
        let b2 = c2[k];
        let a = dt * lc.differentiation;
        let kk = dt * lc.dedifferentiation;
        let l = dt * lc.c1_loss;
        // (1+a+l)·x1 − kk·x2 = b1,  −a·x1 + (1+kk)·x2 = b2
        let det = 1.0 + kk + a + l + l * kk;
        n1[k] = ((1.0 + kk) * b1 + kk * b2) / det;
        n2[k] = (a * b1 + (1.0 + a + l) * b2) / det;
        nh[k] = (h[k] + dt * lc.production) / (1.0 + dt * lc.h_loss);
        nt[k] = (tau[k] + dt * lc.production) / (1.0 + dt * lc.tau_loss);
    }
    let mut next = State {
        c1: Field::from_values(grid, n1)?,
        c2: Field::from_values(grid, n2)?,
        h: Field::from_values(grid, nh)?,
        tau: Field::from_values(grid, nt)?,
        t: s.t + dt,
    };
    let eps = reg.eps();
    diffuse(&mut next.c1, dt * p.a1)?;
    diffuse(&mut next.c2, dt * p.a2)?;
    diffuse(&mut next.h, dt * eps)?;
    diffuse(&mut next.tau, dt * eps)?;

    for (name, f) in next.fields() {
        f.validate_finite(name)?;
        if let Some(cell) = f.values().iter().position(|&x| x < 0.0) {
            return Err(Error::Negativity {
                field: name,
                cell,
                value: f.values()[cell],
                t: next.t,
            });
        }
    }
    Ok(next)
}

/// Fit a step of at most `dt` into the remaining `gap` to the next stop.
/// Returns the step and whether it lands on the stop. A remainder shorter
/// than one step is split evenly instead of leaving a sliver.
fn cut_step(dt: f64, gap: f64) -> (f64, bool) {
    if dt >= gap {
        (gap, true)
    } else if gap < 2.0 * dt {
        (0.5 * gap, false)
    } else {
        (dt, false)
    }
}

/// Unmonitored integration of `s` up to exactly `t_stop`, cutting steps the
/// same way as [`Simulation`].
pub fn advance(p: &ModelParams, reg: &Regularization, s: &State, ctl: &StepControl, t_stop: f64) -> Result<State> {
    ctl.validate()?;
    let mut cur = s.clone();
    while cur.t < t_stop {
        let dt = stable_dt(p, reg, &cur, ctl)?;
        let (dt, lands) = cut_step(dt, t_stop - cur.t);
        cur = step(p, reg, &cur, dt)?;
        if lands {
            cur.t = t_stop;
        }
    }
    Ok(cur)
}

/// A report whose hard-configured checks failed.
#[derive(Clone, Debug, PartialEq)]
pub struct HardFailure {
    pub t: f64,
    pub checks: Vec<&'static str>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: State,
    pub reports: Vec<MonitorReport>,
    pub hard_failures: Vec<HardFailure>,
}

/// A monitored trajectory that can be advanced in pieces and checkpointed.
///
/// Steps are cut so that every report time and `t_end` is hit exactly, which
/// makes the step sequence a function of the state alone: pausing at a report
/// time and resuming from the saved state and [`MonitorState`] reproduces the
/// uninterrupted run bit for bit.
#[derive(Clone, Debug)]
pub struct Simulation {
    p: ModelParams,
    reg: Regularization,
    ctl: StepControl,
    state: State,
    monitor: Monitor,
    reports: Vec<MonitorReport>,
    hard_failures: Vec<HardFailure>,
    steps: u64,
}

impl Simulation {
    pub fn new(
        p: ModelParams,
        reg: Regularization,
        s0: State,
        ctl: StepControl,
        mcfg: MonitorConfig,
    ) -> Result<Self> {
        Self::check_inputs(&p, &s0, &ctl)?;
        let monitor = Monitor::new(&p, &reg, &s0, mcfg)?;
        Ok(Self::assemble(p, reg, s0, ctl, monitor))
    }

    pub fn resume(
        p: ModelParams,
        reg: Regularization,
        state: State,
        ctl: StepControl,
        mcfg: MonitorConfig,
        mstate: MonitorState,
    ) -> Result<Self> {
        Self::check_inputs(&p, &state, &ctl)?;
        let monitor = Monitor::restore(&p, &reg, &state, mcfg, mstate)?;
        Ok(Self::assemble(p, reg, state, ctl, monitor))
    }

    fn check_inputs(p: &ModelParams, s: &State, ctl: &StepControl) -> Result<()> {
        p.check_admissible()?;
        ctl.validate()?;
        s.validate()
    }

    fn assemble(p: ModelParams, reg: Regularization, state: State, ctl: StepControl, monitor: Monitor) -> Self {
        Self {
            p,
            reg,
            ctl,
            state,
            monitor,
            reports: Vec::new(),
            hard_failures: Vec::new(),
            steps: 0,
        }
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn monitor_state(&self) -> MonitorState {
        self.monitor.state()
    }

    pub fn reports(&self) -> &[MonitorReport] {
        &self.reports
    }

    pub fn hard_failures(&self) -> &[HardFailure] {
        &self.hard_failures
    }

    /// Steps taken by this instance.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn report_pending(&self) -> bool {
        let t_end = self.ctl.t_end;
        let next = self.monitor.next_report_time(t_end);
        next <= t_end && self.state.t >= next
    }

    fn emit_report(&mut self) -> Result<()> {
        let r = self.monitor.report(&self.p, &self.state)?;
        self.reports.push(r);
        let failed = r.flags.hard_failures(&self.monitor.config().hard);
        if !failed.is_empty() {
            let checks = failed.join(",");
            self.hard_failures.push(HardFailure { t: r.t, checks: failed });
            if self.monitor.config().abort_on_hard_failure {
                return Err(Error::MonitorHardFailure { t: r.t, checks });
            }
        }
        Ok(())
    }

    /// Integrate up to `min(t_stop, t_end)`, emitting every report that
    /// falls due on the way (including one at the stop time itself).
    pub fn advance_to(&mut self, t_stop: f64) -> Result<()> {
        let t_stop = t_stop.min(self.ctl.t_end);
        loop {
            if self.report_pending() {
                self.emit_report()?;
            }
            if self.state.t >= t_stop {
                return Ok(());
            }
            let next_report = self.monitor.next_report_time(self.ctl.t_end);
            let stop = if next_report < t_stop { next_report } else { t_stop };
            let dt = stable_dt(&self.p, &self.reg, &self.state, &self.ctl)?;
            let (dt, lands) = cut_step(dt, stop - self.state.t);
            let ledger = ledger_context(&self.p, &self.reg, &self.state);
            let mut next = step(&self.p, &self.reg, &self.state, dt)?;
            if lands {
                next.t = stop;
            }
            self.monitor.observe_step(&self.p, &self.reg, &ledger, &next, dt)?;
            self.state = next;
            self.steps += 1;
        }
    }

    pub fn finish(self) -> RunOutcome {
        RunOutcome {
            state: self.state,
            reports: self.reports,
            hard_failures: self.hard_failures,
        }
    }
}

/// Integrate `s0` to `ctl.t_end` with monitoring. A run that starts at or
/// after `t_end` returns `s0` and no reports.
pub fn run(
    p: &ModelParams,
    reg: &Regularization,
    s0: &State,
    ctl: &StepControl,
    mcfg: &MonitorConfig,
) -> Result<RunOutcome> {
    if ctl.t_end <= s0.t {
        ctl.validate()?;
        s0.validate()?;
        return Ok(RunOutcome {
            state: s0.clone(),
            reports: Vec::new(),
            hard_failures: Vec::new(),
        });
    }
    let mut sim = Simulation::new(*p, *reg, s0.clone(), *ctl, *mcfg)?;
    sim.advance_to(ctl.t_end)?;
    Ok(sim.finish())
}
