//! Runtime evaluation of the a priori quantities along a trajectory.
//!
//! Per report the monitor records masses, sup norms against their barriers,
//! the entropy functional, the dissipation rate and its running time
//! integral, cue gradient integrals, the running `∫∫c2²`, and the worst
//! per-step mass-ledger residual since the previous report. Each quantity is
//! graded into a flag; [`MonitorConfig::hard`] selects which flags count as
//! hard failures.

use crate::discretization::{
    integrate, integrate_grad_sq, integrate_grad_sq_over, integrate_map,
    integrate_weighted_grad_sq_over, Field,
};
use crate::error::{Error, Result};
use crate::model::{pow_int, ModelParams, Regularization};
use crate::stepper::State;

/// Relative slack on the sup barriers and the exponential mass bound.
pub const BOUND_SLACK: f64 = 1e-6;

/// Default floor for the quotient integrals.
pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardChecks {
    pub barriers: bool,
    pub gronwall: bool,
    pub entropy: bool,
    pub dissipation: bool,
    pub c2_sq: bool,
    pub gradient: bool,
    pub ledger: bool,
}

impl Default for HardChecks {
    fn default() -> Self {
        Self {
            barriers: true,
            gronwall: true,
            entropy: true,
            dissipation: true,
            c2_sq: true,
            gradient: true,
            ledger: false,
        }
    }
}

impl HardChecks {
    pub fn none() -> Self {
        Self {
            barriers: false,
            gronwall: false,
            entropy: false,
            dissipation: false,
            c2_sq: false,
            gradient: false,
            ledger: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorConfig {
    /// Report interval in model time units.
    pub cadence: f64,
    pub hard: HardChecks,
    /// Floor for face-averaged denominators in quotient integrals.
    pub floor: f64,
    /// `C` in the per-step ledger grade `|residual| ≤ C·dt²·mass`.
    pub ledger_tolerance_factor: f64,
    /// Stop the run with an error at the first hard failure.
    pub abort_on_hard_failure: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            cadence: 0.01,
            hard: HardChecks::default(),
            floor: DEFAULT_FLOOR,
            ledger_tolerance_factor: 100.0,
            abort_on_hard_failure: false,
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cadence > 0.0 && self.cadence.is_finite()) {
            return Err(Error::validation(
                format!("monitor.cadence = {}", self.cadence),
                "report cadence must be positive",
            ));
        }
        if !(self.floor > 0.0) {
            return Err(Error::validation(
                format!("monitor.floor = {}", self.floor),
                "quotient floor must be positive",
            ));
        }
        if !(self.ledger_tolerance_factor > 0.0) {
            return Err(Error::validation(
                format!("monitor.ledger_factor = {}", self.ledger_tolerance_factor),
                "ledger tolerance factor must be positive",
            ));
        }
        Ok(())
    }
}

/// Pass/fail per check at one report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckFlags {
    pub barrier_h: bool,
    pub barrier_tau: bool,
    pub gronwall: bool,
    pub entropy_finite: bool,
    pub dissipation_monotone: bool,
    pub c2_sq_monotone: bool,
    pub gradient_h: bool,
    pub gradient_tau: bool,
    pub ledger: bool,
}

impl CheckFlags {
    pub const NAMES: [&'static str; 9] = [
        "barrier_h",
        "barrier_tau",
        "gronwall",
        "entropy_finite",
        "dissipation_monotone",
        "c2_sq_monotone",
        "gradient_h",
        "gradient_tau",
        "ledger",
    ];

    pub fn as_array(&self) -> [bool; 9] {
        [
            self.barrier_h,
            self.barrier_tau,
            self.gronwall,
            self.entropy_finite,
            self.dissipation_monotone,
            self.c2_sq_monotone,
            self.gradient_h,
            self.gradient_tau,
            self.ledger,
        ]
    }

    pub fn from_array(a: [bool; 9]) -> Self {
        Self {
            barrier_h: a[0],
            barrier_tau: a[1],
            gronwall: a[2],
            entropy_finite: a[3],
            dissipation_monotone: a[4],
            c2_sq_monotone: a[5],
            gradient_h: a[6],
            gradient_tau: a[7],
            ledger: a[8],
        }
    }

    pub fn all_pass(&self) -> bool {
        self.as_array().iter().all(|&f| f)
    }

    /// Names of failed checks that are configured as hard.
    pub fn hard_failures(&self, hard: &HardChecks) -> Vec<&'static str> {
        let gate = [
            hard.barriers,
            hard.barriers,
            hard.gronwall,
            hard.entropy,
            hard.dissipation,
            hard.c2_sq,
            hard.gradient,
            hard.gradient,
            hard.ledger,
        ];
        Self::NAMES
            .iter()
            .zip(self.as_array())
            .zip(gate)
            .filter(|((_, ok), g)| *g && !*ok)
            .map(|((n, _), _)| *n)
            .collect()
    }
}

/// Snapshot of every monitored quantity at one report time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorReport {
    pub t: f64,
    pub mass_c1: f64,
    pub mass_c2: f64,
    pub max_h: f64,
    pub max_tau: f64,
    pub m_h: f64,
    pub m_tau: f64,
    pub entropy_f: f64,
    pub dissipation_d: f64,
    pub dissipation_integral: f64,
    pub grad_h_sq: f64,
    pub grad_tau_sq: f64,
    pub c2_sq_integral: f64,
    /// Largest-magnitude per-step ledger residual since the previous report.
    pub ledger_residual: f64,
    pub floor_engaged: bool,
    pub flags: CheckFlags,
}

#[inline]
fn entropy_density(s: f64) -> f64 {
    let sls = if s > 0.0 { s * s.ln() } else { 0.0 };
    sls + std::f64::consts::E.recip()
}

/// `a/b`, with `0/0` read as 0 so switched-off couplings drop out.
#[inline]
fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Weight of the `c2` entropy relative to the `c1` entropy.
pub fn xi(p: &ModelParams, m_h: f64) -> f64 {
    ratio(2.0, p.a2) * ((4.0 * p.gamma2 * m_h + 1.0) * ratio(p.b_h, p.gamma1) + ratio(p.b_tau, p.delta) + 1.0)
}

/// The individual contributions to the entropy functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyParts {
    pub xi: f64,
    /// `∫(c1 ln c1 + 1/e)`
    pub c1_entropy: f64,
    /// `∫(c2 ln c2 + 1/e)`
    pub c2_entropy: f64,
    /// `∫|∇h|²/h`
    pub h_quotient: f64,
    /// `∫|∇τ|²/τ`
    pub tau_quotient: f64,
    pub floor_engaged: bool,
}

impl EntropyParts {
    pub fn total(&self, p: &ModelParams) -> f64 {
        self.c1_entropy
            + self.xi * self.c2_entropy
            + ratio(p.b_h, 2.0 * p.gamma1) * self.h_quotient
            + ratio(p.b_tau, 2.0 * p.delta) * self.tau_quotient
    }
}

pub fn entropy_parts(p: &ModelParams, s: &State, m_h: f64, floor: f64) -> Result<EntropyParts> {
    s.validate()?;
    let qh = integrate_grad_sq_over(&s.h, floor)?;
    let qt = integrate_grad_sq_over(&s.tau, floor)?;
    Ok(EntropyParts {
        xi: xi(p, m_h),
        c1_entropy: integrate_map(&s.c1, entropy_density),
        c2_entropy: integrate_map(&s.c2, entropy_density),
        h_quotient: qh.value,
        tau_quotient: qt.value,
        floor_engaged: qh.floor_engaged || qt.floor_engaged,
    })
}

/// `∫(c1 ln c1 + 1/e) + ξ∫(c2 ln c2 + 1/e) + b_h/(2γ₁)∫|∇h|²/h + b_τ/(2δ)∫|∇τ|²/τ`
/// with `ξ = (2/a₂)((4γ₂M_h + 1)b_h/γ₁ + b_τ/δ + 1)`.
pub fn entropy_functional(p: &ModelParams, s: &State, m_h: f64, floor: f64) -> Result<f64> {
    Ok(entropy_parts(p, s, m_h, floor)?.total(p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissipationParts {
    pub value: f64,
    pub floor_engaged: bool,
}

/// `(a₁/4)∫|∇c1|²/c1 + ½∫|∇c2|²/c2 + (ε/2)∫c1^θ ln(2+c1) + (β/2)∫c1² ln(2+c1)
///  + (b_h/2)∫(|∇h|²/h)c1 + (b_τ/2)∫(|∇τ|²/τ)c1`
pub fn dissipation_parts(
    p: &ModelParams,
    reg: &Regularization,
    s: &State,
    floor: f64,
) -> Result<DissipationParts> {
    s.validate()?;
    let q1 = integrate_grad_sq_over(&s.c1, floor)?;
    let q2 = integrate_grad_sq_over(&s.c2, floor)?;
    let wh = integrate_weighted_grad_sq_over(&s.h, &s.c1, floor)?;
    let wt = integrate_weighted_grad_sq_over(&s.tau, &s.c1, floor)?;
    let eps = reg.eps();
    let theta = reg.theta();
    let damping = if eps > 0.0 {
        integrate_map(&s.c1, |c| pow_int(c, theta) * (2.0 + c).ln())
    } else {
        0.0
    };
    let logistic = integrate_map(&s.c1, |c| c * c * (2.0 + c).ln());
    let value = 0.25 * p.a1 * q1.value
        + 0.5 * q2.value
        + 0.5 * eps * damping
        + 0.5 * p.beta * logistic
        + 0.5 * p.b_h * wh.value
        + 0.5 * p.b_tau * wt.value;
    Ok(DissipationParts {
        value,
        floor_engaged: q1.floor_engaged || q2.floor_engaged || wh.floor_engaged || wt.floor_engaged,
    })
}

pub fn dissipation_rate(p: &ModelParams, reg: &Regularization, s: &State, floor: f64) -> Result<f64> {
    Ok(dissipation_parts(p, reg, s, floor)?.value)
}

/// Sup-norm barriers for the two cues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barriers {
    pub m_h: f64,
    pub m_tau: f64,
}

impl Barriers {
    /// `M_h = 1/μ + max h₀`, `M_τ = 1/σ + max τ₀`, using 1 as the bound of
    /// the production `c2/(1+c2)`.
    pub fn from_initial(p: &ModelParams, s0: &State) -> Self {
        Self {
            m_h: 1.0 / p.mu + s0.h.max(),
            m_tau: 1.0 / p.sigma + s0.tau.max(),
        }
    }
}

/// `(max h ≤ M_h, max τ ≤ M_τ)` with relative slack [`BOUND_SLACK`].
pub fn barrier_check(s: &State, m_h: f64, m_tau: f64) -> (bool, bool) {
    (
        s.h.max() <= m_h * (1.0 + BOUND_SLACK),
        s.tau.max() <= m_tau * (1.0 + BOUND_SLACK),
    )
}

/// `∫|∇h|² ≤ M_h ∫|∇h|²/h` and the same for τ, with relative slack.
pub fn gradient_l2_check(
    grad_h_sq: f64,
    grad_tau_sq: f64,
    h_quotient: f64,
    tau_quotient: f64,
    m_h: f64,
    m_tau: f64,
) -> (bool, bool) {
    let ok = |lhs: f64, q: f64, m: f64| lhs.is_finite() && lhs <= m * q * (1.0 + BOUND_SLACK) + 1e-300;
    (ok(grad_h_sq, h_quotient, m_h), ok(grad_tau_sq, tau_quotient, m_tau))
}

/// Pre-step quantities of the total stem-cell + chondrocyte mass balance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerContext {
    pub mass: f64,
    /// `β∫c1(1−c2−τ) − β∫c1² − ε∫c1^θ`
    pub rate: f64,
}

pub fn ledger_context(p: &ModelParams, reg: &Regularization, pre: &State) -> LedgerContext {
    let grid = *pre.grid();
    let (c1, c2, tau) = (pre.c1.values(), pre.c2.values(), pre.tau.values());
    let growth: Vec<f64> = (0..grid.len()).map(|k| c1[k] * (1.0 - c2[k] - tau[k])).collect();
    let growth = Field::from_values(grid, growth).expect("grid length");
    let eps = reg.eps();
    let damping = if eps > 0.0 {
        eps * integrate_map(&pre.c1, |c| pow_int(c, reg.theta()))
    } else {
        0.0
    };
    LedgerContext {
        mass: integrate(&pre.c1) + integrate(&pre.c2),
        rate: p.beta * integrate(&growth) - p.beta * integrate_map(&pre.c1, |c| c * c) - damping,
    }
}

/// `Δ(∫c1 + ∫c2) − dt·rate(pre)` over one step.
pub fn ledger_check(prev: &LedgerContext, cur: &State, dt: f64) -> f64 {
    let mass = integrate(&cur.c1) + integrate(&cur.c2);
    (mass - prev.mass) - dt * prev.rate
}

/// Restartable part of a [`Monitor`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorState {
    pub barriers: Barriers,
    pub initial_mass: f64,
    pub next_report: u64,
    pub dissipation_integral: f64,
    pub c2_sq_integral: f64,
    pub last_reported_dissipation: f64,
    pub last_reported_c2_sq: f64,
    pub ledger_worst: f64,
    pub ledger_ok: bool,
    pub floor_engaged: bool,
}

/// Accumulates running integrals between reports and grades each report.
#[derive(Clone, Debug)]
pub struct Monitor {
    cfg: MonitorConfig,
    st: MonitorState,
    // Integrands at the current state, cached for the trapezoid rule.
    cur_d: f64,
    cur_c2_sq: f64,
}

/// Smallest `i` with `i·cadence ≥ t` up to rounding.
fn first_report_index(t: f64, cadence: f64) -> u64 {
    let q = t / cadence;
    let r = q.round();
    if (q - r).abs() <= 1e-9 {
        r as u64
    } else {
        q.ceil() as u64
    }
}

fn c2_sq(s: &State) -> f64 {
    integrate_map(&s.c2, |c| c * c)
}

impl Monitor {
    pub fn new(p: &ModelParams, reg: &Regularization, s0: &State, cfg: MonitorConfig) -> Result<Self> {
        cfg.validate()?;
        let st = MonitorState {
            barriers: Barriers::from_initial(p, s0),
            initial_mass: integrate(&s0.c1) + integrate(&s0.c2),
            next_report: first_report_index(s0.t, cfg.cadence),
            dissipation_integral: 0.0,
            c2_sq_integral: 0.0,
            last_reported_dissipation: 0.0,
            last_reported_c2_sq: 0.0,
            ledger_worst: 0.0,
            ledger_ok: true,
            floor_engaged: false,
        };
        let mut m = Self::restore(p, reg, s0, cfg, st)?;
        m.st.floor_engaged = dissipation_parts(p, reg, s0, cfg.floor)?.floor_engaged;
        Ok(m)
    }

    /// Rebuild a monitor from saved state; cached integrands are recomputed
    /// from `s`.
    pub fn restore(
        p: &ModelParams,
        reg: &Regularization,
        s: &State,
        cfg: MonitorConfig,
        st: MonitorState,
    ) -> Result<Self> {
        cfg.validate()?;
        let d = dissipation_parts(p, reg, s, cfg.floor)?;
        Ok(Self {
            cfg,
            st,
            cur_d: d.value,
            cur_c2_sq: c2_sq(s),
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.cfg
    }

    pub fn state(&self) -> MonitorState {
        self.st
    }

    pub fn barriers(&self) -> Barriers {
        self.st.barriers
    }

    fn time_of(&self, index: u64, t_limit: f64) -> f64 {
        let t = index as f64 * self.cfg.cadence;
        if (t - t_limit).abs() <= 1e-12 * t_limit.abs().max(1.0) {
            t_limit
        } else {
            t
        }
    }

    /// Time of the next report, snapped onto `t_limit` when within rounding.
    pub fn next_report_time(&self, t_limit: f64) -> f64 {
        self.time_of(self.st.next_report, t_limit)
    }

    pub fn report_due(&self, t: f64, t_limit: f64) -> bool {
        t >= self.next_report_time(t_limit)
    }

    /// Account for one step `pre → post` of length `dt`.
    pub fn observe_step(
        &mut self,
        p: &ModelParams,
        reg: &Regularization,
        ledger: &LedgerContext,
        post: &State,
        dt: f64,
    ) -> Result<()> {
        let residual = ledger_check(ledger, post, dt);
        if residual.abs() > self.st.ledger_worst.abs() || residual.is_nan() {
            self.st.ledger_worst = residual;
        }
        let allowed = self.cfg.ledger_tolerance_factor * dt * dt * ledger.mass.max(f64::MIN_POSITIVE);
        if !(residual.abs() <= allowed) {
            self.st.ledger_ok = false;
        }
        let d = dissipation_parts(p, reg, post, self.cfg.floor)?;
        let c2 = c2_sq(post);
        self.st.dissipation_integral += 0.5 * dt * (self.cur_d + d.value);
        self.st.c2_sq_integral += 0.5 * dt * (self.cur_c2_sq + c2);
        self.cur_d = d.value;
        self.cur_c2_sq = c2;
        self.st.floor_engaged |= d.floor_engaged;
        Ok(())
    }

    /// Grade the current state and advance the report counter.
    pub fn report(&mut self, p: &ModelParams, s: &State) -> Result<MonitorReport> {
        let Barriers { m_h, m_tau } = self.st.barriers;
        let ent = entropy_parts(p, s, m_h, self.cfg.floor)?;
        let entropy_f = ent.total(p);
        let mass_c1 = integrate(&s.c1);
        let mass_c2 = integrate(&s.c2);
        let grad_h_sq = integrate_grad_sq(&s.h);
        let grad_tau_sq = integrate_grad_sq(&s.tau);
        let (barrier_h, barrier_tau) = barrier_check(s, m_h, m_tau);
        let (gradient_h, gradient_tau) =
            gradient_l2_check(grad_h_sq, grad_tau_sq, ent.h_quotient, ent.tau_quotient, m_h, m_tau);
        let gronwall_cap = (p.beta * s.t).exp() * self.st.initial_mass * (1.0 + BOUND_SLACK);
        let first = self.st.next_report == 0;
        let flags = CheckFlags {
            barrier_h,
            barrier_tau,
            gronwall: mass_c1 + mass_c2 <= gronwall_cap,
            entropy_finite: entropy_f.is_finite() && entropy_f >= 0.0,
            dissipation_monotone: self.st.dissipation_integral.is_finite()
                && (first || self.st.dissipation_integral >= self.st.last_reported_dissipation),
            c2_sq_monotone: self.st.c2_sq_integral.is_finite()
                && (first || self.st.c2_sq_integral >= self.st.last_reported_c2_sq),
            gradient_h,
            gradient_tau,
            ledger: self.st.ledger_ok,
        };
        let report = MonitorReport {
            t: s.t,
            mass_c1,
            mass_c2,
            max_h: s.h.max(),
            max_tau: s.tau.max(),
            m_h,
            m_tau,
            entropy_f,
            dissipation_d: self.cur_d,
            dissipation_integral: self.st.dissipation_integral,
            grad_h_sq,
            grad_tau_sq,
            c2_sq_integral: self.st.c2_sq_integral,
            ledger_residual: self.st.ledger_worst,
            floor_engaged: self.st.floor_engaged || ent.floor_engaged,
            flags,
        };
        self.st.next_report += 1;
        self.st.last_reported_dissipation = self.st.dissipation_integral;
        self.st.last_reported_c2_sq = self.st.c2_sq_integral;
        self.st.ledger_worst = 0.0;
        self.st.ledger_ok = true;
        self.st.floor_engaged = false;
        Ok(report)
    }
}

/// Outcome of the Gronwall-shaped entropy cap check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyCap {
    /// Fitted constant of `F' + ηF + D ≤ C`.
    pub c16: f64,
    pub eta: f64,
    /// Largest `F(t)/cap(t)` over reports after the fit window.
    pub worst_ratio: f64,
}

impl EntropyCap {
    /// The soft check: `F` may exceed the cap by at most 10%.
    pub fn passes(&self) -> bool {
        self.worst_ratio <= 1.1
    }

    pub fn cap(&self, f0: f64, t: f64) -> f64 {
        2.0 * (f0 + self.c16 / self.eta * (1.0 - (-self.eta * t).exp()))
    }
}

/// Fit `C` from finite differences of `F` on reports with `t ≤ fit_until`,
/// then compare the rest of the series against
/// `cap(t) = 2·(F(0) + C/η·(1 − e^{−ηt}))` with `η = min{μ, σ, β}`.
pub fn entropy_soft_cap(p: &ModelParams, reports: &[MonitorReport], fit_until: f64) -> Result<EntropyCap> {
    if reports.len() < 2 {
        return Err(Error::Domain("entropy cap needs at least two reports".into()));
    }
    let eta = p.mu.min(p.sigma).min(p.beta);
    if !(eta > 0.0) {
        return Err(Error::Domain("entropy cap needs min(mu, sigma, beta) > 0".into()));
    }
    let mut c16: f64 = 0.0;
    for w in reports.windows(2) {
        if w[1].t > fit_until * (1.0 + 1e-12) {
            break;
        }
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            continue;
        }
        let slope = (w[1].entropy_f - w[0].entropy_f) / dt;
        let mid_f = 0.5 * (w[0].entropy_f + w[1].entropy_f);
        let mid_d = 0.5 * (w[0].dissipation_d + w[1].dissipation_d);
        c16 = c16.max(slope + eta * mid_f + mid_d);
    }
    let f0 = reports[0].entropy_f;
    let mut cap = EntropyCap {
        c16,
        eta,
        worst_ratio: 0.0,
    };
    for r in reports.iter().filter(|r| r.t > fit_until * (1.0 + 1e-12)) {
        cap.worst_ratio = cap.worst_ratio.max(r.entropy_f / cap.cap(f0, r.t));
    }
    Ok(cap)
}
