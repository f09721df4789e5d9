use std::f64::consts::PI;

use crate::discretization::{integrate_grad_dot, integrate_weighted_grad_dot, pairwise_sum, Field, Grid};
use crate::error::{Error, Result};
use crate::model::{reaction_rhs_unchecked, ModelParams, Regularization};
use crate::stepper::{advance, State, StepControl};

/// One Neumann cosine `coeff · cos(kx·πx/Lx) · cos(ky·πy/Ly)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub coeff: f64,
    pub kx: u32,
    pub ky: u32,
}

/// `φ(x, t) = S(x) · (1 − t/T)^q` with `S` a finite sum of Neumann cosines.
///
/// Every such `φ` has zero normal derivative on the boundary and vanishes at
/// `t = T` together with its first `q − 1` time derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    modes: Vec<Mode>,
    q: u32,
    t_final: f64,
}

impl TestFunction {
    pub fn new(kx: u32, ky: u32, q: u32, t_final: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::validation(format!("q = {q}"), "time profile exponent must be >= 2"));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::validation(format!("T = {t_final}"), "final time must be positive"));
        }
        Ok(Self {
            modes: vec![Mode { coeff: 1.0, kx, ky }],
            q,
            t_final,
        })
    }

    /// `a·f + b·g`; both must share `q` and `T`.
    pub fn linear_combination(a: f64, f: &TestFunction, b: f64, g: &TestFunction) -> Result<Self> {
        if f.q != g.q || f.t_final != g.t_final {
            return Err(Error::Domain("combined test functions need the same time profile".into()));
        }
        fn scaled(s: f64, t: &TestFunction) -> impl Iterator<Item = Mode> + '_ {
            t.modes.iter().map(move |m| Mode {
                coeff: s * m.coeff,
                ..*m
            })
        }
        Ok(Self {
            modes: scaled(a, f).chain(scaled(b, g)).collect(),
            q: f.q,
            t_final: f.t_final,
        })
    }

    /// Three functions of increasing spatial frequency: `k = 0, 1, 2` (along
    /// both axes in 2D) with `q = 2, 3, 2`.
    pub fn standard_family(t_final: f64, dim: usize) -> Result<Vec<Self>> {
        let ky = |k: u32| if dim == 2 { k } else { 0 };
        Ok(vec![
            Self::new(0, 0, 2, t_final)?,
            Self::new(1, ky(1), 3, t_final)?,
            Self::new(2, ky(1), 2, t_final)?,
        ])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// `S` sampled at cell centres.
    pub fn spatial(&self, grid: &Grid) -> Field {
        let (lx, ly) = (grid.lengths()[0], grid.lengths().get(1).copied().unwrap_or(1.0));
        Field::from_fn(*grid, |x, y| {
            self.modes
                .iter()
                .map(|m| m.coeff * (m.kx as f64 * PI * x / lx).cos() * (m.ky as f64 * PI * y / ly).cos())
                .sum()
        })
    }

    pub fn time_profile(&self, t: f64) -> f64 {
        (1.0 - t / self.t_final).max(0.0).powi(self.q as i32)
    }

    pub fn time_derivative(&self, t: f64) -> f64 {
        -(self.q as f64) / self.t_final * (1.0 - t / self.t_final).max(0.0).powi(self.q as i32 - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Equation {
    C1,
    C2,
    H,
    Tau,
}

impl Equation {
    pub const ALL: [Equation; 4] = [Equation::C1, Equation::C2, Equation::H, Equation::Tau];

    pub fn name(&self) -> &'static str {
        match self {
            Equation::C1 => "c1",
            Equation::C2 => "c2",
            Equation::H => "h",
            Equation::Tau => "tau",
        }
    }
}

/// Sign of the production term in the weak `τ` identity.
///
/// `Corrected` uses `+c2/(1+c2)`, consistent with the strong equation that is
/// simulated. `AsPrinted` uses `−c2/(1+c2)`; against a true solution its
/// residual is `2∫∫ c2/(1+c2) φ` rather than zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Defeq4Sign {
    #[default]
    Corrected,
    AsPrinted,
}

/// States at uniformly spaced save times `0 = t₀ < … < t_n = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    states: Vec<State>,
}

impl Trajectory {
    pub fn new(states: Vec<State>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::Shape("trajectory needs at least two saves".into()));
        }
        if states[0].t != 0.0 {
            return Err(Error::Shape(format!("trajectory must start at t = 0, got {}", states[0].t)));
        }
        let n = states.len() - 1;
        let t_final = states[n].t;
        let spacing = t_final / n as f64;
        for (i, s) in states.iter().enumerate() {
            states[0].c1.check_same_grid(&s.c1)?;
            s.validate()?;
            if (s.t - i as f64 * spacing).abs() > 1e-9 * t_final {
                return Err(Error::Shape(format!("save {i} at t = {} breaks uniform spacing", s.t)));
            }
        }
        Ok(Self { states })
    }

    /// Integrate `s0` to `ctl.t_end`, saving `saves + 1` states.
    pub fn record(p: &ModelParams, reg: &Regularization, s0: &State, ctl: &StepControl, saves: usize) -> Result<Self> {
        if saves == 0 || !(ctl.t_end > 0.0) || s0.t != 0.0 {
            return Err(Error::Domain("recording needs saves >= 1, t_end > 0 and t0 = 0".into()));
        }
        let mut states = Vec::with_capacity(saves + 1);
        states.push(s0.clone());
        for i in 1..=saves {
            let t = if i == saves {
                ctl.t_end
            } else {
                ctl.t_end * i as f64 / saves as f64
            };
            let next = advance(p, reg, states.last().expect("nonempty"), ctl, t)?;
            states.push(next);
        }
        Self::new(states)
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn grid(&self) -> &Grid {
        self.states[0].grid()
    }

    pub fn t_final(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    /// Trapezoid weights over the save times.
    fn weights(&self) -> Vec<f64> {
        let n = self.states.len() - 1;
        let dt = self.t_final() / n as f64;
        (0..=n)
            .map(|i| if i == 0 || i == n { 0.5 * dt } else { dt })
            .collect()
    }
}

fn inner(a: &[f64], b: &[f64], vol: f64) -> f64 {
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&prod) * vol
}

/// `∫ RHS · S` for one equation at one state, without the time profile.
fn rhs_against(
    p: &ModelParams,
    reg: &Regularization,
    s: &State,
    sp: &Field,
    eq: Equation,
    sign: Defeq4Sign,
) -> Result<f64> {
    let vol = s.grid().cell_volume();
    let (c1, c2, h, tau) = (s.c1.values(), s.c2.values(), s.h.values(), s.tau.values());
    let reaction: Vec<f64> = (0..c1.len())
        .map(|k| {
            let r = reaction_rhs_unchecked(p, reg, c1[k], c2[k], h[k], tau[k]);
            match eq {
                Equation::C1 => r.r_c1,
                Equation::C2 => r.r_c2,
                Equation::H => r.r_h,
                Equation::Tau => match sign {
                    Defeq4Sign::Corrected => r.r_tau,
                    Defeq4Sign::AsPrinted => r.r_tau - 2.0 * c2[k] / (1.0 + c2[k]),
                },
            }
        })
        .collect();
    let local = inner(&reaction, sp.values(), vol);
    let eps = reg.eps();
    let flux = match eq {
        Equation::C1 => {
            -p.a1 * integrate_grad_dot(&s.c1, sp)?
                + p.b_h * integrate_weighted_grad_dot(&s.c1, &s.h, sp)?
                + p.b_tau * integrate_weighted_grad_dot(&s.c1, &s.tau, sp)?
        }
        Equation::C2 => -p.a2 * integrate_grad_dot(&s.c2, sp)?,
        Equation::H => -eps * integrate_grad_dot(&s.h, sp)?,
        Equation::Tau => -eps * integrate_grad_dot(&s.tau, sp)?,
    };
    Ok(flux + local)
}

fn species(s: &State, eq: Equation) -> &Field {
    match eq {
        Equation::C1 => &s.c1,
        Equation::C2 => &s.c2,
        Equation::H => &s.h,
        Equation::Tau => &s.tau,
    }
}

/// The three groups of a weak identity `LHS − RHS`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakTerms {
    /// `−∫∫u ∂tφ`
    pub time_derivative: f64,
    /// `∫u(0)φ(0)`
    pub initial: f64,
    /// `∫∫(fluxes + reactions)·φ`
    pub rhs: f64,
}

impl WeakTerms {
    pub fn residual(&self) -> f64 {
        self.time_derivative - self.initial - self.rhs
    }

    /// Size of the identity, against which the residual is small.
    pub fn scale(&self) -> f64 {
        self.time_derivative.abs() + self.initial.abs() + self.rhs.abs()
    }
}

/// Quadrature of the terms of the weak identity for `eq`: the right-hand side
/// of the regularized system at the run's `eps` (the limit identities when
/// `eps = 0`).
///
/// Space integrals use the midpoint rule with face quadrature for gradient
/// pairs; time integrals use the trapezoid rule over the save times.
pub fn weak_terms(
    traj: &Trajectory,
    p: &ModelParams,
    reg: &Regularization,
    phi: &TestFunction,
    eq: Equation,
    sign: Defeq4Sign,
) -> Result<WeakTerms> {
    let t_final = traj.t_final();
    if (phi.t_final() - t_final).abs() > 1e-12 * t_final {
        return Err(Error::Shape(format!(
            "test function ends at {} but trajectory at {}",
            phi.t_final(),
            t_final
        )));
    }
    let grid = traj.grid();
    let sp = phi.spatial(grid);
    let vol = grid.cell_volume();
    let mut lhs_terms = Vec::with_capacity(traj.states.len());
    let mut rhs_terms = Vec::with_capacity(traj.states.len());
    for (s, w) in traj.states.iter().zip(traj.weights()) {
        let u_s = inner(species(s, eq).values(), sp.values(), vol);
        lhs_terms.push(-w * phi.time_derivative(s.t) * u_s);
        rhs_terms.push(w * phi.time_profile(s.t) * rhs_against(p, reg, s, &sp, eq, sign)?);
    }
    let s0 = &traj.states[0];
    Ok(WeakTerms {
        time_derivative: pairwise_sum(&lhs_terms),
        initial: inner(species(s0, eq).values(), sp.values(), vol) * phi.time_profile(0.0),
        rhs: pairwise_sum(&rhs_terms),
    })
}

/// Signed `LHS − RHS` of the weak identity, `LHS = −∫∫u ∂tφ − ∫u(0)φ(0)`.
/// See [`weak_terms`].
pub fn weak_residual(
    traj: &Trajectory,
    p: &ModelParams,
    reg: &Regularization,
    phi: &TestFunction,
    eq: Equation,
    sign: Defeq4Sign,
) -> Result<f64> {
    Ok(weak_terms(traj, p, reg, phi, eq, sign)?.residual())
}

/// `‖u_a − u_b‖` in `L²(Ω×(0,T))` per species (`c1, c2, h, τ`).
pub fn pairwise_l2(a: &Trajectory, b: &Trajectory) -> Result<[f64; 4]> {
    if a.states.len() != b.states.len() {
        return Err(Error::Shape("trajectories have different save counts".into()));
    }
    if a.grid() != b.grid() {
        return Err(Error::Shape("trajectories live on different grids".into()));
    }
    let vol = a.grid().cell_volume();
    let weights = a.weights();
    let mut out = [0.0; 4];
    for (k, eq) in Equation::ALL.iter().enumerate() {
        let mut terms = Vec::with_capacity(weights.len());
        for ((sa, sb), w) in a.states.iter().zip(&b.states).zip(&weights) {
            if sa.t != sb.t {
                return Err(Error::Shape(format!("save times differ: {} vs {}", sa.t, sb.t)));
            }
            let sq: Vec<f64> = species(sa, *eq)
                .values()
                .iter()
                .zip(species(sb, *eq).values())
                .map(|(x, y)| (x - y) * (x - y))
                .collect();
            terms.push(w * pairwise_sum(&sq) * vol);
        }
        out[k] = pairwise_sum(&terms).sqrt();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_THETA;

    fn reg(dim: usize) -> Regularization {
        Regularization::new(0.05, DEFAULT_THETA, dim).unwrap()
    }

    fn demo_like(grid: Grid) -> State {
        State::new(
            Field::from_fn(grid, |x, y| 0.1 + 0.4 * (-((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.02).exp()),
            Field::from_fn(grid, |x, _| 0.2 + 0.1 * (PI * x).cos()),
            Field::from_fn(grid, |x, _| 0.5 + 0.3 * (PI * x).cos()),
            Field::from_fn(grid, |_, y| 0.4 + 0.1 * (PI * y).cos()),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn test_function_vanishes_at_final_time() {
        let phi = TestFunction::new(2, 1, 3, 1.5).unwrap();
        assert_eq!(phi.time_profile(1.5), 0.0);
        assert_eq!(phi.time_derivative(1.5), 0.0);
        assert_eq!(phi.time_profile(0.0), 1.0);
        assert!(TestFunction::new(1, 0, 1, 1.0).is_err());
        // Derivative agrees with a centred difference.
        let t = 0.4;
        let fd = (phi.time_profile(t + 1e-6) - phi.time_profile(t - 1e-6)) / 2e-6;
        assert!((fd - phi.time_derivative(t)).abs() < 1e-8);
    }

    #[test]
    fn spatial_modes_are_neumann_cosines() {
        let g = Grid::line(4, 2.0).unwrap();
        let s = TestFunction::new(1, 0, 2, 1.0).unwrap().spatial(&g);
        let expect: Vec<f64> = [0.25, 0.75, 1.25, 1.75].iter().map(|x: &f64| (PI * x / 2.0).cos()).collect();
        for (a, b) in s.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_trajectory_has_zero_residuals() {
        let g = Grid::rect(6, 5, 1.0, 1.0).unwrap();
        let p = ModelParams::default();
        let r = reg(2);
        let states = (0..=4)
            .map(|i| {
                let mut s = State::uniform(g, 0.0, 0.0, 0.0, 0.0);
                s.t = 0.25 * i as f64;
                s
            })
            .collect();
        let traj = Trajectory::new(states).unwrap();
        for phi in TestFunction::standard_family(1.0, 2).unwrap() {
            for eq in Equation::ALL {
                for sign in [Defeq4Sign::Corrected, Defeq4Sign::AsPrinted] {
                    assert_eq!(weak_residual(&traj, &p, &r, &phi, eq, sign).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn residual_is_linear_in_phi() {
        let g = Grid::rect(12, 10, 1.0, 1.0).unwrap();
        let p = ModelParams::default();
        let r = reg(2);
        let ctl = StepControl {
            t_end: 0.2,
            ..StepControl::default()
        };
        let traj = Trajectory::record(&p, &r, &demo_like(g), &ctl, 20).unwrap();
        let f = TestFunction::new(1, 2, 3, 0.2).unwrap();
        let h = TestFunction::new(3, 0, 3, 0.2).unwrap();
        let (a, b) = (0.7, -1.9);
        let comb = TestFunction::linear_combination(a, &f, b, &h).unwrap();
        for eq in Equation::ALL {
            let tf = weak_terms(&traj, &p, &r, &f, eq, Defeq4Sign::Corrected).unwrap();
            let th = weak_terms(&traj, &p, &r, &h, eq, Defeq4Sign::Corrected).unwrap();
            let rc = weak_residual(&traj, &p, &r, &comb, eq, Defeq4Sign::Corrected).unwrap();
            let scale = a.abs() * tf.scale() + b.abs() * th.scale();
            let lin = a * tf.residual() + b * th.residual();
            assert!((rc - lin).abs() <= 1e-12 * scale, "{eq:?} {rc} {lin}");
        }
    }

    #[test]
    fn record_hits_save_times() {
        let g = Grid::line(16, 1.0).unwrap();
        let ctl = StepControl {
            t_end: 0.3,
            ..StepControl::default()
        };
        let traj = Trajectory::record(&ModelParams::default(), &reg(1), &demo_like(g), &ctl, 7).unwrap();
        assert_eq!(traj.states().len(), 8);
        assert_eq!(traj.t_final(), 0.3);
    }

    #[test]
    fn pairwise_l2_symmetric_and_zero_on_self() {
        let g = Grid::line(24, 1.0).unwrap();
        let p = ModelParams::default();
        let ctl = StepControl {
            t_end: 0.1,
            ..StepControl::default()
        };
        let a = Trajectory::record(&p, &reg(1), &demo_like(g), &ctl, 10).unwrap();
        let b = Trajectory::record(&p, &Regularization::new(0.2, DEFAULT_THETA, 1).unwrap(), &demo_like(g), &ctl, 10)
            .unwrap();
        assert_eq!(pairwise_l2(&a, &a).unwrap(), [0.0; 4]);
        assert_eq!(pairwise_l2(&a, &b).unwrap(), pairwise_l2(&b, &a).unwrap());
        assert!(pairwise_l2(&a, &b).unwrap()[0] > 0.0);
    }

    #[test]
    fn mismatched_final_time_is_rejected() {
        let g = Grid::line(8, 1.0).unwrap();
        let ctl = StepControl {
            t_end: 0.1,
            ..StepControl::default()
        };
        let p = ModelParams::default();
        let traj = Trajectory::record(&p, &reg(1), &demo_like(g), &ctl, 2).unwrap();
        let phi = TestFunction::new(0, 0, 2, 1.0).unwrap();
        assert!(weak_residual(&traj, &p, &reg(1), &phi, Equation::C1, Defeq4Sign::Corrected).is_err());
    }
}
