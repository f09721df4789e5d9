use std::f64::consts::PI;

use crate::discretization::{Field, Grid};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Regularization, DEFAULT_THETA};
use crate::stepper::{advance, State, StepControl};

/// Decoupled problems with closed-form solutions on the unit interval,
/// integrated to `t = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ManufacturedCase {
    /// `∂t c2 = a2 Δc2` with `a2 = 0.1`, `c2(0) = 1 + cos(πx)`;
    /// levels are cell counts and `dt = 1/N²`. Error: discrete `L²`.
    Heat,
    /// `∂t h = −μh` with `μ = 1`; levels are steps per unit time.
    /// Error: largest pointwise relative error.
    DecayH,
    /// `∂t τ = −στ` with `σ = 1`; as [`ManufacturedCase::DecayH`].
    DecayTau,
    /// Constant data under diffusion and cue production only; levels are
    /// cell counts. Error: largest absolute deviation from the exact
    /// solution.
    Constant,
}

impl ManufacturedCase {
    pub fn name(&self) -> &'static str {
        match self {
            ManufacturedCase::Heat => "heat",
            ManufacturedCase::DecayH => "decay_h",
            ManufacturedCase::DecayTau => "decay_tau",
            ManufacturedCase::Constant => "constant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "heat" => Some(ManufacturedCase::Heat),
            "decay_h" => Some(ManufacturedCase::DecayH),
            "decay_tau" => Some(ManufacturedCase::DecayTau),
            "constant" => Some(ManufacturedCase::Constant),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub case: ManufacturedCase,
    pub levels: Vec<usize>,
    pub errors: Vec<f64>,
    /// `log(e_i/e_{i+1}) / log(level_{i+1}/level_i)` per refinement pair.
    pub orders: Vec<f64>,
}

const HEAT_A2: f64 = 0.1;
const DECAY_RATE: f64 = 1.0;
const T_END: f64 = 1.0;

fn control(dt: f64) -> StepControl {
    StepControl {
        dt_max: dt,
        cfl_safety: 1.0,
        t_end: T_END,
        ..StepControl::default()
    }
}

fn heat_error(n: usize) -> Result<f64> {
    let g = Grid::line(n, 1.0)?;
    let mut p = ModelParams::zeroed();
    p.a2 = HEAT_A2;
    let reg = Regularization::limit(DEFAULT_THETA, 1)?;
    let s0 = State::new(
        Field::zeros(g),
        Field::from_fn(g, |x, _| 1.0 + (PI * x).cos()),
        Field::constant(g, 1.0),
        Field::constant(g, 1.0),
        0.0,
    )?;
    let h = g.hx();
    let s = advance(&p, &reg, &s0, &control(h * h), T_END)?;
    let decay = (-HEAT_A2 * PI * PI * T_END).exp();
    let exact = Field::from_fn(g, |x, _| 1.0 + decay * (PI * x).cos());
    let sq: f64 = s
        .c2
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sq * g.cell_volume()).sqrt())
}

fn decay_error(steps: usize, tau: bool) -> Result<f64> {
    let g = Grid::line(8, 1.0)?;
    let mut p = ModelParams::zeroed();
    p.mu = DECAY_RATE;
    p.sigma = DECAY_RATE;
    let reg = Regularization::limit(DEFAULT_THETA, 1)?;
    let u0 = Field::from_fn(g, |x, _| 0.5 + 0.4 * (PI * x).cos());
    let s0 = State::new(Field::zeros(g), Field::zeros(g), u0.clone(), u0.clone(), 0.0)?;
    let s = advance(&p, &reg, &s0, &control(T_END / steps as f64), T_END)?;
    let u = if tau { &s.tau } else { &s.h };
    let factor = (-DECAY_RATE * T_END).exp();
    Ok(u.values()
        .iter()
        .zip(u0.values())
        .map(|(a, b)| ((a - b * factor) / (b * factor)).abs())
        .fold(0.0, f64::max))
}

fn constant_error(n: usize) -> Result<f64> {
    let g = Grid::line(n, 1.0)?;
    let mut p = ModelParams::zeroed();
    p.a1 = 0.3;
    p.a2 = 0.2;
    let reg = Regularization::new(0.1, DEFAULT_THETA, 1)?;
    // c1 = 0 keeps the eps-damping switched off.
    let (c1, c2, h, tau) = (0.0, 0.2, 0.5, 0.4);
    let s0 = State::uniform(g, c1, c2, h, tau);
    let s = advance(&p, &reg, &s0, &control(1e-2), T_END)?;
    // Cue production c2/(1+c2) is the only active term.
    let prod = c2 / (1.0 + c2) * T_END;
    let exact = [c1, c2, h + prod, tau + prod];
    Ok(s.fields()
        .iter()
        .zip(exact)
        .flat_map(|((_, f), e)| f.values().iter().map(move |v| (v - e).abs()))
        .fold(0.0, f64::max))
}

/// Errors at `t = 1` for each level and the observed orders between
/// consecutive levels.
pub fn manufactured_convergence(case: ManufacturedCase, levels: &[usize]) -> Result<ConvergenceReport> {
    if levels.is_empty() || levels.contains(&0) {
        return Err(Error::Domain("convergence levels must be positive".into()));
    }
    let errors = levels
        .iter()
        .map(|&l| match case {
            ManufacturedCase::Heat => heat_error(l),
            ManufacturedCase::DecayH => decay_error(l, false),
            ManufacturedCase::DecayTau => decay_error(l, true),
            ManufacturedCase::Constant => constant_error(l),
        })
        .collect::<Result<Vec<_>>>()?;
    let orders = levels
        .windows(2)
        .zip(errors.windows(2))
        .map(|(l, e)| (e[0] / e[1]).ln() / (l[1] as f64 / l[0] as f64).ln())
        .collect();
    Ok(ConvergenceReport {
        case,
        levels: levels.to_vec(),
        errors,
        orders,
    })
}
