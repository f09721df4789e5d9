use rayon::prelude::*;

use super::weak::{pairwise_l2, weak_residual, Defeq4Sign, Equation, TestFunction, Trajectory};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Regularization};
use crate::stepper::{State, StepControl};

/// Environment variable holding the worker count for sweeps.
pub const THREADS_ENV: &str = "HAPTO_FV_THREADS";

/// Worker count from [`THREADS_ENV`], else the available parallelism.
pub fn sweep_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Non-increasing values in `(0, 1)`.
    pub eps_list: Vec<f64>,
    pub theta: u32,
    /// Number of save intervals on `[0, t_end]`.
    pub saves: usize,
    pub test_functions: Vec<TestFunction>,
    pub defeq4: Defeq4Sign,
}

impl SweepConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::validation("sweep.eps", "the eps list must not be empty"));
        }
        for w in self.eps_list.windows(2) {
            if w[1] > w[0] {
                return Err(Error::validation(
                    format!("sweep.eps = {:?}", self.eps_list),
                    "the eps list must be non-increasing",
                ));
            }
        }
        for &eps in &self.eps_list {
            Regularization::new(eps, self.theta, dim)?;
        }
        if self.saves == 0 {
            return Err(Error::validation("sweep.saves = 0", "at least one save interval is needed"));
        }
        Ok(())
    }
}

/// Outcome of an ε-sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub eps_list: Vec<f64>,
    /// `‖u_{ε_{j+1}} − u_{ε_j}‖_{L²(Ω×(0,T))}` per species, one entry per
    /// consecutive pair.
    pub pairwise_l2: Vec<[f64; 4]>,
    /// `[ε][test function][equation]`, equations ordered `c1, c2, h, τ`.
    pub weak_residuals: Vec<Vec<[f64; 4]>>,
}

struct Member {
    traj: Trajectory,
    residuals: Vec<[f64; 4]>,
}

fn run_member(p: &ModelParams, s0: &State, ctl: &StepControl, cfg: &SweepConfig, eps: f64) -> Result<Member> {
    let reg = Regularization::new(eps, cfg.theta, s0.grid().dim())?;
    let traj = Trajectory::record(p, &reg, s0, ctl, cfg.saves)?;
    let mut residuals = Vec::with_capacity(cfg.test_functions.len());
    for phi in &cfg.test_functions {
        let mut row = [0.0; 4];
        for (k, eq) in Equation::ALL.iter().enumerate() {
            row[k] = weak_residual(&traj, p, &reg, phi, *eq, cfg.defeq4)?;
        }
        residuals.push(row);
    }
    Ok(Member { traj, residuals })
}

/// Run one trajectory per ε concurrently and compare consecutive members.
/// Output is independent of the worker count.
pub fn epsilon_sweep(p: &ModelParams, s0: &State, ctl: &StepControl, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate(s0.grid().dim())?;
    s0.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads())
        .build()
        .map_err(|e| Error::Domain(format!("cannot start sweep workers: {e}")))?;
    let members: Vec<Result<Member>> = pool.install(|| {
        cfg.eps_list
            .par_iter()
            .map(|&eps| {
                run_member(p, s0, ctl, cfg, eps).map_err(|e| Error::SweepMember {
                    eps,
                    source: Box::new(e),
                })
            })
            .collect()
    });
    let members = members.into_iter().collect::<Result<Vec<_>>>()?;
    let pairwise = members
        .windows(2)
        .map(|w| pairwise_l2(&w[0].traj, &w[1].traj))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        eps_list: cfg.eps_list.clone(),
        pairwise_l2: pairwise,
        weak_residuals: members.into_iter().map(|m| m.residuals).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{Field, Grid};
    use crate::model::DEFAULT_THETA;

    fn setup() -> (ModelParams, State, StepControl) {
        let g = Grid::line(32, 1.0).unwrap();
        let s0 = State::new(
            Field::from_fn(g, |x, _| 0.1 + 0.5 * (-(x - 0.5).powi(2) / 0.02).exp()),
            Field::from_fn(g, |x, _| 0.2 + 0.1 * (3.0 * x).cos()),
            Field::from_fn(g, |x, _| 0.5 + 0.2 * (std::f64::consts::PI * x).cos()),
            Field::constant(g, 0.4),
            0.0,
        )
        .unwrap();
        let ctl = StepControl {
            t_end: 0.1,
            ..StepControl::default()
        };
        (ModelParams::default(), s0, ctl)
    }

    fn cfg(eps_list: Vec<f64>) -> SweepConfig {
        SweepConfig {
            eps_list,
            theta: DEFAULT_THETA,
            saves: 10,
            test_functions: TestFunction::standard_family(0.1, 1).unwrap(),
            defeq4: Defeq4Sign::Corrected,
        }
    }

    #[test]
    fn single_eps() {
        let (p, s0, ctl) = setup();
        let r = epsilon_sweep(&p, &s0, &ctl, &cfg(vec![0.1])).unwrap();
        assert!(r.pairwise_l2.is_empty());
        assert_eq!(r.weak_residuals.len(), 1);
        assert_eq!(r.weak_residuals[0].len(), 3);
    }

    #[test]
    fn identical_eps_give_zero_difference() {
        let (p, s0, ctl) = setup();
        let r = epsilon_sweep(&p, &s0, &ctl, &cfg(vec![0.05, 0.05])).unwrap();
        assert_eq!(r.pairwise_l2, vec![[0.0; 4]]);
    }

    #[test]
    fn sweep_is_deterministic() {
        let (p, s0, ctl) = setup();
        let c = cfg(vec![0.2, 0.1, 0.05]);
        assert_eq!(epsilon_sweep(&p, &s0, &ctl, &c).unwrap(), epsilon_sweep(&p, &s0, &ctl, &c).unwrap());
    }

    #[test]
    fn invalid_lists_are_rejected() {
        let (p, s0, ctl) = setup();
        assert!(epsilon_sweep(&p, &s0, &ctl, &cfg(vec![])).is_err());
        assert!(epsilon_sweep(&p, &s0, &ctl, &cfg(vec![0.05, 0.1])).is_err());
        assert!(epsilon_sweep(&p, &s0, &ctl, &cfg(vec![1.5])).is_err());
    }
}
