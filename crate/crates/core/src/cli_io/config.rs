//! Line-oriented `key = value` run configuration.
//!
//! Keys carry a dotted section prefix (`model.a1`, `grid.nx`, ...). Blank
//! lines and `#` comments are ignored; unknown or repeated keys are errors.
//! Every omitted key keeps the value of [`RunConfig::default`], the demo
//! problem; [`RunConfig::to_text`] prints the complete key set.

use std::f64::consts::PI;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::analysis::{Defeq4Sign, ManufacturedCase, SweepConfig, TestFunction};
use crate::discretization::{Field, Grid};
use crate::error::{Error, Result};
use crate::model::{ModelParams, Regularization, TransitionFn, TransitionForm, DEFAULT_THETA};
use crate::monitors::{HardChecks, MonitorConfig};
use crate::stepper::{State, StepControl};

/// Shape of one initial field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitSpec {
    Constant {
        value: f64,
    },
    /// `offset + amplitude·(1 + cos(kπx/Lx)·cos(kπy/Ly))/2`, in `[offset, offset + amplitude]`.
    Cosine {
        offset: f64,
        amplitude: f64,
        k: u32,
    },
    /// `offset + amplitude·exp(−|x − center|²/(2·width²))`.
    Gaussian {
        offset: f64,
        amplitude: f64,
        width: f64,
        center: [f64; 2],
    },
}

impl InitSpec {
    fn parse(v: &str) -> std::result::Result<Self, String> {
        let mut it = v.split_whitespace();
        let kind = it.next().ok_or("empty initial-data spec")?;
        let nums = it
            .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        match (kind, nums.as_slice()) {
            ("constant", [value]) => Ok(InitSpec::Constant { value: *value }),
            ("cosine", [offset, amplitude, k]) => {
                if *k < 0.0 || k.fract() != 0.0 {
                    return Err(format!("cosine mode must be a nonnegative integer, got {k}"));
                }
                Ok(InitSpec::Cosine {
                    offset: *offset,
                    amplitude: *amplitude,
                    k: *k as u32,
                })
            }
            ("gaussian", [offset, amplitude, width, rest @ ..]) if rest.len() <= 2 => Ok(InitSpec::Gaussian {
                offset: *offset,
                amplitude: *amplitude,
                width: *width,
                center: [
                    rest.first().copied().unwrap_or(f64::NAN),
                    rest.get(1).copied().unwrap_or(f64::NAN),
                ],
            }),
            _ => Err(format!(
                "expected `constant v`, `cosine offset amplitude k` or `gaussian offset amplitude width [cx [cy]]`, got {v:?}"
            )),
        }
    }

    fn render(&self) -> String {
        match self {
            InitSpec::Constant { value } => format!("constant {value:?}"),
            InitSpec::Cosine { offset, amplitude, k } => format!("cosine {offset:?} {amplitude:?} {k}"),
            InitSpec::Gaussian {
                offset,
                amplitude,
                width,
                center,
            } => {
                let mut s = format!("gaussian {offset:?} {amplitude:?} {width:?}");
                for c in center.iter().filter(|c| !c.is_nan()) {
                    write!(s, " {c:?}").expect("string write");
                }
                s
            }
        }
    }

    /// Gaussian centres default to the middle of the domain.
    pub fn sample(&self, grid: &Grid) -> Field {
        let ls = grid.lengths();
        let lx = ls[0];
        let ly = ls.get(1).copied().unwrap_or(0.0);
        match *self {
            InitSpec::Constant { value } => Field::constant(*grid, value),
            InitSpec::Cosine { offset, amplitude, k } => {
                let kp = k as f64 * PI;
                Field::from_fn(*grid, |x, y| {
                    let wave = (kp * x / lx).cos() * if grid.dim() == 2 { (kp * y / ly).cos() } else { 1.0 };
                    offset + amplitude * 0.5 * (1.0 + wave)
                })
            }
            InitSpec::Gaussian {
                offset,
                amplitude,
                width,
                center,
            } => {
                let cx = if center[0].is_nan() { 0.5 * lx } else { center[0] };
                let cy = if center[1].is_nan() { 0.5 * ly } else { center[1] };
                Field::from_fn(*grid, |x, y| {
                    let r2 = (x - cx).powi(2) + if grid.dim() == 2 { (y - cy).powi(2) } else { 0.0 };
                    offset + amplitude * (-r2 / (2.0 * width * width)).exp()
                })
            }
        }
    }

    /// Lower bound of the sampled field.
    fn floor(&self) -> f64 {
        match *self {
            InitSpec::Constant { value } => value,
            InitSpec::Cosine { offset, amplitude, .. } | InitSpec::Gaussian { offset, amplitude, .. } => {
                offset + amplitude.min(0.0)
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let what = || format!("init.{name} = {}", self.render());
        let finite = match *self {
            InitSpec::Constant { value } => value.is_finite(),
            InitSpec::Cosine { offset, amplitude, .. } => offset.is_finite() && amplitude.is_finite(),
            InitSpec::Gaussian {
                offset,
                amplitude,
                width,
                center,
            } => {
                offset.is_finite()
                    && amplitude.is_finite()
                    && width.is_finite()
                    && width > 0.0
                    && center.iter().all(|c| c.is_nan() || c.is_finite())
            }
        };
        if !finite {
            return Err(Error::validation(what(), "initial-data parameters must be finite, widths positive"));
        }
        if !(self.floor() > 0.0) {
            return Err(Error::validation(
                what(),
                "initial data must be strictly positive (offset > 0 and offset + amplitude > 0)",
            ));
        }
        Ok(())
    }
}

/// Everything a run needs, fully validated by [`parse_config`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    /// Cells per axis; the second entry is used only in 2D.
    pub cells: [usize; 2],
    pub lengths: [f64; 2],
    pub params: ModelParams,
    pub eps: f64,
    pub theta: u32,
    pub step: StepControl,
    pub monitor: MonitorConfig,
    /// `c1, c2, h, τ`
    pub init: [InitSpec; 4],
    /// Number of save intervals for recorded trajectories.
    pub saves: usize,
    pub defeq4: Defeq4Sign,
    pub sweep_eps: Vec<f64>,
    pub convergence_case: ManufacturedCase,
    pub convergence_levels: Vec<usize>,
    pub mode: String,
    pub out_series: String,
    pub out_snapshot: String,
    pub out_sweep: String,
    pub out_weakcheck: String,
    pub out_convergence: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            cells: [256, 64],
            lengths: [1.0, 1.0],
            params: ModelParams::default(),
            eps: 0.01,
            theta: DEFAULT_THETA,
            step: StepControl::default(),
            monitor: MonitorConfig::default(),
            // Single-mode cues: the ε-diffusion of h and τ damps a mode k at
            // rate ε(kπ)², so higher modes leave the small-ε regime of the
            // default sweep list.
            init: [
                InitSpec::Cosine {
                    offset: 0.05,
                    amplitude: 0.5,
                    k: 1,
                },
                InitSpec::Cosine {
                    offset: 0.1,
                    amplitude: 0.1,
                    k: 2,
                },
                InitSpec::Cosine {
                    offset: 0.3,
                    amplitude: 0.4,
                    k: 1,
                },
                InitSpec::Cosine {
                    offset: 0.4,
                    amplitude: 0.2,
                    k: 1,
                },
            ],
            saves: 200,
            defeq4: Defeq4Sign::Corrected,
            sweep_eps: vec![0.1, 0.05, 0.025, 0.0125],
            convergence_case: ManufacturedCase::Heat,
            convergence_levels: vec![16, 32, 64, 128],
            mode: "simulate".into(),
            out_series: "series.csv".into(),
            out_snapshot: "final.bin".into(),
            out_sweep: "sweep".into(),
            out_weakcheck: "weakcheck.csv".into(),
            out_convergence: "convergence.csv".into(),
        }
    }
}

const SPECIES: [&str; 4] = ["c1", "c2", "h", "tau"];
const MODES: [&str; 4] = ["simulate", "sweep", "convergence", "weakcheck"];
const HARD_NAMES: [&str; 7] = ["barriers", "gronwall", "entropy", "dissipation", "c2_sq", "gradient", "ledger"];

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("expected a number, got {v:?}"))
}

fn parse_usize(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>().map_err(|_| format!("expected a nonnegative integer, got {v:?}"))
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn parse_list<T>(v: &str, f: fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    v.split(',').map(|s| f(s.trim())).collect()
}

fn parse_transition(v: &str) -> std::result::Result<TransitionFn, String> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    let num = |s: &str| parse_f64(s);
    let f = match parts.as_slice() {
        ["constant", a] => TransitionFn::constant(num(a)?),
        ["saturating", a, b] => TransitionFn::saturating(num(a)?, num(b)?),
        _ => return Err(format!("expected `constant A` or `saturating A B`, got {v:?}")),
    };
    f.map_err(|e| e.to_string())
}

fn render_transition(f: &TransitionFn) -> String {
    match f.form() {
        TransitionForm::Constant { a } => format!("constant {a:?}"),
        TransitionForm::Saturating { a, b } => format!("saturating {a:?} {b:?}"),
    }
}

fn join<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let p = &mut self.params;
        match key {
            "grid.dim" => {
                let dim = parse_usize(v)?;
                if !(dim == 1 || dim == 2) {
                    return Err(format!("grid.dim must be 1 or 2, got {dim}"));
                }
                self.dim = dim;
            }
            "grid.nx" => self.cells[0] = parse_usize(v)?,
            "grid.ny" => self.cells[1] = parse_usize(v)?,
            "grid.lx" => self.lengths[0] = parse_f64(v)?,
            "grid.ly" => self.lengths[1] = parse_f64(v)?,
            "model.a1" => p.a1 = parse_f64(v)?,
            "model.a2" => p.a2 = parse_f64(v)?,
            "model.b_h" => p.b_h = parse_f64(v)?,
            "model.b_tau" => p.b_tau = parse_f64(v)?,
            "model.beta" => p.beta = parse_f64(v)?,
            "model.gamma1" => p.gamma1 = parse_f64(v)?,
            "model.gamma2" => p.gamma2 = parse_f64(v)?,
            "model.delta" => p.delta = parse_f64(v)?,
            "model.mu" => p.mu = parse_f64(v)?,
            "model.sigma" => p.sigma = parse_f64(v)?,
            "model.alpha1" => p.alpha1 = parse_transition(v)?,
            "model.alpha2" => p.alpha2 = parse_transition(v)?,
            "reg.eps" => self.eps = parse_f64(v)?,
            "reg.theta" => self.theta = parse_usize(v)?.try_into().map_err(|_| "theta too large")?,
            "step.dt_max" => self.step.dt_max = parse_f64(v)?,
            "step.cfl" => self.step.cfl_safety = parse_f64(v)?,
            "step.t_end" => self.step.t_end = parse_f64(v)?,
            "step.floor" => self.step.floor = parse_f64(v)?,
            "monitor.cadence" => self.monitor.cadence = parse_f64(v)?,
            "monitor.ledger_factor" => self.monitor.ledger_tolerance_factor = parse_f64(v)?,
            "monitor.abort" => self.monitor.abort_on_hard_failure = parse_bool(v)?,
            "monitor.hard" => {
                let mut h = HardChecks::none();
                for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    match name {
                        "barriers" => h.barriers = true,
                        "gronwall" => h.gronwall = true,
                        "entropy" => h.entropy = true,
                        "dissipation" => h.dissipation = true,
                        "c2_sq" => h.c2_sq = true,
                        "gradient" => h.gradient = true,
                        "ledger" => h.ledger = true,
                        _ => return Err(format!("unknown check {name:?}; known: {}", HARD_NAMES.join(", "))),
                    }
                }
                self.monitor.hard = h;
            }
            "init.c1" => self.init[0] = InitSpec::parse(v)?,
            "init.c2" => self.init[1] = InitSpec::parse(v)?,
            "init.h" => self.init[2] = InitSpec::parse(v)?,
            "init.tau" => self.init[3] = InitSpec::parse(v)?,
            "analysis.saves" => self.saves = parse_usize(v)?,
            "analysis.defeq4" => {
                self.defeq4 = match v {
                    "corrected" => Defeq4Sign::Corrected,
                    "as_printed" => Defeq4Sign::AsPrinted,
                    _ => return Err(format!("expected corrected or as_printed, got {v:?}")),
                }
            }
            "sweep.eps" => self.sweep_eps = parse_list(v, parse_f64)?,
            "convergence.case" => {
                self.convergence_case =
                    ManufacturedCase::parse(v).ok_or_else(|| format!("unknown case {v:?}"))?
            }
            "convergence.levels" => self.convergence_levels = parse_list(v, parse_usize)?,
            "run.mode" => {
                if !MODES.contains(&v) {
                    return Err(format!("unknown mode {v:?}; known: {}", MODES.join(", ")));
                }
                self.mode = v.to_string();
            }
            "output.series" => self.out_series = v.to_string(),
            "output.snapshot" => self.out_snapshot = v.to_string(),
            "output.sweep" => self.out_sweep = v.to_string(),
            "output.weakcheck" => self.out_weakcheck = v.to_string(),
            "output.convergence" => self.out_convergence = v.to_string(),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(&self.cells[..self.dim], &self.lengths[..self.dim])
    }

    pub fn regularization(&self) -> Result<Regularization> {
        Regularization::new(self.eps, self.theta, self.dim())
    }

    pub fn monitor_config(&self) -> MonitorConfig {
        MonitorConfig {
            floor: self.step.floor,
            ..self.monitor
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        Ok(SweepConfig {
            eps_list: self.sweep_eps.clone(),
            theta: self.theta,
            saves: self.saves,
            test_functions: TestFunction::standard_family(self.step.t_end, self.dim())?,
            defeq4: self.defeq4,
        })
    }

    /// Check every invariant of the contained types.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.params.validate()?;
        self.regularization()?;
        self.step.validate()?;
        self.monitor_config().validate()?;
        for (spec, name) in self.init.iter().zip(SPECIES) {
            spec.validate(name)?;
        }
        if self.saves == 0 {
            return Err(Error::validation("analysis.saves = 0", "at least one save interval is needed"));
        }
        self.sweep_config()?.validate(self.dim())?;
        if self.convergence_levels.is_empty() || self.convergence_levels.iter().any(|&l| l < 3) {
            return Err(Error::validation(
                format!("convergence.levels = {}", join(&self.convergence_levels)),
                "levels must be nonempty and each at least 3",
            ));
        }
        Ok(())
    }

    /// Every key with its value, in a form [`parse_config`] reads back.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let m = &self.monitor;
        let hard = [
            m.hard.barriers,
            m.hard.gronwall,
            m.hard.entropy,
            m.hard.dissipation,
            m.hard.c2_sq,
            m.hard.gradient,
            m.hard.ledger,
        ];
        let hard: Vec<&str> = HARD_NAMES.iter().zip(hard).filter(|(_, on)| *on).map(|(n, _)| *n).collect();
        let mut lines = vec![
            format!("grid.dim = {}", self.dim),
            format!("grid.nx = {}", self.cells[0]),
            format!("grid.ny = {}", self.cells[1]),
            format!("grid.lx = {:?}", self.lengths[0]),
            format!("grid.ly = {:?}", self.lengths[1]),
        ];
        for (k, v) in [
            ("a1", p.a1),
            ("a2", p.a2),
            ("b_h", p.b_h),
            ("b_tau", p.b_tau),
            ("beta", p.beta),
            ("gamma1", p.gamma1),
            ("gamma2", p.gamma2),
            ("delta", p.delta),
            ("mu", p.mu),
            ("sigma", p.sigma),
        ] {
            lines.push(format!("model.{k} = {v:?}"));
        }
        lines.push(format!("model.alpha1 = {}", render_transition(&p.alpha1)));
        lines.push(format!("model.alpha2 = {}", render_transition(&p.alpha2)));
        lines.push(format!("reg.eps = {:?}", self.eps));
        lines.push(format!("reg.theta = {}", self.theta));
        lines.push(format!("step.dt_max = {:?}", self.step.dt_max));
        lines.push(format!("step.cfl = {:?}", self.step.cfl_safety));
        lines.push(format!("step.t_end = {:?}", self.step.t_end));
        lines.push(format!("step.floor = {:?}", self.step.floor));
        lines.push(format!("monitor.cadence = {:?}", m.cadence));
        lines.push(format!("monitor.ledger_factor = {:?}", m.ledger_tolerance_factor));
        lines.push(format!("monitor.abort = {}", m.abort_on_hard_failure));
        lines.push(format!("monitor.hard = {}", hard.join(", ")));
        for (spec, name) in self.init.iter().zip(SPECIES) {
            lines.push(format!("init.{name} = {}", spec.render()));
        }
        lines.push(format!("analysis.saves = {}", self.saves));
        lines.push(format!(
            "analysis.defeq4 = {}",
            match self.defeq4 {
                Defeq4Sign::Corrected => "corrected",
                Defeq4Sign::AsPrinted => "as_printed",
            }
        ));
        lines.push(format!("sweep.eps = {}", join(&self.sweep_eps)));
        lines.push(format!("convergence.case = {}", self.convergence_case.name()));
        lines.push(format!("convergence.levels = {}", join(&self.convergence_levels)));
        lines.push(format!("run.mode = {}", self.mode));
        lines.push(format!("output.series = {}", self.out_series));
        lines.push(format!("output.snapshot = {}", self.out_snapshot));
        lines.push(format!("output.sweep = {}", self.out_sweep));
        lines.push(format!("output.weakcheck = {}", self.out_weakcheck));
        lines.push(format!("output.convergence = {}", self.out_convergence));
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }

    /// SHA-256 over every key that influences a trajectory (output paths
    /// and the mode are excluded), hex encoded.
    pub fn hash(&self) -> String {
        let text: String = self
            .to_text()
            .lines()
            .filter(|l| !(l.starts_with("output.") || l.starts_with("run.")))
            .map(|l| format!("{l}\n"))
            .collect();
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, &[])
}

/// [`parse_config`] followed by `key = value` overrides, which may repeat
/// keys of the document. Validation runs once, after the overrides.
pub fn parse_config_with(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, got {line:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate key {key:?}"),
            });
        }
        cfg.set(key, value).map_err(|message| Error::Parse { line: line_no, message })?;
    }
    for (key, value) in overrides {
        cfg.set(key.trim(), value.trim())
            .map_err(|message| Error::Format(format!("override {key}: {message}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Initial state on the configured grid; identical for every `eps`.
pub fn build_initial_state(cfg: &RunConfig) -> Result<State> {
    let g = cfg.grid()?;
    let [c1, c2, h, tau] = cfg.init.map(|spec| spec.sample(&g));
    State::new(c1, c2, h, tau, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::integrate;

    #[test]
    fn empty_document_is_demo() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.to_text(), RunConfig::default().to_text());
        assert_eq!((cfg.dim, cfg.cells[0]), (1, 256));
        assert_eq!(cfg.params, ModelParams::default());
    }

    #[test]
    fn text_round_trip() {
        let src = "grid.dim = 2\ngrid.ny = 40\nmodel.alpha1 = constant 0.7\ninit.c1 = gaussian 0.1 1 0.2 0.3 0.6\n\
                   monitor.hard = gronwall, ledger\nsweep.eps = 0.2, 0.1\n";
        let cfg = parse_config(src).unwrap();
        let again = parse_config(&cfg.to_text()).unwrap();
        assert_eq!(cfg.to_text(), again.to_text());
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(again.grid().unwrap().cells(), &[256, 40]);
        assert!(again.monitor.hard.ledger && !again.monitor.hard.barriers);
    }

    #[test]
    fn hash_ignores_outputs() {
        let a = parse_config("output.series = a.csv").unwrap();
        let b = parse_config("output.series = b.csv\nrun.mode = sweep").unwrap();
        let c = parse_config("model.a1 = 0.06").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn negative_mu_is_rejected() {
        let err = parse_config("model.mu = -1").unwrap_err();
        assert!(matches!(&err, Error::Validation { requirement, .. } if requirement.contains("strictly positive")));
    }

    #[test]
    fn theta_must_exceed_dimension_rule() {
        let err = parse_config("grid.dim = 2\nreg.theta = 2").unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
        assert!(parse_config("grid.dim = 2\nreg.theta = 3").is_ok());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(parse_config("\n\nnonsense"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_config("model.zz = 1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("model.a1 = 1\nmodel.a1 = 2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_config("model.a1 = fast"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn nonpositive_initial_data_is_rejected() {
        let err = parse_config("init.h = cosine 0 0.4 1").unwrap_err();
        assert!(matches!(&err, Error::Validation { requirement, .. } if requirement.contains("strictly positive")));
        assert!(parse_config("init.c1 = constant 0").is_err());
    }

    #[test]
    fn constant_initial_state() {
        let cfg = parse_config(
            "grid.nx = 16\ninit.c1 = constant 0.2\ninit.c2 = constant 0.1\ninit.h = constant 0.5\ninit.tau = constant 0.3",
        )
        .unwrap();
        let s = build_initial_state(&cfg).unwrap();
        for (f, v) in [(&s.c1, 0.2), (&s.c2, 0.1), (&s.h, 0.5), (&s.tau, 0.3)] {
            assert!(f.values().iter().all(|&x| x == v));
        }
    }

    #[test]
    fn cosine_bump_respects_offset() {
        let cfg = parse_config("init.h = cosine 0.1 0.4 1").unwrap();
        let s = build_initial_state(&cfg).unwrap();
        assert!(s.h.min() >= 0.1);
        assert!(s.h.max() <= 0.5);
    }

    #[test]
    fn gaussian_bump_is_positive_with_mass() {
        let cfg = parse_config("grid.dim = 2\ngrid.nx = 32\ngrid.ny = 24\ninit.c1 = gaussian 0.02 1 0.1").unwrap();
        let s = build_initial_state(&cfg).unwrap();
        assert!(integrate(&s.c1) > 0.0);
        assert!(s.c1.min() >= 0.02);
        // Peak sits in the middle of the domain.
        let imax = s.c1.values().iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let (x, y) = s.grid().center(imax);
        assert!((x - 0.5).abs() < 0.05 && (y - 0.5).abs() < 0.05);
    }
}
