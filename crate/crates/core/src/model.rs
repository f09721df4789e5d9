//! Parameters and pointwise nonlinearities of the four-species system.
//!
//! Species: `c1` (mesenchymal stem cells), `c2` (chondrocytes), `h`
//! (hyaluron bound to the scaffold) and `tau` (newly produced ECM). Everything
//! here is a pure function of its arguments.

use crate::error::{Error, Result};

/// Shape of a transition rate `α(τ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransitionForm {
    /// `α(z) = a`
    Constant { a: f64 },
    /// `α(z) = a + b·z/(1+z)`
    Saturating { a: f64, b: f64 },
}

/// A bounded, strictly positive (de)differentiation rate with its cap `M_α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionFn {
    form: TransitionForm,
    cap: f64,
}

impl TransitionFn {
    pub fn constant(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::validation(
                "transition rate",
                format!("constant rate must be finite and strictly positive, got {a}"),
            ));
        }
        Ok(Self {
            form: TransitionForm::Constant { a },
            cap: a,
        })
    }

    /// Saturating rate; its supremum over `z ≥ 0` is `a + b`, which is the cap.
    pub fn saturating(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite() && b >= 0.0) {
            return Err(Error::validation(
                "transition rate",
                format!("saturating rate needs a > 0 and b >= 0, got a={a}, b={b}"),
            ));
        }
        Ok(Self {
            form: TransitionForm::Saturating { a, b },
            cap: a + b,
        })
    }

    /// Identically zero rate. Only meant for decoupled verification runs;
    /// [`ModelParams::validate`] rejects it.
    pub fn disabled() -> Self {
        Self {
            form: TransitionForm::Constant { a: 0.0 },
            cap: 0.0,
        }
    }

    pub fn form(&self) -> TransitionForm {
        self.form
    }

    /// `M_α`, an upper bound of the rate on `z ≥ 0`.
    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// Unchecked evaluation for `z ≥ 0`.
    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match self.form {
            TransitionForm::Constant { a } => a,
            TransitionForm::Saturating { a, b } => a + b * z / (1.0 + z),
        }
    }

    fn is_positive(&self) -> bool {
        match self.form {
            TransitionForm::Constant { a } => a > 0.0,
            TransitionForm::Saturating { a, b } => a > 0.0 && b >= 0.0,
        }
    }
}

/// Evaluate a transition rate, rejecting negative arguments.
pub fn alpha_eval(f: &TransitionFn, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!(
            "transition rate evaluated at z={z}; needs z >= 0"
        )));
    }
    Ok(f.value(z))
}

/// Physical constants of the model.
///
/// Fields are public plain data. [`ModelParams::validate`] enforces the
/// strict positivity the model requires; the stepper itself only needs
/// [`ModelParams::check_admissible`], which lets verification runs switch
/// individual couplings off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Stem cell diffusivity.
    pub a1: f64,
    /// Chondrocyte diffusivity.
    pub a2: f64,
    /// Haptotactic sensitivity towards hyaluron.
    pub b_h: f64,
    /// Haptotactic sensitivity towards ECM.
    pub b_tau: f64,
    /// Logistic proliferation rate of stem cells.
    pub beta: f64,
    /// Hyaluron uptake by stem cells.
    pub gamma1: f64,
    /// Hyaluron uptake by chondrocytes.
    pub gamma2: f64,
    /// ECM degradation by stem cells.
    pub delta: f64,
    /// Hyaluron decay.
    pub mu: f64,
    /// ECM decay.
    pub sigma: f64,
    /// Differentiation rate (stem cell to chondrocyte).
    pub alpha1: TransitionFn,
    /// Dedifferentiation rate (chondrocyte to stem cell).
    pub alpha2: TransitionFn,
}

impl Default for ModelParams {
    /// The demo parameter set used by the default configuration.
    fn default() -> Self {
        Self {
            a1: 0.05,
            a2: 0.02,
            b_h: 0.2,
            b_tau: 0.1,
            beta: 1.0,
            gamma1: 1.0,
            gamma2: 0.5,
            delta: 1.0,
            mu: 0.5,
            sigma: 0.5,
            alpha1: TransitionFn {
                form: TransitionForm::Saturating { a: 0.2, b: 0.4 },
                cap: 0.6,
            },
            alpha2: TransitionFn {
                form: TransitionForm::Constant { a: 0.3 },
                cap: 0.3,
            },
        }
    }
}

impl ModelParams {
    /// Every coupling switched off: zero diffusion, taxis, reactions and
    /// transitions. Used as a starting point for decoupled verification runs.
    pub fn zeroed() -> Self {
        Self {
            a1: 0.0,
            a2: 0.0,
            b_h: 0.0,
            b_tau: 0.0,
            beta: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            delta: 0.0,
            mu: 0.0,
            sigma: 0.0,
            alpha1: TransitionFn::disabled(),
            alpha2: TransitionFn::disabled(),
        }
    }

    pub(crate) fn scalars(&self) -> [(&'static str, f64); 10] {
        [
            ("a1", self.a1),
            ("a2", self.a2),
            ("b_h", self.b_h),
            ("b_tau", self.b_tau),
            ("beta", self.beta),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("delta", self.delta),
            ("mu", self.mu),
            ("sigma", self.sigma),
        ]
    }

    /// All constants strictly positive and both transition rates positive
    /// and bounded.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.scalars() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(
                    format!("model.{name} = {v}"),
                    "all model parameters must be finite and strictly positive",
                ));
            }
        }
        for (name, f) in [("alpha1", &self.alpha1), ("alpha2", &self.alpha2)] {
            if !f.is_positive() || !(f.cap.is_finite() && f.cap > 0.0) {
                return Err(Error::validation(
                    format!("model.{name}"),
                    "transition rates must be strictly positive and bounded by a finite cap",
                ));
            }
        }
        Ok(())
    }

    /// Weaker check used by the stepper: finite and nonnegative.
    pub fn check_admissible(&self) -> Result<()> {
        for (name, v) in self.scalars() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(
                    format!("model.{name} = {v}"),
                    "parameters must be finite and nonnegative",
                ));
            }
        }
        Ok(())
    }
}

/// Strength `eps` of the regularization and the damping exponent `theta`.
///
/// `eps = 0` is the unregularized limit system and can only be built with
/// [`Regularization::limit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regularization {
    eps: f64,
    theta: u32,
}

/// Default damping exponent: the smallest even integer above `max(2, n)` for
/// every supported dimension.
pub const DEFAULT_THETA: u32 = 4;

impl Regularization {
    pub fn new(eps: f64, theta: u32, dim: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::validation(
                format!("reg.eps = {eps}"),
                "the regularization strength must lie in (0, 1)",
            ));
        }
        Self::check_theta(theta, dim)?;
        Ok(Self { eps, theta })
    }

    /// The limit system (`eps = 0`): no artificial diffusion, no damping and
    /// `F_0(s) = s`.
    pub fn limit(theta: u32, dim: usize) -> Result<Self> {
        Self::check_theta(theta, dim)?;
        Ok(Self { eps: 0.0, theta })
    }

    fn check_theta(theta: u32, dim: usize) -> Result<()> {
        let floor = dim.max(2) as u32;
        if theta <= floor {
            return Err(Error::validation(
                format!("reg.theta = {theta}"),
                format!("the damping exponent must satisfy theta > max(2, n) = {floor} for n = {dim}"),
            ));
        }
        Ok(())
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn theta(&self) -> u32 {
        self.theta
    }

    pub fn is_limit(&self) -> bool {
        self.eps == 0.0
    }
}

/// `x^n` by repeated squaring.
#[inline]
pub fn pow_int(x: f64, mut n: u32) -> f64 {
    let mut base = x;
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}

/// The saturation `s/(1+eps·s)` without argument checks. `eps = 0` gives `s`.
#[inline]
pub fn saturate(eps: f64, s: f64) -> f64 {
    let v = s / (1.0 + eps * s);
    // The exact value is strictly below 1/eps; rounding may reach it.
    if eps > 0.0 && v >= 1.0 / eps {
        (1.0 / eps).next_down()
    } else {
        v
    }
}

/// `F_eps(s) = s/(1+eps·s)` for `eps ∈ (0,1)` and `s ≥ 0`.
pub fn f_eps(eps: f64, s: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("F_eps needs eps in (0,1), got {eps}")));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("F_eps needs s >= 0, got {s}")));
    }
    Ok(saturate(eps, s))
}

/// Bounded production `c2/(1+c2)` of hyaluron and ECM by chondrocytes.
#[inline]
pub fn production(c2: f64) -> f64 {
    c2 / (1.0 + c2)
}

/// Non-transport right-hand sides of the four equations at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReactionRates {
    pub r_c1: f64,
    pub r_c2: f64,
    pub r_h: f64,
    pub r_tau: f64,
}

/// Pointwise reaction terms of the regularized system.
pub fn reaction_rhs(
    p: &ModelParams,
    reg: &Regularization,
    c1: f64,
    c2: f64,
    h: f64,
    tau: f64,
) -> Result<ReactionRates> {
    for (name, v) in [("c1", c1), ("c2", c2), ("h", h), ("tau", tau)] {
        if !(v >= 0.0) {
            return Err(Error::Domain(format!("reaction_rhs needs {name} >= 0, got {v}")));
        }
    }
    Ok(reaction_rhs_unchecked(p, reg, c1, c2, h, tau))
}

#[inline]
pub(crate) fn reaction_rhs_unchecked(
    p: &ModelParams,
    reg: &Regularization,
    c1: f64,
    c2: f64,
    h: f64,
    tau: f64,
) -> ReactionRates {
    let eps = reg.eps();
    let to_c2 = p.alpha1.value(tau) * c1;
    let to_c1 = p.alpha2.value(tau) * saturate(eps, c2);
    let logistic = p.beta * c1 * (1.0 - c1 - c2 - tau);
    let damping = eps * pow_int(c1, reg.theta());
    let prod = production(c2);
    ReactionRates {
        r_c1: -to_c2 + to_c1 + logistic - damping,
        r_c2: to_c2 - to_c1,
        r_h: -p.gamma1 * h * c1 - p.gamma2 * h * c2 - p.mu * h + prod,
        r_tau: -p.delta * tau * c1 - p.sigma * tau + prod,
    }
}

/// Production/destruction split of the reaction terms at one point, frozen at
/// the pre-step state. Every coefficient is nonnegative, so the stepper can
/// treat destruction linearly implicitly without losing positivity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalCoefficients {
    /// `α₁(τ)`: per-capita flow c1 → c2.
    pub differentiation: f64,
    /// `α₂(τ)/(1+eps·c2)`: per-capita flow c2 → c1, so that times `c2` it is `α₂F_eps(c2)`.
    pub dedifferentiation: f64,
    /// `β`: per-capita growth of c1.
    pub growth: f64,
    /// `β(c1+c2+τ) + eps·c1^(θ-1)`: per-capita loss of c1 besides differentiation.
    pub c1_loss: f64,
    /// `c2/(1+c2)`: production of h and τ.
    pub production: f64,
    /// `γ₁c1 + γ₂c2 + μ`
    pub h_loss: f64,
    /// `δc1 + σ`
    pub tau_loss: f64,
}

#[inline]
pub fn local_coefficients(
    p: &ModelParams,
    reg: &Regularization,
    c1: f64,
    c2: f64,
    _h: f64,
    tau: f64,
) -> LocalCoefficients {
    let eps = reg.eps();
    let damping = if eps > 0.0 {
        eps * pow_int(c1, reg.theta() - 1)
    } else {
        0.0
    };
    LocalCoefficients {
        differentiation: p.alpha1.value(tau),
        dedifferentiation: p.alpha2.value(tau) / (1.0 + eps * c2),
        growth: p.beta,
        c1_loss: p.beta * (c1 + c2 + tau) + damping,
        production: production(c2),
        h_loss: p.gamma1 * c1 + p.gamma2 * c2 + p.mu,
        tau_loss: p.delta * c1 + p.sigma,
    }
}

impl LocalCoefficients {
    /// Largest per-capita destruction rate over the four species.
    pub fn max_loss(&self) -> f64 {
        (self.differentiation + self.c1_loss)
            .max(self.dedifferentiation)
            .max(self.h_loss)
            .max(self.tau_loss)
    }
}
