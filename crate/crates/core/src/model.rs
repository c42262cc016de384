//! The forced vector field, its parameters, symmetries and equilibria.
//!
//! ```text
//! x' = x(1 - r^2) - a x z + b x z^2 + (1 - x)(nu f(2 omega t) + mu)
//! y' = y(1 - r^2) + a y z + b y z^2
//! z' = z(1 - r^2) - a (y^2 - x^2) - b z (x^2 + y^2)
//! ```
//!
//! with `a = alpha > 0 > beta = b`, `|beta| < alpha`. The suspension adds
//! `s' = 1` with `s` on the circle of length `T_f`, the period of
//! `t -> f(2 omega t)`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use thiserror::Error;

use crate::phase;
use crate::quadrature::{self, QuadratureOptions};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter {name} is not finite")]
    NonFinite { name: &'static str },
    #[error("alpha must be positive, got {0}")]
    AlphaNotPositive(f64),
    #[error("beta must be negative, got {0}")]
    BetaNotNegative(f64),
    #[error("|beta| must be smaller than alpha (beta = {beta}, alpha = {alpha})")]
    BetaTooLarge { alpha: f64, beta: f64 },
    #[error("amplitude {name} must be nonnegative, got {value}")]
    NegativeAmplitude { name: &'static str, value: f64 },
    #[error("omega must be positive, got {0}")]
    OmegaNotPositive(f64),
    #[error("global-map coefficient a must be positive, got {0}")]
    ANotPositive(f64),
    #[error("epsilon must lie in (0, 1], got {0}")]
    EpsilonOutOfRange(f64),
}

/// Advisory findings that do not invalidate a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamWarning {
    /// `nu + mu` exceeds `0.1 epsilon`; the linearised maps are suspect.
    LargePerturbation { nu_plus_mu: f64, limit: f64 },
}

impl fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamWarning::LargePerturbation { nu_plus_mu, limit } => write!(
                f,
                "nu + mu = {nu_plus_mu} exceeds 0.1 * epsilon = {limit}; linearised maps may be inaccurate"
            ),
        }
    }
}

/// The full parameter set. Construction validates the admissibility
/// inequalities, so every `Params` value satisfies `beta < 0 < alpha`,
/// `|beta| < alpha`, `nu, mu >= 0`, `omega > 0`, `a > 0` and
/// `0 < epsilon <= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    alpha: f64,
    beta: f64,
    nu: f64,
    mu: f64,
    omega: f64,
    a: f64,
    epsilon: f64,
}

impl Default for Params {
    /// `alpha = 1`, `beta = -0.2`, `a = 1`, `epsilon = 0.1`, unperturbed,
    /// `omega = 1`.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: -0.2,
            nu: 0.0,
            mu: 0.0,
            omega: 1.0,
            a: 1.0,
            epsilon: 0.1,
        }
    }
}

impl Params {
    pub fn new(alpha: f64, beta: f64, nu: f64, mu: f64, omega: f64, a: f64, epsilon: f64) -> Result<Self, ParamError> {
        let p = Self {
            alpha,
            beta,
            nu,
            mu,
            omega,
            a,
            epsilon,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), ParamError> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("nu", self.nu),
            ("mu", self.mu),
            ("omega", self.omega),
            ("a", self.a),
            ("epsilon", self.epsilon),
        ] {
            if !v.is_finite() {
                return Err(ParamError::NonFinite { name });
            }
        }
        if !(self.alpha > 0.0) {
            return Err(ParamError::AlphaNotPositive(self.alpha));
        }
        if !(self.beta < 0.0) {
            return Err(ParamError::BetaNotNegative(self.beta));
        }
        if !(self.beta.abs() < self.alpha) {
            return Err(ParamError::BetaTooLarge {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        if self.nu < 0.0 {
            return Err(ParamError::NegativeAmplitude {
                name: "nu",
                value: self.nu,
            });
        }
        if self.mu < 0.0 {
            return Err(ParamError::NegativeAmplitude {
                name: "mu",
                value: self.mu,
            });
        }
        if !(self.omega > 0.0) {
            return Err(ParamError::OmegaNotPositive(self.omega));
        }
        if !(self.a > 0.0) {
            return Err(ParamError::ANotPositive(self.a));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(ParamError::EpsilonOutOfRange(self.epsilon));
        }
        Ok(())
    }

    pub fn with_alpha_beta(self, alpha: f64, beta: f64) -> Result<Self, ParamError> {
        Self { alpha, beta, ..self }.validated()
    }
    pub fn with_nu(self, nu: f64) -> Result<Self, ParamError> {
        Self { nu, ..self }.validated()
    }
    pub fn with_mu(self, mu: f64) -> Result<Self, ParamError> {
        Self { mu, ..self }.validated()
    }
    pub fn with_omega(self, omega: f64) -> Result<Self, ParamError> {
        Self { omega, ..self }.validated()
    }
    pub fn with_a(self, a: f64) -> Result<Self, ParamError> {
        Self { a, ..self }.validated()
    }
    pub fn with_epsilon(self, epsilon: f64) -> Result<Self, ParamError> {
        Self { epsilon, ..self }.validated()
    }

    fn validated(self) -> Result<Self, ParamError> {
        self.check().map(|_| self)
    }

    /// Same parameters with `nu = mu = 0`.
    pub fn unperturbed(self) -> Self {
        Self {
            nu: 0.0,
            mu: 0.0,
            ..self
        }
    }

    /// The averaged system: same parameters with `nu = 0`.
    pub fn averaged(self) -> Self {
        Self { nu: 0.0, ..self }
    }

    /// Parameters in the chart units where the cross-sections have
    /// half-width 1: `nu / epsilon`, `mu / epsilon`, `epsilon = 1`.
    /// The remaining coefficients are scale-free.
    pub fn to_unit_epsilon(self) -> Self {
        Self {
            nu: self.nu / self.epsilon,
            mu: self.mu / self.epsilon,
            epsilon: 1.0,
            ..self
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Expanding eigenvalue `alpha + beta` at either equilibrium.
    pub fn expansion(&self) -> f64 {
        self.alpha + self.beta
    }

    /// Magnitude `alpha - beta` of the contracting tangential eigenvalue.
    pub fn contraction(&self) -> f64 {
        self.alpha - self.beta
    }

    /// Saddle value `delta = (alpha - beta) / (alpha + beta) > 1`.
    pub fn saddle_value(&self) -> f64 {
        saddle_value(self)
    }

    /// `4 alpha / (alpha + beta)^2`; the `w` contraction of the reduced map
    /// needs this above 1.
    pub fn contraction_ratio(&self) -> f64 {
        4.0 * self.alpha / (self.expansion() * self.expansion())
    }

    pub fn warnings(&self) -> Vec<ParamWarning> {
        let mut out = Vec::new();
        let limit = 0.1 * self.epsilon;
        if self.nu + self.mu > limit {
            out.push(ParamWarning::LargePerturbation {
                nu_plus_mu: self.nu + self.mu,
                limit,
            });
        }
        out
    }
}

/// `delta = (alpha - beta) / (alpha + beta)`.
pub fn saddle_value(p: &Params) -> f64 {
    p.contraction() / p.expansion()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingKind {
    Sine,
    Custom,
}

/// The periodic forcing `f`. The field sees `t -> f(2 omega t)`.
#[derive(Clone)]
pub struct Forcing {
    kind: ForcingKind,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    period: f64,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Forcing")
            .field("kind", &self.kind)
            .field("period", &self.period)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForcingError {
    #[error("forcing period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("forcing mean over one period is {0}, not zero")]
    NonZeroMean(f64),
    #[error("forcing is constant over its period")]
    Constant,
    #[error("forcing returned a non-finite value")]
    NonFinite,
}

/// Tolerance on the period mean of a custom forcing.
pub const ZERO_MEAN_TOL: f64 = 1e-10;

impl Forcing {
    pub fn sine() -> Self {
        Self {
            kind: ForcingKind::Sine,
            func: Arc::new(|u: f64| u.sin()),
            period: 2.0 * core::f64::consts::PI,
        }
    }

    /// A user-supplied forcing with minimal period `period` in its own
    /// argument. Zero mean and non-constancy are checked here.
    pub fn custom<F>(func: F, period: f64) -> Result<Self, ForcingError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(period > 0.0 && period.is_finite()) {
            return Err(ForcingError::BadPeriod(period));
        }
        let forcing = Self {
            kind: ForcingKind::Custom,
            func: Arc::new(func),
            period,
        };
        let mean = forcing.mean_over_period().map_err(|_| ForcingError::NonFinite)?;
        if mean.abs() > ZERO_MEAN_TOL {
            return Err(ForcingError::NonZeroMean(mean));
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..512 {
            let v = forcing.eval(period * i as f64 / 512.0);
            if !v.is_finite() {
                return Err(ForcingError::NonFinite);
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(hi - lo > 0.0) {
            return Err(ForcingError::Constant);
        }
        Ok(forcing)
    }

    pub fn kind(&self) -> ForcingKind {
        self.kind
    }

    /// Period of `f` in its own argument (`2 pi` for the sine).
    pub fn period(&self) -> f64 {
        self.period
    }

    /// `f(u)`.
    pub fn eval(&self, u: f64) -> f64 {
        (self.func)(u)
    }

    /// `f(2 omega t)`.
    pub fn at_time(&self, omega: f64, t: f64) -> f64 {
        self.eval(2.0 * omega * t)
    }

    /// `T_f`, the period of `t -> f(2 omega t)`; `pi / omega` for the sine.
    pub fn period_in_t(&self, omega: f64) -> f64 {
        self.period / (2.0 * omega)
    }

    /// Mean of `f` over one period.
    pub fn mean_over_period(&self) -> Result<f64, quadrature::QuadratureError> {
        let e = quadrature::integrate(|u| self.eval(u), 0.0, self.period, QuadratureOptions::default())?;
        Ok(e.value / self.period)
    }

    /// Integral of `t -> f(2 omega t)` over `[0, T_f]`.
    pub fn integral_over_period_in_t(&self, omega: f64) -> Result<f64, quadrature::QuadratureError> {
        let tf = self.period_in_t(omega);
        quadrature::integrate(|t| self.at_time(omega, t), 0.0, tf, QuadratureOptions::default()).map(|e| e.value)
    }
}

/// A point of the suspended phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Forcing phase in `[0, T_f)`.
    pub s: f64,
}

impl State {
    pub fn new(x: f64, y: f64, z: f64, s: f64) -> Self {
        Self { x, y, z, s }
    }

    /// A state with its phase reduced onto the circle of length `period`.
    pub fn with_reduced_phase(x: f64, y: f64, z: f64, t: f64, period: f64) -> Self {
        Self {
            x,
            y,
            z,
            s: phase::reduce(t, period),
        }
    }

    pub fn point(&self) -> Vec3 {
        [self.x, self.y, self.z]
    }

    pub fn radius(&self) -> f64 {
        norm(self.point())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.s.is_finite()
    }
}

pub(crate) fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// The unperturbed field `F_(0,0)` for arbitrary coefficients. Unlike
/// [`Params`], no admissibility is required (e.g. `beta = 0` is allowed).
pub fn unperturbed_field(alpha: f64, beta: f64, pt: Vec3) -> Vec3 {
    let [x, y, z] = pt;
    let r2 = x * x + y * y + z * z;
    let radial = 1.0 - r2;
    [
        x * radial - alpha * x * z + beta * x * z * z,
        y * radial + alpha * y * z + beta * y * z * z,
        z * radial - alpha * (y * y - x * x) - beta * z * (x * x + y * y),
    ]
}

/// The perturbed field at time `t` (only the phase of `t` matters).
pub fn field_at(p: &Params, f: &Forcing, pt: Vec3, t: f64) -> Vec3 {
    let mut v = unperturbed_field(p.alpha, p.beta, pt);
    if p.nu != 0.0 || p.mu != 0.0 {
        v[0] += (1.0 - pt[0]) * (p.nu * f.at_time(p.omega, t) + p.mu);
    }
    v
}

/// Right-hand side of the suspended system: `(x', y', z', s')` with `s' = 1`.
pub fn eval_field(p: &Params, f: &Forcing, st: &State) -> [f64; 4] {
    let [dx, dy, dz] = field_at(p, f, st.point(), st.s);
    [dx, dy, dz, 1.0]
}

/// The two saddles `v+ = (0, 0, 1)` and `v- = (0, 0, -1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Equilibrium {
    Plus,
    Minus,
}

impl Equilibrium {
    pub fn sigma(self) -> f64 {
        match self {
            Equilibrium::Plus => 1.0,
            Equilibrium::Minus => -1.0,
        }
    }

    pub fn point(self) -> Vec3 {
        [0.0, 0.0, self.sigma()]
    }
}

/// `DF_(0,0)(v_sigma) = diag(beta - sigma alpha, beta + sigma alpha, -2)`.
pub fn jacobian_at_equilibrium(p: &Params, eq: Equilibrium) -> [[f64; 3]; 3] {
    let sigma = eq.sigma();
    [
        [p.beta - sigma * p.alpha, 0.0, 0.0],
        [0.0, p.beta + sigma * p.alpha, 0.0],
        [0.0, 0.0, -2.0],
    ]
}

/// Generators of the symmetry group `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// `(x, y, z) -> (-y, x, -z)`, order 4.
    Kappa1,
    /// `(x, y, z) -> (x, -y, z)`, order 2.
    Kappa2,
}

impl Generator {
    pub fn apply(self, [x, y, z]: Vec3) -> Vec3 {
        match self {
            Generator::Kappa1 => [-y, x, -z],
            Generator::Kappa2 => [x, -y, z],
        }
    }
}

/// Applies a word in the generators, leftmost letter first.
pub fn apply_symmetry(word: &[Generator], pt: Vec3) -> Vec3 {
    word.iter().fold(pt, |acc, g| g.apply(acc))
}

/// `grad g . F_(0,0)` for `g(x, y, z) = (x - y)^2 + z^2`. Zero on the unit
/// sphere when `beta = 0`.
pub fn lie_derivative_g(alpha: f64, beta: f64, pt: Vec3) -> f64 {
    let [x, y, z] = pt;
    let v = unperturbed_field(alpha, beta, pt);
    let d = 2.0 * (x - y);
    d * v[0] - d * v[1] + 2.0 * z * v[2]
}
