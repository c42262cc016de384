//! Closed-form transition maps between the cross-sections and their
//! composition into the first return map to `In(v-)`.
//!
//! All maps work in chart units where the sections have half-width 1
//! (see [`crate::sections::to_unit_epsilon`] and
//! [`Params::to_unit_epsilon`]); `Params::epsilon` is ignored here.
//! With `lambda = alpha + beta` and `delta = (alpha - beta) / lambda`:
//!
//! ```text
//! Phi_v+ (s, y1, w1) = (T1, y1^delta (1 - K1), (w1 + 1) y1^(2/lambda) - 1)
//! Phi_v- (s, x2, w2) = (T2, x2^delta e^(-delta K2), 1 + (w2 - 1) x2^(2/lambda) e^(-2 K2 / lambda))
//! Psi_+- (s, x1, w1) = (s, x1 + a mu, w1)
//! Psi_-+             = identity
//! T1 = s - ln(y1) / lambda,  T2 = s - ln(x2) / lambda + K2 / lambda
//! ```
//!
//! The forcing integrals are
//!
//! ```text
//! K1 = int_s^T1       e^((alpha - beta)(tau - s)) (nu f(2 omega tau) + mu) dtau
//! K2 = int_s^T2(0,0)  e^(-lambda (tau - s))       (nu f(2 omega tau) + mu) dtau
//! ```
//!
//! with `T2(0,0) = s - ln(x2) / lambda`. For the sine they have closed
//! forms; any other forcing goes through adaptive quadrature.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use thiserror::Error;

use crate::model::{Forcing, ForcingKind, Params};
use crate::phase;
use crate::quadrature::{self, QuadratureError, QuadratureOptions};
use crate::sections::{SectionId, SectionPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("{name} = {value} is outside (0, 1]")]
    Domain { name: &'static str, value: f64 },
    #[error("closed form needs the sine forcing; use the quadrature path")]
    UnsupportedForcing,
    #[error("exit coordinate {value} <= 0 (K1 = {k1} >= 1)")]
    NonPositiveExit { value: f64, k1: f64 },
    #[error("intermediate coordinate {name} = {value} left (0, 1)")]
    IntermediateEscape { name: &'static str, value: f64 },
    #[error("expected a point of {expected}, got {found}")]
    WrongSection { expected: SectionId, found: SectionId },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Which neighbourhood a forcing integral belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    /// `K1`, inside `V+`, in terms of `y1`.
    Vplus,
    /// `K2`, inside `V-`, in terms of `x2`.
    Vminus,
}

/// `K = nu h_nu + mu h_mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingIntegral {
    pub k: f64,
    pub h_nu: f64,
    pub h_mu: f64,
}

impl ForcingIntegral {
    fn combine(p: &Params, h_nu: f64, h_mu: f64) -> Self {
        Self {
            k: p.nu() * h_nu + p.mu() * h_mu,
            h_nu,
            h_mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingIntegrals {
    pub k1: ForcingIntegral,
    pub k2: ForcingIntegral,
}

/// Times spent inside the two neighbourhoods during one return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightTimes {
    /// `T1 - s` inside `V+`.
    pub t1_minus_s: f64,
    /// `T2 - s` inside `V-`, first order in `(nu, mu)`.
    pub t2_minus_s: f64,
    /// Unperturbed `T2(0,0) - s = -ln(x2) / lambda`.
    pub t2_zero_minus_s: f64,
}

fn check_unit(name: &'static str, value: f64) -> Result<(), MapError> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(MapError::Domain { name, value })
    }
}

fn expect_section(pt: &SectionPoint, expected: SectionId) -> Result<(), MapError> {
    if pt.section == expected {
        Ok(())
    } else {
        Err(MapError::WrongSection {
            expected,
            found: pt.section,
        })
    }
}

/// `T1 - s = -ln(y1) / (alpha + beta)`.
pub fn flight_time_t1(y1: f64, p: &Params) -> Result<f64, MapError> {
    if !(y1 > 0.0) || !y1.is_finite() {
        return Err(MapError::Domain { name: "y1", value: y1 });
    }
    Ok(-y1.ln() / p.expansion())
}

/// Unperturbed `T2(0,0) - s = -ln(x2) / (alpha + beta)`.
pub fn flight_time_t2_zero(x2: f64, p: &Params) -> Result<f64, MapError> {
    if !(x2 > 0.0) || !x2.is_finite() {
        return Err(MapError::Domain { name: "x2", value: x2 });
    }
    Ok(-x2.ln() / p.expansion())
}

/// `int_s^t_end e^(-rate (tau - s)) sin(2 omega tau) dtau`.
pub fn weighted_sine_integral(rate: f64, s: f64, t_end: f64, omega: f64) -> f64 {
    let w2 = 2.0 * omega;
    let d = rate * rate + w2 * w2;
    let g = |tau: f64, weight: f64| weight * (rate * (w2 * tau).sin() + w2 * (w2 * tau).cos()) / d;
    g(s, 1.0) - g(t_end, (-rate * (t_end - s)).exp())
}

/// `int_0^u e^(-rate tau) dtau`.
pub fn weighted_unit_integral(rate: f64, u: f64) -> f64 {
    if rate == 0.0 {
        u
    } else {
        -(-rate * u).exp_m1() / rate
    }
}

fn leg_rate_and_span(leg: Leg, coord: f64, p: &Params) -> Result<(f64, f64), MapError> {
    match leg {
        Leg::Vplus => Ok((p.beta() - p.alpha(), flight_time_t1(coord, p)?)),
        Leg::Vminus => Ok((p.expansion(), flight_time_t2_zero(coord, p)?)),
    }
}

fn closed_form(leg: Leg, coord: f64, s: f64, p: &Params, f: &Forcing) -> Result<ForcingIntegral, MapError> {
    if f.kind() != ForcingKind::Sine {
        return Err(MapError::UnsupportedForcing);
    }
    let (rate, span) = leg_rate_and_span(leg, coord, p)?;
    let h_nu = weighted_sine_integral(rate, s, s + span, p.omega());
    let h_mu = match leg {
        // (y1^-delta - 1) / (alpha - beta)
        Leg::Vplus => (coord.powf(-p.saddle_value()) - 1.0) / p.contraction(),
        // (1 - x2) / (alpha + beta)
        Leg::Vminus => (1.0 - coord) / p.expansion(),
    };
    Ok(ForcingIntegral::combine(p, h_nu, h_mu))
}

/// `K1` for the sine forcing, with its `(nu, mu)` decomposition.
pub fn k1_closed_form(y1: f64, s: f64, p: &Params, f: &Forcing) -> Result<ForcingIntegral, MapError> {
    closed_form(Leg::Vplus, y1, s, p, f)
}

/// `K2` for the sine forcing, with its `(nu, mu)` decomposition.
pub fn k2_closed_form(x2: f64, s: f64, p: &Params, f: &Forcing) -> Result<ForcingIntegral, MapError> {
    closed_form(Leg::Vminus, x2, s, p, f)
}

/// Quadrature of the defining integrals for any forcing. The oscillatory
/// part is split into forcing periods first.
pub fn k_quadrature(leg: Leg, coord: f64, s: f64, p: &Params, f: &Forcing) -> Result<ForcingIntegral, MapError> {
    let (rate, span) = leg_rate_and_span(leg, coord, p)?;
    let opts = QuadratureOptions::default();
    let omega = p.omega();
    let weight = |tau: f64| (-rate * (tau - s)).exp();
    let h_nu = quadrature::integrate_segmented(
        |tau| weight(tau) * f.at_time(omega, tau),
        s,
        s + span,
        f.period_in_t(omega),
        opts,
    )?
    .value;
    let h_mu = quadrature::integrate(weight, s, s + span, opts)?.value;
    Ok(ForcingIntegral::combine(p, h_nu, h_mu))
}

/// Closed form for the sine, quadrature otherwise. The `nu` part is skipped
/// (reported as zero) when `nu = 0`.
pub fn forcing_integral(leg: Leg, coord: f64, s: f64, p: &Params, f: &Forcing) -> Result<ForcingIntegral, MapError> {
    if f.kind() == ForcingKind::Sine {
        return closed_form(leg, coord, s, p, f);
    }
    if p.nu() == 0.0 {
        let (rate, span) = leg_rate_and_span(leg, coord, p)?;
        return Ok(ForcingIntegral::combine(p, 0.0, weighted_unit_integral(rate, span)));
    }
    k_quadrature(leg, coord, s, p, f)
}

/// `Phi_v+` from `In(v+)` to `Out(v+)`; also returns `K1`.
pub fn local_map_vplus(pt: &SectionPoint, p: &Params, f: &Forcing) -> Result<(SectionPoint, ForcingIntegral), MapError> {
    expect_section(pt, SectionId::InVplus)?;
    let y1 = pt.c1;
    check_unit("y1", y1)?;
    let k1 = forcing_integral(Leg::Vplus, y1, pt.s, p, f)?;
    let t1 = pt.s + flight_time_t1(y1, p)?;
    let x_hat = y1.powf(p.saddle_value()) * (1.0 - k1.k);
    if !(x_hat > 0.0) {
        return Err(MapError::NonPositiveExit { value: x_hat, k1: k1.k });
    }
    let w_hat = (pt.c2 + 1.0) * y1.powf(2.0 / p.expansion()) - 1.0;
    let s = phase::reduce(t1, f.period_in_t(p.omega()));
    Ok((SectionPoint::new(SectionId::OutVplus, x_hat, w_hat, s), k1))
}

/// `T2 - s` to first order in `(nu, mu)`, given `K2`.
pub fn flight_time_t2(x2: f64, k2: f64, p: &Params) -> Result<f64, MapError> {
    Ok(flight_time_t2_zero(x2, p)? + k2 / p.expansion())
}

/// `Phi_v-` from `In(v-)` to `Out(v-)`; also returns `K2` and `T2 - s`.
pub fn local_map_vminus(pt: &SectionPoint, p: &Params, f: &Forcing) -> Result<(SectionPoint, ForcingIntegral, f64), MapError> {
    expect_section(pt, SectionId::InVminus)?;
    let x2 = pt.c1;
    check_unit("x2", x2)?;
    let lambda = p.expansion();
    let delta = p.saddle_value();
    let k2 = forcing_integral(Leg::Vminus, x2, pt.s, p, f)?;
    let t2_minus_s = flight_time_t2(x2, k2.k, p)?;
    let y_hat = x2.powf(delta) * (-delta * k2.k).exp();
    let w_hat = 1.0 + (pt.c2 - 1.0) * x2.powf(2.0 / lambda) * (-2.0 * k2.k / lambda).exp();
    let s = phase::reduce(pt.s + t2_minus_s, f.period_in_t(p.omega()));
    Ok((SectionPoint::new(SectionId::OutVminus, y_hat, w_hat, s), k2, t2_minus_s))
}

/// `Psi_{v+ -> v-}`: `x2 = x1_hat + a mu`, phase and `w` unchanged.
pub fn global_map_plus_to_minus(pt: &SectionPoint, p: &Params) -> Result<SectionPoint, MapError> {
    expect_section(pt, SectionId::OutVplus)?;
    Ok(SectionPoint::new(SectionId::InVminus, pt.c1 + p.a() * p.mu(), pt.c2, pt.s))
}

/// `Psi_{v- -> v+}`: the identity in chart coordinates.
pub fn global_map_minus_to_plus(pt: &SectionPoint) -> Result<SectionPoint, MapError> {
    expect_section(pt, SectionId::OutVminus)?;
    Ok(SectionPoint::new(SectionId::InVplus, pt.c1, pt.c2, pt.s))
}

/// One application of the return map with every intermediate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticReturn {
    /// Arrival on `In(v-)`, phase reduced.
    pub arrival: SectionPoint,
    /// Total return time (not reduced).
    pub elapsed: f64,
    pub times: FlightTimes,
    pub integrals: ForcingIntegrals,
    pub out_vminus: SectionPoint,
    pub in_vplus: SectionPoint,
    pub out_vplus: SectionPoint,
}

/// `R = Psi_+- . Phi_v+ . Psi_-+ . Phi_v-`.
///
/// The transverse coordinate `y1` entering `V+` must stay in `(0, 1)`; the
/// `w` coordinates are not range checked.
pub fn compose_return(pt: &SectionPoint, p: &Params, f: &Forcing) -> Result<AnalyticReturn, MapError> {
    let (out_vminus, k2, t2_minus_s) = local_map_vminus(pt, p, f)?;
    let in_vplus = global_map_minus_to_plus(&out_vminus)?;
    if !(in_vplus.c1 > 0.0 && in_vplus.c1 < 1.0) {
        return Err(MapError::IntermediateEscape {
            name: "y1",
            value: in_vplus.c1,
        });
    }
    let (out_vplus, k1) = local_map_vplus(&in_vplus, p, f)?;
    let arrival = global_map_plus_to_minus(&out_vplus, p)?;
    let t1_minus_s = flight_time_t1(in_vplus.c1, p)?;
    Ok(AnalyticReturn {
        arrival,
        elapsed: t2_minus_s + t1_minus_s,
        times: FlightTimes {
            t1_minus_s,
            t2_minus_s,
            t2_zero_minus_s: flight_time_t2_zero(pt.c1, p)?,
        },
        integrals: ForcingIntegrals { k1, k2 },
        out_vminus,
        in_vplus,
        out_vplus,
    })
}

/// `K2 = mu (1 - x2) / (alpha + beta)`, the `nu = 0` value.
pub fn averaged_k2(x2: f64, p: &Params) -> f64 {
    p.mu() * (1.0 - x2) / p.expansion()
}

/// `h2(x2)` of the averaged return map.
pub fn h2(x2: f64, p: &Params) -> f64 {
    let d2 = p.saddle_value() * p.saddle_value();
    let m = p.mu() / p.contraction();
    let core = if x2 == 0.0 { 0.0 } else { x2.powf(d2) * (-d2 * averaged_k2(x2, p)).exp() };
    core * (1.0 - m) - m + p.a() * p.mu()
}

/// `h3 = C1(x2) + C2(x2) w2`; returns `(C1, C2)`.
pub fn c1_c2(x2: f64, p: &Params) -> (f64, f64) {
    let lambda = p.expansion();
    let delta = p.saddle_value();
    let k2 = averaged_k2(x2, p);
    if x2 == 0.0 {
        return (0.0, 0.0);
    }
    let a = x2.powf(2.0 / lambda) * (-2.0 * k2 / lambda).exp();
    let b = (x2.powf(delta) * (-delta * k2).exp()).powf(2.0 / lambda);
    ((2.0 - a) * b, a * b)
}

/// `C2(x2) = x2^((2 + 2 delta) / lambda) exp(-2 K2 (1 + delta) / lambda)`.
pub fn contraction_c2(x2: f64, p: &Params) -> f64 {
    let lambda = p.expansion();
    let delta = p.saddle_value();
    if x2 == 0.0 {
        return 0.0;
    }
    x2.powf((2.0 + 2.0 * delta) / lambda) * (-2.0 * averaged_k2(x2, p) * (1.0 + delta) / lambda).exp()
}

/// `h3(x2, w2)`; independent of the phase.
pub fn h3(x2: f64, w2: f64, p: &Params) -> f64 {
    let lambda = p.expansion();
    let delta = p.saddle_value();
    let k2 = averaged_k2(x2, p);
    (2.0 + (w2 - 1.0) * x2.powf(2.0 / lambda) * (-2.0 * k2 / lambda).exp())
        * (x2.powf(delta) * (-delta * k2).exp()).powf(2.0 / lambda)
}

/// `h1(s, x2) = s - (1 + delta) ln(x2) / lambda + K2 (1 + delta) / lambda`
/// (phase not reduced).
pub fn h1(s: f64, x2: f64, p: &Params) -> f64 {
    let lambda = p.expansion();
    let delta = p.saddle_value();
    s - (1.0 + delta) * x2.ln() / lambda + averaged_k2(x2, p) * (1.0 + delta) / lambda
}

/// The averaged return map `R_(0,mu) = (h1, h2, h3)`; `nu` is ignored.
/// `h1` is returned without phase reduction.
pub fn reduced_h(pt: &SectionPoint, p: &Params) -> Result<(f64, f64, f64), MapError> {
    expect_section(pt, SectionId::InVminus)?;
    check_unit("x2", pt.c1)?;
    let x2 = pt.c1;
    Ok((h1(pt.s, x2, p), h2(x2, p), h3(x2, pt.c2, p)))
}
