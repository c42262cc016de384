//! Experiments on the return maps: the fixed point of the averaged map and
//! the period of the orbit it represents, the high-frequency convergence
//! study, analytic-versus-numeric comparisons and calibration of the
//! global-map offset `a`.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use thiserror::Error;

use crate::analytic_maps::{self, MapError};
use crate::fit::{self, FitError, FitResult};
use crate::integrator::{self, EventSpec, IntegrationError, IntegratorConfig};
use crate::model::{Forcing, Params};
use crate::phase;
use crate::sections::{self, SectionId, SectionPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no positive fixed point: h2(0) = {h2_at_zero} <= 0")]
    NoPositiveFixedPoint { h2_at_zero: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("sample grid is empty")]
    GridEmpty,
    #[error("not enough usable data: {0} points")]
    InsufficientData(usize),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointResult {
    pub x_star: f64,
    pub w_star: f64,
    /// `|h2(x*) - x*|`.
    pub residual: f64,
    /// `h2'(x*)`, central difference.
    pub derivative_at_fp: f64,
    pub iterations: usize,
}

fn h2_derivative(x: f64, p: &Params) -> f64 {
    let h = 1e-6 * x.max(1e-8);
    let lo = (x - h).max(0.0);
    (analytic_maps::h2(x + h, p) - analytic_maps::h2(lo, p)) / (x + h - lo)
}

/// Attracting fixed point `x*` of `h2` and the matching `w*` of the affine
/// map `w -> C1(x*) + C2(x*) w`. `nu` is ignored.
///
/// Newton's method on `h2(x) - x` starts from `h2(0) = mu (a - 1/(alpha -
/// beta))`, which is positive exactly when the fixed point is. If Newton
/// leaves `(0, 1)` or stalls, plain iteration of `h2` takes over; `h2` lies
/// below the diagonal and increases on `(x*, 1)`, so it converges
/// monotonically.
pub fn find_fixed_point_h2(p: &Params) -> Result<FixedPointResult, AnalysisError> {
    let p = p.averaged();
    if p.mu() == 0.0 {
        return Ok(FixedPointResult {
            x_star: 0.0,
            w_star: 0.0,
            residual: analytic_maps::h2(0.0, &p).abs(),
            derivative_at_fp: 0.0,
            iterations: 0,
        });
    }
    let h0 = analytic_maps::h2(0.0, &p);
    if !(h0 > 0.0) {
        return Err(AnalysisError::NoPositiveFixedPoint { h2_at_zero: h0 });
    }
    let g = |x: f64| analytic_maps::h2(x, &p) - x;
    let tol = 1e-15;
    let mut x = h0;
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..60 {
        iterations += 1;
        let gx = g(x);
        if gx.abs() <= tol * x.max(1e-300) || gx == 0.0 {
            converged = true;
            break;
        }
        let d = h2_derivative(x, &p) - 1.0;
        let next = x - gx / d;
        if !(next > 0.0 && next < 1.0) || !next.is_finite() {
            break;
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            x = next;
            converged = true;
            break;
        }
        x = next;
    }
    if !converged {
        x = h0;
        for _ in 0..100_000 {
            iterations += 1;
            let next = analytic_maps::h2(x, &p);
            if (next - x).abs() <= 4.0 * f64::EPSILON * x {
                x = next;
                converged = true;
                break;
            }
            x = next;
        }
    }
    let residual = g(x).abs();
    if !converged || !(residual < 1e-12) {
        return Err(AnalysisError::NonConvergence { iterations, residual });
    }
    let (c1, c2) = analytic_maps::c1_c2(x, &p);
    if !(c2.abs() < 1.0) {
        return Err(AnalysisError::Precondition("C2(x*) must be below 1"));
    }
    Ok(FixedPointResult {
        x_star: x,
        w_star: c1 / (1.0 - c2),
        residual,
        derivative_at_fp: h2_derivative(x, &p),
        iterations,
    })
}

/// Period of the attracting orbit of the averaged flow: `h1(s, x*, w*) - s`.
pub fn periodic_orbit_period(p: &Params) -> Result<f64, AnalysisError> {
    if !(p.mu() > 0.0) {
        return Err(AnalysisError::Precondition("mu must be positive"));
    }
    let fp = find_fixed_point_h2(p)?;
    Ok(analytic_maps::h1(0.0, fp.x_star, &p.averaged()))
}

/// Fits `P` against `ln(1/mu)`; returns the fit and the `(mu, x*, P)` rows.
pub fn period_scan(p: &Params, mus: &[f64]) -> Result<(FitResult, Vec<(f64, f64, f64)>), AnalysisError> {
    let mut rows = Vec::with_capacity(mus.len());
    for &mu in mus {
        let q = p.with_mu(mu).map_err(|_| AnalysisError::Precondition("invalid mu"))?;
        let fp = find_fixed_point_h2(&q)?;
        let period = periodic_orbit_period(&q)?;
        rows.push((mu, fp.x_star, period));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.0).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.2).collect();
    Ok((fit::linear(&xs, &ys)?, rows))
}

/// Sample points for [`convergence_study`], in unit-`eps` chart units.
/// Phases are fractions of the forcing period.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    pub phase_fractions: Vec<f64>,
    pub x2: Vec<f64>,
    pub w2: Vec<f64>,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self {
            phase_fractions: alloc::vec![0.0, 0.25, 0.5, 0.75],
            x2: alloc::vec![0.1, 0.3, 0.5, 0.7],
            w2: alloc::vec![-0.5, 0.0, 0.5],
        }
    }
}

impl SampleGrid {
    pub fn len(&self) -> usize {
        self.phase_fractions.len() * self.x2.len() * self.w2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points of `In(v-)` for forcing period `tf`.
    pub fn points(&self, tf: f64) -> Vec<SectionPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &fs in &self.phase_fractions {
            for &x2 in &self.x2 {
                for &w2 in &self.w2 {
                    out.push(SectionPoint::new(SectionId::InVminus, x2, w2, fs * tf));
                }
            }
        }
        out
    }
}

/// Max-norm distance between two points of a section, the phase measured
/// on the circle of length `tf`.
pub fn section_distance(a: &SectionPoint, b: &SectionPoint, tf: f64) -> f64 {
    phase::circle_distance(a.s, b.s, tf)
        .max((a.c1 - b.c1).abs())
        .max((a.c2 - b.c2).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub omegas: Vec<f64>,
    pub sup_distances: Vec<f64>,
    /// `ln(sup) ~ ln(omega)`; `None` when some distance vanishes.
    pub fit: Option<FitResult>,
}

/// Distance at one frequency between `R_(nu,mu)` and `R_(0,mu)`,
/// maximised over the grid.
pub fn sup_distance(p: &Params, f: &Forcing, grid: &SampleGrid) -> Result<f64, AnalysisError> {
    if grid.is_empty() {
        return Err(AnalysisError::GridEmpty);
    }
    let tf = f.period_in_t(p.omega());
    let avg = p.averaged();
    let mut sup: f64 = 0.0;
    for pt in grid.points(tf) {
        let forced = analytic_maps::compose_return(&pt, p, f)?.arrival;
        let mean = analytic_maps::compose_return(&pt, &avg, f)?.arrival;
        sup = sup.max(section_distance(&forced, &mean, tf));
    }
    Ok(sup)
}

/// Measures `R_(nu,mu) -> R_(0,mu)` as `omega` grows.
pub fn convergence_study(p: &Params, f: &Forcing, omegas: &[f64], grid: &SampleGrid) -> Result<ConvergenceReport, AnalysisError> {
    if grid.is_empty() || omegas.is_empty() {
        return Err(AnalysisError::GridEmpty);
    }
    let mut sup_distances = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let q = p.with_omega(omega).map_err(|_| AnalysisError::Precondition("invalid omega"))?;
        sup_distances.push(sup_distance(&q, f, grid)?);
    }
    let fit = if sup_distances.iter().all(|&d| d > 0.0) && omegas.len() >= fit::MIN_POINTS {
        Some(fit::log_log(omegas, &sup_distances)?)
    } else {
        None
    };
    Ok(ConvergenceReport {
        omegas: omegas.to_vec(),
        sup_distances,
        fit,
    })
}

/// How the first-order correction to `T2` is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum T2Correction {
    /// `K2 / (alpha + beta)`, as used by the maps.
    AsUsed,
    /// `K2 / ((alpha + beta) x2)`, the chain-rule coefficient.
    ChainRule,
}

/// `|x(T2) - 1|` where `x(t)` is the exact solution of the linear flow in
/// `V-` from `x(s) = x2` and `T2` is its first-order approximation.
pub fn t2_residual(x2: f64, s: f64, p: &Params, f: &Forcing, which: T2Correction) -> Result<f64, AnalysisError> {
    let lambda = p.expansion();
    let k2 = analytic_maps::forcing_integral(analytic_maps::Leg::Vminus, x2, s, p, f)?.k;
    let span = analytic_maps::flight_time_t2_zero(x2, p)?
        + match which {
            T2Correction::AsUsed => k2 / lambda,
            T2Correction::ChainRule => k2 / (lambda * x2),
        };
    let integral = match f.kind() {
        crate::model::ForcingKind::Sine => {
            p.nu() * analytic_maps::weighted_sine_integral(lambda, s, s + span, p.omega())
                + p.mu() * analytic_maps::weighted_unit_integral(lambda, span)
        }
        crate::model::ForcingKind::Custom => {
            let opts = crate::quadrature::QuadratureOptions::default();
            let omega = p.omega();
            crate::quadrature::integrate_segmented(
                |tau| (-lambda * (tau - s)).exp() * (p.nu() * f.at_time(omega, tau) + p.mu()),
                s,
                s + span,
                f.period_in_t(omega),
                opts,
            )
            .map_err(MapError::from)?
            .value
        }
    };
    let x = (lambda * span).exp() * (x2 - integral);
    Ok((x - 1.0).abs())
}

/// Scaling of [`t2_residual`] along `(nu, mu) = t (nu0, mu0)`; fits
/// `ln r ~ ln t`.
pub fn t2_remainder_order(
    p: &Params,
    f: &Forcing,
    x2: f64,
    s: f64,
    ts: &[f64],
    which: T2Correction,
) -> Result<(FitResult, Vec<f64>), AnalysisError> {
    let mut rs = Vec::with_capacity(ts.len());
    for &t in ts {
        let q = p
            .with_nu(p.nu() * t)
            .and_then(|q| q.with_mu(p.mu() * t))
            .map_err(|_| AnalysisError::Precondition("invalid scaling"))?;
        rs.push(t2_residual(x2, s, &q, f, which)?);
    }
    Ok((fit::log_log(ts, &rs)?, rs))
}

/// Analytic and numerical returns of one physical point of `In(v-)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub start: SectionPoint,
    pub x_numeric: f64,
    pub x_analytic: f64,
    pub x_abs: f64,
    /// `|x_analytic - x_numeric| / |x_numeric|`.
    pub x_rel: f64,
    pub w_numeric: f64,
    pub w_analytic: f64,
    pub time_numeric: f64,
    pub time_analytic: f64,
    pub time_rel: f64,
    /// Relative error of `y^2` on `Out(v-)` from the local map near `v-`.
    pub local_vminus_rel: f64,
    /// Relative error of `x^1` on `Out(v+)` from the local map near `v+`,
    /// applied to the numerically observed `In(v+)` point.
    pub local_vplus_rel: f64,
}

fn rel(approx: f64, truth: f64) -> f64 {
    (approx - truth).abs() / truth.abs()
}

/// Compares the analytic return map (after rescaling to unit `eps`) with
/// direct integration on each point.
pub fn analytic_vs_numeric(
    p: &Params,
    f: &Forcing,
    pts: &[SectionPoint],
    cfg: &IntegratorConfig,
) -> Result<Vec<Discrepancy>, AnalysisError> {
    let unit = p.to_unit_epsilon();
    let mut out = Vec::with_capacity(pts.len());
    for pt in pts {
        let num = integrator::numerical_return_map(p, f, pt, cfg)?;
        let ana = analytic_maps::compose_return(&sections::to_unit_epsilon(pt, p), &unit, f)?;
        let arrival = sections::from_unit_epsilon(&ana.arrival, p);
        let out_vminus = sections::from_unit_epsilon(&ana.out_vminus, p);
        let in_vplus_num = sections::to_unit_epsilon(&num.hits[1], p);
        let local_vplus_rel = match analytic_maps::local_map_vplus(&in_vplus_num, &unit, f) {
            Ok((o, _)) => rel(o.c1 * p.epsilon(), num.hits[2].c1),
            Err(_) => f64::NAN,
        };
        out.push(Discrepancy {
            start: *pt,
            x_numeric: num.arrival.c1,
            x_analytic: arrival.c1,
            x_abs: (arrival.c1 - num.arrival.c1).abs(),
            x_rel: rel(arrival.c1, num.arrival.c1),
            w_numeric: num.arrival.c2,
            w_analytic: arrival.c2,
            time_numeric: num.flight_time,
            time_analytic: ana.elapsed,
            time_rel: rel(ana.elapsed, num.flight_time),
            local_vminus_rel: rel(out_vminus.c1, num.hits[0].c1),
            local_vplus_rel,
        });
    }
    Ok(out)
}

/// The attracting periodic orbit located by iterating the numerical return
/// map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericOrbit {
    /// Fixed point on `In(v-)`, physical units.
    pub point: SectionPoint,
    pub period: f64,
    pub iterations: usize,
}

/// Iterates [`integrator::numerical_return_map`] from `start` until the
/// transverse coordinate settles to relative tolerance `tol`.
pub fn numeric_periodic_orbit(
    p: &Params,
    f: &Forcing,
    start: &SectionPoint,
    cfg: &IntegratorConfig,
    tol: f64,
    max_iter: usize,
) -> Result<NumericOrbit, AnalysisError> {
    let mut pt = *start;
    for i in 1..=max_iter {
        let r = integrator::numerical_return_map(p, f, &pt, cfg)?;
        let change = rel(r.arrival.c1, pt.c1);
        pt = r.arrival;
        if change < tol {
            return Ok(NumericOrbit {
                point: pt,
                period: r.flight_time,
                iterations: i,
            });
        }
    }
    Err(AnalysisError::NonConvergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// One observed `Out(v+) -> In(v-)` transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSample {
    pub mu: f64,
    /// `x2 - x^1`, physical units.
    pub offset: f64,
}

/// Estimate of `a` in `x2 = x^1 + a mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub a: f64,
    pub fit: FitResult,
    pub samples: Vec<TransitionSample>,
}

/// Fits `offset = intercept + a mu`.
pub fn fit_global_offset(samples: &[TransitionSample]) -> Result<Calibration, AnalysisError> {
    let xs: Vec<f64> = samples.iter().map(|s| s.mu).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.offset).collect();
    let fit = match fit::linear(&xs, &ys) {
        Ok(fit) => fit,
        Err(FitError::Degenerate) | Err(FitError::InsufficientData(_)) => {
            return Err(AnalysisError::InsufficientData(samples.len()))
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Calibration {
        a: fit.slope,
        fit,
        samples: samples.to_vec(),
    })
}

/// `w^1` values (fractions of `eps`) launched from `Out(v+)` per `mu`.
pub const CALIBRATION_W: [f64; 2] = [-0.5, 0.5];

/// Estimates `a` from integrated `Out(v+) -> In(v-)` transitions.
///
/// Points start on `Out(v+)` at `x^1 = 0`, so without `mu` they stay in the
/// invariant plane `{x = 0}` and the whole offset is due to `mu`. The
/// arrival wall `{y = eps}` near `v-` is crossed without the window check:
/// for larger `mu` the offset exceeds `eps`.
pub fn calibrate_a(p: &Params, f: &Forcing, mus: &[f64], cfg: &IntegratorConfig) -> Result<Calibration, AnalysisError> {
    if p.nu() != 0.0 {
        return Err(AnalysisError::Precondition("calibration needs nu = 0"));
    }
    let eps = p.epsilon();
    let mut samples = Vec::with_capacity(mus.len() * CALIBRATION_W.len());
    for &mu in mus {
        let q = p.with_mu(mu).map_err(|_| AnalysisError::Precondition("invalid mu"))?;
        for &w in &CALIBRATION_W {
            let start = SectionPoint::new(SectionId::OutVplus, 0.0, w * eps, 0.0);
            let st = sections::to_ambient(&start, &q).map_err(IntegrationError::from)?;
            let spec = [EventSpec {
                windowed: false,
                ..EventSpec::section(SectionId::InVminus)
            }];
            let traj = integrator::integrate(&q, f, st, cfg, &spec, Some(0))?;
            let hit = traj.events.last().ok_or(AnalysisError::InsufficientData(0))?;
            samples.push(TransitionSample {
                mu,
                offset: hit.state.x - start.c1,
            });
        }
    }
    fit_global_offset(&samples)
}
