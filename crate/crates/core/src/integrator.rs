//! Adaptive Dormand–Prince 5(4) integration of the suspended system with
//! continuous (dense) output and located section crossings.
//!
//! Step-size control and the fourth-order free interpolant follow Hairer,
//! Nørsett and Wanner's `DOPRI5`. Crossings are detected as sign changes of
//! the wall function between accepted steps and refined with Brent's method
//! on the interpolant.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use thiserror::Error;

use crate::model::{field_at, Equilibrium, Forcing, Params, State};
use crate::roots;
use crate::sections::{self, Axis, SectionError, SectionId, SectionPoint};
use crate::Vec3;

/// Starting points with `x2` below this are rejected by
/// [`numerical_return_map`]: the flight time grows like `-ln x2`.
pub const CONNECTION_FLOOR: f64 = 1e-8;

/// Minimum normal speed for a crossing to count as transversal.
pub const TRANSVERSALITY_MIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("stop event not reached within max_time = {max_time} (reached t = {t})")]
    MaxTimeExceeded { max_time: f64, t: f64 },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepFailure { t: f64, h: f64 },
    #[error("too many steps ({0})")]
    TooManySteps(usize),
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("start state is not finite")]
    NonFiniteStart,
    #[error("sections hit out of order: expected {expected}, found {found}")]
    SequenceViolation { expected: SectionId, found: SectionId },
    #[error("return map must start on In(v-), got {0}")]
    WrongStartSection(SectionId),
    #[error("x2 = {x2} is below the near-connection floor {CONNECTION_FLOOR}")]
    BelowConnectionFloor { x2: f64 },
    #[error(transparent)]
    Section(#[from] SectionError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Longest integration span, measured from the start time.
    pub max_time: f64,
    /// Time tolerance for located crossings.
    pub event_tol: f64,
    pub max_steps: usize,
    /// Keep every accepted step in [`Trajectory::samples`].
    pub record_samples: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::for_params(&Params::default())
    }
}

impl IntegratorConfig {
    /// Defaults; `max_time = 50 (-ln 1e-8) / (alpha + beta)`.
    pub fn for_params(p: &Params) -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.25,
            max_time: 50.0 * (-(CONNECTION_FLOOR.ln())) / p.expansion(),
            event_tol: 1e-10,
            max_steps: 20_000_000,
            record_samples: false,
        }
    }

    pub fn with_max_time(self, max_time: f64) -> Self {
        Self { max_time, ..self }
    }

    pub fn with_tolerances(self, rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..self
        }
    }

    pub fn recording(self) -> Self {
        Self {
            record_samples: true,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.rel_tol) || !pos(self.abs_tol) {
            return Err(IntegrationError::InvalidConfig("tolerances must be positive"));
        }
        if !pos(self.max_step) || !pos(self.max_time) {
            return Err(IntegrationError::InvalidConfig("max_step and max_time must be positive"));
        }
        if !(self.event_tol >= 4.0 * f64::EPSILON) || !self.event_tol.is_finite() {
            return Err(IntegrationError::InvalidConfig("event_tol below machine-precision floor"));
        }
        if self.max_steps == 0 {
            return Err(IntegrationError::InvalidConfig("max_steps must be positive"));
        }
        Ok(())
    }
}

/// A first-order system `y' = rhs(t, y)` on `R^3`.
pub trait System {
    fn rhs(&self, t: f64, y: Vec3) -> Vec3;
}

impl<F: Fn(f64, Vec3) -> Vec3> System for F {
    fn rhs(&self, t: f64, y: Vec3) -> Vec3 {
        self(t, y)
    }
}

/// The forced field of a parameter set.
pub struct ForcedField<'a> {
    pub params: &'a Params,
    pub forcing: &'a Forcing,
}

impl System for ForcedField<'_> {
    fn rhs(&self, t: f64, y: Vec3) -> Vec3 {
        field_at(self.params, self.forcing, y, t)
    }
}

/// Continuous output over one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub t0: f64,
    pub h: f64,
    coeffs: [Vec3; 5],
}

impl Segment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn start(&self) -> Vec3 {
        self.coeffs[0]
    }

    pub fn end(&self) -> Vec3 {
        self.eval(self.t1())
    }

    /// Interpolated state at `t` in the step.
    pub fn eval(&self, t: f64) -> Vec3 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let c = &self.coeffs;
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
        }
        out
    }
}

mod tableau {
    pub const C2: f64 = 0.2;
    pub const C3: f64 = 0.3;
    pub const C4: f64 = 0.8;
    pub const C5: f64 = 8.0 / 9.0;
    pub const A21: f64 = 0.2;
    pub const A31: f64 = 3.0 / 40.0;
    pub const A32: f64 = 9.0 / 40.0;
    pub const A41: f64 = 44.0 / 45.0;
    pub const A42: f64 = -56.0 / 15.0;
    pub const A43: f64 = 32.0 / 9.0;
    pub const A51: f64 = 19372.0 / 6561.0;
    pub const A52: f64 = -25360.0 / 2187.0;
    pub const A53: f64 = 64448.0 / 6561.0;
    pub const A54: f64 = -212.0 / 729.0;
    pub const A61: f64 = 9017.0 / 3168.0;
    pub const A62: f64 = -355.0 / 33.0;
    pub const A63: f64 = 46732.0 / 5247.0;
    pub const A64: f64 = 49.0 / 176.0;
    pub const A65: f64 = -5103.0 / 18656.0;
    pub const A71: f64 = 35.0 / 384.0;
    pub const A73: f64 = 500.0 / 1113.0;
    pub const A74: f64 = 125.0 / 192.0;
    pub const A75: f64 = -2187.0 / 6784.0;
    pub const A76: f64 = 11.0 / 84.0;
    pub const E1: f64 = 71.0 / 57600.0;
    pub const E3: f64 = -71.0 / 16695.0;
    pub const E4: f64 = 71.0 / 1920.0;
    pub const E5: f64 = -17253.0 / 339200.0;
    pub const E6: f64 = 22.0 / 525.0;
    pub const E7: f64 = -1.0 / 40.0;
    pub const D1: f64 = -12715105075.0 / 11282082432.0;
    pub const D3: f64 = 87487479700.0 / 32700410799.0;
    pub const D4: f64 = -10690763975.0 / 1880347072.0;
    pub const D5: f64 = 701980252875.0 / 199316789632.0;
    pub const D6: f64 = -1453857185.0 / 822651844.0;
    pub const D7: f64 = 69997945.0 / 29380423.0;
}

fn axpy(y: Vec3, terms: &[(f64, Vec3)]) -> Vec3 {
    let mut out = y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += c * k[i];
        }
    }
    out
}

fn rms_scaled(v: Vec3, y0: Vec3, y1: Vec3, rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        acc += (v[i] / sc) * (v[i] / sc);
    }
    (acc / 3.0).sqrt()
}

/// Whether to keep stepping after a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Outcome of [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveEnd {
    pub t: f64,
    pub y: Vec3,
    pub steps: usize,
    /// `true` when the callback asked to stop before `t_end`.
    pub stopped: bool,
}

fn initial_step<S: System>(sys: &S, t0: f64, y0: Vec3, f0: Vec3, cfg: &IntegratorConfig) -> f64 {
    let sc = |i: usize| cfg.abs_tol + cfg.rel_tol * y0[i].abs();
    let norm = |v: Vec3| ((0..3).map(|i| (v[i] / sc(i)).powi(2)).sum::<f64>() / 3.0).sqrt();
    let (d0, d1) = (norm(y0), norm(f0));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = axpy(y0, &[(h0, f0)]);
    let f1 = sys.rhs(t0 + h0, y1);
    let d2 = norm([f1[0] - f0[0], f1[1] - f0[1], f1[2] - f0[2]]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

/// Integrates `sys` forward from `(t0, y0)` to `t_end`, handing every
/// accepted step to `on_step`.
pub fn solve<S, C>(sys: &S, t0: f64, y0: Vec3, t_end: f64, cfg: &IntegratorConfig, mut on_step: C) -> Result<SolveEnd, IntegrationError>
where
    S: System,
    C: FnMut(&Segment) -> Flow,
{
    use tableau::*;
    cfg.validate()?;
    if !(y0.iter().all(|v| v.is_finite()) && t0.is_finite()) {
        return Err(IntegrationError::NonFiniteStart);
    }
    const BETA: f64 = 0.04;
    const SAFE: f64 = 0.9;
    let expo1 = 0.2 - BETA * 0.75;
    let (t, y) = (t0, y0);
    if !(t_end > t0) {
        return Ok(SolveEnd { t, y, steps: 0, stopped: false });
    }
    let (mut t, mut y) = (t, y);
    let mut k1 = sys.rhs(t, y);
    let mut h = initial_step(sys, t, y, k1, cfg);
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0usize;
    loop {
        if t >= t_end {
            return Ok(SolveEnd { t, y, steps, stopped: false });
        }
        if steps >= cfg.max_steps {
            return Err(IntegrationError::TooManySteps(steps));
        }
        h = h.min(cfg.max_step);
        if t + 1.01 * h >= t_end {
            h = t_end - t;
        }
        if h <= 10.0 * f64::EPSILON * t.abs().max(1.0) || !h.is_finite() {
            return Err(IntegrationError::StepFailure { t, h });
        }
        let k2 = sys.rhs(t + C2 * h, axpy(y, &[(h * A21, k1)]));
        let k3 = sys.rhs(t + C3 * h, axpy(y, &[(h * A31, k1), (h * A32, k2)]));
        let k4 = sys.rhs(t + C4 * h, axpy(y, &[(h * A41, k1), (h * A42, k2), (h * A43, k3)]));
        let k5 = sys.rhs(
            t + C5 * h,
            axpy(y, &[(h * A51, k1), (h * A52, k2), (h * A53, k3), (h * A54, k4)]),
        );
        let k6 = sys.rhs(
            t + h,
            axpy(y, &[(h * A61, k1), (h * A62, k2), (h * A63, k3), (h * A64, k4), (h * A65, k5)]),
        );
        let y_new = axpy(y, &[(h * A71, k1), (h * A73, k3), (h * A74, k4), (h * A75, k5), (h * A76, k6)]);
        let k7 = sys.rhs(t + h, y_new);
        let err_vec = axpy(
            [0.0; 3],
            &[(h * E1, k1), (h * E3, k3), (h * E4, k4), (h * E5, k5), (h * E6, k6), (h * E7, k7)],
        );
        let err = rms_scaled(err_vec, y, y_new, cfg.rel_tol, cfg.abs_tol);
        if !err.is_finite() {
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(0.1, 5.0);
            let mut h_new = h / fac;
            facold = err.max(1e-4);
            steps += 1;
            let mut coeffs = [[0.0; 3]; 5];
            for i in 0..3 {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                coeffs[0][i] = y[i];
                coeffs[1][i] = dy;
                coeffs[2][i] = bspl;
                coeffs[3][i] = dy - h * k7[i] - bspl;
                coeffs[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let seg = Segment { t0: t, h, coeffs };
            t += h;
            y = y_new;
            k1 = k7;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
            if on_step(&seg) == Flow::Stop {
                return Ok(SolveEnd { t, y, steps, stopped: true });
            }
        } else {
            h /= (fac11 / SAFE).min(5.0);
            last_rejected = true;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Increasing,
    Decreasing,
    Any,
}

/// One of the eight wall surfaces `{x = ±eps}`, `{y = ±eps}` of `V+` or `V-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Surface {
    pub axis: Axis,
    /// `true` for `+eps`.
    pub positive: bool,
    pub near: Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSpec {
    pub surface: Surface,
    pub direction: Direction,
    /// Require the other planar coordinate and `w = z - sigma` to lie in
    /// `(-eps, eps)`.
    pub windowed: bool,
}

impl EventSpec {
    /// Crossing of a section in the direction the cycle traverses it.
    pub fn section(id: SectionId) -> Self {
        let direction = match id {
            SectionId::InVplus | SectionId::InVminus => Direction::Decreasing,
            SectionId::OutVplus | SectionId::OutVminus => Direction::Increasing,
        };
        Self {
            surface: Surface {
                axis: id.normal(),
                positive: true,
                near: id.equilibrium(),
            },
            direction,
            windowed: true,
        }
    }

    /// Signed distance from the wall.
    pub fn value(&self, pt: Vec3, eps: f64) -> f64 {
        let c = match self.surface.axis {
            Axis::X => pt[0],
            Axis::Y => pt[1],
        };
        if self.surface.positive {
            c - eps
        } else {
            c + eps
        }
    }

    fn in_window(&self, pt: Vec3, eps: f64) -> bool {
        if !self.windowed {
            return true;
        }
        let other = match self.surface.axis {
            Axis::X => pt[1],
            Axis::Y => pt[0],
        };
        let w = pt[2] - self.surface.near.sigma();
        other.abs() < eps && w.abs() < eps
    }

    fn normal_speed(&self, v: Vec3) -> f64 {
        match self.surface.axis {
            Axis::X => v[0],
            Axis::Y => v[1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Absolute time of the crossing.
    pub t: f64,
    pub state: State,
    /// Index into the event list passed to [`integrate`].
    pub spec: usize,
    /// Signed distance from the wall at the located time.
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    /// `(t, state)`; always holds the start and final states.
    pub samples: Vec<(f64, State)>,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&(f64, State)> {
        self.samples.last()
    }
}

/// Integrates the suspended flow from `start` (whose `s` is the start time)
/// for at most `cfg.max_time`, locating crossings of `events`. Stops at the
/// first accepted crossing of `events[stop_on]` if given; not reaching it
/// is [`IntegrationError::MaxTimeExceeded`].
pub fn integrate(
    p: &Params,
    f: &Forcing,
    start: State,
    cfg: &IntegratorConfig,
    events: &[EventSpec],
    stop_on: Option<usize>,
) -> Result<Trajectory, IntegrationError> {
    cfg.validate()?;
    if !start.is_finite() {
        return Err(IntegrationError::NonFiniteStart);
    }
    let sys = ForcedField { params: p, forcing: f };
    let eps = p.epsilon();
    let period = f.period_in_t(p.omega());
    let mut step_cfg = *cfg;
    if p.nu() != 0.0 {
        // resolve the forcing oscillation
        step_cfg.max_step = step_cfg.max_step.min(0.25 * period);
    }
    let t0 = start.s;
    let t_end = t0 + cfg.max_time;
    let state_at = |t: f64, y: Vec3| State::with_reduced_phase(y[0], y[1], y[2], t, period);

    let mut traj = Trajectory::default();
    traj.samples.push((t0, state_at(t0, start.point())));
    let mut stop_hit: Option<Event> = None;
    let mut prev_values: Vec<f64> = events.iter().map(|e| e.value(start.point(), eps)).collect();
    let mut found: Vec<Event> = Vec::new();

    let end = solve(&sys, t0, start.point(), t_end, &step_cfg, |seg| {
        let y1 = seg.end();
        found.clear();
        for (i, ev) in events.iter().enumerate() {
            let g0 = prev_values[i];
            let g1 = ev.value(y1, eps);
            prev_values[i] = g1;
            let crossed = (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0);
            if !crossed {
                continue;
            }
            let increasing = g1 > g0;
            match ev.direction {
                Direction::Increasing if !increasing => continue,
                Direction::Decreasing if increasing => continue,
                _ => {}
            }
            let g = |t: f64| ev.value(seg.eval(t), eps);
            let Ok(tc) = roots::brent(g, seg.t0, seg.t1(), cfg.event_tol, 200) else {
                continue;
            };
            let y = seg.eval(tc);
            if !ev.in_window(y, eps) {
                continue;
            }
            let v = sys.rhs(tc, y);
            if ev.normal_speed(v).abs() <= TRANSVERSALITY_MIN {
                continue;
            }
            found.push(Event {
                t: tc,
                state: state_at(tc, y),
                spec: i,
                residual: ev.value(y, eps),
            });
        }
        found.sort_by(|a, b| a.t.total_cmp(&b.t));
        for ev in found.drain(..) {
            let is_stop = Some(ev.spec) == stop_on;
            traj.events.push(ev);
            if is_stop {
                stop_hit = Some(ev);
                return Flow::Stop;
            }
        }
        if cfg.record_samples {
            traj.samples.push((seg.t1(), state_at(seg.t1(), y1)));
        }
        Flow::Continue
    })?;

    match (stop_on, stop_hit) {
        (_, Some(ev)) => {
            if traj.samples.last().map(|s| s.0 < ev.t).unwrap_or(true) {
                traj.samples.push((ev.t, ev.state));
            }
            Ok(traj)
        }
        (Some(_), None) => Err(IntegrationError::MaxTimeExceeded {
            max_time: cfg.max_time,
            t: end.t - t0,
        }),
        (None, None) => {
            if traj.samples.last().map(|s| s.0 < end.t).unwrap_or(true) {
                traj.samples.push((end.t, state_at(end.t, end.y)));
            }
            Ok(traj)
        }
    }
}

/// One numerically integrated turn around the cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightResult {
    /// Arrival on `In(v-)`, phase reduced.
    pub arrival: SectionPoint,
    /// Total time of flight.
    pub flight_time: f64,
    /// `In(v-) -> Out(v-) -> In(v+) -> Out(v+) -> In(v-)` leg times.
    pub legs: [f64; 4],
    /// Hits on `Out(v-)`, `In(v+)`, `Out(v+)`.
    pub hits: [SectionPoint; 3],
    /// Largest wall residual among the four located crossings.
    pub max_residual: f64,
}

const RETURN_SEQUENCE: [SectionId; 4] = [
    SectionId::OutVminus,
    SectionId::InVplus,
    SectionId::OutVplus,
    SectionId::InVminus,
];

/// First return of a point of `In(v-)` (physical units) to `In(v-)`.
pub fn numerical_return_map(
    p: &Params,
    f: &Forcing,
    pt: &SectionPoint,
    cfg: &IntegratorConfig,
) -> Result<FlightResult, IntegrationError> {
    if pt.section != SectionId::InVminus {
        return Err(IntegrationError::WrongStartSection(pt.section));
    }
    if !(pt.c1 >= CONNECTION_FLOOR) {
        return Err(IntegrationError::BelowConnectionFloor { x2: pt.c1 });
    }
    let start = sections::to_ambient(pt, p)?;
    let specs: Vec<EventSpec> = RETURN_SEQUENCE.iter().map(|&id| EventSpec::section(id)).collect();
    let traj = integrate(p, f, start, &IntegratorConfig { record_samples: false, ..*cfg }, &specs, Some(3))?;
    if traj.events.len() != 4 {
        let (i, ev) = traj
            .events
            .iter()
            .enumerate()
            .find(|(i, e)| e.spec != *i)
            .map(|(i, e)| (i, *e))
            .unwrap_or((traj.events.len() - 1, *traj.events.last().expect("stop event recorded")));
        return Err(IntegrationError::SequenceViolation {
            expected: RETURN_SEQUENCE[i.min(3)],
            found: RETURN_SEQUENCE[ev.spec],
        });
    }
    for (i, ev) in traj.events.iter().enumerate() {
        if ev.spec != i {
            return Err(IntegrationError::SequenceViolation {
                expected: RETURN_SEQUENCE[i],
                found: RETURN_SEQUENCE[ev.spec],
            });
        }
    }
    let mut hits = [*pt; 3];
    let mut legs = [0.0; 4];
    let mut prev_t = start.s;
    let mut max_residual: f64 = 0.0;
    for (i, ev) in traj.events.iter().enumerate() {
        legs[i] = ev.t - prev_t;
        prev_t = ev.t;
        max_residual = max_residual.max(ev.residual.abs());
        if i < 3 {
            hits[i] = sections::from_ambient(&ev.state, RETURN_SEQUENCE[i], p, f)?;
        }
    }
    let last = traj.events[3];
    let arrival = sections::from_ambient(&last.state, SectionId::InVminus, p, f)?;
    Ok(FlightResult {
        arrival,
        flight_time: last.t - start.s,
        legs,
        hits,
        max_residual,
    })
}
