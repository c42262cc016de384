//! The four cross-sections on the walls of the cubic neighbourhoods
//! `V_sigma = {|x| < eps, |y| < eps, |w| < eps}`, `w = z - sigma`.
//!
//! | section      | wall            | chart `(c1, c2)` |
//! |--------------|-----------------|------------------|
//! | `In(v+)`     | `x = eps`, V+   | `(y1, w1)`       |
//! | `Out(v+)`    | `y = eps`, V+   | `(x^1, w^1)`     |
//! | `In(v-)`     | `y = eps`, V-   | `(x2, w2)`       |
//! | `Out(v-)`    | `x = eps`, V-   | `(y^2, w^2)`     |
//!
//! Only the branch `y1 > 0` of `In(v+)` and `x2 > 0` of `In(v-)` is used.
//!
//! The analytic maps are written for `eps = 1`. [`to_unit_epsilon`] divides
//! both chart coordinates by `eps` (and [`Params::to_unit_epsilon`] divides
//! `nu`, `mu` by `eps`); [`from_unit_epsilon`] undoes it.

use thiserror::Error;

use crate::model::{Equilibrium, Forcing, Params, State};
use crate::phase;

/// Maximum distance from a wall for a state to count as lying on it.
pub const WALL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectionId {
    InVplus,
    OutVplus,
    InVminus,
    OutVminus,
}

/// Coordinate axis normal to a wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl SectionId {
    pub const ALL: [SectionId; 4] = [
        SectionId::InVplus,
        SectionId::OutVplus,
        SectionId::InVminus,
        SectionId::OutVminus,
    ];

    pub fn equilibrium(self) -> Equilibrium {
        match self {
            SectionId::InVplus | SectionId::OutVplus => Equilibrium::Plus,
            SectionId::InVminus | SectionId::OutVminus => Equilibrium::Minus,
        }
    }

    /// Normal axis of the wall carrying the section.
    pub fn normal(self) -> Axis {
        match self {
            SectionId::InVplus | SectionId::OutVminus => Axis::X,
            SectionId::OutVplus | SectionId::InVminus => Axis::Y,
        }
    }

    pub fn is_incoming(self) -> bool {
        matches!(self, SectionId::InVplus | SectionId::InVminus)
    }

    /// The section a trajectory near the cycle reaches next.
    pub fn next(self) -> SectionId {
        match self {
            SectionId::InVminus => SectionId::OutVminus,
            SectionId::OutVminus => SectionId::InVplus,
            SectionId::InVplus => SectionId::OutVplus,
            SectionId::OutVplus => SectionId::InVminus,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SectionId::InVplus => "In(v+)",
            SectionId::OutVplus => "Out(v+)",
            SectionId::InVminus => "In(v-)",
            SectionId::OutVminus => "Out(v-)",
        }
    }
}

impl core::fmt::Display for SectionId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// A point of an augmented section `S^1 x section` in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub section: SectionId,
    /// `y1`, `x^1`, `x2` or `y^2`.
    pub c1: f64,
    /// `w1`, `w^1`, `w2` or `w^2`.
    pub c2: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SectionError {
    #[error("{section} point ({c1}, {c2}) violates the chart invariants for eps = {eps}")]
    InvariantViolation {
        section: SectionId,
        c1: f64,
        c2: f64,
        eps: f64,
    },
    #[error("state is not on {section}: distance {residual}")]
    NotOnSection { section: SectionId, residual: f64 },
}

impl SectionPoint {
    pub fn new(section: SectionId, c1: f64, c2: f64, s: f64) -> Self {
        Self { section, c1, c2, s }
    }

    /// Checks `|c1|, |c2| < eps` and the branch restriction `c1 >= 0` on
    /// incoming sections (`c1 = 0` is the stable manifold).
    pub fn validate(&self, eps: f64) -> Result<(), SectionError> {
        let inside = self.c1.abs() < eps && self.c2.abs() < eps && self.s.is_finite();
        let branch = !self.section.is_incoming() || self.c1 >= 0.0;
        if inside && branch {
            Ok(())
        } else {
            Err(SectionError::InvariantViolation {
                section: self.section,
                c1: self.c1,
                c2: self.c2,
                eps,
            })
        }
    }

    /// True on `W^s(v+) ∩ In(v+)` or `W^s(v-) ∩ In(v-)`.
    pub fn on_stable_manifold(&self) -> bool {
        self.section.is_incoming() && self.c1 == 0.0
    }
}

/// Ambient state of a section point.
pub fn to_ambient(pt: &SectionPoint, p: &Params) -> Result<State, SectionError> {
    let eps = p.epsilon();
    pt.validate(eps)?;
    let sigma = pt.section.equilibrium().sigma();
    let z = sigma + pt.c2;
    Ok(match pt.section.normal() {
        Axis::X => State::new(eps, pt.c1, z, pt.s),
        Axis::Y => State::new(pt.c1, eps, z, pt.s),
    })
}

/// Chart coordinates of a state lying on `section`; the phase is reduced
/// modulo `T_f`.
pub fn from_ambient(st: &State, section: SectionId, p: &Params, f: &Forcing) -> Result<SectionPoint, SectionError> {
    let eps = p.epsilon();
    let sigma = section.equilibrium().sigma();
    let w = st.z - sigma;
    let (normal, other) = match section.normal() {
        Axis::X => (st.x, st.y),
        Axis::Y => (st.y, st.x),
    };
    let wall = (normal - eps).abs();
    let window = (other.abs() - eps).max(w.abs() - eps).max(0.0);
    let residual = wall.max(window);
    if !(wall <= WALL_TOL) || window > 0.0 || (section.is_incoming() && other < 0.0) {
        return Err(SectionError::NotOnSection { section, residual });
    }
    let s = phase::reduce(st.s, f.period_in_t(p.omega()));
    Ok(SectionPoint::new(section, other, w, s))
}

/// Chart coordinates in units where `eps = 1`.
pub fn to_unit_epsilon(pt: &SectionPoint, p: &Params) -> SectionPoint {
    let eps = p.epsilon();
    SectionPoint {
        c1: pt.c1 / eps,
        c2: pt.c2 / eps,
        ..*pt
    }
}

/// Inverse of [`to_unit_epsilon`].
pub fn from_unit_epsilon(pt: &SectionPoint, p: &Params) -> SectionPoint {
    let eps = p.epsilon();
    SectionPoint {
        c1: pt.c1 * eps,
        c2: pt.c2 * eps,
        ..*pt
    }
}
