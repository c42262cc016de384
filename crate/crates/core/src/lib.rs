//! Numerical dynamics of a periodically forced heteroclinic network.
//!
//! The vector field lives on `R^3` and carries two small perturbations: an
//! autonomous one of amplitude `mu` and a time-periodic one of amplitude `nu`
//! and frequency `omega`. Without perturbation the unit sphere carries an
//! attracting network joining `v+ = (0, 0, 1)` and `v- = (0, 0, -1)`.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. Everything here is pure computation; IO lives in the `hetforce`
//! crate.
//!
//! Modules, bottom-up:
//!
//! * [`quadrature`], [`roots`], [`fit`]: numerical building blocks.
//! * [`model`]: parameters, forcing, the vector field, symmetries.
//! * [`integrator`]: Dormand–Prince 5(4) with dense output and section events.
//! * [`sections`]: the four cross-sections and their charts.
//! * [`analytic_maps`]: closed-form local/global maps and the return map.
//! * [`analysis`]: fixed points, periods, convergence and calibration studies.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod analytic_maps;
pub mod fit;
pub mod integrator;
pub mod model;
pub mod phase;
pub mod quadrature;
pub mod roots;
pub mod sections;

pub use analytic_maps::{compose_return, reduced_h, AnalyticReturn, MapError};
pub use integrator::{integrate, numerical_return_map, FlightResult, IntegrationError, IntegratorConfig};
pub use model::{Equilibrium, Forcing, ForcingKind, Params, ParamError, State};
pub use sections::{SectionId, SectionPoint};

/// A point or vector of the ambient space `(x, y, z)`.
pub type Vec3 = [f64; 3];
