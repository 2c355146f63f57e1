//! Numerical laboratory for Carleman weights and observability of the
//! transport equation `∂_t u + H(t)·∇u = 0` on bounded convex domains.
//!
//! The crate builds the piecewise weight `φ` from a cone partition of the
//! velocity's direction history, solves the equation exactly along
//! characteristics and checks the weighted and energy inequalities by
//! quadrature.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod partition;
pub mod quadrature;
pub mod transport;
pub mod velocity;
pub mod verify;
pub mod weight;

pub use error::{Error, Result};
pub use geometry::{BoundaryGrid, Domain, DomainKind, Point, QuadratureGrid};
pub use partition::{greedy_partition, uniform_partition, verify_cone_condition, ConeCertificate, ConePartition};
pub use quadrature::TimeGrid;
pub use transport::{
    boundary_trace, manufactured_solution, rotating_bump_counterexample, solve_characteristics,
    Counterexample, Discretization, Profile, Provenance, SolutionField, TraceField,
};
pub use velocity::{FieldKind, VelocityField};
pub use verify::{
    carleman_report, energy_profile, extend_window_check, fit_constants, observability_ratio,
    CarlemanReport, EnergyProfile, ObservabilityReport,
};
pub use weight::{CarlemanWeight, ObservabilityCondition, S0Estimate, S0Source};
