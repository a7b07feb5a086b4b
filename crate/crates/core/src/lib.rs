//! Deterministic multi-species Boltzmann solver on a discrete velocity grid,
//! closed-form and quadrature momentum exchange rates between Maxwellian
//! species, and finite-volume solvers for isentropic two-phase flow.
//!
//! The crate is organised bottom-up:
//!
//! - [`velocity_space`]: velocity grid, Maxwellians, moments.
//! - [`collision_ops`]: collision kernels, post-collision maps, the discrete
//!   collision operator with its conservative projection, and the entropy.
//! - [`kinetic_solver`]: homogeneous and 1D time stepping, control-volume
//!   averaging into volume fractions and phase moments.
//! - [`exchange_rates`]: momentum exchange between Maxwellian species.
//! - [`twophase`]: conservative two-phase (pressure/velocity relaxation),
//!   Baer–Nunziato type and multi-species Euler finite-volume solvers.

pub mod collision_ops;
pub mod error;
pub mod exchange_rates;
pub mod kinetic_solver;
pub mod quadrature;
pub mod snapshot;
pub mod twophase;
pub mod velocity_space;

pub use error::{Error, Result};
