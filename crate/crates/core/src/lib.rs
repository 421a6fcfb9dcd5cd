//! Two-dimensional finite-element URANS solver.
//!
//! The crate discretizes the incompressible Navier–Stokes equations with
//! Taylor–Hood (P2/P1) elements and backward Euler in time, and couples them
//! to one of three eddy-viscosity closures:
//!
//! * [`ClosureKind::Nse`]: no model, `ν_T = 0`;
//! * [`ClosureKind::OneEqKinematic`] / [`ClosureKind::OneEqPrandtl`]: a
//!   transport PDE for the turbulent kinetic energy field `k(x, t)`;
//! * [`ClosureKind::HalfEq`]: a scalar ODE for the volume-averaged
//!   `k(t)`, with a near-wall multiplier `(κ y / L)²`.
//!
//! Besides the time stepper the crate provides the flow statistics used to
//! compare closures, energy-budget diagnostics, the offset-circles benchmark
//! and a manufactured-solution convergence study.

pub mod closures;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod scenario;
pub mod statistics;
pub mod stepper;

pub use closures::{Closure, ClosureKind, TurbState};
pub use error::{Error, Result};
pub use fem::{Discretization, DofMap, FlowState};
pub use mesh::{Marker, TriMesh, WallDistanceField};
pub use statistics::{ScaleReport, StatsRecord};
pub use stepper::{SimulationState, Stepper, StepperConfig};
