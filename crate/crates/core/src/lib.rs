#![no_std]

//! Closed hinged linkages of `n` congruent tetrahedra ("n-Kaleidocycles").
//!
//! A configuration is a sequence of unit hinge directions `b_0 .. b_{n-1}`
//! with a constant cosine `c` between neighbours and a closed centre line
//!
//! ```text
//! sum_{i=1..n} b_{i-1} x b_i = 0,   b_{i-1} . b_i = c,   b_i . b_i = 1
//! ```
//!
//! where the sequence wraps as `b_n = b_0` (oriented) or `b_n = -b_0`
//! (non-oriented). Everything in this crate is allocation-only and free of
//! IO, so it builds for `no_std` targets:
//!
//! * [`model`]: states, centre lines, validation and the mobility count.
//! * [`constraints`]: residual and Jacobian in gauge-fixed coordinates.
//! * [`solver`]: Gauss–Newton projection onto a fixed-`c` slice.
//! * [`extremal`]: the boundary `c_n` of the feasible twist range.
//! * [`kinematics`]: tangent spaces, real local dimension, motion tracing.
//! * [`observables`]: energies, twist, writhe and the Gauss map.
//! * [`geometry`]: tetrahedral mesh cells and the flat papercraft net.

extern crate alloc;

pub mod constraints;
pub mod error;
pub mod extremal;
pub mod geometry;
pub mod kinematics;
mod linalg;
pub mod model;
pub mod observables;
pub mod solver;

pub use constraints::{ConstraintSystem, GaugedVariables, InitStrategy};
pub use error::Error;
pub use extremal::{complete_scan, find_extreme_c, scan_feasibility, scan_point, ExtremalResult, FeasibilityPoint, Side};
pub use geometry::{tetra_mesh, unfold_net, EdgeKind, NetLayout, TetraMesh};
pub use kinematics::{probe_local_dof, tangent_basis, trace_rotation, MotionTrace, TangentSpace, TraceSettings};
pub use model::{gamma_from_b, mobility_estimate, validate_state, CenterLine, ClosureMode, KaleidocycleState, Vec3};
pub use observables::{observe, EnergyParams, ObservableSet};
pub use solver::{feasible, project_to_manifold, solve_slice, SolveReport, SolveStatus, SolverSettings};
