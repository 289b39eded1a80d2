//! One-dimensional compressible Navier–Stokes(–Korteweg) solver in
//! mass-Lagrangian coordinates, with a diagnostics harness for the a priori
//! estimates the system satisfies.
//!
//! The model is isothermal-type compressible flow with a density-dependent
//! (degenerate) viscosity `mu(rho) = rho^alpha`, a gamma-law pressure
//! `P(rho) = a rho^gamma`, and an optional capillarity (diffuse-interface)
//! stress of strength `c ∈ [0, 1/4]`; `c = 0` is the plain Navier–Stokes
//! system. In the mass variable `m` (with `dm = rho dx`) the unknowns are the
//! specific volume `tau = 1/rho` and the velocity `u`:
//!
//! ```text
//!   d/dt tau = d/dm u
//!   d/dt u   = d/dm( rho*mu(rho) d/dm u ) - d/dm( a rho^gamma )
//!              + c d/dm( rho*mu(rho) d²/dm² psi(rho) )
//! ```
//!
//! where `psi' = mu/rho`. The quadratic `r² - r + c = 0` has roots
//! `r0 <= r1`, and the effective velocities `v_i = u + r_i d/dm psi(rho)`
//! satisfy drift-diffusion equations without any third-order term; the
//! `v1` form is the default discretization for `c > 0`.
//!
//! Modules:
//! - [`laws`]: viscosity/pressure bundle, derived scalar functions, structural
//!   hypothesis checker, capillarity roots.
//! - [`field_state`]: staggered mass grid, state container, initial profiles
//!   (including mollified density jumps), Eulerian view.
//! - [`solver`]: semi-discrete right-hand sides (two equivalent forms), stable
//!   time-step selection, explicit/IMEX stepping, trajectory runs.
//! - [`diagnostics`]: energy/entropy reports, dissipation accumulators,
//!   unit-mass window checks, one-sided velocity bounds, Hoff-type
//!   parabolic-smoothing functionals.
//! - [`experiments`]: vanishing-capillarity sweeps, mollification studies,
//!   grid-refinement order studies.

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod field_state;
pub mod laws;
pub mod solver;

pub use error::CoreError;
pub use field_state::{EulerianView, InitialProfile, MassGrid, State};
pub use laws::{CapillarityRoots, HypothesisReport, LawBundle};
pub use solver::{Formulation, RunRecord, RunStatus, SolverConfig, TimeScheme};
