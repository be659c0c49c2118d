//! Radially symmetric simulator for a one-phase free-boundary
//! parabolic-elliptic chemotaxis system on the unit ball.
//!
//! The cell density `u` lives on the moving ball `|x| < h(t)` and is advanced
//! in front-fixed coordinates `y = x / h(t)`. The signal `v` solves a pure
//! Neumann problem on the unit ball every step, and the radius follows
//! `h' = k(h, t) + v_r(h, t)`.
//!
//! Module map:
//!
//! - [`params`]: problem parameters, validation and the initial mass.
//! - [`state`]: value types shared by the solvers.
//! - [`elliptic`]: signal solve (quadrature route and finite-difference route).
//! - [`parabolic`]: one IMEX step of the density on the front-fixed grid.
//! - [`freeboundary`]: radius ODE, Picard fixed-point map and the admissible set.
//! - [`analytic`]: closed-form trajectory, regimes and event times for `k = a|x|`.
//! - [`diagnostics`]: mass, events and convergence studies.
//! - [`simulation`]: time loops tying the above together.

pub mod analytic;
pub mod diagnostics;
pub mod elliptic;
mod error;
pub mod freeboundary;
pub mod grid;
pub mod parabolic;
pub mod params;
pub mod quadrature;
pub mod simulation;
pub mod state;
pub mod tridiag;

pub use analytic::Regime;
pub use diagnostics::{EventKind, EventReport};
pub use error::{Error, Result};
pub use params::{InitialMass, KLaw, KTable, Params, Profile, TimeStep};
pub use state::{BoundaryCurve, RunRecord, UState, VState};
