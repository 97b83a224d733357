//! Numerical laboratory for porous medium-type flows on rotationally
//! symmetric model manifolds.
//!
//! The crate is organized around five building blocks:
//!
//! - [`geometry`]: warped-product model manifolds, the hyperboloid model of
//!   hyperbolic space, geodesics, exponential map, parallel transport and
//!   signed distances to equidistant hypersurfaces.
//! - [`nonlinearity`]: porous medium-type nonlinearities `P`, their uniformly
//!   elliptic regularizations `P_eps`, and validators for the structural
//!   hypotheses (monotonicity, two-sided power bounds, McCann condition).
//! - [`solver`]: a mass-conservative implicit finite-volume solver for
//!   `d rho/dt = Lap P(rho)` restricted to radial data, plus traveling-wave
//!   barriers and the Euclidean Barenblatt reference profile.
//! - [`transport`]: exact and entropic discrete optimal transport, radial
//!   quantile coupling, the Hopf-Lax semigroup, Kantorovich dual bounds and
//!   a curvature-sensitive 1-Wasserstein lower bound.
//! - [`hamiltonian`]: Gamma-calculus on the radial grid, the weighted
//!   Dirichlet (Hamiltonian) energy, forward linearized / backward adjoint
//!   flows and the Hamiltonian decay diagnostics.
//!
//! Everything is plain `f64` on explicit grids; there is no hidden global
//! state and all types are safe to share across threads once constructed.

pub mod geometry;
pub mod hamiltonian;
pub mod nonlinearity;
pub mod numerics;
pub mod solver;
pub mod transport;

pub use geometry::{HyperboloidPoint, ModelManifold};
pub use nonlinearity::{PorousNonlinearity, RegularizedNonlinearity};
pub use solver::{DensityField, RadialGrid, SolverConfig, Trajectory};
