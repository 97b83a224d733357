//! Discrete optimal transport and Wasserstein machinery.
//!
//! Two independent engines compute transport costs between weighted point
//! clouds: an exact transportation simplex ([`exact_ot`]) and a log-domain
//! entropic solver ([`sinkhorn`]) whose rounded plans are feasible and hence
//! upper-bound the exact cost. Co-centered radial measures get the exact
//! quantile coupling ([`w2_same_center_radial`]); measures centered at two
//! different points of a hyperbolic manifold get a 1-Lipschitz lower bound
//! through the equidistant-hypersurface test function
//! ([`w1_bisector_lower_bound`]) and a feasible-plan upper bound through
//! matched point clouds ([`radial_point_cloud`]). Kantorovich duality is
//! available through the Hopf-Lax semigroup ([`hopf_lax`],
//! [`kantorovich_lower_bound`]).

mod bisector;
mod cloud;
mod duality;
mod radial;
mod simplex;
mod sinkhorn;

pub use bisector::{w1_bisector_lower_bound, BisectorQuadSpec};
pub use cloud::{hyperbolic_cost_matrix, radial_point_cloud, CloudSpec};
pub use duality::{hopf_lax, kantorovich_lower_bound, DualPotential};
pub use radial::{quantile_coupling_cost, w2_same_center_radial};
pub use simplex::exact_ot;
pub use sinkhorn::sinkhorn;

use ndarray::Array2;
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::nonlinearity::NonlinearityError;
use crate::solver::SolverError;

/// Relative tolerance for mass-equality checks: transport between measures
/// of different total mass has infinite cost.
pub const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("total masses differ ({0} vs {1}); the transport cost is infinite")]
    MassMismatch(f64, f64),
    #[error("weights must be nonnegative, got {0}")]
    NegativeWeight(f64),
    #[error("cost matrix shape ({0}, {1}) does not match measure sizes ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("cost matrix contains a non-finite entry")]
    NonFiniteCost,
    #[error("iteration cap {iters} exceeded, marginal error {marginal_error:e}")]
    IterationLimit { iters: usize, marginal_error: f64 },
    #[error("transportation simplex stalled (pivot limit)")]
    SimplexStalled,
    #[error("quadrature error estimate {0:e} above tolerance")]
    QuadratureError(f64),
    #[error("density must be probability-normalized, mass deviates by {0:e}")]
    NotProbability(f64),
    #[error("{0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Weighted point cloud. Points are opaque coordinate vectors (radial
/// coordinates, ambient hyperboloid coordinates, ...); all transport
/// engines work through explicitly supplied cost matrices.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, TransportError> {
        if points.len() != weights.len() {
            return Err(TransportError::ShapeMismatch(
                points.len(),
                weights.len(),
                points.len(),
                weights.len(),
            ));
        }
        if let Some(&w) = weights.iter().find(|&&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(TransportError::NegativeWeight(w));
        }
        Ok(Self { points, weights })
    }

    /// A measure with 1-d support coordinates.
    pub fn from_line(positions: &[f64], weights: &[f64]) -> Result<Self, TransportError> {
        Self::new(positions.iter().map(|&x| vec![x]).collect(), weights.to_vec())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// CSV rows `point...,weight`.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (pt, w) in self.points.iter().zip(&self.weights) {
            for c in pt {
                write!(out, "{c},")?;
            }
            writeln!(out, "{w}")?;
        }
        Ok(())
    }
}

pub(crate) fn check_equal_masses(a: f64, b: f64) -> Result<(), TransportError> {
    if (a - b).abs() > MASS_TOL * a.abs().max(b.abs()).max(1e-300) {
        return Err(TransportError::MassMismatch(a, b));
    }
    Ok(())
}

pub(crate) fn check_cost_shape(
    cost: &Array2<f64>,
    n: usize,
    m: usize,
) -> Result<(), TransportError> {
    if cost.nrows() != n || cost.ncols() != m {
        return Err(TransportError::ShapeMismatch(
            cost.nrows(),
            cost.ncols(),
            n,
            m,
        ));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(TransportError::NonFiniteCost);
    }
    Ok(())
}

/// Coupling between two discrete measures, together with its cost and the
/// dual potentials when produced by the exact engine.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    weights: Array2<f64>,
    cost: f64,
    dual_source: Vec<f64>,
    dual_target: Vec<f64>,
}

impl TransportPlan {
    pub(crate) fn new(
        weights: Array2<f64>,
        cost: f64,
        dual_source: Vec<f64>,
        dual_target: Vec<f64>,
    ) -> Self {
        Self {
            weights,
            cost,
            dual_source,
            dual_target,
        }
    }

    #[inline]
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    #[inline]
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Dual potentials `(u, v)` with `u_i + v_j <= c_ij`; empty for plans
    /// built by the entropic engine.
    pub fn duals(&self) -> (&[f64], &[f64]) {
        (&self.dual_source, &self.dual_target)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.weights
            .rows()
            .into_iter()
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        self.weights
            .columns()
            .into_iter()
            .map(|c| c.iter().sum())
            .collect()
    }

    /// Recomputes the cost from the stored coupling.
    pub fn cost_against(&self, cost: &Array2<f64>) -> f64 {
        self.weights
            .iter()
            .zip(cost.iter())
            .map(|(w, c)| w * c)
            .sum()
    }

    /// CSV rows `i,j,weight` for nonzero entries.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        for ((i, j), w) in self.weights.indexed_iter() {
            if *w > 0.0 {
                writeln!(out, "{i},{j},{w}")?;
            }
        }
        Ok(())
    }
}
